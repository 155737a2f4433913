//! Central-extension presentations
//! `G = <x, y, Z | [x,y] = s, x^p = xp, y^p = yp>` with `Z` a named
//! finitely generated abelian group, and the small text DSL they are read
//! from and written to.
//!
//! ```text
//! group { prime 3; center t1:9, u1:inf; comm t1^3; xp t1; yp u1 }
//! ```

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Value};
use thiserror::Error;

use crate::abelian::{central_order, CentralVector, CyclicOrder, Factor, FgAbelian};

/// Largest finite factor order accepted from text input.
pub const MAX_FACTOR_ORDER: u64 = 1 << 31;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NonPrimeP(u64),
    TrivialCommutator,
    CommutatorOrderNotP { order: CyclicOrder },
    UnreducedExponent { word: &'static str, name: String, exponent: i64 },
    UnknownFactorName { word: &'static str, name: String },
    DuplicateFactorName(String),
    InvalidOrder { name: String, order: u64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPrimeP(p) => write!(f, "NonPrimeP: {p} is not prime"),
            Violation::TrivialCommutator => write!(f, "TrivialCommutator: comm is the identity"),
            Violation::CommutatorOrderNotP { order } => {
                write!(f, "CommutatorOrderNotP: comm has order {order}")
            }
            Violation::UnreducedExponent { word, name, exponent } => {
                write!(f, "UnreducedExponent: {name}^{exponent} in {word}")
            }
            Violation::UnknownFactorName { word, name } => {
                write!(f, "UnknownFactorName: `{name}` in {word}")
            }
            Violation::DuplicateFactorName(n) => write!(f, "DuplicateFactorName: `{n}`"),
            Violation::InvalidOrder { name, order } => {
                write!(f, "InvalidOrder: factor `{name}` has order {order}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PresentationError {
    #[error("syntax error at line {line}, column {column}: expected {expected}, found {found}")]
    Syntax { line: usize, column: usize, expected: String, found: String },
    #[error("invalid presentation: {}", .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    Validation(Vec<Violation>),
    #[error("invalid JSON presentation: {0}")]
    Json(String),
}

/// A word in the center as written: a list of `name^exponent` terms.
pub type RawWord = Vec<(String, i64)>;

/// Presentation as read, before name resolution and validation.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RawPresentation {
    pub p: u64,
    pub center: Vec<(String, CyclicOrder)>,
    pub comm: RawWord,
    pub xp: RawWord,
    pub yp: RawWord,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

impl RawPresentation {
    fn words(&self) -> [(&'static str, &RawWord); 3] {
        [("comm", &self.comm), ("xp", &self.xp), ("yp", &self.yp)]
    }

    /// Sums repeated names and reduces exponents modulo finite orders.
    pub fn reduced(&self) -> RawPresentation {
        let orders: BTreeMap<&str, CyclicOrder> =
            self.center.iter().map(|(n, o)| (n.as_str(), *o)).collect();
        let reduce_word = |w: &RawWord| -> RawWord {
            let mut out: Vec<(String, i64)> = Vec::new();
            for (name, e) in w {
                match out.iter_mut().find(|(n, _)| n == name) {
                    Some(slot) => slot.1 += e,
                    None => out.push((name.clone(), *e)),
                }
            }
            out.into_iter()
                .filter_map(|(name, e)| {
                    let e = match orders.get(name.as_str()) {
                        Some(CyclicOrder::Finite(n)) if *n > 0 => e.rem_euclid(*n as i64),
                        _ => e,
                    };
                    (e != 0 || !orders.contains_key(name.as_str())).then_some((name, e))
                })
                .collect()
        };
        RawPresentation {
            p: self.p,
            center: self.center.clone(),
            comm: reduce_word(&self.comm),
            xp: reduce_word(&self.xp),
            yp: reduce_word(&self.yp),
        }
    }
}

/// Checks a raw presentation; an empty list means it is valid.
pub fn validate(raw: &RawPresentation) -> Vec<Violation> {
    let mut out = Vec::new();
    if !is_prime(raw.p) {
        out.push(Violation::NonPrimeP(raw.p));
    }
    let mut names: Vec<&str> = Vec::new();
    for (name, order) in &raw.center {
        if names.contains(&name.as_str()) {
            out.push(Violation::DuplicateFactorName(name.clone()));
        }
        names.push(name);
        if let CyclicOrder::Finite(n) = order {
            if *n == 0 || *n > MAX_FACTOR_ORDER {
                out.push(Violation::InvalidOrder { name: name.clone(), order: *n });
            }
        }
    }
    let mut resolvable = true;
    for (word, terms) in raw.words() {
        for (name, e) in terms {
            match raw.center.iter().find(|(n, _)| n == name) {
                None => {
                    resolvable = false;
                    out.push(Violation::UnknownFactorName { word, name: name.clone() });
                }
                Some((_, CyclicOrder::Finite(n))) if *e < 0 || *e >= *n as i64 => {
                    out.push(Violation::UnreducedExponent { word, name: name.clone(), exponent: *e });
                }
                _ => {}
            }
        }
    }
    if !resolvable || out.iter().any(|v| matches!(v, Violation::DuplicateFactorName(_) | Violation::InvalidOrder { .. })) {
        return out;
    }
    let center = raw_center(raw);
    let s = resolve(&center, &raw.comm);
    if s.is_zero() {
        out.push(Violation::TrivialCommutator);
    } else if is_prime(raw.p) {
        let order = central_order(&center, &s);
        if order != CyclicOrder::Finite(raw.p) {
            out.push(Violation::CommutatorOrderNotP { order });
        }
    }
    out
}

fn raw_center(raw: &RawPresentation) -> FgAbelian {
    FgAbelian::new(raw.center.iter().map(|(n, o)| Factor::new(n.clone(), *o)).collect())
        .expect("validated center")
}

/// Word to coordinates; trivial factors were stripped from `center`, their
/// terms vanish.
fn resolve(center: &FgAbelian, word: &RawWord) -> CentralVector {
    let mut v = center.zero();
    for (name, e) in word {
        if let Some(i) = center.index_of(name) {
            v.0[i] += e;
        }
    }
    center.reduce(&v)
}

/// A validated presentation: `p` prime, `s` central of order `p`, all
/// exponents reduced.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupPresentation {
    p: u64,
    center: FgAbelian,
    s: CentralVector,
    xp: CentralVector,
    yp: CentralVector,
}

impl GroupPresentation {
    pub fn new(
        p: u64,
        center: FgAbelian,
        s: CentralVector,
        xp: CentralVector,
        yp: CentralVector,
    ) -> Result<Self, PresentationError> {
        let mut violations = Vec::new();
        if !is_prime(p) {
            violations.push(Violation::NonPrimeP(p));
        }
        for v in [&s, &xp, &yp] {
            if v.0.len() != center.rank() {
                return Err(PresentationError::Validation(vec![Violation::UnknownFactorName {
                    word: "vector",
                    name: format!("<{} coordinates for rank {}>", v.0.len(), center.rank()),
                }]));
            }
        }
        let (s, xp, yp) = (center.reduce(&s), center.reduce(&xp), center.reduce(&yp));
        if s.is_zero() {
            violations.push(Violation::TrivialCommutator);
        } else if is_prime(p) {
            let order = central_order(&center, &s);
            if order != CyclicOrder::Finite(p) {
                violations.push(Violation::CommutatorOrderNotP { order });
            }
        }
        if !violations.is_empty() {
            return Err(PresentationError::Validation(violations));
        }
        Ok(GroupPresentation { p, center, s, xp, yp })
    }

    pub(crate) fn from_parts(p: u64, center: FgAbelian, s: CentralVector, xp: CentralVector, yp: CentralVector) -> Self {
        debug_assert!(center.is_reduced(&s) && center.is_reduced(&xp) && center.is_reduced(&yp));
        GroupPresentation { p, center, s, xp, yp }
    }

    pub fn from_raw(raw: &RawPresentation) -> Result<Self, PresentationError> {
        let raw = raw.reduced();
        let violations = validate(&raw);
        if !violations.is_empty() {
            return Err(PresentationError::Validation(violations));
        }
        let center = raw_center(&raw);
        let s = resolve(&center, &raw.comm);
        let xp = resolve(&center, &raw.xp);
        let yp = resolve(&center, &raw.yp);
        Ok(GroupPresentation { p: raw.p, center, s, xp, yp })
    }

    pub fn to_raw(&self) -> RawPresentation {
        let word = |v: &CentralVector| -> RawWord {
            v.0.iter()
                .zip(self.center.factors())
                .filter(|(&e, _)| e != 0)
                .map(|(&e, f)| (f.name.clone(), e))
                .collect()
        };
        RawPresentation {
            p: self.p,
            center: self.center.factors().iter().map(|f| (f.name.clone(), f.order)).collect(),
            comm: word(&self.s),
            xp: word(&self.xp),
            yp: word(&self.yp),
        }
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn center(&self) -> &FgAbelian {
        &self.center
    }

    /// The commutator `[x, y]`.
    pub fn s(&self) -> &CentralVector {
        &self.s
    }

    pub fn xp(&self) -> &CentralVector {
        &self.xp
    }

    pub fn yp(&self) -> &CentralVector {
        &self.yp
    }

    /// `p^2 |Z|` when the center is finite.
    pub fn order(&self) -> Option<u64> {
        self.center.order().and_then(|z| z.checked_mul(self.p * self.p))
    }

    /// This presentation with the center extended by `extra` (direct
    /// product with an abelian group).
    pub fn with_extra_center(&self, extra: &FgAbelian) -> GroupPresentation {
        let center = self.center.direct_sum(extra);
        let pad = |v: &CentralVector| {
            let mut c = v.0.clone();
            c.resize(center.rank(), 0);
            CentralVector(c)
        };
        GroupPresentation {
            p: self.p,
            s: pad(&self.s),
            xp: pad(&self.xp),
            yp: pad(&self.yp),
            center,
        }
    }

    pub fn emit(&self, format: Format) -> String {
        match format {
            Format::Dsl => self.to_dsl(),
            Format::Json => self.to_json().to_string(),
        }
    }

    pub fn to_dsl(&self) -> String {
        let center: Vec<String> = self
            .center
            .factors()
            .iter()
            .map(|f| format!("{}:{}", f.name, f.order))
            .collect();
        format!(
            "group {{ prime {}; center {}; comm {}; xp {}; yp {} }}",
            self.p,
            center.join(", "),
            self.word_text(&self.s),
            self.word_text(&self.xp),
            self.word_text(&self.yp)
        )
    }

    fn word_text(&self, v: &CentralVector) -> String {
        let terms: Vec<String> = v
            .0
            .iter()
            .zip(self.center.factors())
            .filter(|(&e, _)| e != 0)
            .map(|(&e, f)| if e == 1 { f.name.clone() } else { format!("{}^{}", f.name, e) })
            .collect();
        if terms.is_empty() {
            "1".to_string()
        } else {
            terms.join(" ")
        }
    }

    pub fn to_json(&self) -> Value {
        let word = |v: &CentralVector| -> Value {
            let map: BTreeMap<String, i64> = v
                .0
                .iter()
                .zip(self.center.factors())
                .filter(|(&e, _)| e != 0)
                .map(|(&e, f)| (f.name.clone(), e))
                .collect();
            json!(map)
        };
        let center: Vec<Value> = self
            .center
            .factors()
            .iter()
            .map(|f| match f.order {
                CyclicOrder::Finite(n) => json!({"name": f.name, "order": n}),
                CyclicOrder::Infinite => json!({"name": f.name, "order": "inf"}),
            })
            .collect();
        json!({
            "p": self.p,
            "center": center,
            "s": word(&self.s),
            "xp": word(&self.xp),
            "yp": word(&self.yp),
        })
    }

    pub fn from_json(text: &str) -> Result<Self, PresentationError> {
        let bad = |m: &str| PresentationError::Json(m.to_string());
        let v: Value = serde_json::from_str(text).map_err(|e| PresentationError::Json(e.to_string()))?;
        let p = v["p"].as_u64().ok_or_else(|| bad("`p` must be a non-negative integer"))?;
        let mut center = Vec::new();
        for f in v["center"].as_array().ok_or_else(|| bad("`center` must be an array"))? {
            let name = f["name"].as_str().ok_or_else(|| bad("factor without `name`"))?;
            let order = match &f["order"] {
                Value::String(s) if s == "inf" => CyclicOrder::Infinite,
                o => CyclicOrder::Finite(o.as_u64().ok_or_else(|| bad("bad factor order"))?),
            };
            center.push((name.to_string(), order));
        }
        let word = |key: &str| -> Result<RawWord, PresentationError> {
            let obj = v[key].as_object().ok_or_else(|| bad(&format!("`{key}` must be an object")))?;
            obj.iter()
                .map(|(k, e)| {
                    e.as_i64()
                        .map(|e| (k.clone(), e))
                        .ok_or_else(|| bad(&format!("exponent of `{k}` in `{key}`")))
                })
                .collect()
        };
        let raw = RawPresentation { p, center, comm: word("s")?, xp: word("xp")?, yp: word("yp")? };
        GroupPresentation::from_raw(&raw)
    }
}

impl fmt::Display for GroupPresentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_dsl())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Dsl,
    Json,
}

pub fn parse(text: &str) -> Result<GroupPresentation, PresentationError> {
    GroupPresentation::from_raw(&parse_raw(text)?)
}

pub fn emit(pres: &GroupPresentation, format: Format) -> String {
    pres.emit(format)
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Minus,
    Caret,
    Colon,
    Comma,
    Semi,
    LBrace,
    RBrace,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(s) => write!(f, "`{s}`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Semi => f.write_str("`;`"),
            Tok::LBrace => f.write_str("`{`"),
            Tok::RBrace => f.write_str("`}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

struct Lexed {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Lexed>, PresentationError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (start_line, start_col) = (line, col);
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let single = match c {
            '-' => Some(Tok::Minus),
            '^' => Some(Tok::Caret),
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            ';' => Some(Tok::Semi),
            '{' => Some(Tok::LBrace),
            '}' => Some(Tok::RBrace),
            _ => None,
        };
        let tok = if let Some(t) = single {
            i += 1;
            col += 1;
            t
        } else if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            col += i - start;
            Tok::Int(chars[start..i].iter().collect())
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'' || chars[i] == '.') {
                i += 1;
            }
            col += i - start;
            Tok::Ident(chars[start..i].iter().collect())
        } else {
            return Err(PresentationError::Syntax {
                line,
                column: col,
                expected: "a token".into(),
                found: format!("`{c}`"),
            });
        };
        out.push(Lexed { tok, line: start_line, column: start_col });
    }
    out.push(Lexed { tok: Tok::Eof, line, column: col });
    Ok(out)
}

const KEYWORDS: [&str; 7] = ["group", "prime", "center", "comm", "xp", "yp", "inf"];

struct Parser {
    toks: Vec<Lexed>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn error<T>(&self, expected: &str) -> Result<T, PresentationError> {
        let t = &self.toks[self.pos];
        Err(PresentationError::Syntax {
            line: t.line,
            column: t.column,
            expected: expected.to_string(),
            found: t.tok.to_string(),
        })
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if t != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, want: &Tok, what: &str) -> Result<(), PresentationError> {
        if self.peek() == want {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), PresentationError> {
        match self.peek() {
            Tok::Ident(s) if s == kw => {
                self.bump();
                Ok(())
            }
            _ => self.error(&format!("`{kw}`")),
        }
    }

    fn int(&mut self, what: &str) -> Result<u64, PresentationError> {
        match self.peek().clone() {
            Tok::Int(s) => match s.parse::<u64>() {
                Ok(n) => {
                    self.bump();
                    Ok(n)
                }
                Err(_) => self.error("an integer that fits in 64 bits"),
            },
            _ => self.error(what),
        }
    }

    fn signed_int(&mut self) -> Result<i64, PresentationError> {
        let neg = if *self.peek() == Tok::Minus {
            self.bump();
            true
        } else {
            false
        };
        match self.peek().clone() {
            Tok::Int(s) => match s.parse::<i64>() {
                Ok(n) => {
                    self.bump();
                    Ok(if neg { -n } else { n })
                }
                Err(_) => self.error("an integer that fits in 64 bits"),
            },
            _ => self.error("an exponent"),
        }
    }

    fn name(&mut self) -> Result<String, PresentationError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                self.bump();
                Ok(s)
            }
            _ => self.error("a factor name"),
        }
    }

    fn word(&mut self) -> Result<RawWord, PresentationError> {
        if let Tok::Int(s) = self.peek() {
            if s == "1" {
                self.bump();
                return Ok(Vec::new());
            }
            return self.error("`1` or a factor name");
        }
        let mut terms = vec![self.term()?];
        while matches!(self.peek(), Tok::Ident(_)) {
            terms.push(self.term()?);
        }
        Ok(terms)
    }

    fn term(&mut self) -> Result<(String, i64), PresentationError> {
        let name = self.name()?;
        let e = if *self.peek() == Tok::Caret {
            self.bump();
            self.signed_int()?
        } else {
            1
        };
        Ok((name, e))
    }

    fn factor(&mut self) -> Result<(String, CyclicOrder), PresentationError> {
        let name = self.name()?;
        self.expect(&Tok::Colon, "`:`")?;
        let order = match self.peek() {
            Tok::Ident(s) if s == "inf" => {
                self.bump();
                CyclicOrder::Infinite
            }
            _ => CyclicOrder::Finite(self.int("a factor order (integer or `inf`)")?),
        };
        Ok((name, order))
    }
}

/// Parses the DSL without validating the result.
pub fn parse_raw(text: &str) -> Result<RawPresentation, PresentationError> {
    let mut ps = Parser { toks: lex(text)?, pos: 0 };
    ps.keyword("group")?;
    ps.expect(&Tok::LBrace, "`{`")?;
    let mut p = None;
    let mut center = None;
    let mut comm = None;
    let mut xp = None;
    let mut yp = None;
    loop {
        let kw = match ps.peek() {
            Tok::Ident(s) => s.clone(),
            _ => return ps.error("a statement (`prime`, `center`, `comm`, `xp` or `yp`)"),
        };
        let duplicate = match kw.as_str() {
            "prime" => p.is_some(),
            "center" => center.is_some(),
            "comm" => comm.is_some(),
            "xp" => xp.is_some(),
            "yp" => yp.is_some(),
            _ => return ps.error("a statement (`prime`, `center`, `comm`, `xp` or `yp`)"),
        };
        if duplicate {
            return ps.error(&format!("a statement other than a second `{kw}`"));
        }
        ps.bump();
        match kw.as_str() {
            "prime" => p = Some(ps.int("a prime")?),
            "center" => {
                let mut fs = vec![ps.factor()?];
                while *ps.peek() == Tok::Comma {
                    ps.bump();
                    fs.push(ps.factor()?);
                }
                center = Some(fs);
            }
            "comm" => comm = Some(ps.word()?),
            "xp" => xp = Some(ps.word()?),
            _ => yp = Some(ps.word()?),
        }
        match ps.peek() {
            Tok::Semi => {
                ps.bump();
                if *ps.peek() == Tok::RBrace {
                    ps.bump();
                    break;
                }
            }
            Tok::RBrace => {
                ps.bump();
                break;
            }
            _ => return ps.error("`;` or `}`"),
        }
    }
    if *ps.peek() != Tok::Eof {
        return ps.error("end of input");
    }
    let missing = [
        ("prime", p.is_none()),
        ("center", center.is_none()),
        ("comm", comm.is_none()),
        ("xp", xp.is_none()),
        ("yp", yp.is_none()),
    ];
    if let Some((kw, _)) = missing.iter().find(|(_, m)| *m) {
        let last = ps.toks.last().expect("eof token");
        return Err(PresentationError::Syntax {
            line: last.line,
            column: last.column,
            expected: format!("a `{kw}` statement"),
            found: "end of group".into(),
        });
    }
    Ok(RawPresentation {
        p: p.unwrap(),
        center: center.unwrap(),
        comm: comm.unwrap(),
        xp: xp.unwrap(),
        yp: yp.unwrap(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_smallest_instance() {
        let g = parse("group { prime 2; center t1:2; comm t1; xp 1; yp 1 }").unwrap();
        assert_eq!(g.p(), 2);
        assert_eq!(g.center().factors(), &[Factor::finite("t1", 2)]);
        assert_eq!(g.s(), &CentralVector(vec![1]));
        assert!(g.xp().is_zero() && g.yp().is_zero());
    }

    #[test]
    fn parses_family_six_shape_with_comments() {
        let text = "# family 6\ngroup {\n  prime 3;\n  center t1:9, u1:inf;  # t1 then u1\n  comm t1^3;\n  xp t1;\n  yp u1\n}\n";
        let g = parse(text).unwrap();
        assert_eq!(g.center().factors(), &[Factor::finite("t1", 9), Factor::infinite("u1")]);
        assert_eq!(g.s(), &CentralVector(vec![3, 0]));
        assert_eq!(g.xp(), &CentralVector(vec![1, 0]));
        assert_eq!(g.yp(), &CentralVector(vec![0, 1]));
    }

    #[test]
    fn non_prime_is_rejected() {
        let err = parse("group { prime 4; center t1:2; comm t1; xp 1; yp 1 }").unwrap_err();
        assert_eq!(err, PresentationError::Validation(vec![Violation::NonPrimeP(4)]));
    }

    #[test]
    fn commutator_of_wrong_order() {
        let raw = parse_raw("group { prime 2; center t1:8; comm t1^2; xp 1; yp 1 }").unwrap();
        assert_eq!(
            validate(&raw),
            vec![Violation::CommutatorOrderNotP { order: CyclicOrder::Finite(4) }]
        );
    }

    #[test]
    fn unknown_name_and_unreduced_exponent() {
        let raw = parse_raw("group { prime 2; center t1:2; comm t1; xp w; yp t1^3 }").unwrap();
        let v = validate(&raw);
        assert!(v.contains(&Violation::UnknownFactorName { word: "xp", name: "w".into() }));
        assert!(v.contains(&Violation::UnreducedExponent { word: "yp", name: "t1".into(), exponent: 3 }));
        // parse reduces exponents before validating; only the unknown name remains.
        let err = parse("group { prime 2; center t1:2; comm t1; xp w; yp t1^3 }").unwrap_err();
        assert_eq!(
            err,
            PresentationError::Validation(vec![Violation::UnknownFactorName { word: "xp", name: "w".into() }])
        );
    }

    #[test]
    fn trivial_commutator() {
        let err = parse("group { prime 3; center t1:3; comm t1^3; xp 1; yp 1 }").unwrap_err();
        assert_eq!(err, PresentationError::Validation(vec![Violation::TrivialCommutator]));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse("group { prime 2;\n center t1 2; comm t1; xp 1; yp 1 }").unwrap_err();
        match err {
            PresentationError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 12)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse("group { prime 2; center t1:2; comm t1; xp 1 }"),
            Err(PresentationError::Syntax { .. })
        ));
        assert!(matches!(
            parse("group { prime 2; prime 3; center t1:2; comm t1; xp 1; yp 1 }"),
            Err(PresentationError::Syntax { .. })
        ));
    }

    #[test]
    fn exponents_are_reduced_and_merged() {
        let g = parse("group { prime 3; center t:9, u:inf; comm t^-6; xp t^10 t u^-2; yp 1; }").unwrap();
        assert_eq!(g.s(), &CentralVector(vec![3, 0]));
        assert_eq!(g.xp(), &CentralVector(vec![2, -2]));
    }

    #[test]
    fn emit_round_trips() {
        let texts = [
            "group { prime 2; center t1:2; comm t1; xp 1; yp 1 }",
            "group { prime 3; center t1:9, u1:inf; comm t1^3; xp t1; yp u1^-4 }",
            "group { prime 5; center a:5, b:25, c:inf, d:7, e:inf; comm a; xp b^3 c; yp d e^2 }",
        ];
        for t in texts {
            let g = parse(t).unwrap();
            assert_eq!(g.to_dsl(), t);
            assert_eq!(parse(&g.emit(Format::Dsl)).unwrap(), g);
            assert_eq!(GroupPresentation::from_json(&g.emit(Format::Json)).unwrap(), g);
        }
    }

    #[test]
    fn json_has_sorted_word_keys_and_declared_center_order() {
        let g = parse("group { prime 3; center z:inf, a:9; comm a^3; xp z a; yp 1 }").unwrap();
        assert_eq!(
            g.emit(Format::Json),
            r#"{"center":[{"name":"z","order":"inf"},{"name":"a","order":9}],"p":3,"s":{"a":3},"xp":{"a":1,"z":1},"yp":{}}"#
        );
    }
}
