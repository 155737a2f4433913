//! Batch front end: classify, decompose, compare, validate, enumerate,
//! oracle-check and tabulate presentations.
//!
//! Inputs are file paths, `-` for stdin, or inline DSL (any argument that
//! starts with `group`). Files whose text starts with `{` are read as JSON.

use std::fmt::Write as _;
use std::io::{Read, Write};

use clap::{Parser, Subcommand};
use cpxcp::abelian::AbelianInvariants;
use cpxcp::classify::{canonical_form, canonical_iso, classify, distinguishing_invariant, enumerate_forms, CanonicalForm};
use cpxcp::decompose::decompose;
use cpxcp::normalize::{replay, scramble};
use cpxcp::oracle::{
    bound_from_env, brute_iso, build_table, center_and_quotient, direct_factor_search, element_orders,
    OracleError, DEFAULT_SEARCH_BOUND, DEFAULT_TABLE_BOUND,
};
use cpxcp::presentation::{is_prime, parse_raw, validate};
use cpxcp::{parse, GroupPresentation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Debug, Parser)]
#[command(name = "cpxcp", version, about = "Groups with central quotient C_p x C_p")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// One JSON object per line
    #[arg(long, global = true)]
    pub json: bool,
    /// Largest group order handed to the brute-force oracle
    #[arg(long, global = true, value_name = "N")]
    pub max_order: Option<usize>,
    /// Seed for scramble and sampling checks
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Canonical form of each input
    Classify {
        #[arg(required = true)]
        inputs: Vec<String>,
        /// Include the move transcript (JSON only)
        #[arg(long)]
        moves: bool,
    },
    /// Split each input as D x A
    Decompose {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Decide whether two inputs are isomorphic
    Isomorphic { a: String, b: String },
    /// Report presentation violations
    Validate {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// List canonical instances within parameter bounds
    Enumerate {
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        max_m: u32,
        /// Families as ranges, e.g. `1-4,7`
        #[arg(long, default_value = "1-9", value_parser = parse_families)]
        families: Families,
    },
    /// Run the oracle validation suite
    Check {
        #[arg(required = true)]
        inputs: Vec<String>,
    },
    /// Export the multiplication table
    Table { input: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Families(pub Vec<u8>);

/// `"1-4,7"` to `[1, 2, 3, 4, 7]`.
pub fn parse_families(text: &str) -> Result<Families, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let bad = || format!("`{part}` is not a family or range in 1..=9");
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim().parse::<u8>().map_err(|_| bad())?, b.trim().parse::<u8>().map_err(|_| bad())?),
            None => {
                let f = part.parse::<u8>().map_err(|_| bad())?;
                (f, f)
            }
        };
        if lo == 0 || hi > 9 || lo > hi {
            return Err(bad());
        }
        out.extend(lo..=hi);
    }
    out.sort_unstable();
    out.dedup();
    Ok(Families(out))
}

/// One canonical presentation per legal parameter tuple.
pub fn enumerate_instances(p: u64, max_m: u32, families: &[u8]) -> Vec<GroupPresentation> {
    enumerate_forms(p, max_m, families).iter().map(CanonicalForm::presentation).collect()
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Input(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Usage(_) | Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Input(m) => m,
        }
    }
}

struct Bounds {
    table: usize,
    search: usize,
}

impl Bounds {
    /// `--max-order` beats `CPXCP_MAX_ORDER`, which beats the defaults.
    fn resolve(flag: Option<usize>) -> Bounds {
        match flag.or_else(|| std::env::var(cpxcp::oracle::BOUND_ENV).ok().map(|_| bound_from_env(0))) {
            Some(n) if n > 0 => Bounds { table: n, search: n },
            _ => Bounds { table: DEFAULT_TABLE_BOUND, search: DEFAULT_SEARCH_BOUND },
        }
    }
}

struct Input {
    label: String,
    text: String,
}

fn read_input(arg: &str) -> Result<Input, Failure> {
    if arg.trim_start().starts_with("group") {
        return Ok(Input { label: "<inline>".into(), text: arg.to_string() });
    }
    let text = if arg == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(|e| Failure::Io(format!("<stdin>: {e}")))?;
        s
    } else {
        std::fs::read_to_string(arg).map_err(|e| Failure::Io(format!("{arg}: {e}")))?
    };
    Ok(Input { label: if arg == "-" { "<stdin>".into() } else { arg.to_string() }, text })
}

fn is_json(text: &str) -> bool {
    text.trim_start().starts_with('{')
}

fn load(arg: &str) -> Result<(String, GroupPresentation), Failure> {
    let input = read_input(arg)?;
    let parsed = if is_json(&input.text) { GroupPresentation::from_json(&input.text) } else { parse(&input.text) };
    parsed.map(|g| (input.label.clone(), g)).map_err(|e| Failure::Input(format!("{}: {e}", input.label)))
}

fn abelian_text(a: &AbelianInvariants) -> String {
    let mut parts: Vec<String> = a.torsion.iter().map(|d| format!("C{d}")).collect();
    match a.free_rank {
        0 => {}
        1 => parts.push("Z".into()),
        r => parts.push(format!("Z^{r}")),
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" x ")
    }
}

/// Runs one invocation; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let mut buf = String::new();
    let result = dispatch(&cli, &mut buf);
    let _ = out.write_all(buf.as_bytes());
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message());
            f.code()
        }
    }
}

fn dispatch(cli: &Cli, out: &mut String) -> Result<i32, Failure> {
    let bounds = Bounds::resolve(cli.max_order);
    match &cli.command {
        Command::Classify { inputs, moves } => {
            for arg in inputs {
                let (label, g) = load(arg)?;
                let (form, transcript) = classify(&g);
                if cli.json {
                    let v = if *moves { form.to_json_with_moves(&transcript) } else { form.to_json() };
                    line(out, &v);
                } else {
                    let _ = writeln!(out, "{label}: {form}");
                }
            }
            Ok(0)
        }
        Command::Decompose { inputs } => {
            for arg in inputs {
                let (label, g) = load(arg)?;
                let res = decompose(&g);
                let a = cpxcp::abelian::invariant_factors(&res.a);
                if cli.json {
                    let factors: Vec<Value> = res
                        .a
                        .factors()
                        .iter()
                        .map(|f| json!({"name": f.name, "order": f.order.to_string()}))
                        .collect();
                    line(out, &json!({"d": res.d.to_json(), "a": {"factors": factors, "invariants": a}}));
                } else {
                    let _ = writeln!(out, "{label}:\n  D = {}\n  A = {}", res.d, abelian_text(&a));
                }
            }
            Ok(0)
        }
        Command::Isomorphic { a, b } => {
            let (_, ga) = load(a)?;
            let (_, gb) = load(b)?;
            let (fa, fb) = (canonical_form(&ga), canonical_form(&gb));
            let iso = canonical_iso(&fa, &fb);
            let reason = distinguishing_invariant(&fa, &fb);
            if cli.json {
                let mut v = json!({"isomorphic": iso});
                if let Some(r) = &reason {
                    v["reason"] = json!(r);
                }
                line(out, &v);
            } else {
                match reason {
                    None => out.push_str("true\n"),
                    Some(r) => {
                        let _ = writeln!(out, "false: {r}");
                    }
                }
            }
            Ok(0)
        }
        Command::Validate { inputs } => {
            let mut all_valid = true;
            for arg in inputs {
                let input = read_input(arg)?;
                let problems: Vec<String> = if is_json(&input.text) {
                    GroupPresentation::from_json(&input.text).err().map(|e| e.to_string()).into_iter().collect()
                } else {
                    match parse_raw(&input.text) {
                        Ok(raw) => validate(&raw).iter().map(ToString::to_string).collect(),
                        Err(e) => vec![e.to_string()],
                    }
                };
                all_valid &= problems.is_empty();
                if cli.json {
                    line(out, &json!({"input": input.label, "valid": problems.is_empty(), "violations": problems}));
                } else if problems.is_empty() {
                    let _ = writeln!(out, "{}: valid", input.label);
                } else {
                    let _ = writeln!(out, "{}: invalid", input.label);
                    for p in &problems {
                        let _ = writeln!(out, "  {p}");
                    }
                }
            }
            Ok(if all_valid { 0 } else { 1 })
        }
        Command::Enumerate { p, max_m, families } => {
            if !is_prime(*p) {
                return Err(Failure::Usage(format!("--p {p} is not prime")));
            }
            if *max_m == 0 {
                return Err(Failure::Usage("--max-m must be at least 1".into()));
            }
            for form in enumerate_forms(*p, *max_m, &families.0) {
                let g = form.presentation();
                if cli.json {
                    let mut v = form.to_json();
                    v["presentation"] = json!(g.to_dsl());
                    line(out, &v);
                } else {
                    let _ = writeln!(out, "{form}\t{}", g.to_dsl());
                }
            }
            Ok(0)
        }
        Command::Check { inputs } => {
            let mut ok = true;
            for arg in inputs {
                let (label, g) = load(arg)?;
                let report = check(&g, &bounds, cli.seed);
                ok &= report.iter().all(|r| !matches!(r.status, Status::Fail(_)));
                if cli.json {
                    let props: Vec<Value> = report.iter().map(Property::to_json).collect();
                    let passed = report.iter().all(|r| !matches!(r.status, Status::Fail(_)));
                    line(out, &json!({"input": label, "passed": passed, "properties": props}));
                } else {
                    let _ = writeln!(out, "{label}:");
                    for r in &report {
                        let _ = writeln!(out, "  {}", r.text());
                    }
                }
            }
            Ok(if ok { 0 } else { 1 })
        }
        Command::Table { input } => {
            let (_, g) = load(input)?;
            let t = build_table(&g, bounds.table).map_err(|e| Failure::Input(e.to_string()))?;
            if cli.json {
                let rows: Vec<Vec<usize>> = (0..t.n()).map(|a| (0..t.n()).map(|b| t.mul(a, b)).collect()).collect();
                line(out, &json!({"order": t.n(), "labels": t.labels(), "table": rows}));
            } else {
                out.push_str(&t.export_text());
            }
            Ok(0)
        }
    }
}

fn line(out: &mut String, v: &Value) {
    out.push_str(&v.to_string());
    out.push('\n');
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail(String),
    Skipped(String),
}

#[derive(Debug, Clone)]
pub struct Property {
    pub name: &'static str,
    pub status: Status,
}

impl Property {
    fn text(&self) -> String {
        match &self.status {
            Status::Pass => format!("PASS {}", self.name),
            Status::Fail(why) => format!("FAIL {}: {why}", self.name),
            Status::Skipped(why) => format!("SKIP {}: {why}", self.name),
        }
    }

    fn to_json(&self) -> Value {
        match &self.status {
            Status::Pass => json!({"name": self.name, "status": "pass"}),
            Status::Fail(why) => json!({"name": self.name, "status": "fail", "detail": why}),
            Status::Skipped(why) => json!({"name": self.name, "status": "skipped", "detail": why}),
        }
    }
}

fn verdict(ok: bool, why: impl FnOnce() -> String) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail(why())
    }
}

const SCRAMBLES: usize = 20;
const EXHAUSTIVE_ASSOCIATIVITY: usize = 128;

/// Symbolic checks always run; oracle checks need a finite group within
/// the bounds and are skipped with the oracle's reason otherwise.
pub fn check(g: &GroupPresentation, bounds: &(impl BoundsLike + ?Sized), seed: u64) -> Vec<Property> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = Vec::new();
    let (form, moves) = classify(g);
    report.push(Property {
        name: "round trip",
        status: verdict(
            parse(&g.to_dsl()).as_ref() == Ok(g) && GroupPresentation::from_json(&g.to_json().to_string()).as_ref() == Ok(g),
            || "emitted text does not parse back to the input".into(),
        ),
    });
    report.push(Property {
        name: "classification transcript",
        status: verdict(replay(g, &moves).as_ref() == Ok(&form.presentation()), || "moves do not replay".into()),
    });
    report.push(Property {
        name: "canonical fixed point",
        status: verdict(canonical_form(&form.presentation()) == form, || "canonical presentation reclassifies".into()),
    });
    let mut scrambled = Status::Pass;
    for i in 0..SCRAMBLES {
        let (h, _) = scramble(g, 1 + i % 10, &mut rng);
        let got = canonical_form(&h);
        if got != form {
            scrambled = Status::Fail(format!("{h} classifies as {got}"));
            break;
        }
    }
    report.push(Property { name: "scramble invariance", status: scrambled });
    let dec = decompose(g);
    report.push(Property {
        name: "decomposition transcript",
        status: verdict(replay(g, &dec.moves).as_ref() == Ok(&dec.product()), || "moves do not replay".into()),
    });

    let oracle_names = ["group axioms", "center", "commutator", "canonical isomorphism", "decomposition isomorphism", "indecomposable part"];
    let table = build_table(g, bounds.table_bound()).and_then(|t| {
        if t.n() > bounds.search_bound() {
            Err(OracleError::TooLarge { n: t.n() as u64, bound: bounds.search_bound() })
        } else {
            Ok(t)
        }
    });
    let t = match table {
        Ok(t) => t,
        Err(e) => {
            for name in oracle_names {
                report.push(Property { name, status: Status::Skipped(e.to_string()) });
            }
            return report;
        }
    };
    let sampled = t.n() > EXHAUSTIVE_ASSOCIATIVITY;
    let assoc = if sampled { t.is_associative_sampled(&mut rng, 20_000) } else { t.is_associative() };
    report.push(Property {
        name: "group axioms",
        status: verdict(t.is_latin_square() && assoc, || "the table is not a group".into()),
    });
    let (z, quotient) = center_and_quotient(&t);
    let declared = g.center().order().unwrap() as usize;
    report.push(Property {
        name: "center",
        status: verdict(z.len() == declared && quotient, || {
            format!("oracle center has order {} (declared {declared}), quotient C_p x C_p: {quotient}", z.len())
        }),
    });
    let (x, y) = (t.gens()[0], t.gens()[1]);
    let c = t.mul(t.mul(t.inverse(x), t.inverse(y)), t.mul(x, y));
    let orders = element_orders(&t);
    report.push(Property {
        name: "commutator",
        status: verdict(orders[c] == g.p() && z.contains(&c), || format!("[x, y] has order {}", orders[c])),
    });
    let iso_with = |h: &GroupPresentation| -> Status {
        match build_table(h, bounds.table_bound()).and_then(|th| brute_iso(&t, &th, bounds.search_bound())) {
            Ok(Some(_)) => Status::Pass,
            Ok(None) => Status::Fail(format!("not isomorphic to {h}")),
            Err(e) => Status::Skipped(e.to_string()),
        }
    };
    report.push(Property { name: "canonical isomorphism", status: iso_with(&form.presentation()) });
    report.push(Property { name: "decomposition isomorphism", status: iso_with(&dec.product()) });
    let d = form.d_presentation();
    let status = match build_table(&d, bounds.table_bound()).and_then(|td| direct_factor_search(&td, bounds.search_bound())) {
        Ok(None) => Status::Pass,
        Ok(Some((h, k))) => Status::Fail(format!("D splits with factors of orders {} and {}", h.len(), k.len())),
        Err(e) => Status::Skipped(e.to_string()),
    };
    report.push(Property { name: "indecomposable part", status });
    report
}

/// Oracle bounds used by [`check`].
pub trait BoundsLike {
    fn table_bound(&self) -> usize;
    fn search_bound(&self) -> usize;
}

impl BoundsLike for Bounds {
    fn table_bound(&self) -> usize {
        self.table
    }

    fn search_bound(&self) -> usize {
        self.search
    }
}

impl BoundsLike for (usize, usize) {
    fn table_bound(&self) -> usize {
        self.0
    }

    fn search_bound(&self) -> usize {
        self.1
    }
}
