//! Canonical forms for the indecomposable part `D` and the full pipeline
//! `presentation -> (family, parameters, complement)`.
//!
//! The data that matters up to isomorphism is `s` together with the images
//! of `x^p` and `y^p` in `V = Z / Z^p`. Over `F_p`, `V` carries the level
//! filtration by factor order, with `t1` sitting just below its own level
//! because `s` is pinned to it. Generator moves act on `(x^p, y^p)` as
//! `GL_2(F_p)` (for `p = 2, m1 = 1` the action is affine: `(xy)^2 =
//! x^2 y^2 s`), and center automorphisms act as level-respecting
//! transvections. Echelon reduction against that order leaves at most two
//! pivot factors, and which of `t1`, finite or free factors they are picks
//! the family.

use std::fmt;

use num_integer::Integer;
use serde_json::{json, Value};
use thiserror::Error;

use crate::abelian::{invariant_factors, invariant_form_map, AbelianInvariants, CentralVector, CyclicOrder, Factor, FgAbelian, Hom};
use crate::decompose::decompose;
use crate::normalize::{apply_center_hom, apply_move, mod_inverse, permutation, reduce_pth_powers_moves, scaling, transvection, GeneratorMove, Move};
use crate::presentation::GroupPresentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("expected a center of rank {expected}, got {got}")]
    WrongRank { expected: usize, got: usize },
    #[error("presentation is not in decomposed form: {0}")]
    NotDecomposed(String),
    #[error("invalid canonical parameters: {0}")]
    InvalidParameters(String),
}

/// One of the nine families with its parameters and the abelian complement.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CanonicalForm {
    family: u8,
    p: u64,
    m1: u32,
    m2: Option<u32>,
    m3: Option<u32>,
    twist: u64,
    complement: AbelianInvariants,
}

/// Number of finite `m`-parameters and of free factors in `D`.
pub fn family_signature(family: u8) -> Option<(usize, usize)> {
    Some(match family {
        1 | 2 => (1, 0),
        3 | 4 => (2, 0),
        5 | 6 => (1, 1),
        7 => (3, 0),
        8 => (2, 1),
        9 => (1, 2),
        _ => return None,
    })
}

/// Every canonical form (trivial complement) of the given families with
/// all `m <= max_m`, ordered by family, then `m`, then twist.
pub fn enumerate_forms(p: u64, max_m: u32, families: &[u8]) -> Vec<CanonicalForm> {
    let mut fams = families.to_vec();
    fams.sort_unstable();
    fams.dedup();
    let mut out = Vec::new();
    for family in fams {
        let Some((k, _)) = family_signature(family) else { continue };
        let twists = if family == 6 { ((p - 1) / 2).max(1) } else { 1 };
        let mut m = vec![1u32; k];
        'tuples: loop {
            if !(family == 7 && m[1] > m[2]) {
                for twist in 1..=twists {
                    let none = AbelianInvariants { torsion: vec![], free_rank: 0 };
                    if let Ok(f) = CanonicalForm::new(family, p, &m, twist, none) {
                        out.push(f);
                    }
                }
            }
            // odometer, last parameter fastest
            for i in (0..k).rev() {
                if m[i] < max_m {
                    m[i] += 1;
                    m[i + 1..].iter_mut().for_each(|x| *x = 1);
                    continue 'tuples;
                }
            }
            break;
        }
    }
    out
}

impl CanonicalForm {
    /// Validates arity; family 7 parameters are put in the order
    /// `m2 <= m3` (the two orders are interchangeable).
    pub fn new(family: u8, p: u64, m: &[u32], twist: u64, complement: AbelianInvariants) -> Result<Self, ClassifyError> {
        let bad = |s: String| Err(ClassifyError::InvalidParameters(s));
        let Some((finite, _)) = family_signature(family) else {
            return bad(format!("family {family} is not in 1..=9"));
        };
        if !crate::presentation::is_prime(p) {
            return bad(format!("{p} is not prime"));
        }
        if m.len() != finite {
            return bad(format!("family {family} takes {finite} m-parameters, got {}", m.len()));
        }
        if m.iter().any(|&x| x == 0) {
            return bad("m-parameters must be at least 1".into());
        }
        let max_twist = if family == 6 { ((p - 1) / 2).max(1) } else { 1 };
        if twist == 0 || twist > max_twist {
            return bad(format!("twist {twist} outside 1..={max_twist}"));
        }
        let twist = if complement.free_rank > 0 { 1 } else { twist };
        let mut m = m.to_vec();
        if family == 7 && m[1] > m[2] {
            m.swap(1, 2);
        }
        let torsion = complement.torsion.clone();
        if torsion.iter().any(|&d| d < 2) || torsion.windows(2).any(|w| w[1] % w[0] != 0) {
            return bad("complement torsion must be a divisor chain of integers >= 2".into());
        }
        Ok(CanonicalForm {
            family,
            p,
            m1: m[0],
            m2: m.get(1).copied(),
            m3: m.get(2).copied(),
            twist,
            complement: AbelianInvariants { torsion, free_rank: complement.free_rank },
        })
    }

    pub fn family(&self) -> u8 {
        self.family
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn m1(&self) -> u32 {
        self.m1
    }

    pub fn m2(&self) -> Option<u32> {
        self.m2
    }

    pub fn m3(&self) -> Option<u32> {
        self.m3
    }

    /// The `m`-parameters in order.
    pub fn m(&self) -> Vec<u32> {
        [Some(self.m1), self.m2, self.m3].into_iter().flatten().collect()
    }

    /// Class of `ab` in `F_p^* / {+-1}` for family 6 with `x^p = t1^a`,
    /// `y^p = u1^b`; 1 everywhere else.
    pub fn twist(&self) -> u64 {
        self.twist
    }

    pub fn complement(&self) -> &AbelianInvariants {
        &self.complement
    }

    /// Free factors of the center of `D`.
    pub fn infinite_rank(&self) -> usize {
        family_signature(self.family).unwrap().1
    }

    /// Same family and parameters with the complement dropped.
    pub fn indecomposable_part(&self) -> CanonicalForm {
        CanonicalForm { complement: AbelianInvariants { torsion: vec![], free_rank: 0 }, ..self.clone() }
    }

    /// A free factor in the complement absorbs the family 6 twist:
    /// `y -> y f` turns `y^p = u^b` into `u^b f^p`, a primitive vector.
    pub fn with_complement(&self, complement: AbelianInvariants) -> CanonicalForm {
        let twist = if complement.free_rank > 0 { 1 } else { self.twist };
        CanonicalForm { complement, twist, ..self.clone() }
    }

    /// Center of `D` with the canonical names `t1, t2, t3, u1, u2`.
    fn d_center(&self) -> FgAbelian {
        let p = self.p;
        let t = |i: usize, m: u32| Factor::finite(format!("t{i}"), p.pow(m));
        let u = |i: usize| Factor::infinite(format!("u{i}"));
        let mut fs = vec![t(1, self.m1)];
        match self.family {
            3 | 4 => fs.push(t(2, self.m2.unwrap())),
            5 | 6 => fs.push(u(1)),
            7 => {
                fs.push(t(2, self.m2.unwrap()));
                fs.push(t(3, self.m3.unwrap()));
            }
            8 => {
                fs.push(t(2, self.m2.unwrap()));
                fs.push(u(1));
            }
            9 => {
                fs.push(u(1));
                fs.push(u(2));
            }
            _ => {}
        }
        FgAbelian::new(fs).expect("canonical names")
    }

    /// The canonical presentation of `D`.
    pub fn d_presentation(&self) -> GroupPresentation {
        let center = self.d_center();
        let k = center.rank();
        let e = |i: usize, c: i64| {
            let mut v = vec![0; k];
            v[i] = c;
            CentralVector(v)
        };
        let zero = CentralVector(vec![0; k]);
        let s = e(0, self.p.pow(self.m1 - 1) as i64);
        let (xp, yp) = match self.family {
            1 => (zero.clone(), zero),
            2 => (e(0, 1), e(0, 1)),
            3 | 5 => (zero, e(1, 1)),
            4 => (e(0, 1), e(1, 1)),
            6 => (e(0, 1), e(1, self.twist as i64)),
            _ => (e(1, 1), e(2, 1)),
        };
        GroupPresentation::new(self.p, center, s, xp, yp).expect("canonical presentation is valid")
    }

    /// The canonical presentation of `D x A`.
    pub fn presentation(&self) -> GroupPresentation {
        self.d_presentation().with_extra_center(&self.complement.to_group())
    }

    /// `p^2 |Z|` when finite.
    pub fn order(&self) -> Option<u64> {
        self.presentation().order()
    }

    pub fn to_json(&self) -> Value {
        let mut v = json!({
            "family": self.family,
            "p": self.p,
            "m": self.m(),
            "infinite_rank": self.infinite_rank(),
            "complement": {"torsion": self.complement.torsion, "free_rank": self.complement.free_rank},
        });
        if self.twist != 1 {
            v["twist"] = json!(self.twist);
        }
        v
    }

    /// [`CanonicalForm::to_json`] with the transcript attached.
    pub fn to_json_with_moves(&self, moves: &[Move]) -> Value {
        let mut v = self.to_json();
        v["moves"] = serde_json::to_value(moves).expect("moves serialize");
        v
    }
}

impl fmt::Display for CanonicalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m: Vec<String> = self.m().iter().map(|m| m.to_string()).collect();
        write!(f, "G{}(p={}, m=({}))", self.family, self.p, m.join(","))?;
        if self.twist != 1 {
            write!(f, " twist {}", self.twist)?;
        }
        if !self.complement.is_trivial() {
            let mut parts: Vec<String> = self.complement.torsion.iter().map(|d| format!("C{d}")).collect();
            parts.extend(std::iter::repeat("Z".to_string()).take(self.complement.free_rank));
            write!(f, " x {}", parts.join(" x "))?;
        }
        Ok(())
    }
}

pub fn canonical_iso(a: &CanonicalForm, b: &CanonicalForm) -> bool {
    a == b
}

/// First invariant telling `a` and `b` apart, checked in the order family,
/// p, m-vector, free rank, complement.
pub fn distinguishing_invariant(a: &CanonicalForm, b: &CanonicalForm) -> Option<String> {
    if a.family != b.family {
        let (fa, fb) = (a.family.min(b.family), a.family.max(b.family));
        let (ra, ia) = family_signature(fa).unwrap();
        let (rb, ib) = family_signature(fb).unwrap();
        let reason = if ra + ia != rb + ib {
            format!("center rank of the indecomposable factor differs ({} vs {})", ra + ia, rb + ib)
        } else if ia != ib {
            format!("infinite rank of the center differs ({ia} vs {ib})")
        } else if (fa, fb) == (1, 2) && a.p == 2 && b.p == 2 && a.m1 == 1 && b.m1 == 1 {
            "order-2 element count differs".to_string()
        } else if (fa, fb) == (1, 2) {
            "exponent differs".to_string()
        } else {
            "non-central order-p element count differs".to_string()
        };
        return Some(format!("family differs ({} vs {}): {reason}", a.family, b.family));
    }
    if a.p != b.p {
        return Some(format!("p differs ({} vs {})", a.p, b.p));
    }
    if a.m() != b.m() {
        return Some(format!("m-vector differs ({:?} vs {:?})", a.m(), b.m()));
    }
    if a.twist != b.twist {
        return Some(format!("twist differs ({} vs {})", a.twist, b.twist));
    }
    if a.complement.free_rank != b.complement.free_rank {
        return Some(format!(
            "free rank differs ({} vs {})",
            a.infinite_rank() + a.complement.free_rank,
            b.infinite_rank() + b.complement.free_rank
        ));
    }
    if a.complement != b.complement {
        return Some(format!("complement differs ({:?} vs {:?})", a.complement.torsion, b.complement.torsion));
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClassifyOutcome {
    /// `D` is indecomposable; the complement of the form is trivial.
    Canonical(CanonicalForm),
    /// `factor` is a direct factor; `reduced` is the rest of `D`.
    SplitFound { factor: Factor, reduced: GroupPresentation },
}

/// Result of a rank classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classified {
    pub outcome: ClassifyOutcome,
    /// Moves applied to the input `D`.
    pub moves: Vec<Move>,
    /// `D` after the moves.
    pub presentation: GroupPresentation,
    /// Factor indices of `presentation` in canonical order (`t1` first, then
    /// the factors carrying `x^p`, `y^p`); only meaningful when canonical.
    pub basis: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    /// `x^p = y^p = 1`
    Zero,
    /// `x^p = y^p = t1`
    Top,
    /// `x^p = 1`, `y^p = t_a`
    One(usize),
    /// `x^p = t1`, `y^p = t_c^twist`
    TopPlus(usize, u64),
    /// `x^p = t_b`, `y^p = t_a`
    Two { x: usize, y: usize },
}

struct Work {
    cur: GroupPresentation,
    moves: Vec<Move>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Which {
    X,
    Y,
}

impl Work {
    fn gen(&mut self, mv: GeneratorMove) {
        let m = Move::Generator(mv);
        self.cur = apply_move(&self.cur, &m).expect("classifier moves are valid");
        self.moves.push(m);
    }

    fn center(&mut self, h: Hom) {
        self.cur = apply_center_hom(&self.cur, &h);
        self.moves.push(Move::Center(h));
    }

    fn p(&self) -> u64 {
        self.cur.p()
    }

    fn view(&self, w: Which) -> Vec<u64> {
        let v = match w {
            Which::X => self.cur.xp(),
            Which::Y => self.cur.yp(),
        };
        let p = self.p() as i64;
        v.0.iter().map(|&e| e.rem_euclid(p) as u64).collect()
    }

    /// Sort key of the level filtration: `2m` for a factor of order `p^m`,
    /// `2 m1 - 1` for `t1`, infinite for free factors.
    fn key(&self, i: usize) -> u64 {
        match self.cur.center().order_of(i) {
            CyclicOrder::Infinite => u64::MAX,
            CyclicOrder::Finite(n) => {
                let m = level(n, self.p()) as u64;
                if i == 0 {
                    2 * m - 1
                } else {
                    2 * m
                }
            }
        }
    }

    fn pivot(&self, v: &[u64], skip_t1: bool) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, &e) in v.iter().enumerate() {
            if e == 0 || (skip_t1 && i == 0) {
                continue;
            }
            if best.map_or(true, |b| self.key(i) > self.key(b)) {
                best = Some(i);
            }
        }
        best
    }

    /// Transvections `t_a -> t_a t_j^k` clearing every other coordinate of
    /// the chosen vector modulo `p`.
    fn clear_column(&mut self, a: usize, w: Which) {
        let p = self.p() as i64;
        let v = self.view(w);
        let inv = mod_inverse(v[a] as i64, p).expect("pivot is a unit");
        for j in 0..v.len() {
            if j == a || v[j] == 0 {
                continue;
            }
            let k = (v[j] as i64 * inv).rem_euclid(p);
            let h = transvection(self.cur.center(), a, j, k).expect("pivot has the largest level");
            self.center(h);
        }
    }

    fn make_x_zero_on(&mut self, a: usize) {
        let p = self.p() as i64;
        let (xv, yv) = (self.view(Which::X), self.view(Which::Y));
        if xv[a] != 0 {
            let lambda = (xv[a] as i64 * mod_inverse(yv[a] as i64, p).unwrap()).rem_euclid(p);
            self.gen(GeneratorMove::XTimesYPow { n: p - lambda });
        }
    }
}

fn level(n: u64, p: u64) -> u32 {
    let mut n = n;
    let mut m = 0;
    while n > 1 {
        n /= p;
        m += 1;
    }
    m
}

fn rank_mod_p(a: &[u64], b: &[u64], p: u64) -> usize {
    let nz = |v: &[u64]| v.iter().any(|&e| e != 0);
    match (nz(a), nz(b)) {
        (false, false) => 0,
        (true, false) | (false, true) => 1,
        (true, true) => {
            let p = p as i128;
            let dependent = (0..a.len()).all(|i| {
                (0..a.len()).all(|j| (a[i] as i128 * b[j] as i128 - a[j] as i128 * b[i] as i128).rem_euclid(p) == 0)
            });
            if dependent {
                1
            } else {
                2
            }
        }
    }
}

/// Echelon normalization for `p` odd, or `p = 2` with `m1 >= 2`.
fn normalize_linear(w: &mut Work) -> Shape {
    let p = w.p() as i64;
    let (xv, yv) = (w.view(Which::X), w.view(Which::Y));
    match rank_mod_p(&xv, &yv, w.p()) {
        0 => Shape::Zero,
        1 => {
            if yv.iter().all(|&e| e == 0) {
                w.gen(GeneratorMove::Swap);
            }
            let yv = w.view(Which::Y);
            let k = yv.iter().position(|&e| e != 0).unwrap();
            w.make_x_zero_on(k);
            let a = w.pivot(&w.view(Which::Y), false).unwrap();
            w.clear_column(a, Which::Y);
            let c = w.view(Which::Y)[a] as i64;
            if a == 0 {
                if c != 1 {
                    w.gen(GeneratorMove::XPow { c: c as u64 });
                }
                w.gen(GeneratorMove::XTimesYPow { n: 1 });
                Shape::Top
            } else {
                if c != 1 {
                    w.gen(GeneratorMove::YPow { c: mod_inverse(c, p).unwrap() as u64 });
                }
                Shape::One(a)
            }
        }
        _ => {
            let union: Vec<u64> = xv.iter().zip(&yv).map(|(a, b)| a | b).collect();
            let a = w.pivot(&union, false).unwrap();
            if yv[a] == 0 {
                w.gen(GeneratorMove::Swap);
            }
            w.make_x_zero_on(a);
            w.clear_column(a, Which::Y);
            let b = w.pivot(&w.view(Which::X), false).unwrap();
            w.clear_column(b, Which::X);
            finish_two_pivots(w, a, b)
        }
    }
}

/// `x^p = alpha t_b`, `y^p = beta t_a` modulo `p`, `a != b`.
fn finish_two_pivots(w: &mut Work, a: usize, b: usize) -> Shape {
    let p = w.p() as i64;
    if a != 0 && b != 0 {
        let alpha = w.view(Which::X)[b] as i64;
        if alpha != 1 {
            w.gen(GeneratorMove::XPow { c: mod_inverse(alpha, p).unwrap() as u64 });
        }
        let beta = w.view(Which::Y)[a] as i64;
        if beta != 1 {
            w.gen(GeneratorMove::YPow { c: mod_inverse(beta, p).unwrap() as u64 });
        }
        return Shape::Two { x: b, y: a };
    }
    if a == 0 {
        w.gen(GeneratorMove::Swap);
    }
    let c = if a == 0 { b } else { a };
    let gamma = w.view(Which::X)[0] as i64;
    if gamma != 1 {
        w.gen(GeneratorMove::YPow { c: gamma as u64 });
    }
    let delta = w.view(Which::Y)[c] as i64;
    match w.cur.center().order_of(c) {
        CyclicOrder::Finite(_) => {
            if delta != 1 {
                let h = scaling(w.cur.center(), c, delta).expect("unit scaling");
                w.center(h);
            }
            Shape::TopPlus(c, 1)
        }
        CyclicOrder::Infinite => {
            let twist = delta.min(p - delta);
            if twist != delta {
                let h = scaling(w.cur.center(), c, -1).unwrap();
                w.center(h);
            }
            Shape::TopPlus(c, twist as u64)
        }
    }
}

/// `p = 2`, `m1 = 1`: `s = t1` survives in `V`, so `(xy)^2 = x^2 y^2 t1`
/// and the triple `{x^2, y^2, x^2 y^2 t1}` is what generator moves permute.
fn normalize_quadratic(w: &mut Work) -> Shape {
    let (xv, yv) = (w.view(Which::X), w.view(Which::Y));
    let k = xv.len();
    let e0: Vec<u64> = (0..k).map(|i| u64::from(i == 0)).collect();
    let zero = vec![0u64; k];
    let third: Vec<u64> = (0..k).map(|i| (xv[i] + yv[i] + e0[i]) % 2).collect();
    let proj = |v: &[u64]| -> Vec<u64> { v.iter().enumerate().map(|(i, &e)| if i == 0 { 0 } else { e }).collect() };
    match rank_mod_p(&proj(&xv), &proj(&yv), 2) {
        0 => {
            if xv == e0 && yv == e0 {
                return Shape::Top;
            }
            if xv == e0 {
                w.gen(GeneratorMove::XTimesYPow { n: 1 });
            } else if yv == e0 {
                w.gen(GeneratorMove::YTimesXPow { n: 1 });
            }
            Shape::Zero
        }
        1 => {
            let has_zero = xv == zero || yv == zero || third == zero;
            let target = if has_zero { &zero } else { &e0 };
            if yv == *target && xv != *target {
                w.gen(GeneratorMove::Swap);
            } else if xv != *target {
                w.gen(GeneratorMove::XTimesYPow { n: 1 });
            }
            let a = w.pivot(&w.view(Which::Y), true).unwrap();
            w.clear_column(a, Which::Y);
            if has_zero {
                Shape::One(a)
            } else {
                Shape::TopPlus(a, 1)
            }
        }
        _ => {
            let union: Vec<u64> = xv.iter().zip(&yv).map(|(a, b)| a | b).collect();
            let a = w.pivot(&union, true).unwrap();
            if yv[a] == 0 {
                w.gen(GeneratorMove::Swap);
            }
            if w.view(Which::X)[a] != 0 {
                w.gen(GeneratorMove::XTimesYPow { n: 1 });
            }
            w.clear_column(a, Which::Y);
            let b = w.pivot(&w.view(Which::X), true).unwrap();
            w.clear_column(b, Which::X);
            Shape::Two { x: b, y: a }
        }
    }
}

fn check_decomposed(d: &GroupPresentation) -> Result<(), ClassifyError> {
    if !crate::normalize::is_t1_normal(d) {
        return Err(ClassifyError::NotDecomposed("s is not t1^(p^(m1-1))".into()));
    }
    let p = d.p();
    for f in d.center().factors() {
        if let CyclicOrder::Finite(n) = f.order {
            if crate::abelian::p_part(n, p) != n {
                return Err(ClassifyError::NotDecomposed(format!("factor `{}` has order prime to p", f.name)));
            }
        }
    }
    Ok(())
}

/// Normalizes a decomposed `D` of any rank.
fn classify_d(d: &GroupPresentation) -> Result<Classified, ClassifyError> {
    check_decomposed(d)?;
    let p = d.p();
    let mut w = Work { cur: d.clone(), moves: Vec::new() };
    let m1 = level(d.center().order_of(0).modulus().unwrap() as u64, p);
    let shape = if p == 2 && m1 == 1 { normalize_quadratic(&mut w) } else { normalize_linear(&mut w) };
    let (reduced, moves) = reduce_pth_powers_moves(&w.cur);
    w.cur = reduced;
    w.moves.extend(moves);
    let zc = w.cur.center().clone();
    let lv = |i: usize| level(zc.order_of(i).modulus().map_or(0, |n| n as u64), p);
    let free = |i: usize| zc.order_of(i).is_infinite();
    let (family, m, basis, twist) = match shape {
        Shape::Zero => (1, vec![m1], vec![0], 1),
        Shape::Top => (2, vec![m1], vec![0], 1),
        Shape::One(a) if free(a) => (5, vec![m1], vec![0, a], 1),
        Shape::One(a) => (3, vec![m1, lv(a)], vec![0, a], 1),
        Shape::TopPlus(c, t) if free(c) => (6, vec![m1], vec![0, c], t),
        Shape::TopPlus(c, _) => (4, vec![m1, lv(c)], vec![0, c], 1),
        Shape::Two { x, y } => match (free(x), free(y)) {
            (false, false) => (7, vec![m1, lv(x), lv(y)], vec![0, x, y], 1),
            (false, true) => (8, vec![m1, lv(x)], vec![0, x, y], 1),
            (true, true) => (9, vec![m1], vec![0, x, y], 1),
            (true, false) => unreachable!("free pivot below a finite one"),
        },
    };
    if basis.len() < zc.rank() {
        let unused = (0..zc.rank()).find(|i| !basis.contains(i)).unwrap();
        let factor = zc.factors()[unused].clone();
        let (rest, _) = zc.split_off(&[unused]);
        let cut = |v: &CentralVector| {
            debug_assert_eq!(v.0[unused], 0);
            CentralVector(v.0.iter().enumerate().filter(|(i, _)| *i != unused).map(|(_, &e)| e).collect())
        };
        let reduced = GroupPresentation::new(p, rest, cut(w.cur.s()), cut(w.cur.xp()), cut(w.cur.yp()))
            .expect("split keeps a valid presentation");
        return Ok(Classified {
            outcome: ClassifyOutcome::SplitFound { factor, reduced },
            moves: w.moves,
            presentation: w.cur,
            basis,
        });
    }
    let form = CanonicalForm::new(family, p, &m, twist, AbelianInvariants { torsion: vec![], free_rank: 0 })
        .expect("classifier produces legal parameters");
    Ok(Classified { outcome: ClassifyOutcome::Canonical(form), moves: w.moves, presentation: w.cur, basis })
}

fn classify_rank(d: &GroupPresentation, rank: usize) -> Result<Classified, ClassifyError> {
    if d.center().rank() != rank {
        return Err(ClassifyError::WrongRank { expected: rank, got: d.center().rank() });
    }
    classify_d(d)
}

/// Rank-1 `D`: always family 1 or 2.
pub fn classify_rank1(d: &GroupPresentation) -> Result<Classified, ClassifyError> {
    classify_rank(d, 1)
}

/// Rank-2 `D`: families 3 to 6, or a split.
pub fn classify_rank2(d: &GroupPresentation) -> Result<Classified, ClassifyError> {
    classify_rank(d, 2)
}

/// Rank-3 `D`: families 7 to 9, or a split.
pub fn classify_rank3(d: &GroupPresentation) -> Result<Classified, ClassifyError> {
    classify_rank(d, 3)
}

/// Block-diagonal extension of a move on `D` to `D x A`.
fn lift(mv: &Move, a: &FgAbelian) -> Move {
    match mv {
        Move::Generator(GeneratorMove::XTimesCentral { z }) => {
            Move::Generator(GeneratorMove::XTimesCentral { z: pad(z, a.rank()) })
        }
        Move::Generator(GeneratorMove::YTimesCentral { z }) => {
            Move::Generator(GeneratorMove::YTimesCentral { z: pad(z, a.rank()) })
        }
        Move::Generator(g) => Move::Generator(g.clone()),
        Move::Center(h) => Move::Center(block_diag(h, &Hom::identity(a))),
    }
}

fn pad(z: &CentralVector, extra: usize) -> CentralVector {
    let mut v = z.0.clone();
    v.extend(std::iter::repeat(0).take(extra));
    CentralVector(v)
}

fn concat(a: &FgAbelian, b: &FgAbelian) -> FgAbelian {
    FgAbelian::from_factors_unchecked(a.factors().iter().chain(b.factors()).cloned().collect())
}

/// `h1 + h2` acting on the concatenated centers.
pub fn block_diag(h1: &Hom, h2: &Hom) -> Hom {
    let (c1, c2) = (h1.source.rank(), h2.source.rank());
    let mut matrix = Vec::new();
    for row in &h1.matrix {
        let mut r = row.clone();
        r.extend(std::iter::repeat(0).take(c2));
        matrix.push(r);
    }
    for row in &h2.matrix {
        let mut r = vec![0; c1];
        r.extend(row.iter().copied());
        matrix.push(r);
    }
    Hom { source: concat(&h1.source, &h2.source), target: concat(&h1.target, &h2.target), matrix }
}

/// Full pipeline: decompose, classify `D` (splitting off factors while
/// the classifier finds them), then rebase to the canonical presentation.
/// Replaying the transcript on `pres` gives `form.presentation()`.
pub fn classify(pres: &GroupPresentation) -> (CanonicalForm, Vec<Move>) {
    let dec = decompose(pres);
    let mut moves = dec.moves.clone();
    let mut d = dec.d.clone();
    let mut a = dec.a.clone();
    let (form, done) = loop {
        let c = classify_rank(&d, d.center().rank()).expect("decompose output is in decomposed form");
        moves.extend(c.moves.iter().map(|m| lift(m, &a)));
        match c.outcome.clone() {
            ClassifyOutcome::Canonical(form) => break (form, c),
            ClassifyOutcome::SplitFound { factor, reduced } => {
                let full = concat(c.presentation.center(), &a);
                let idx = c.presentation.center().index_of(&factor.name).unwrap();
                let r = c.presentation.center().rank();
                let mut order: Vec<usize> = (0..r).filter(|&i| i != idx).collect();
                order.push(idx);
                order.extend(r..full.rank());
                moves.push(Move::Center(permutation(&full, &order)));
                a = FgAbelian::from_factors_unchecked(std::iter::once(factor).chain(a.factors().iter().cloned()).collect());
                d = reduced;
            }
        }
    };
    let form = form.with_complement(invariant_factors(&a));
    let dc = done.presentation.center();
    let target_d = form.d_presentation().center().clone();
    let reorder = Hom {
        source: dc.clone(),
        target: target_d,
        matrix: done
            .basis
            .iter()
            .map(|&i| (0..dc.rank()).map(|j| i64::from(i == j)).collect())
            .collect(),
    };
    let d_twist = match &done.outcome {
        ClassifyOutcome::Canonical(f) => f.twist(),
        ClassifyOutcome::SplitFound { .. } => unreachable!("loop ends on a canonical outcome"),
    };
    if d_twist != form.twist() {
        let full = done.presentation.with_extra_center(&a);
        moves.extend(absorb_twist(&full, done.basis[1], d_twist as i64));
    }
    let final_hom = block_diag(&reorder, &invariant_form_map(&a));
    moves.push(Move::Center(final_hom));
    (form, moves)
}

/// Moves from `y^p = u^b` to `y^p = u` using a free factor `f` of the
/// complement: `y -> y f`, then the basis with `u' = u^b f^p`.
fn absorb_twist(g: &GroupPresentation, u: usize, b: i64) -> Vec<Move> {
    let z = g.center();
    let f = (0..z.rank()).find(|&i| i != u && z.order_of(i).is_infinite()).expect("free factor in the complement");
    let p = g.p() as i64;
    // b d - p c = 1
    let eg = b.extended_gcd(&p);
    let (d, c) = (eg.x * eg.gcd, -eg.y * eg.gcd);
    let mut matrix: Vec<Vec<i64>> = (0..z.rank()).map(|i| (0..z.rank()).map(|j| i64::from(i == j)).collect()).collect();
    matrix[u][u] = d;
    matrix[u][f] = -c;
    matrix[f][u] = -p;
    matrix[f][f] = b;
    vec![
        Move::Generator(GeneratorMove::YTimesCentral { z: z.generator(f) }),
        Move::Center(Hom { source: z.clone(), target: z.clone(), matrix }),
    ]
}

/// Convenience: only the canonical form.
pub fn canonical_form(pres: &GroupPresentation) -> CanonicalForm {
    classify(pres).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::replay;
    use crate::presentation::parse;

    fn g(text: &str) -> GroupPresentation {
        parse(text).unwrap()
    }

    fn form(text: &str) -> CanonicalForm {
        let pres = g(text);
        let (f, moves) = classify(&pres);
        assert_eq!(replay(&pres, &moves).unwrap(), f.presentation(), "transcript for {text}");
        f
    }

    fn fam(family: u8, p: u64, m: &[u32]) -> CanonicalForm {
        CanonicalForm::new(family, p, m, 1, AbelianInvariants { torsion: vec![], free_rank: 0 }).unwrap()
    }

    #[test]
    fn rank_one_examples() {
        assert_eq!(form("group { prime 2; center t1:2; comm t1; xp 1; yp 1 }"), fam(1, 2, &[1]));
        assert_eq!(form("group { prime 2; center t1:2; comm t1; xp t1; yp t1 }"), fam(2, 2, &[1]));
        assert_eq!(form("group { prime 5; center t1:5; comm t1; xp 1; yp t1^2 }"), fam(2, 5, &[1]));
        assert_eq!(form("group { prime 2; center t1:2; comm t1; xp t1; yp 1 }"), fam(1, 2, &[1]));
        assert_eq!(form("group { prime 3; center t1:9; comm t1^3; xp t1^4; yp t1^2 }"), fam(2, 3, &[2]));
    }

    #[test]
    fn rank_one_never_splits() {
        let d = g("group { prime 3; center t1:3; comm t1; xp t1; yp 1 }");
        let c = classify_rank1(&d).unwrap();
        assert!(matches!(c.outcome, ClassifyOutcome::Canonical(_)));
        assert_eq!(classify_rank2(&d).unwrap_err(), ClassifyError::WrongRank { expected: 2, got: 1 });
    }

    #[test]
    fn rank_two_examples() {
        assert_eq!(form("group { prime 3; center t1:3, t2:9; comm t1; xp 1; yp t2^2 }"), fam(3, 3, &[1, 2]));
        assert_eq!(form("group { prime 3; center t1:3, u1:inf; comm t1; xp t1; yp u1 }"), fam(6, 3, &[1]));
        assert_eq!(form("group { prime 2; center t1:2, t2:2; comm t1; xp t2; yp t2 }"), fam(4, 2, &[1, 1]));
        assert_eq!(form("group { prime 2; center t1:4, u1:inf; comm t1^2; xp 1; yp u1^3 }"), fam(5, 2, &[2]));
    }

    #[test]
    fn rank_two_split() {
        let d = g("group { prime 3; center t1:9, t2:3; comm t1^3; xp 1; yp t1 t2 }");
        let c = classify_rank2(&d).unwrap();
        match c.outcome {
            ClassifyOutcome::SplitFound { factor, reduced } => {
                assert_eq!(factor.order, CyclicOrder::Finite(3));
                assert_eq!(reduced.center().rank(), 1);
            }
            other => panic!("expected a split, got {other:?}"),
        }
        let f = form("group { prime 3; center t1:9, t2:3; comm t1^3; xp 1; yp t1 t2 }");
        assert_eq!(f, fam(2, 3, &[2]).with_complement(AbelianInvariants { torsion: vec![3], free_rank: 0 }));
    }

    #[test]
    fn rank_three_examples() {
        assert_eq!(
            form("group { prime 3; center t1:3, t2:3, t3:9; comm t1; xp t3^2; yp t2 }"),
            fam(7, 3, &[1, 1, 2])
        );
        assert_eq!(
            form("group { prime 5; center t1:5, u1:inf, u2:inf; comm t1; xp u2^3; yp u1 }"),
            fam(9, 5, &[1])
        );
        let split = form("group { prime 3; center t1:3, t2:3, t3:3; comm t1; xp 1; yp t2 t3^2 }");
        assert_eq!(split, fam(3, 3, &[1, 1]).with_complement(AbelianInvariants { torsion: vec![3], free_rank: 0 }));
    }

    #[test]
    fn complement_is_collected() {
        let f = form("group { prime 2; center t1:2, c:5; comm t1; xp 1; yp 1 }");
        assert_eq!(f, fam(1, 2, &[1]).with_complement(AbelianInvariants { torsion: vec![5], free_rank: 0 }));
        let f = form("group { prime 2; center t1:2, c:6, w:inf; comm t1; xp c^3; yp 1 }");
        assert_eq!(f.complement(), &AbelianInvariants { torsion: vec![3], free_rank: 1 });
        assert_eq!(f.family(), 3);
    }

    #[test]
    fn family6_twist_for_p5() {
        let f = form("group { prime 5; center t1:5, u1:inf; comm t1; xp t1; yp u1^2 }");
        assert_eq!((f.family(), f.twist()), (6, 2));
        let f3 = form("group { prime 5; center t1:5, u1:inf; comm t1; xp t1^2; yp u1 }");
        assert_eq!(f3.twist(), 2);
        let f1 = form("group { prime 5; center t1:5, u1:inf; comm t1; xp t1^3; yp u1^3 }");
        assert_eq!(f1.twist(), 1);
    }

    #[test]
    fn canonical_output_is_a_fixed_point() {
        for (family, m) in [(1, vec![2]), (4, vec![2, 1]), (7, vec![1, 2, 2]), (8, vec![1, 3]), (9, vec![2])] {
            let f = fam(family, 3, &m);
            assert_eq!(canonical_form(&f.presentation()), f);
        }
    }

    #[test]
    fn family7_parameters_are_sorted() {
        assert_eq!(fam(7, 2, &[1, 2, 1]).m(), vec![1, 1, 2]);
    }

    #[test]
    fn iso_reasons() {
        let f3 = fam(3, 3, &[1, 1]);
        let f4 = fam(4, 3, &[1, 1]);
        assert!(!canonical_iso(&f3, &f4));
        assert!(distinguishing_invariant(&f3, &f4).unwrap().contains("non-central order-p element count differs"));
        let f8 = fam(8, 2, &[1, 1]);
        let f9 = fam(9, 2, &[1]);
        assert!(distinguishing_invariant(&f8, &f9).unwrap().contains("infinite rank"));
        assert!(canonical_iso(&f3, &f3.clone()));
    }

    #[test]
    fn json_shape() {
        let f = fam(6, 5, &[1]).with_complement(AbelianInvariants { torsion: vec![2], free_rank: 1 });
        assert_eq!(
            f.to_json().to_string(),
            r#"{"complement":{"free_rank":1,"torsion":[2]},"family":6,"infinite_rank":1,"m":[1],"p":5}"#
        );
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_forms(2, 1, &[1, 2]).len(), 2);
        assert_eq!(enumerate_forms(3, 2, &[7]).len(), 6);
        let nine = enumerate_forms(2, 1, &[9]);
        assert_eq!(nine.len(), 1);
        assert_eq!(nine[0].infinite_rank(), 2);
        assert_eq!(enumerate_forms(2, 2, &[1, 2, 3, 4]).len(), 2 + 2 + 4 + 4);
        assert_eq!(enumerate_forms(7, 1, &[6]).len(), 3);
        for f in enumerate_forms(3, 2, &[1, 2, 3, 4, 5, 6, 7, 8, 9]) {
            assert_eq!(canonical_form(&f.presentation()), f);
        }
    }

    #[test]
    fn free_complement_absorbs_twist() {
        let d = g("group { prime 5; center t1:5, u1:inf, w:inf, c:10; comm t1; xp t1; yp u1^2 }");
        let (f, moves) = classify(&d);
        assert_eq!((f.family(), f.twist(), f.complement().free_rank), (6, 1, 1));
        assert_eq!(replay(&d, &moves).unwrap(), f.presentation());
        let kept = g("group { prime 5; center t1:5, u1:inf, c:10; comm t1; xp t1; yp u1^2 }");
        assert_eq!(canonical_form(&kept).twist(), 2);
    }
}
