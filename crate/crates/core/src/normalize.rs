//! Isomorphism-preserving moves on presentations: changes of the generators
//! `x, y` and changes of basis of the center, plus the two normalizations
//! every later stage assumes (`s` a power of the first factor `t1`, and
//! `x^p, y^p` reduced modulo `Z^p`).

use num_integer::Integer;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{abelian_iso, p_part, CentralVector, CyclicOrder, Factor, FgAbelian, Hom};
use crate::engine::{commutator, mul, power, Element};
use crate::presentation::GroupPresentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NormalizeError {
    #[error("invalid move: {0}")]
    InvalidMove(String),
}

/// Replacement of the generating pair. `s` changes with it: the first four
/// keep it, `XPow(c)`/`YPow(c)` turn it into `s^c`, `Swap` into `s^-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum GeneratorMove {
    /// `x -> x z`
    XTimesCentral { z: CentralVector },
    /// `y -> y z`
    YTimesCentral { z: CentralVector },
    /// `x -> x y^n`
    XTimesYPow { n: i64 },
    /// `y -> x^n y`
    YTimesXPow { n: i64 },
    /// `x -> x^c`
    XPow { c: u64 },
    /// `y -> y^c`
    YPow { c: u64 },
    /// `(x, y) -> (y, x)`
    Swap,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Move {
    Generator(GeneratorMove),
    /// Change of center coordinates: `s`, `x^p`, `y^p` are mapped through
    /// the isomorphism.
    Center(Hom),
}

fn inv_mod(a: i64, n: i64) -> Option<i64> {
    let g = a.extended_gcd(&n);
    (g.gcd == 1 || g.gcd == -1).then(|| (g.x * g.gcd).rem_euclid(n))
}

/// Multiplicative inverse of `a` modulo `n`, if `gcd(a, n) = 1`.
pub fn mod_inverse(a: i64, n: i64) -> Option<i64> {
    if n == 1 {
        return Some(0);
    }
    inv_mod(a.rem_euclid(n), n)
}

fn identity_rows(k: usize) -> Vec<Vec<i64>> {
    (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect()
}

/// Basis change `t_target -> t_target * t_source^k`. New coordinates:
/// `w_source -= k * w_target`. `None` unless `ord(t_source^k)` divides
/// `ord(t_target)`.
pub fn transvection(center: &FgAbelian, target: usize, source: usize, k: i64) -> Option<Hom> {
    if target == source {
        return None;
    }
    let ok = match (center.order_of(target), center.order_of(source)) {
        (CyclicOrder::Infinite, _) => true,
        (CyclicOrder::Finite(_), CyclicOrder::Infinite) => k == 0,
        (CyclicOrder::Finite(nt), CyclicOrder::Finite(ns)) => {
            let ord = ns / (k.rem_euclid(ns as i64) as u64).gcd(&ns);
            nt % ord == 0
        }
    };
    if !ok {
        return None;
    }
    let mut m = identity_rows(center.rank());
    m[source][target] = -k;
    Some(Hom { source: center.clone(), target: center.clone(), matrix: m })
}

/// Basis change `t_i -> t_i^c`; `c` must be a unit modulo a finite order,
/// or `+-1` for a free factor.
pub fn scaling(center: &FgAbelian, i: usize, c: i64) -> Option<Hom> {
    let inv = match center.order_of(i) {
        CyclicOrder::Infinite if c == 1 || c == -1 => c,
        CyclicOrder::Infinite => return None,
        CyclicOrder::Finite(n) => mod_inverse(c, n as i64)?,
    };
    let mut m = identity_rows(center.rank());
    m[i][i] = inv;
    Some(Hom { source: center.clone(), target: center.clone(), matrix: m })
}

/// Reorders the factors: new factor `k` is old factor `order[k]`.
pub fn permutation(center: &FgAbelian, order: &[usize]) -> Hom {
    let k = center.rank();
    assert_eq!(order.len(), k);
    let factors = order.iter().map(|&i| center.factors()[i].clone()).collect();
    let matrix = order.iter().map(|&i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
    Hom { source: center.clone(), target: FgAbelian::from_factors_unchecked(factors), matrix }
}

/// Renames the factors, keeping the coordinates.
pub fn renaming(center: &FgAbelian, names: &[String]) -> Hom {
    let factors = center
        .factors()
        .iter()
        .zip(names)
        .map(|(f, n)| Factor::new(n.clone(), f.order))
        .collect();
    Hom {
        source: center.clone(),
        target: FgAbelian::new(factors).expect("distinct names"),
        matrix: identity_rows(center.rank()),
    }
}

/// Image of the presentation under a change of center coordinates.
pub fn apply_center_hom(g: &GroupPresentation, h: &Hom) -> GroupPresentation {
    GroupPresentation::from_parts(g.p(), h.target.clone(), h.apply(g.s()), h.apply(g.xp()), h.apply(g.yp()))
}

fn check_center_hom(g: &GroupPresentation, h: &Hom) -> Result<(), NormalizeError> {
    if &h.source != g.center() {
        return Err(NormalizeError::InvalidMove("center hom source does not match the presentation".into()));
    }
    if h.matrix.len() != h.target.rank() || h.matrix.iter().any(|r| r.len() != h.source.rank()) {
        return Err(NormalizeError::InvalidMove("center hom has the wrong shape".into()));
    }
    if !h.is_well_defined() || !abelian_iso(&h.source, &h.target) {
        return Err(NormalizeError::InvalidMove("center hom is not an isomorphism".into()));
    }
    Ok(())
}

/// New generators `(x', y')` as elements of `g`.
fn new_generators(g: &GroupPresentation, mv: &GeneratorMove) -> Result<(Element, Element), NormalizeError> {
    let x = Element::x(g);
    let y = Element::y(g);
    let unit = |c: u64| {
        if c % g.p() == 0 {
            Err(NormalizeError::InvalidMove(format!("exponent {c} is divisible by p = {}", g.p())))
        } else {
            Ok(())
        }
    };
    let central = |z: &CentralVector| {
        if z.0.len() != g.center().rank() {
            Err(NormalizeError::InvalidMove("central vector has the wrong length".into()))
        } else {
            Ok(Element::central(g, z.clone()))
        }
    };
    Ok(match mv {
        GeneratorMove::XTimesCentral { z } => (mul(g, &x, &central(z)?), y),
        GeneratorMove::YTimesCentral { z } => (x, mul(g, &y, &central(z)?)),
        GeneratorMove::XTimesYPow { n } => (mul(g, &x, &power(g, &y, *n)), y),
        GeneratorMove::YTimesXPow { n } => {
            let yn = mul(g, &power(g, &x, *n), &y);
            (x, yn)
        }
        GeneratorMove::XPow { c } => {
            unit(*c)?;
            (power(g, &x, *c as i64), y)
        }
        GeneratorMove::YPow { c } => {
            unit(*c)?;
            (x, power(g, &y, *c as i64))
        }
        GeneratorMove::Swap => (y, x),
    })
}

/// Presentation of the same group on the new generators, without
/// renormalizing the center.
pub fn apply_generator_move_raw(g: &GroupPresentation, mv: &GeneratorMove) -> Result<GroupPresentation, NormalizeError> {
    let (x1, y1) = new_generators(g, mv)?;
    let p = g.p() as i64;
    let xp = power(g, &x1, p);
    let yp = power(g, &y1, p);
    let s = commutator(g, &x1, &y1).expect("generators belong to g");
    debug_assert!(xp.is_central_form() && yp.is_central_form());
    Ok(GroupPresentation::from_parts(g.p(), g.center().clone(), s.z, xp.z, yp.z))
}

/// Applies one move. Generator moves are followed by [`locate_t1`].
pub fn apply_move(g: &GroupPresentation, mv: &Move) -> Result<GroupPresentation, NormalizeError> {
    match mv {
        Move::Generator(m) => Ok(locate_t1(&apply_generator_move_raw(g, m)?)),
        Move::Center(h) => {
            check_center_hom(g, h)?;
            Ok(apply_center_hom(g, h))
        }
    }
}

pub fn replay(g: &GroupPresentation, moves: &[Move]) -> Result<GroupPresentation, NormalizeError> {
    moves.iter().try_fold(g.clone(), |acc, m| apply_move(&acc, m))
}

/// Splits every factor whose order is divisible by `p` but is not a power
/// of `p` into its `p`-part (same name, same position) followed by its
/// coprime part (name suffixed `_c`).
pub fn split_mixed(center: &FgAbelian, p: u64) -> Hom {
    let mut factors = Vec::new();
    let mut rows = Vec::new();
    let k = center.rank();
    let unit = |i: usize| -> Vec<i64> { (0..k).map(|j| i64::from(i == j)).collect() };
    for (i, f) in center.factors().iter().enumerate() {
        match f.order {
            CyclicOrder::Finite(n) if n % p == 0 && p_part(n, p) != n => {
                let q = p_part(n, p);
                factors.push(Factor::finite(f.name.clone(), q));
                rows.push(unit(i));
                let mut name = format!("{}_c", f.name);
                while center.index_of(&name).is_some() || factors.iter().any(|g: &Factor| g.name == name) {
                    name.push('\'');
                }
                factors.push(Factor::finite(name, n / q));
                rows.push(unit(i));
            }
            _ => {
                factors.push(f.clone());
                rows.push(unit(i));
            }
        }
    }
    Hom { source: center.clone(), target: FgAbelian::new(factors).expect("unique names"), matrix: rows }
}

/// `locate_t1` together with the center isomorphism it applied.
pub fn locate_t1_map(g: &GroupPresentation) -> (GroupPresentation, Hom) {
    let p = g.p();
    let split = split_mixed(g.center(), p);
    let g1 = apply_center_hom(g, &split);
    let zc = g1.center().clone();
    // s = prod t_i^{c_i p^{m_i - 1}} over the p-power factors
    let mut pivot: Option<(usize, u32)> = None;
    let mut a = vec![0i64; zc.rank()];
    let mut levels = vec![0u32; zc.rank()];
    for (i, f) in zc.factors().iter().enumerate() {
        let e = g1.s().0[i];
        if e == 0 {
            continue;
        }
        let n = match f.order {
            CyclicOrder::Finite(n) => n,
            CyclicOrder::Infinite => unreachable!("s has finite order"),
        };
        if p_part(n, p) != n {
            continue;
        }
        let m = n.trailing_zeros_base(p);
        let step = (n / p) as i64;
        debug_assert_eq!(e % step, 0);
        a[i] = e / step;
        levels[i] = m;
        if pivot.map_or(true, |(_, pm)| m < pm) {
            pivot = Some((i, m));
        }
    }
    let (ip, mp) = pivot.expect("s has order p");
    for i in 0..zc.rank() {
        if a[i] != 0 && i != ip {
            a[i] *= (p as i64).pow(levels[i] - mp);
        }
    }
    let np = (p as i64).pow(mp);
    let inv = mod_inverse(a[ip], np).expect("pivot coefficient is a unit");
    let mut m = identity_rows(zc.rank());
    m[ip][ip] = inv;
    for j in 0..zc.rank() {
        if j != ip && a[j] != 0 {
            m[j][ip] = -a[j] * inv;
        }
    }
    let rebase = Hom { source: zc.clone(), target: zc.clone(), matrix: m };
    let mut order: Vec<usize> = vec![ip];
    order.extend((0..zc.rank()).filter(|&i| i != ip));
    let perm = permutation(&zc, &order);
    let total = split.then(&rebase).then(&perm);
    let out = apply_center_hom(g, &total);
    debug_assert_eq!(out.s(), &out.center().scale(&out.center().generator(0), np / p as i64));
    (out, total)
}

trait BaseLog {
    fn trailing_zeros_base(self, p: u64) -> u32;
}

impl BaseLog for u64 {
    fn trailing_zeros_base(self, p: u64) -> u32 {
        let mut n = self;
        let mut k = 0;
        while n % p == 0 && n > 1 {
            n /= p;
            k += 1;
        }
        k
    }
}

/// Rebases the center so that it starts with `t1` of order `p^{m1}` and
/// `s = t1^{p^{m1-1}}`. Mixed-order factors are primary split first.
pub fn locate_t1(g: &GroupPresentation) -> GroupPresentation {
    locate_t1_map(g).0
}

/// Whether `s` is already `t1^{p^{m1-1}}` for the first factor.
pub fn is_t1_normal(g: &GroupPresentation) -> bool {
    match g.center().factors().first().map(|f| f.order) {
        Some(CyclicOrder::Finite(n)) if p_part(n, g.p()) == n => {
            g.s() == &g.center().scale(&g.center().generator(0), (n / g.p()) as i64)
        }
        _ => false,
    }
}

/// Central corrections `c` with `(x c)^p = x^p c^p` reduced: coordinates on
/// `p`-power and free factors land in `[0, p)`, coprime ones at 0.
fn pth_power_correction(g: &GroupPresentation, v: &CentralVector) -> CentralVector {
    let p = g.p() as i64;
    let coords = v
        .0
        .iter()
        .zip(g.center().factors())
        .map(|(&e, f)| match f.order {
            CyclicOrder::Finite(n) if (n as i64) % p != 0 => {
                let n = n as i64;
                (-(e as i128) * mod_inverse(p, n).unwrap() as i128).rem_euclid(n as i128) as i64
            }
            _ => -(e - e.rem_euclid(p)) / p,
        })
        .collect();
    g.center().reduce(&CentralVector(coords))
}

/// `reduce_pth_powers` together with the generator moves it made.
pub fn reduce_pth_powers_moves(g: &GroupPresentation) -> (GroupPresentation, Vec<Move>) {
    let mut moves = Vec::new();
    let mut cur = g.clone();
    let cx = pth_power_correction(&cur, cur.xp());
    if !cx.is_zero() {
        let mv = GeneratorMove::XTimesCentral { z: cx };
        cur = apply_generator_move_raw(&cur, &mv).expect("central move is valid");
        moves.push(Move::Generator(mv));
    }
    let cy = pth_power_correction(&cur, cur.yp());
    if !cy.is_zero() {
        let mv = GeneratorMove::YTimesCentral { z: cy };
        cur = apply_generator_move_raw(&cur, &mv).expect("central move is valid");
        moves.push(Move::Generator(mv));
    }
    (cur, moves)
}

/// Replaces `x` and `y` by central multiples so that every coordinate of
/// `x^p` and `y^p` lies in `[0, p)` on free and `p`-power factors and is 0
/// on factors of order prime to `p`.
pub fn reduce_pth_powers(g: &GroupPresentation) -> GroupPresentation {
    reduce_pth_powers_moves(g).0
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: u64) -> i64 {
    loop {
        let c = rng.gen_range(1..n.max(2)) as i64;
        if (c as u64).gcd(&n) == 1 {
            return c;
        }
    }
}

/// A random generator move with small coefficients.
pub fn random_generator_move<R: Rng + ?Sized>(g: &GroupPresentation, rng: &mut R) -> GeneratorMove {
    let p = g.p();
    let random_central = |rng: &mut R| {
        let coords = g
            .center()
            .factors()
            .iter()
            .map(|f| match f.order {
                CyclicOrder::Finite(n) => rng.gen_range(0..n) as i64,
                CyclicOrder::Infinite => rng.gen_range(-2..=2),
            })
            .collect();
        CentralVector(coords)
    };
    match rng.gen_range(0..7) {
        0 => GeneratorMove::XTimesCentral { z: random_central(rng) },
        1 => GeneratorMove::YTimesCentral { z: random_central(rng) },
        2 => GeneratorMove::XTimesYPow { n: rng.gen_range(0..p) as i64 },
        3 => GeneratorMove::YTimesXPow { n: rng.gen_range(0..p) as i64 },
        4 => GeneratorMove::XPow { c: rng.gen_range(1..p.max(2)) },
        5 => GeneratorMove::YPow { c: rng.gen_range(1..p.max(2)) },
        _ => GeneratorMove::Swap,
    }
}

/// A random automorphism of the center: a permutation, a scaling or a
/// transvection.
pub fn random_center_automorphism<R: Rng + ?Sized>(center: &FgAbelian, rng: &mut R) -> Hom {
    let k = center.rank();
    if k == 0 {
        return Hom::identity(center);
    }
    match rng.gen_range(0..3) {
        0 => {
            let mut order: Vec<usize> = (0..k).collect();
            order.shuffle(rng);
            permutation(center, &order)
        }
        1 => {
            let i = rng.gen_range(0..k);
            let c = match center.order_of(i) {
                CyclicOrder::Finite(n) => random_unit(rng, n),
                CyclicOrder::Infinite => -1,
            };
            scaling(center, i, c).expect("unit scaling")
        }
        _ => {
            if k < 2 {
                return Hom::identity(center);
            }
            let t = rng.gen_range(0..k);
            let mut sidx = rng.gen_range(0..k - 1);
            if sidx >= t {
                sidx += 1;
            }
            let k_coef = match (center.order_of(t), center.order_of(sidx)) {
                (CyclicOrder::Infinite, CyclicOrder::Infinite) => rng.gen_range(-2..=2),
                (CyclicOrder::Infinite, CyclicOrder::Finite(ns)) => rng.gen_range(0..ns) as i64,
                (CyclicOrder::Finite(_), CyclicOrder::Infinite) => 0,
                (CyclicOrder::Finite(nt), CyclicOrder::Finite(ns)) => {
                    let step = ns / nt.gcd(&ns);
                    (rng.gen_range(0..ns) / step * step) as i64
                }
            };
            transvection(center, t, sidx, k_coef).expect("transvection chosen valid")
        }
    }
}

/// Applies `steps` random moves; returns the result and the moves.
pub fn scramble<R: Rng + ?Sized>(g: &GroupPresentation, steps: usize, rng: &mut R) -> (GroupPresentation, Vec<Move>) {
    let mut cur = g.clone();
    let mut moves = Vec::with_capacity(steps);
    for _ in 0..steps {
        let mv = if rng.gen_bool(0.5) {
            Move::Generator(random_generator_move(&cur, rng))
        } else {
            Move::Center(random_center_automorphism(cur.center(), rng))
        };
        cur = apply_move(&cur, &mv).expect("random moves are valid");
        moves.push(mv);
    }
    (cur, moves)
}
