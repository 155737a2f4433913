//! Splitting `G = D x A` with `A` abelian and the center of `D` spanned by
//! `t1` and at most two further factors carrying `x^p` and `y^p`.

use num_bigint::BigInt;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::abelian::{int_matrix, mat_mul, p_part, smith_normal_form, CentralVector, CyclicOrder, FgAbelian, Hom};
use crate::engine::{belongs, commutator, mul, power, Element};
use crate::normalize::{apply_center_hom, locate_t1_map, mod_inverse, permutation, reduce_pth_powers_moves, Move};
use crate::presentation::GroupPresentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecomposeError {
    #[error("the two elements commute modulo the center")]
    CommutingPair,
    #[error("element does not belong to this presentation")]
    MixedPresentations,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecompositionResult {
    /// Center `<t1> x <z2> x <z3>` (only the factors that occur), `s = t1^{p^{m1-1}}`,
    /// `x^p` in `<t1, z2>`, `y^p` in `<t1, z2, z3>`.
    pub d: GroupPresentation,
    pub a: FgAbelian,
    /// Old center coordinates to the coordinates of `Z(D) + A`.
    pub witness: Hom,
    /// Moves taking the input to `product(d, a)`.
    pub moves: Vec<Move>,
}

impl DecompositionResult {
    /// The presentation of `D x A`.
    pub fn product(&self) -> GroupPresentation {
        self.d.with_extra_center(&self.a)
    }
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(b: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let m = int_matrix(b);
    let snf = smith_normal_form(&m);
    debug_assert!(snf.diagonal().iter().all(|d| *d == BigInt::from(1)));
    // u b v = 1  =>  b^-1 = v u
    mat_mul(&snf.v, &snf.u)
        .iter()
        .map(|r| r.iter().map(|x| x.to_i64().expect("unimodular inverse overflow")).collect())
        .collect()
}

struct Work {
    cur: GroupPresentation,
    witness: Hom,
    moves: Vec<Move>,
}

impl Work {
    fn center(&mut self, h: Hom) {
        self.cur = apply_center_hom(&self.cur, &h);
        self.witness = self.witness.then(&h);
        self.moves.push(Move::Center(h));
    }

    fn reduce(&mut self) {
        let (next, moves) = reduce_pth_powers_moves(&self.cur);
        self.cur = next;
        self.moves.extend(moves);
    }
}

fn is_p_power(order: CyclicOrder, p: u64) -> bool {
    matches!(order, CyclicOrder::Finite(n) if p_part(n, p) == n)
}

fn order_value(order: CyclicOrder) -> u64 {
    order.modulus().map_or(u64::MAX, |n| n as u64)
}

/// Absorbs the coordinates of `v` outside `excluded` into a single factor;
/// returns its index, or `None` when there is nothing to absorb. `v` must
/// be reduced (units on `p`-power and free factors, 0 on the rest).
fn absorb(work: &mut Work, v: &CentralVector, excluded: &[usize]) -> Option<usize> {
    let p = work.cur.p();
    let zc = work.cur.center().clone();
    let k = zc.rank();
    let torsion: Vec<usize> = (0..k)
        .filter(|i| !excluded.contains(i) && v.0[*i] != 0 && is_p_power(zc.order_of(*i), p))
        .collect();
    let free: Vec<usize> = (0..k)
        .filter(|i| !excluded.contains(i) && zc.order_of(*i).is_infinite())
        .collect();
    let free_nonzero = free.iter().any(|&i| v.0[i] != 0);
    let unit = |i: usize| (0..k).map(|j| i64::from(i == j)).collect::<Vec<i64>>();
    if free_nonzero {
        let w: Vec<i64> = free.iter().map(|&i| v.0[i]).collect();
        let (basis, alpha) = crate::abelian::adapted_basis(&w).expect("nonzero free part");
        let binv = unimodular_inverse(&basis);
        let mut m: Vec<Vec<i64>> = (0..k).map(unit).collect();
        // new free coordinates = (B^-1)^T old
        for (r, &fi) in free.iter().enumerate() {
            for (c, &fj) in free.iter().enumerate() {
                m[fi][fj] = binv[c][r];
            }
        }
        work.center(Hom { source: zc.clone(), target: zc.clone(), matrix: m });
        let u1 = free[0];
        if !torsion.is_empty() {
            // u1 -> u1 tau with tau^alpha the torsion part of v
            let mut m: Vec<Vec<i64>> = (0..k).map(unit).collect();
            for &j in &torsion {
                let n = zc.order_of(j).modulus().unwrap();
                let inv = mod_inverse(alpha as i64, n).expect("alpha is prime to p");
                m[j][u1] = -(v.0[j] * inv).rem_euclid(n);
            }
            work.center(Hom { source: zc.clone(), target: zc.clone(), matrix: m });
        }
        return Some(u1);
    }
    if torsion.is_empty() {
        return None;
    }
    // largest order first, declaration order on ties
    let pivot = *torsion
        .iter()
        .max_by(|&&a, &&b| order_value(zc.order_of(a)).cmp(&order_value(zc.order_of(b))).then(b.cmp(&a)))
        .unwrap();
    let n = zc.order_of(pivot).modulus().unwrap();
    let inv = mod_inverse(v.0[pivot], n).expect("coordinate is a unit");
    let mut m: Vec<Vec<i64>> = (0..k).map(unit).collect();
    m[pivot][pivot] = inv;
    for &j in &torsion {
        if j != pivot {
            let nj = zc.order_of(j).modulus().unwrap();
            m[j][pivot] = (-(v.0[j] as i128) * inv as i128).rem_euclid(nj as i128) as i64;
        }
    }
    work.center(Hom { source: zc.clone(), target: zc, matrix: m });
    Some(pivot)
}

/// Splits off every center factor not needed to express `s`, `x^p` and
/// `y^p`. The transcript in the result ends at `product(d, a)`.
pub fn decompose(pres: &GroupPresentation) -> DecompositionResult {
    let (located, map) = locate_t1_map(pres);
    let mut work = Work { cur: located, witness: map.clone(), moves: vec![Move::Center(map)] };
    work.reduce();
    let xp = work.cur.xp().clone();
    let z2 = absorb(&mut work, &xp, &[0]);
    work.reduce();
    let mut excluded = vec![0];
    excluded.extend(z2);
    let yp = work.cur.yp().clone();
    let z3 = absorb(&mut work, &yp, &excluded);
    work.reduce();
    let mut used = excluded;
    used.extend(z3);
    let k = work.cur.center().rank();
    let mut order = used.clone();
    order.extend((0..k).filter(|i| !used.contains(i)));
    if order.iter().enumerate().any(|(i, &j)| i != j) {
        let perm = permutation(work.cur.center(), &order);
        work.center(perm);
    }
    let full = work.cur.clone();
    let r = used.len();
    let (dc, a) = full.center().split_off(&(r..k).collect::<Vec<_>>());
    let cut = |v: &CentralVector| {
        debug_assert!(v.0[r..].iter().all(|&e| e == 0));
        CentralVector(v.0[..r].to_vec())
    };
    let d = GroupPresentation::from_parts(full.p(), dc, cut(full.s()), cut(full.xp()), cut(full.yp()));
    DecompositionResult { d, a, witness: work.witness, moves: work.moves }
}

/// Given `g1 = x^a y^b z`, `g2 = x^n y^m z'` with `am - bn` a unit mod `p`,
/// returns `x1 = g1^{a'} g2^{b'}` and `y1 = g1^{c} g2^{d}` lying in the
/// cosets `xZ` and `yZ`.
pub fn recover_generators(
    g: &GroupPresentation,
    g1: &Element,
    g2: &Element,
) -> Result<(Element, Element), DecomposeError> {
    if !belongs(g, g1) || !belongs(g, g2) {
        return Err(DecomposeError::MixedPresentations);
    }
    let p = g.p() as i64;
    let (a, b) = (g1.x as i64, g1.y as i64);
    let (n, m) = (g2.x as i64, g2.y as i64);
    let det = (a * m - b * n).rem_euclid(p);
    let inv = mod_inverse(det, p).ok_or(DecomposeError::CommutingPair)?;
    // [alpha beta] [a b; n m] = target row, so [alpha beta] = target * M^-1
    // with M^-1 = det^-1 [m -b; -n a].
    let solve = |t0: i64, t1: i64| -> (i64, i64) {
        let alpha = ((t0 * m - t1 * n) * inv).rem_euclid(p);
        let beta = ((-t0 * b + t1 * a) * inv).rem_euclid(p);
        (alpha, beta)
    };
    let (ax, bx) = solve(1, 0);
    let (ay, by) = solve(0, 1);
    let x1 = mul(g, &power(g, g1, ax), &power(g, g2, bx));
    let y1 = mul(g, &power(g, g1, ay), &power(g, g2, by));
    debug_assert!(!commutator(g, &x1, &y1).unwrap().z.is_zero());
    Ok((x1, y1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abelian::Factor;
    use crate::normalize::replay;
    use crate::presentation::parse;

    fn check_form(r: &DecompositionResult) {
        let d = &r.d;
        let p = d.p();
        assert!(d.center().rank() <= 3);
        let n1 = d.center().order_of(0).modulus().unwrap() as u64;
        assert_eq!(p_part(n1, p), n1);
        assert_eq!(d.s(), &d.center().scale(&d.center().generator(0), (n1 / p) as i64));
        if d.center().rank() == 3 {
            assert_eq!(d.xp().0[2], 0);
        }
    }

    #[test]
    fn minimal_input_is_left_alone() {
        let g = parse("group { prime 2; center t1:2; comm t1; xp 1; yp 1 }").unwrap();
        let r = decompose(&g);
        assert_eq!(r.d, g);
        assert!(r.a.is_trivial());
    }

    #[test]
    fn coprime_factor_goes_to_a() {
        let g = parse("group { prime 2; center t1:2, c:5; comm t1; xp c^2; yp c }").unwrap();
        let r = decompose(&g);
        assert_eq!(r.d, parse("group { prime 2; center t1:2; comm t1; xp 1; yp 1 }").unwrap());
        assert_eq!(r.a.factors(), &[Factor::finite("c", 5)]);
        assert_eq!(replay(&g, &r.moves).unwrap(), r.product());
    }

    #[test]
    fn p_divisible_coordinate_is_cleared_and_factors_merge() {
        let g = parse("group { prime 2; center t1:2, t2:2, t3:4; comm t1; xp t2 t3^2; yp 1 }").unwrap();
        let r = decompose(&g);
        check_form(&r);
        assert_eq!(r.d.center().rank(), 2);
        assert_eq!(r.a.rank(), 1);
        assert_eq!(r.d.xp(), &CentralVector(vec![0, 1]));
        assert_eq!(replay(&g, &r.moves).unwrap(), r.product());
    }

    #[test]
    fn torsion_merges_into_free_generator() {
        let g = parse("group { prime 3; center t1:3, t2:9, u:inf, v:inf; comm t1; xp t2^2 u^4 v^2; yp t2 u }").unwrap();
        let r = decompose(&g);
        check_form(&r);
        assert_eq!(replay(&g, &r.moves).unwrap(), r.product());
        assert!(r.witness.is_well_defined());
        assert_eq!(r.witness.apply(g.s()), *r.product().s());
    }

    #[test]
    fn idempotent() {
        let g = parse("group { prime 3; center t1:9, t2:27, t3:3, u:inf; comm t1^3; xp t2^5 t3; yp t3^2 u^7 }").unwrap();
        let r = decompose(&g);
        check_form(&r);
        let again = decompose(&r.d);
        assert!(again.a.is_trivial());
        assert_eq!(again.d, r.d);
    }

    #[test]
    fn recover_from_xy_and_y() {
        let g = parse("group { prime 3; center t1:3; comm t1; xp 1; yp 1 }").unwrap();
        let x = Element::x(&g);
        let y = Element::y(&g);
        let (x1, y1) = recover_generators(&g, &mul(&g, &x, &y), &y).unwrap();
        assert_eq!((x1.x, x1.y), (1, 0));
        assert_eq!((y1.x, y1.y), (0, 1));
        let (x1, y1) = recover_generators(&g, &x, &y).unwrap();
        assert_eq!((x1, y1), (x.clone(), y));
        let xt = mul(&g, &x, &Element::central(&g, CentralVector(vec![1])));
        assert_eq!(recover_generators(&g, &x, &xt), Err(DecomposeError::CommutingPair));
    }
}
