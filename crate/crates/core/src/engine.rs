//! Exact arithmetic on normal forms `x^i y^j c` (`0 <= i, j < p`, `c`
//! central) of a [`GroupPresentation`].

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{central_order, CentralVector, CyclicOrder};
use crate::presentation::GroupPresentation;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("element does not belong to this presentation")]
    MixedPresentations,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    pub x: u64,
    pub y: u64,
    pub z: CentralVector,
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x^{} y^{} {:?}", self.x, self.y, self.z.0)
    }
}

impl Element {
    pub fn identity(g: &GroupPresentation) -> Element {
        Element { x: 0, y: 0, z: g.center().zero() }
    }

    pub fn x(g: &GroupPresentation) -> Element {
        Element { x: 1 % g.p(), y: 0, z: g.center().zero() }
    }

    pub fn y(g: &GroupPresentation) -> Element {
        Element { x: 0, y: 1 % g.p(), z: g.center().zero() }
    }

    pub fn central(g: &GroupPresentation, z: CentralVector) -> Element {
        Element { x: 0, y: 0, z: g.center().reduce(&z) }
    }

    /// Normal form `x^i y^j z`, reducing `i`, `j` and `z`.
    pub fn new(g: &GroupPresentation, i: i64, j: i64, z: CentralVector) -> Element {
        let a = power(g, &Element::x(g), i);
        let b = power(g, &Element::y(g), j);
        mul(g, &mul(g, &a, &b), &Element::central(g, z))
    }

    pub fn is_central_form(&self) -> bool {
        self.x == 0 && self.y == 0
    }
}

pub fn belongs(g: &GroupPresentation, e: &Element) -> bool {
    e.x < g.p() && e.y < g.p() && g.center().is_reduced(&e.z)
}

fn check(g: &GroupPresentation, es: &[&Element]) -> Result<(), EngineError> {
    if es.iter().all(|e| belongs(g, e)) {
        Ok(())
    } else {
        Err(EngineError::MixedPresentations)
    }
}

/// Central element `sum_k coef_k v_k`, coefficients reduced where it is
/// safe so free coordinates only grow linearly.
fn combine(g: &GroupPresentation, terms: &[(i128, &CentralVector)]) -> CentralVector {
    let zc = g.center();
    let mut acc = vec![0i128; zc.rank()];
    for (coef, v) in terms {
        for ((a, &e), f) in acc.iter_mut().zip(&v.0).zip(zc.factors()) {
            let t = coef * e as i128;
            *a = match f.order {
                CyclicOrder::Finite(n) => (*a + t).rem_euclid(n as i128),
                CyclicOrder::Infinite => *a + t,
            };
        }
    }
    CentralVector(acc.into_iter().map(|a| i64::try_from(a).expect("central coordinate overflow")).collect())
}

/// Product without membership checks.
pub fn mul(g: &GroupPresentation, a: &Element, b: &Element) -> Element {
    let p = g.p();
    let xs = a.x + b.x;
    let ys = a.y + b.y;
    // y^{j1} x^{i2} = x^{i2} y^{j1} s^{-i2 j1}
    let twist = -((b.x as i128 * a.y as i128) % p as i128);
    let z = combine(
        g,
        &[
            (1, &a.z),
            (1, &b.z),
            ((xs / p) as i128, g.xp()),
            ((ys / p) as i128, g.yp()),
            (twist, g.s()),
        ],
    );
    Element { x: xs % p, y: ys % p, z }
}

pub fn multiply(g: &GroupPresentation, a: &Element, b: &Element) -> Result<Element, EngineError> {
    check(g, &[a, b])?;
    Ok(mul(g, a, b))
}

/// `a^n` for any integer `n`, in closed form.
pub fn power(g: &GroupPresentation, a: &Element, n: i64) -> Element {
    let p = g.p() as i128;
    let n = n as i128;
    let (i, j) = (a.x as i128, a.y as i128);
    let (xi, yj) = (n * i, n * j);
    // (x^i y^j)^n = x^{ni} y^{nj} s^{-ij n(n-1)/2}
    let tri = (n * (n - 1) / 2).rem_euclid(p);
    let twist = -((i * j % p) * tri % p);
    let z = combine(
        g,
        &[
            (n, &a.z),
            (xi.div_euclid(p), g.xp()),
            (yj.div_euclid(p), g.yp()),
            (twist, g.s()),
        ],
    );
    Element { x: xi.rem_euclid(p) as u64, y: yj.rem_euclid(p) as u64, z }
}

pub fn checked_power(g: &GroupPresentation, a: &Element, n: i64) -> Result<Element, EngineError> {
    check(g, &[a])?;
    Ok(power(g, a, n))
}

pub fn inverse(g: &GroupPresentation, a: &Element) -> Result<Element, EngineError> {
    checked_power(g, a, -1)
}

/// `[a, b] = a^-1 b^-1 a b = s^{i_a j_b - j_a i_b}`.
pub fn commutator(g: &GroupPresentation, a: &Element, b: &Element) -> Result<Element, EngineError> {
    check(g, &[a, b])?;
    Ok(comm(g, a, b))
}

fn comm(g: &GroupPresentation, a: &Element, b: &Element) -> Element {
    let p = g.p() as i128;
    let e = (a.x as i128 * b.y as i128 - a.y as i128 * b.x as i128).rem_euclid(p);
    Element { x: 0, y: 0, z: g.center().scale(g.s(), e as i64) }
}

pub fn is_central(g: &GroupPresentation, a: &Element) -> Result<bool, EngineError> {
    check(g, &[a])?;
    Ok(a.is_central_form())
}

pub fn element_order(g: &GroupPresentation, a: &Element) -> Result<CyclicOrder, EngineError> {
    check(g, &[a])?;
    if a.is_central_form() {
        return Ok(central_order(g.center(), &a.z));
    }
    let ap = power(g, a, g.p() as i64);
    debug_assert!(ap.is_central_form());
    Ok(match central_order(g.center(), &ap.z) {
        CyclicOrder::Finite(n) => CyclicOrder::Finite(n * g.p()),
        CyclicOrder::Infinite => CyclicOrder::Infinite,
    })
}

/// All elements, when the center is finite, in the order
/// `(i, j, z)` with the central coordinates varying fastest.
pub fn elements(g: &GroupPresentation) -> Option<Vec<Element>> {
    let zc = g.center();
    let mut centrals = vec![Vec::new()];
    for f in zc.factors() {
        let n = f.order.modulus()?;
        let mut next = Vec::with_capacity(centrals.len() * n as usize);
        for c in &centrals {
            for e in 0..n {
                let mut c2: Vec<i64> = c.clone();
                c2.push(e);
                next.push(c2);
            }
        }
        centrals = next;
    }
    let p = g.p();
    let mut out = Vec::with_capacity((p * p) as usize * centrals.len());
    for i in 0..p {
        for j in 0..p {
            for c in &centrals {
                out.push(Element { x: i, y: j, z: CentralVector(c.clone()) });
            }
        }
    }
    Some(out)
}
