//! Finitely generated abelian groups given as direct sums of named cyclic
//! factors, plus the exact integer linear algebra they need: Smith normal
//! form, invariant factors, primary splitting and bases adapted to a vector
//! of the free part.

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AbelianError {
    #[error("duplicate factor name `{0}`")]
    DuplicateName(String),
    #[error("factor `{0}` has order 0")]
    ZeroOrder(String),
    #[error("adapted basis requested for the zero vector")]
    ZeroVector,
    #[error("vector has {got} coordinates, expected {expected}")]
    LengthMismatch { expected: usize, got: usize },
}

/// Order of a cyclic group or of a single element.
///
/// `Finite(1)` only appears as the order of the identity element; factors of
/// an [`FgAbelian`] always have order at least 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CyclicOrder {
    Finite(u64),
    Infinite,
}

impl CyclicOrder {
    pub fn is_infinite(self) -> bool {
        matches!(self, CyclicOrder::Infinite)
    }

    /// The modulus coordinates live in, `None` for infinite order.
    pub fn modulus(self) -> Option<i64> {
        match self {
            CyclicOrder::Finite(n) => Some(n as i64),
            CyclicOrder::Infinite => None,
        }
    }
}

impl fmt::Display for CyclicOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CyclicOrder::Finite(n) => write!(f, "{n}"),
            CyclicOrder::Infinite => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Factor {
    pub name: String,
    pub order: CyclicOrder,
}

impl Factor {
    pub fn new(name: impl Into<String>, order: CyclicOrder) -> Self {
        Factor { name: name.into(), order }
    }

    pub fn finite(name: impl Into<String>, n: u64) -> Self {
        Factor::new(name, CyclicOrder::Finite(n))
    }

    pub fn infinite(name: impl Into<String>) -> Self {
        Factor::new(name, CyclicOrder::Infinite)
    }
}

/// A finitely generated abelian group `C_{n_1} x ... x C_{n_k} x Z^r` with a
/// named generator per factor. Factor order is significant: coordinates of
/// a [`CentralVector`] follow it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct FgAbelian {
    factors: Vec<Factor>,
}

impl FgAbelian {
    /// Builds the group, dropping trivial (order 1) factors.
    pub fn new(factors: Vec<Factor>) -> Result<Self, AbelianError> {
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(factors.len());
        for f in factors {
            if !seen.insert(f.name.clone()) {
                return Err(AbelianError::DuplicateName(f.name));
            }
            match f.order {
                CyclicOrder::Finite(0) => return Err(AbelianError::ZeroOrder(f.name)),
                CyclicOrder::Finite(1) => {}
                _ => kept.push(f),
            }
        }
        Ok(FgAbelian { factors: kept })
    }

    pub fn trivial() -> Self {
        FgAbelian::default()
    }

    /// Unnamed factors get the names `a1, a2, ...`.
    pub fn from_orders(orders: &[CyclicOrder]) -> Self {
        let factors = orders
            .iter()
            .enumerate()
            .map(|(i, &o)| Factor::new(format!("a{}", i + 1), o))
            .collect();
        FgAbelian::new(factors).expect("generated names are unique and orders nonzero")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn rank(&self) -> usize {
        self.factors.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.factors.is_empty()
    }

    pub fn order_of(&self, i: usize) -> CyclicOrder {
        self.factors[i].order
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn free_rank(&self) -> usize {
        self.factors.iter().filter(|f| f.order.is_infinite()).count()
    }

    pub fn is_finite(&self) -> bool {
        self.free_rank() == 0
    }

    /// Group order, `None` when infinite or when it overflows `u64`.
    pub fn order(&self) -> Option<u64> {
        self.factors.iter().try_fold(1u64, |acc, f| match f.order {
            CyclicOrder::Finite(n) => acc.checked_mul(n),
            CyclicOrder::Infinite => None,
        })
    }

    pub fn zero(&self) -> CentralVector {
        CentralVector(vec![0; self.rank()])
    }

    /// The `i`-th basis vector.
    pub fn generator(&self, i: usize) -> CentralVector {
        let mut v = self.zero();
        v.0[i] = 1;
        self.reduce(&v)
    }

    /// Reduces every finite coordinate into `[0, n)`.
    pub fn reduce(&self, v: &CentralVector) -> CentralVector {
        debug_assert_eq!(v.0.len(), self.rank());
        CentralVector(
            v.0.iter()
                .zip(&self.factors)
                .map(|(&e, f)| reduce_coord(e, f.order))
                .collect(),
        )
    }

    pub fn is_reduced(&self, v: &CentralVector) -> bool {
        v.0.len() == self.rank() && self.reduce(v) == *v
    }

    pub fn add(&self, a: &CentralVector, b: &CentralVector) -> CentralVector {
        let sum = a.0.iter().zip(&b.0).map(|(x, y)| x + y).collect();
        self.reduce(&CentralVector(sum))
    }

    pub fn neg(&self, a: &CentralVector) -> CentralVector {
        self.reduce(&CentralVector(a.0.iter().map(|x| -x).collect()))
    }

    /// `n * a`, reducing as it goes so finite coordinates never overflow.
    pub fn scale(&self, a: &CentralVector, n: i64) -> CentralVector {
        let coords = a
            .0
            .iter()
            .zip(&self.factors)
            .map(|(&e, f)| match f.order {
                CyclicOrder::Finite(m) => {
                    let m = m as i128;
                    ((e as i128 * n as i128).rem_euclid(m)) as i64
                }
                CyclicOrder::Infinite => e.checked_mul(n).expect("free coordinate overflow"),
            })
            .collect();
        CentralVector(coords)
    }

    /// Removes the factors at the given indices, returning the remaining
    /// group and the removed factors as their own group.
    pub fn split_off(&self, indices: &[usize]) -> (FgAbelian, FgAbelian) {
        let mut keep = Vec::new();
        let mut gone = Vec::new();
        for (i, f) in self.factors.iter().enumerate() {
            if indices.contains(&i) {
                gone.push(f.clone());
            } else {
                keep.push(f.clone());
            }
        }
        (FgAbelian { factors: keep }, FgAbelian { factors: gone })
    }

    /// Direct sum, renaming clashing names of `other` with a trailing `'`.
    pub fn direct_sum(&self, other: &FgAbelian) -> FgAbelian {
        let mut factors = self.factors.clone();
        for f in &other.factors {
            let mut name = f.name.clone();
            while factors.iter().any(|g| g.name == name) {
                name.push('\'');
            }
            factors.push(Factor::new(name, f.order));
        }
        FgAbelian { factors }
    }

    pub(crate) fn from_factors_unchecked(factors: Vec<Factor>) -> Self {
        FgAbelian { factors }
    }
}

fn reduce_coord(e: i64, order: CyclicOrder) -> i64 {
    match order {
        CyclicOrder::Finite(n) => e.rem_euclid(n as i64),
        CyclicOrder::Infinite => e,
    }
}

/// Exponent vector of a central element over a fixed [`FgAbelian`] basis.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CentralVector(pub Vec<i64>);

impl CentralVector {
    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }
}

/// Order of `v` in `a`: infinite as soon as a free coordinate is nonzero,
/// otherwise the lcm of `n_i / gcd(e_i, n_i)`.
pub fn central_order(a: &FgAbelian, v: &CentralVector) -> CyclicOrder {
    let mut order: u64 = 1;
    for (&e, f) in v.0.iter().zip(a.factors()) {
        match f.order {
            CyclicOrder::Infinite if e != 0 => return CyclicOrder::Infinite,
            CyclicOrder::Infinite => {}
            CyclicOrder::Finite(n) => {
                let e = e.rem_euclid(n as i64) as u64;
                order = order.lcm(&(n / e.gcd(&n)));
            }
        }
    }
    CyclicOrder::Finite(order)
}

/// Integer matrix as a list of rows.
pub type IntMatrix = Vec<Vec<BigInt>>;

pub fn int_matrix(rows: &[Vec<i64>]) -> IntMatrix {
    rows.iter()
        .map(|r| r.iter().map(|&x| BigInt::from(x)).collect())
        .collect()
}

pub fn identity_matrix(n: usize) -> IntMatrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { BigInt::one() } else { BigInt::zero() }).collect())
        .collect()
}

pub fn mat_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    let inner = b.len();
    let cols = b.first().map_or(0, Vec::len);
    a.iter()
        .map(|row| {
            debug_assert_eq!(row.len(), inner);
            (0..cols)
                .map(|j| (0..inner).map(|k| &row[k] * &b[k][j]).sum())
                .collect()
        })
        .collect()
}

/// Determinant by fraction-free (Bareiss) elimination.
pub fn determinant(m: &IntMatrix) -> BigInt {
    let n = m.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a = m.clone();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(i, k);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Result of [`smith_normal_form`]: `u * m * v = s`, with the inverses of the
/// two unimodular transforms kept alongside.
#[derive(Debug, Clone)]
pub struct Snf {
    pub s: IntMatrix,
    pub u: IntMatrix,
    pub v: IntMatrix,
    pub u_inv: IntMatrix,
    pub v_inv: IntMatrix,
}

impl Snf {
    pub fn diagonal(&self) -> Vec<BigInt> {
        let k = self.s.len().min(self.s.first().map_or(0, Vec::len));
        (0..k).map(|i| self.s[i][i].clone()).collect()
    }
}

/// Smith normal form with minimal-absolute-value pivoting; ties are broken by
/// the first entry in row-major order, so the output is deterministic.
pub fn smith_normal_form(m: &IntMatrix) -> Snf {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut s = m.clone();
    let mut u = identity_matrix(rows);
    let mut u_inv = identity_matrix(rows);
    let mut v = identity_matrix(cols);
    let mut v_inv = identity_matrix(cols);

    // Row op: row_i += k * row_j  (u_inv compensates with col_j -= k * col_i).
    fn add_row(s: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, i: usize, j: usize, k: &BigInt) {
        for mat in [&mut *s, &mut *u] {
            let src = mat[j].clone();
            for (x, y) in mat[i].iter_mut().zip(src) {
                *x += k * y;
            }
        }
        for row in u_inv.iter_mut() {
            let t = k * &row[i];
            row[j] -= t;
        }
    }
    // Col op: col_i += k * col_j  (v_inv compensates with row_j -= k * row_i).
    fn add_col(s: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize, k: &BigInt) {
        for mat in [&mut *s, &mut *v] {
            for row in mat.iter_mut() {
                let t = k * &row[j];
                row[i] += t;
            }
        }
        let src = v_inv[i].clone();
        for (x, y) in v_inv[j].iter_mut().zip(src) {
            *x -= k * y;
        }
    }
    fn swap_rows(s: &mut IntMatrix, u: &mut IntMatrix, u_inv: &mut IntMatrix, i: usize, j: usize) {
        s.swap(i, j);
        u.swap(i, j);
        for row in u_inv.iter_mut() {
            row.swap(i, j);
        }
    }
    fn swap_cols(s: &mut IntMatrix, v: &mut IntMatrix, v_inv: &mut IntMatrix, i: usize, j: usize) {
        for row in s.iter_mut() {
            row.swap(i, j);
        }
        for row in v.iter_mut() {
            row.swap(i, j);
        }
        v_inv.swap(i, j);
    }

    for t in 0..rows.min(cols) {
        loop {
            // Minimal nonzero |entry| in the trailing block.
            let mut pivot: Option<(usize, usize)> = None;
            for i in t..rows {
                for j in t..cols {
                    if s[i][j].is_zero() {
                        continue;
                    }
                    if pivot.map_or(true, |(pi, pj)| s[i][j].abs() < s[pi][pj].abs()) {
                        pivot = Some((i, j));
                    }
                }
            }
            let Some((pi, pj)) = pivot else {
                break;
            };
            if pi != t {
                swap_rows(&mut s, &mut u, &mut u_inv, pi, t);
            }
            if pj != t {
                swap_cols(&mut s, &mut v, &mut v_inv, pj, t);
            }
            let mut clean = true;
            for i in t + 1..rows {
                if !s[i][t].is_zero() {
                    let q = -s[i][t].div_floor(&s[t][t]);
                    add_row(&mut s, &mut u, &mut u_inv, i, t, &q);
                    if !s[i][t].is_zero() {
                        clean = false;
                    }
                }
            }
            for j in t + 1..cols {
                if !s[t][j].is_zero() {
                    let q = -s[t][j].div_floor(&s[t][t]);
                    add_col(&mut s, &mut v, &mut v_inv, j, t, &q);
                    if !s[t][j].is_zero() {
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            // Divisibility: fold an offending row into row t and go again.
            let offending = (t + 1..rows)
                .find(|&i| (t + 1..cols).any(|j| !(&s[i][j] % &s[t][t]).is_zero()));
            match offending {
                Some(i) => add_row(&mut s, &mut u, &mut u_inv, t, i, &BigInt::one()),
                None => break,
            }
        }
        if s[t][t].is_negative() {
            for x in s[t].iter_mut() {
                *x = -&*x;
            }
            for x in u[t].iter_mut() {
                *x = -&*x;
            }
            for row in u_inv.iter_mut() {
                row[t] = -&row[t];
            }
        }
    }
    Snf { s, u, v, u_inv, v_inv }
}

/// Torsion invariant factors `d_1 | d_2 | ...` (all `> 1`) and free rank.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AbelianInvariants {
    pub torsion: Vec<u64>,
    pub free_rank: usize,
}

impl AbelianInvariants {
    pub fn is_trivial(&self) -> bool {
        self.torsion.is_empty() && self.free_rank == 0
    }

    /// A group realizing these invariants: torsion factors `a1, a2, ...`
    /// followed by free factors `f1, f2, ...`.
    pub fn to_group(&self) -> FgAbelian {
        let torsion = self
            .torsion
            .iter()
            .enumerate()
            .map(|(i, &d)| Factor::finite(format!("a{}", i + 1), d));
        let free = (0..self.free_rank).map(|i| Factor::infinite(format!("f{}", i + 1)));
        FgAbelian::new(torsion.chain(free).collect()).expect("generated names are unique")
    }
}

/// Invariants of `Z^c / (row span of relations)`.
pub fn invariants_of_relations(relations: &IntMatrix, generators: usize) -> AbelianInvariants {
    if relations.is_empty() {
        return AbelianInvariants { torsion: vec![], free_rank: generators };
    }
    let diag = smith_normal_form(relations).diagonal();
    let mut torsion = Vec::new();
    let mut nonzero = 0;
    for d in diag {
        if d.is_zero() {
            continue;
        }
        nonzero += 1;
        if !d.is_one() {
            torsion.push(d.to_u64().expect("invariant factor exceeds u64"));
        }
    }
    AbelianInvariants { torsion, free_rank: generators - nonzero }
}

fn diagonal_relations(a: &FgAbelian) -> IntMatrix {
    let k = a.rank();
    a.factors()
        .iter()
        .enumerate()
        .filter_map(|(i, f)| {
            f.order.modulus().map(|n| {
                (0..k)
                    .map(|j| if i == j { BigInt::from(n) } else { BigInt::zero() })
                    .collect()
            })
        })
        .collect()
}

pub fn invariant_factors(a: &FgAbelian) -> AbelianInvariants {
    invariants_of_relations(&diagonal_relations(a), a.rank())
}

/// Isomorphism from `a` onto `invariant_factors(a).to_group()`.
pub fn invariant_form_map(a: &FgAbelian) -> Hom {
    let target = invariant_factors(a).to_group();
    let k = a.rank();
    let rel = diagonal_relations(a);
    if rel.is_empty() {
        // all free: already in invariant form up to names
        let matrix = (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect();
        return Hom { source: a.clone(), target, matrix };
    }
    let snf = smith_normal_form(&rel);
    // row vectors w -> w v carry the relation lattice onto the diagonal one
    let kept: Vec<usize> = (0..k)
        .filter(|&j| j >= rel.len() || !snf.s[j][j].is_one())
        .collect();
    debug_assert_eq!(kept.len(), target.rank());
    let matrix = kept
        .iter()
        .zip(target.factors())
        .map(|(&j, f)| {
            (0..k)
                .map(|i| {
                    let e = &snf.v[i][j];
                    let e = match f.order {
                        CyclicOrder::Finite(n) => e.mod_floor(&BigInt::from(n)),
                        CyclicOrder::Infinite => e.clone(),
                    };
                    e.to_i64().expect("invariant form entry overflow")
                })
                .collect()
        })
        .collect();
    Hom { source: a.clone(), target, matrix }
}

pub fn abelian_iso(a: &FgAbelian, b: &FgAbelian) -> bool {
    invariant_factors(a) == invariant_factors(b)
}

/// Largest power of `p` dividing `n`.
pub fn p_part(n: u64, p: u64) -> u64 {
    let mut q = 1;
    let mut n = n;
    while n % p == 0 {
        n /= p;
        q *= p;
    }
    q
}

/// Splits `a` into its `p`-torsion part, the torsion coprime to `p`, and the
/// free part. A factor of mixed order `p^k n'` contributes `C_{p^k}` (keeping
/// its name) to the first and `C_{n'}` (name suffixed `_c`) to the second.
pub fn primary_split(a: &FgAbelian, p: u64) -> (FgAbelian, FgAbelian, FgAbelian) {
    let (b, c, f, _) = primary_split_map(a, p);
    (b, c, f)
}

/// [`primary_split`] together with the coordinate map from `a` to the sum
/// `b + c + f`, in that factor order.
pub fn primary_split_map(a: &FgAbelian, p: u64) -> (FgAbelian, FgAbelian, FgAbelian, Hom) {
    let all_names: HashSet<&str> = a.factors().iter().map(|f| f.name.as_str()).collect();
    let mut b = Vec::new();
    let mut c = Vec::new();
    let mut fr = Vec::new();
    // (target index list within each part, source index)
    let mut b_src = Vec::new();
    let mut c_src = Vec::new();
    let mut f_src = Vec::new();
    for (i, f) in a.factors().iter().enumerate() {
        match f.order {
            CyclicOrder::Infinite => {
                fr.push(f.clone());
                f_src.push(i);
            }
            CyclicOrder::Finite(n) => {
                let q = p_part(n, p);
                let r = n / q;
                if r == 1 {
                    b.push(f.clone());
                    b_src.push(i);
                } else if q == 1 {
                    c.push(f.clone());
                    c_src.push(i);
                } else {
                    b.push(Factor::finite(f.name.clone(), q));
                    b_src.push(i);
                    let mut name = format!("{}_c", f.name);
                    while all_names.contains(name.as_str()) || c.iter().any(|g: &Factor| g.name == name) {
                        name.push('\'');
                    }
                    c.push(Factor::finite(name, r));
                    c_src.push(i);
                }
            }
        }
    }
    let src: Vec<usize> = b_src.iter().chain(&c_src).chain(&f_src).copied().collect();
    let target = FgAbelian::from_factors_unchecked(b.iter().chain(&c).chain(&fr).cloned().collect());
    let matrix = src
        .iter()
        .map(|&i| (0..a.rank()).map(|j| i64::from(i == j)).collect())
        .collect();
    let hom = Hom { source: a.clone(), target, matrix };
    (
        FgAbelian::from_factors_unchecked(b),
        FgAbelian::from_factors_unchecked(c),
        FgAbelian::from_factors_unchecked(fr),
        hom,
    )
}

/// Basis `u_1, ..., u_r` of `Z^r` with `w = alpha * u_1`, `alpha = gcd(w)`.
/// Rows of the returned matrix are the basis vectors; it is unimodular.
pub fn adapted_basis(w: &[i64]) -> Result<(Vec<Vec<i64>>, u64), AbelianError> {
    if w.iter().all(|&x| x == 0) {
        return Err(AbelianError::ZeroVector);
    }
    let snf = smith_normal_form(&int_matrix(&[w.to_vec()]));
    // u * w * v = (alpha, 0, ...), u = [[+-1]]  =>  w = (u * alpha) * row_0(v_inv).
    let alpha = snf.s[0][0].clone();
    let sign = snf.u[0][0].clone();
    let mut basis: Vec<Vec<i64>> = snf
        .v_inv
        .iter()
        .map(|row| row.iter().map(|x| x.to_i64().expect("basis entry overflow")).collect())
        .collect();
    if sign.is_negative() {
        for x in basis[0].iter_mut() {
            *x = -*x;
        }
    }
    Ok((basis, alpha.to_u64().expect("gcd overflow")))
}

/// A homomorphism between two [`FgAbelian`]s in coordinates:
/// `target_coords = matrix * source_coords`, reduced in the target.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hom {
    pub source: FgAbelian,
    pub target: FgAbelian,
    pub matrix: Vec<Vec<i64>>,
}

impl Hom {
    pub fn identity(a: &FgAbelian) -> Hom {
        let k = a.rank();
        Hom {
            source: a.clone(),
            target: a.clone(),
            matrix: (0..k).map(|i| (0..k).map(|j| i64::from(i == j)).collect()).collect(),
        }
    }

    pub fn apply(&self, v: &CentralVector) -> CentralVector {
        let coords = self
            .matrix
            .iter()
            .zip(self.target.factors())
            .map(|(row, f)| {
                let acc: i128 = row.iter().zip(&v.0).map(|(&a, &b)| a as i128 * b as i128).sum();
                match f.order {
                    CyclicOrder::Finite(n) => acc.rem_euclid(n as i128) as i64,
                    CyclicOrder::Infinite => i64::try_from(acc).expect("free coordinate overflow"),
                }
            })
            .collect();
        CentralVector(coords)
    }

    /// `other` after `self`.
    pub fn then(&self, other: &Hom) -> Hom {
        debug_assert_eq!(self.target, other.source);
        let matrix = other
            .matrix
            .iter()
            .zip(other.target.factors())
            .map(|(row, f)| {
                (0..self.source.rank())
                    .map(|j| {
                        let acc: i128 = row
                            .iter()
                            .zip(&self.matrix)
                            .map(|(&a, srow)| a as i128 * srow[j] as i128)
                            .sum();
                        match f.order {
                            CyclicOrder::Finite(n) => acc.rem_euclid(n as i128) as i64,
                            CyclicOrder::Infinite => i64::try_from(acc).expect("witness overflow"),
                        }
                    })
                    .collect()
            })
            .collect();
        Hom { source: self.source.clone(), target: other.target.clone(), matrix }
    }

    /// Well defined on the source: every finite source generator of order `n`
    /// maps to an element whose order divides `n`.
    pub fn is_well_defined(&self) -> bool {
        self.source.factors().iter().enumerate().all(|(j, f)| {
            let image = CentralVector(self.matrix.iter().map(|row| row[j]).collect());
            let image = self.target.reduce(&image);
            match (f.order, central_order(&self.target, &image)) {
                (CyclicOrder::Infinite, _) => true,
                (CyclicOrder::Finite(n), CyclicOrder::Finite(m)) => n % m == 0,
                (CyclicOrder::Finite(_), CyclicOrder::Infinite) => false,
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn census(orders: &[u64]) -> std::collections::BTreeMap<u64, usize> {
        // Element-order census of a finite product of cyclic groups, by enumeration.
        let total: u64 = orders.iter().product();
        let mut out = std::collections::BTreeMap::new();
        for mut idx in 0..total {
            let mut ord = 1u64;
            for &n in orders {
                let e = idx % n;
                idx /= n;
                ord = ord.lcm(&(n / e.gcd(&n)));
            }
            *out.entry(ord).or_default() += 1;
        }
        out
    }

    fn fin(orders: &[u64]) -> FgAbelian {
        FgAbelian::from_orders(&orders.iter().map(|&n| CyclicOrder::Finite(n)).collect::<Vec<_>>())
    }

    #[test]
    fn snf_identity() {
        let m = int_matrix(&[vec![1, 0], vec![0, 1]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.s, m);
        assert_eq!(snf.u, identity_matrix(2));
        assert_eq!(snf.v, identity_matrix(2));
    }

    #[test]
    fn snf_two_four() {
        let m = int_matrix(&[vec![2, 4], vec![4, 4]]);
        let snf = smith_normal_form(&m);
        assert_eq!(snf.s, int_matrix(&[vec![2, 0], vec![0, 4]]));
        assert_eq!(mat_mul(&mat_mul(&snf.u, &m), &snf.v), snf.s);
        assert_eq!(mat_mul(&snf.u, &snf.u_inv), identity_matrix(2));
        assert_eq!(mat_mul(&snf.v, &snf.v_inv), identity_matrix(2));
        // Independent check: gcd of entries is d1, |det| = d1 * d2.
        assert_eq!(determinant(&m).abs(), BigInt::from(8));
    }

    #[test]
    fn snf_already_diagonal_and_empty() {
        let m = int_matrix(&[vec![1, 0], vec![0, 0]]);
        assert_eq!(smith_normal_form(&m).s, m);
        assert!(smith_normal_form(&vec![]).s.is_empty());
    }

    #[test]
    fn invariant_factor_examples() {
        let a = fin(&[2, 4, 3]);
        let inv = invariant_factors(&a);
        assert_eq!(inv, AbelianInvariants { torsion: vec![2, 12], free_rank: 0 });
        assert_eq!(census(&[2, 4, 3]), census(&[2, 12]));

        let z2 = FgAbelian::from_orders(&[CyclicOrder::Infinite, CyclicOrder::Infinite]);
        assert_eq!(invariant_factors(&z2), AbelianInvariants { torsion: vec![], free_rank: 2 });
        assert!(invariant_factors(&FgAbelian::trivial()).is_trivial());
    }

    #[test]
    fn abelian_iso_examples() {
        assert!(abelian_iso(&fin(&[2, 4, 3]), &fin(&[2, 12])));
        assert!(!abelian_iso(&fin(&[4]), &fin(&[2, 2])));
        let z1 = FgAbelian::from_orders(&[CyclicOrder::Infinite]);
        let z2 = FgAbelian::from_orders(&[CyclicOrder::Infinite, CyclicOrder::Infinite]);
        assert!(!abelian_iso(&z1, &z2));
    }

    #[test]
    fn primary_split_examples() {
        let a = FgAbelian::new(vec![Factor::finite("t", 12), Factor::infinite("u")]).unwrap();
        let (b, c, f) = primary_split(&a, 2);
        assert_eq!(b.factors(), &[Factor::finite("t", 4)]);
        assert_eq!(c.factors(), &[Factor::finite("t_c", 3)]);
        assert_eq!(f.factors(), &[Factor::infinite("u")]);

        let (b, c, f) = primary_split(&fin(&[9]), 3);
        assert_eq!(b.rank(), 1);
        assert!(c.is_trivial() && f.is_trivial());

        let a = fin(&[6, 10]);
        let (b, c, _) = primary_split(&a, 5);
        assert_eq!(invariant_factors(&b).torsion, vec![5]);
        assert_eq!(invariant_factors(&c).torsion, vec![2, 6]);
        // Census cross-check of the reassembly.
        let mut parts: Vec<u64> = b.factors().iter().chain(c.factors()).filter_map(|f| f.order.modulus()).map(|n| n as u64).collect();
        parts.sort();
        assert_eq!(census(&parts), census(&[6, 10]));
    }

    #[test]
    fn primary_split_map_is_well_defined() {
        let a = FgAbelian::new(vec![Factor::finite("t", 12), Factor::finite("s", 5)]).unwrap();
        let (_, _, _, hom) = primary_split_map(&a, 2);
        assert!(hom.is_well_defined());
        let v = CentralVector(vec![7, 3]);
        assert_eq!(hom.apply(&v), CentralVector(vec![3, 1, 3]));
    }

    #[test]
    fn adapted_basis_examples() {
        let (basis, alpha) = adapted_basis(&[2, 4]).unwrap();
        assert_eq!(alpha, 2);
        assert_eq!(basis[0], vec![1, 2]);
        assert_eq!(determinant(&int_matrix(&basis)).abs(), BigInt::one());

        let (basis, alpha) = adapted_basis(&[1]).unwrap();
        assert_eq!((basis, alpha), (vec![vec![1]], 1));

        let (basis, alpha) = adapted_basis(&[0, 3, 0]).unwrap();
        assert_eq!(alpha, 3);
        assert_eq!(basis[0], vec![0, 1, 0]);
        assert_eq!(determinant(&int_matrix(&basis)).abs(), BigInt::one());

        assert_eq!(adapted_basis(&[0, 0]), Err(AbelianError::ZeroVector));
    }

    #[test]
    fn central_order_examples() {
        let c9 = fin(&[9]);
        assert_eq!(central_order(&c9, &CentralVector(vec![3])), CyclicOrder::Finite(3));
        assert_eq!(central_order(&c9, &CentralVector(vec![6])), CyclicOrder::Finite(3));
        let mixed = FgAbelian::from_orders(&[CyclicOrder::Finite(9), CyclicOrder::Infinite]);
        assert_eq!(central_order(&mixed, &CentralVector(vec![3, 1])), CyclicOrder::Infinite);
    }

    #[test]
    fn construction_strips_trivial_and_rejects_duplicates() {
        let a = FgAbelian::new(vec![Factor::finite("a", 1), Factor::finite("b", 3)]).unwrap();
        assert_eq!(a.rank(), 1);
        let err = FgAbelian::new(vec![Factor::finite("a", 2), Factor::finite("a", 3)]);
        assert_eq!(err, Err(AbelianError::DuplicateName("a".into())));
    }
}
