//! Brute-force ground truth for finite groups given by multiplication
//! tables: centers, element orders, isomorphism search and direct-factor
//! search.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};

use rand::Rng;
use thiserror::Error;

use crate::engine::{elements, mul, Element};
use crate::presentation::GroupPresentation;

/// Default bound on `|G|` for [`build_table`].
pub const DEFAULT_TABLE_BOUND: usize = 4096;
/// Default bound on `|G|` for [`brute_iso`] and [`direct_factor_search`].
pub const DEFAULT_SEARCH_BOUND: usize = 512;
/// Environment variable overriding the oracle bounds.
pub const BOUND_ENV: &str = "CPXCP_MAX_ORDER";

/// `CPXCP_MAX_ORDER` if set and valid, else `default`.
pub fn bound_from_env(default: usize) -> usize {
    std::env::var(BOUND_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(default)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("InfiniteGroup: the group is infinite and has no multiplication table")]
    InfiniteGroup,
    #[error("TooLarge: group order {n} exceeds the bound {bound}")]
    TooLarge { n: u64, bound: usize },
}

/// Multiplication table of a finite group; element 0 is the identity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MulTable {
    n: usize,
    table: Vec<u32>,
    gens: Vec<usize>,
    labels: Vec<String>,
}

impl MulTable {
    /// Table from a product function on `0..n`; `0` must be the identity.
    pub fn from_fn(n: usize, gens: Vec<usize>, labels: Vec<String>, f: impl Fn(usize, usize) -> usize) -> MulTable {
        let mut table = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                table.push(f(a, b) as u32);
            }
        }
        MulTable { n, table, gens, labels }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn mul(&self, a: usize, b: usize) -> usize {
        self.table[a * self.n + b] as usize
    }

    pub fn gens(&self) -> &[usize] {
        &self.gens
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn inverse(&self, a: usize) -> usize {
        (0..self.n).find(|&b| self.mul(a, b) == 0).expect("every element has an inverse")
    }

    pub fn is_latin_square(&self) -> bool {
        let n = self.n;
        let mut seen = vec![0usize; n];
        for a in 0..n {
            for b in 0..n {
                let c = self.mul(a, b);
                if seen[c] == 2 * a + 1 {
                    return false;
                }
                seen[c] = 2 * a + 1;
            }
        }
        for b in 0..n {
            for a in 0..n {
                let c = self.mul(a, b);
                if seen[c] == 2 * b + 2 {
                    return false;
                }
                seen[c] = 2 * b + 2;
            }
        }
        (0..n).all(|a| self.mul(0, a) == a && self.mul(a, 0) == a)
    }

    pub fn is_associative(&self) -> bool {
        let n = self.n;
        (0..n).all(|a| (0..n).all(|b| (0..n).all(|c| self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c)))))
    }

    /// Associativity on `trials` random triples.
    pub fn is_associative_sampled<R: Rng + ?Sized>(&self, rng: &mut R, trials: usize) -> bool {
        (0..trials).all(|_| {
            let (a, b, c) = (rng.gen_range(0..self.n), rng.gen_range(0..self.n), rng.gen_range(0..self.n));
            self.mul(self.mul(a, b), c) == self.mul(a, self.mul(b, c))
        })
    }

    /// `order n` followed by the table, one row per line.
    pub fn export_text(&self) -> String {
        let mut out = format!("order {}\n", self.n);
        for a in 0..self.n {
            let row: Vec<String> = (0..self.n).map(|b| self.mul(a, b).to_string()).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }

    fn is_abelian(&self) -> bool {
        (0..self.n).all(|a| (a + 1..self.n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }
}

/// Index of a normal form in the element order of [`elements`].
fn element_index(g: &GroupPresentation, moduli: &[u64], e: &Element) -> usize {
    let zsize: u64 = moduli.iter().product();
    let mut zi = 0u64;
    for (&c, &n) in e.z.0.iter().zip(moduli) {
        zi = zi * n + c as u64;
    }
    ((e.x * g.p() + e.y) * zsize + zi) as usize
}

/// Multiplication table of a finite presentation.
pub fn build_table(g: &GroupPresentation, bound: usize) -> Result<MulTable, OracleError> {
    if !g.center().is_finite() {
        return Err(OracleError::InfiniteGroup);
    }
    let n = g.order().unwrap_or(u64::MAX);
    if n > bound as u64 {
        return Err(OracleError::TooLarge { n, bound });
    }
    let els = elements(g).expect("finite center");
    let moduli: Vec<u64> = g.center().factors().iter().map(|f| f.order.modulus().unwrap() as u64).collect();
    let n = els.len();
    let mut table = Vec::with_capacity(n * n);
    for a in &els {
        for b in &els {
            table.push(element_index(g, &moduli, &mul(g, a, b)) as u32);
        }
    }
    let mut gens = vec![element_index(g, &moduli, &Element::x(g)), element_index(g, &moduli, &Element::y(g))];
    for i in 0..g.center().rank() {
        gens.push(element_index(g, &moduli, &Element::central(g, g.center().generator(i))));
    }
    let labels = els.iter().map(|e| label(g, e)).collect();
    Ok(MulTable { n, table, gens, labels })
}

fn label(g: &GroupPresentation, e: &Element) -> String {
    let mut parts = Vec::new();
    if e.x != 0 {
        parts.push(format!("x^{}", e.x));
    }
    if e.y != 0 {
        parts.push(format!("y^{}", e.y));
    }
    for (&c, f) in e.z.0.iter().zip(g.center().factors()) {
        if c != 0 {
            parts.push(format!("{}^{}", f.name, c));
        }
    }
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join(" ")
    }
}

/// Cyclic group of order `n`.
pub fn cyclic(n: usize) -> MulTable {
    MulTable::from_fn(n, vec![1 % n], (0..n).map(|i| format!("a^{i}")).collect(), |a, b| (a + b) % n)
}

/// Dihedral group of order `2n`: `r^i` is `i`, `r^i f` is `n + i`.
pub fn dihedral(n: usize) -> MulTable {
    let labels = (0..2 * n).map(|i| if i < n { format!("r^{i}") } else { format!("r^{} f", i - n) }).collect();
    MulTable::from_fn(2 * n, vec![1, n], labels, |a, b| {
        let (i, s) = (a % n, a / n);
        let (j, t) = (b % n, b / n);
        // r^i f^s r^j f^t = r^{i + (-1)^s j} f^{s+t}
        let k = if s == 0 { (i + j) % n } else { (i + n - j) % n };
        k + n * ((s + t) % 2)
    })
}

/// Quaternion group from unit quaternions `+-1, +-i, +-j, +-k`.
pub fn quaternion() -> MulTable {
    // index = 2 * unit + sign, unit 0..4 = 1, i, j, k
    const UNIT: [[(usize, bool); 4]; 4] = [
        [(0, false), (1, false), (2, false), (3, false)],
        [(1, false), (0, true), (3, false), (2, true)],
        [(2, false), (3, true), (0, true), (1, false)],
        [(3, false), (2, false), (1, true), (0, true)],
    ];
    let names = ["1", "i", "j", "k"];
    let labels = (0..8).map(|i| format!("{}{}", if i % 2 == 1 { "-" } else { "" }, names[i / 2])).collect();
    MulTable::from_fn(8, vec![2, 4], labels, |a, b| {
        let (u, neg) = UNIT[a / 2][b / 2];
        let sign = (a % 2) ^ (b % 2) ^ usize::from(neg);
        2 * u + sign
    })
}

/// `a x b` with `(i, j)` stored at `i * |b| + j`.
pub fn direct_product(a: &MulTable, b: &MulTable) -> MulTable {
    let nb = b.n;
    let mut gens: Vec<usize> = a.gens.iter().map(|&g| g * nb).collect();
    gens.extend(b.gens.iter().copied());
    let labels = (0..a.n * nb).map(|k| format!("({}, {})", a.labels[k / nb], b.labels[k % nb])).collect();
    MulTable::from_fn(a.n * nb, gens, labels, |x, y| a.mul(x / nb, y / nb) * nb + b.mul(x % nb, y % nb))
}

/// Same group with elements relabeled by `perm` (new index of old `i` is
/// `perm[i]`); `perm[0]` must be 0.
pub fn relabel(t: &MulTable, perm: &[usize]) -> MulTable {
    let mut inv = vec![0; t.n];
    for (i, &p) in perm.iter().enumerate() {
        inv[p] = i;
    }
    let labels = (0..t.n).map(|k| t.labels[inv[k]].clone()).collect();
    let gens = t.gens.iter().map(|&g| perm[g]).collect();
    MulTable::from_fn(t.n, gens, labels, |a, b| perm[t.mul(inv[a], inv[b])])
}

pub fn center(t: &MulTable) -> Vec<usize> {
    (0..t.n).filter(|&a| (0..t.n).all(|b| t.mul(a, b) == t.mul(b, a))).collect()
}

fn power(t: &MulTable, a: usize, k: u64) -> usize {
    let mut acc = 0;
    for _ in 0..k {
        acc = t.mul(acc, a);
    }
    acc
}

fn is_prime(n: u64) -> bool {
    crate::presentation::is_prime(n)
}

/// The center, and whether `G / Z(G)` is `C_q x C_q` for a prime `q`.
pub fn center_and_quotient(t: &MulTable) -> (Vec<usize>, bool) {
    let z = center(t);
    let index = t.n / z.len();
    let q = (index as f64).sqrt().round() as u64;
    let mut flag = q * q == index as u64 && is_prime(q);
    if flag {
        let mut in_z = vec![false; t.n];
        z.iter().for_each(|&i| in_z[i] = true);
        flag = (0..t.n).all(|w| in_z[power(t, w, q)]);
    }
    (z, flag)
}

pub fn element_orders(t: &MulTable) -> Vec<u64> {
    (0..t.n)
        .map(|a| {
            let mut k = 1;
            let mut acc = a;
            while acc != 0 {
                acc = t.mul(acc, a);
                k += 1;
            }
            k
        })
        .collect()
}

pub fn exponent_of(t: &MulTable) -> u64 {
    use num_integer::Integer;
    element_orders(t).into_iter().fold(1, |acc, o| acc.lcm(&o))
}

/// Census of element orders over the whole group and over the non-central
/// elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct OrderProfile {
    pub all: BTreeMap<u64, usize>,
    pub noncentral: BTreeMap<u64, usize>,
}

impl OrderProfile {
    pub fn count(&self, order: u64) -> usize {
        self.all.get(&order).copied().unwrap_or(0)
    }

    pub fn noncentral_count(&self, order: u64) -> usize {
        self.noncentral.get(&order).copied().unwrap_or(0)
    }
}

pub fn order_profile(t: &MulTable) -> OrderProfile {
    let orders = element_orders(t);
    let z: HashSet<usize> = center(t).into_iter().collect();
    let mut prof = OrderProfile::default();
    for (a, &o) in orders.iter().enumerate() {
        *prof.all.entry(o).or_default() += 1;
        if !z.contains(&a) {
            *prof.noncentral.entry(o).or_default() += 1;
        }
    }
    prof
}

/// Subgroup generated by `gens` as a membership vector.
pub fn subgroup(t: &MulTable, gens: &[usize]) -> Vec<bool> {
    let mut inside = vec![false; t.n];
    inside[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(h) = queue.pop_front() {
        for &g in gens {
            let k = t.mul(h, g);
            if !inside[k] {
                inside[k] = true;
                queue.push_back(k);
            }
        }
    }
    inside
}

/// Greedy generating set: repeatedly add the first element outside the
/// current subgroup that `better` prefers.
fn generating_set(t: &MulTable, start: &[usize], better: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut gens: Vec<usize> = start.to_vec();
    let mut inside = subgroup(t, &gens);
    while let Some(first) = inside.iter().position(|&b| !b) {
        let mut pick = first;
        for a in first + 1..t.n {
            if !inside[a] && better(a, pick) {
                pick = a;
            }
        }
        gens.push(pick);
        inside = subgroup(t, &gens);
    }
    gens
}

/// Per-element invariants: order, centralizer size, number of distinct
/// commutators `[g, h]`, and how many pairs have `g` as their commutator.
fn fingerprints(t: &MulTable) -> Vec<Vec<u64>> {
    let orders = element_orders(t);
    let inv: Vec<usize> = (0..t.n).map(|a| t.inverse(a)).collect();
    let mut as_commutator = vec![0u64; t.n];
    let mut rows: Vec<Vec<u64>> = (0..t.n)
        .map(|a| {
            let mut centralizer = 0;
            let mut comms = HashSet::new();
            for b in 0..t.n {
                let ab = t.mul(a, b);
                if ab == t.mul(b, a) {
                    centralizer += 1;
                }
                // [a, b] = a^-1 b^-1 a b
                let c = t.mul(t.mul(inv[a], inv[b]), ab);
                as_commutator[c] += 1;
                comms.insert(c);
            }
            vec![orders[a], centralizer, comms.len() as u64]
        })
        .collect();
    for (row, k) in rows.iter_mut().zip(as_commutator) {
        row.push(k);
    }
    rows
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            out.push(d);
            while n % d == 0 {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

/// `q`-th powers and `q`-th roots for each prime `q` dividing `|G|`.
struct PowerData {
    powers: Vec<Vec<usize>>,
    roots: Vec<Vec<Vec<usize>>>,
}

impl PowerData {
    fn new(t: &MulTable, primes: &[usize]) -> PowerData {
        let powers: Vec<Vec<usize>> = primes.iter().map(|&q| (0..t.n).map(|g| power(t, g, q as u64)).collect()).collect();
        let roots = powers
            .iter()
            .map(|pw| {
                let mut r = vec![Vec::new(); t.n];
                for (h, &g) in pw.iter().enumerate() {
                    r[g].push(h);
                }
                r
            })
            .collect();
        PowerData { powers, roots }
    }

    fn push_signature(&self, c: &[u32], g: usize, s: &mut Vec<u64>) {
        for (pw, rt) in self.powers.iter().zip(&self.roots) {
            s.push(u64::from(c[pw[g]]));
            let mut r: Vec<u64> = rt[g].iter().map(|&h| u64::from(c[h])).collect();
            r.sort_unstable();
            s.push(u64::MAX);
            s.extend(r);
        }
    }
}

fn paint(sigs: Vec<Vec<u64>>, palette: &mut HashMap<Vec<u64>, u32>) -> Vec<u32> {
    sigs.into_iter()
        .map(|s| {
            let next = palette.len() as u32;
            *palette.entry(s).or_insert(next)
        })
        .collect()
}

fn census(c: &[u32]) -> Vec<u32> {
    let mut v = c.to_vec();
    v.sort_unstable();
    v
}

fn classes(c: &[u32]) -> usize {
    c.iter().collect::<HashSet<_>>().len()
}

/// Color refinement on both tables with a shared palette: an element's
/// color is refined by the colors of its `q`-th powers and `q`-th roots
/// and of its centralizer. Equal colors are necessary for elements to
/// correspond under an isomorphism. `None` when the color censuses
/// already differ.
fn joint_colors(a: &MulTable, b: &MulTable, pa: &PowerData, pb: &PowerData) -> Option<(Vec<u32>, Vec<u32>)> {
    let centralizers = |t: &MulTable| -> Vec<Vec<usize>> {
        (0..t.n).map(|g| (0..t.n).filter(|&h| t.mul(g, h) == t.mul(h, g)).collect()).collect()
    };
    let (za, zb) = (centralizers(a), centralizers(b));
    let mut palette: HashMap<Vec<u64>, u32> = HashMap::new();
    let mut ca = paint(fingerprints(a), &mut palette);
    let mut cb = paint(fingerprints(b), &mut palette);
    loop {
        if census(&ca) != census(&cb) {
            return None;
        }
        let before = classes(&ca);
        let sig = |c: &[u32], d: &PowerData, z: &[Vec<usize>], g: usize| {
            let mut s = vec![u64::from(c[g])];
            d.push_signature(c, g, &mut s);
            let mut zc: Vec<u64> = z[g].iter().map(|&h| u64::from(c[h])).collect();
            zc.sort_unstable();
            s.push(u64::MAX);
            s.extend(zc);
            s
        };
        palette.clear();
        let sa: Vec<Vec<u64>> = (0..a.n).map(|g| sig(&ca, pa, &za, g)).collect();
        let sb: Vec<Vec<u64>> = (0..b.n).map(|g| sig(&cb, pb, &zb, g)).collect();
        ca = paint(sa, &mut palette);
        cb = paint(sb, &mut palette);
        if classes(&ca) == before {
            return (census(&ca) == census(&cb)).then_some((ca, cb));
        }
    }
}

/// Refines `colors` once `pairs` (element of `a`, element of `b`) are
/// forced to correspond: every element also sees the colors of its left
/// and right products with the pinned elements. `None` when no
/// isomorphism can extend the pairing.
fn individualize(
    tables: (&MulTable, &MulTable),
    data: (&PowerData, &PowerData),
    colors: (&[u32], &[u32]),
    pairs: &[(usize, usize)],
) -> Option<(Vec<u32>, Vec<u32>)> {
    let (a, b) = tables;
    let mut palette: HashMap<Vec<u64>, u32> = HashMap::new();
    let pin = |c: &[u32], side: usize| -> Vec<Vec<u64>> {
        let mut sigs: Vec<Vec<u64>> = c.iter().map(|&x| vec![u64::from(x), u64::MAX]).collect();
        for (i, pair) in pairs.iter().enumerate() {
            let g = if side == 0 { pair.0 } else { pair.1 };
            sigs[g][1] = i as u64;
        }
        sigs
    };
    let mut ca = paint(pin(colors.0, 0), &mut palette);
    let mut cb = paint(pin(colors.1, 1), &mut palette);
    let (left, right): (Vec<usize>, Vec<usize>) = pairs.iter().copied().unzip();
    loop {
        if census(&ca) != census(&cb) {
            return None;
        }
        let before = classes(&ca);
        let sig = |t: &MulTable, c: &[u32], d: &PowerData, pinned: &[usize], g: usize| {
            let mut s = vec![u64::from(c[g])];
            d.push_signature(c, g, &mut s);
            for &h in pinned {
                s.push(u64::from(c[t.mul(g, h)]));
                s.push(u64::from(c[t.mul(h, g)]));
            }
            s
        };
        palette.clear();
        let sa: Vec<Vec<u64>> = (0..a.n).map(|g| sig(a, &ca, data.0, &left, g)).collect();
        let sb: Vec<Vec<u64>> = (0..b.n).map(|g| sig(b, &cb, data.1, &right, g)).collect();
        ca = paint(sa, &mut palette);
        cb = paint(sb, &mut palette);
        if classes(&ca) == before {
            return (census(&ca) == census(&cb)).then_some((ca, cb));
        }
    }
}

/// Extends the images of `gens[..k]` to a map on the subgroup they
/// generate, checking it is an injective, color-preserving homomorphism
/// there.
#[allow(clippy::too_many_arguments)]
fn extend_partial(
    a: &MulTable,
    b: &MulTable,
    colors: (&[u32], &[u32]),
    gens: &[usize],
    images: &[usize],
    phi: &mut [usize],
    used: &mut [bool],
) -> bool {
    phi.iter_mut().for_each(|x| *x = usize::MAX);
    used.iter_mut().for_each(|x| *x = false);
    phi[0] = 0;
    used[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(h) = queue.pop_front() {
        for (&g, &im) in gens.iter().zip(images) {
            let k = a.mul(h, g);
            let v = b.mul(phi[h], im);
            if phi[k] == usize::MAX {
                if used[v] || colors.0[k] != colors.1[v] {
                    return false;
                }
                phi[k] = v;
                used[v] = true;
                queue.push_back(k);
            } else if phi[k] != v {
                return false;
            }
        }
    }
    true
}

/// Whether `map` is an isomorphism `a -> b`, checked on every pair.
pub fn is_isomorphism(a: &MulTable, b: &MulTable, map: &[usize]) -> bool {
    if a.n != b.n || map.len() != a.n {
        return false;
    }
    let mut seen = vec![false; b.n];
    for &m in map {
        if m >= b.n || seen[m] {
            return false;
        }
        seen[m] = true;
    }
    (0..a.n).all(|x| (0..a.n).all(|y| map[a.mul(x, y)] == b.mul(map[x], map[y])))
}

/// An isomorphism `a -> b` as an index map, or `None`.
///
/// Backtracks over images of a greedy generating set, re-refining the
/// colors after each choice so dead branches are cut early.
pub fn brute_iso(a: &MulTable, b: &MulTable, bound: usize) -> Result<Option<Vec<usize>>, OracleError> {
    for t in [a, b] {
        if t.n > bound {
            return Err(OracleError::TooLarge { n: t.n as u64, bound });
        }
    }
    if a.n != b.n {
        return Ok(None);
    }
    if order_profile(a) != order_profile(b) {
        return Ok(None);
    }
    let primes = prime_divisors(a.n);
    let (pa, pb) = (PowerData::new(a, &primes), PowerData::new(b, &primes));
    let Some((ca, cb)) = joint_colors(a, b, &pa, &pb) else { return Ok(None) };
    let mut sizes: HashMap<u32, usize> = HashMap::new();
    for &c in &cb {
        *sizes.entry(c).or_default() += 1;
    }
    let orders = element_orders(a);
    let rarity = |x: usize| sizes[&ca[x]];
    let central: HashSet<usize> = center(a).into_iter().collect();
    // non-central first, then larger orders, then rare colors
    let key = |x: usize| (central.contains(&x), std::cmp::Reverse(orders[x]), rarity(x));
    let gens = generating_set(a, &[], |x, y| key(x) < key(y));
    struct Search<'a> {
        tables: (&'a MulTable, &'a MulTable),
        data: (&'a PowerData, &'a PowerData),
        base: (&'a [u32], &'a [u32]),
        gens: &'a [usize],
        images: Vec<usize>,
        phi: Vec<usize>,
        used: Vec<bool>,
    }
    impl Search<'_> {
        fn run(&mut self, colors: (&[u32], &[u32])) -> bool {
            let k = self.images.len();
            if k == self.gens.len() {
                return true;
            }
            let (a, b) = self.tables;
            let target = colors.0[self.gens[k]];
            for c in 0..b.n {
                if colors.1[c] != target || self.images.contains(&c) {
                    continue;
                }
                self.images.push(c);
                if extend_partial(a, b, self.base, &self.gens[..=k], &self.images, &mut self.phi, &mut self.used) {
                    let pairs: Vec<(usize, usize)> = self.gens[..=k].iter().copied().zip(self.images.iter().copied()).collect();
                    if let Some((ra, rb)) = individualize(self.tables, self.data, colors, &pairs) {
                        if self.run((&ra, &rb)) {
                            return true;
                        }
                    }
                }
                self.images.pop();
            }
            false
        }
    }
    let mut search = Search {
        tables: (a, b),
        data: (&pa, &pb),
        base: (&ca, &cb),
        gens: &gens,
        images: Vec::with_capacity(gens.len()),
        phi: vec![usize::MAX; a.n],
        used: vec![false; a.n],
    };
    if !search.run((&ca, &cb)) {
        return Ok(None);
    }
    let (images, mut phi, mut used) = (search.images, search.phi, search.used);
    extend_partial(a, b, (&ca, &cb), &gens, &images, &mut phi, &mut used);
    debug_assert!(is_isomorphism(a, b, &phi));
    Ok(Some(phi))
}

fn members(inside: &[bool]) -> Vec<usize> {
    inside.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect()
}

/// Smallest normal subgroup containing `seeds`.
pub fn normal_closure(t: &MulTable, seeds: &[usize], group_gens: &[usize]) -> Vec<bool> {
    let inv: Vec<usize> = group_gens.iter().map(|&g| t.inverse(g)).collect();
    let mut gens = seeds.to_vec();
    let mut inside = subgroup(t, &gens);
    loop {
        let mut added = false;
        let current = gens.clone();
        for &h in &current {
            for (&g, &gi) in group_gens.iter().zip(&inv) {
                let c = t.mul(t.mul(gi, h), g);
                if !inside[c] {
                    gens.push(c);
                    inside = subgroup(t, &gens);
                    added = true;
                }
            }
        }
        if !added {
            return inside;
        }
    }
}

/// Normal subgroups `H`, `K`, both nontrivial, with `G = H x K`.
pub fn direct_factor_search(t: &MulTable, bound: usize) -> Result<Option<(Vec<usize>, Vec<usize>)>, OracleError> {
    if t.n > bound {
        return Err(OracleError::TooLarge { n: t.n as u64, bound });
    }
    if t.n == 1 {
        return Ok(None);
    }
    let (_, quotient_flag) = center_and_quotient(t);
    if quotient_flag || t.is_abelian() {
        return Ok(central_cyclic_factor(t));
    }
    normal_subgroup_pairs(t)
}

/// Searches for `G = H x <k>` with `k` central of prime-power order. This
/// is complete whenever some direct factor of `G` can be taken abelian,
/// which holds for abelian `G` and whenever `G / Z(G)` is `C_q x C_q`
/// (a nonabelian factor already has the whole commutator structure, so
/// its partner is central).
fn central_cyclic_factor(t: &MulTable) -> Option<(Vec<usize>, Vec<usize>)> {
    let orders = element_orders(t);
    let z = center(t);
    let group_gens = generating_set(t, &[], |x, y| orders[x] > orders[y]);
    let mut comm_seeds = Vec::new();
    for &g in &group_gens {
        for &h in &group_gens {
            let c = t.mul(t.mul(t.inverse(g), t.inverse(h)), t.mul(g, h));
            if c != 0 {
                comm_seeds.push(c);
            }
        }
    }
    let derived = normal_closure(t, &comm_seeds, &group_gens);
    let mut seen: HashSet<Vec<usize>> = HashSet::new();
    for &k in &z {
        let n = orders[k] as usize;
        if n == 1 || n == t.n || !is_prime_power(n as u64) {
            continue;
        }
        let cyc = subgroup(t, &[k]);
        if (1..t.n).any(|i| cyc[i] && derived[i]) {
            continue;
        }
        let key = members(&cyc);
        if !seen.insert(key.clone()) {
            continue;
        }
        if let Some(f) = cyclic_quotient_map(t, k, n) {
            let h: Vec<usize> = (0..t.n).filter(|&i| f[i] == 0).collect();
            return Some((h, key));
        }
    }
    None
}

fn is_prime_power(n: u64) -> bool {
    let mut d = 2;
    while d * d <= n {
        if n % d == 0 {
            let mut m = n;
            while m % d == 0 {
                m /= d;
            }
            return m == 1;
        }
        d += 1;
    }
    n > 1
}

/// A homomorphism `f: G -> Z/n` with `f(k) = 1`, as values per element.
fn cyclic_quotient_map(t: &MulTable, k: usize, n: usize) -> Option<Vec<usize>> {
    let gens = generating_set(t, &[k], |x, y| x < y);
    let mut values = vec![1usize];
    let mut phi = vec![usize::MAX; t.n];
    fn consistent(t: &MulTable, gens: &[usize], values: &[usize], n: usize, phi: &mut [usize]) -> bool {
        phi.iter_mut().for_each(|x| *x = usize::MAX);
        phi[0] = 0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(h) = queue.pop_front() {
            for (&g, &v) in gens.iter().zip(values) {
                let kk = t.mul(h, g);
                let val = (phi[h] + v) % n;
                if phi[kk] == usize::MAX {
                    phi[kk] = val;
                    queue.push_back(kk);
                } else if phi[kk] != val {
                    return false;
                }
            }
        }
        true
    }
    fn search(t: &MulTable, gens: &[usize], values: &mut Vec<usize>, n: usize, phi: &mut [usize]) -> bool {
        if !consistent(t, &gens[..values.len()], values, n, phi) {
            return false;
        }
        if values.len() == gens.len() {
            return true;
        }
        for v in 0..n {
            values.push(v);
            if search(t, gens, values, n, phi) {
                return true;
            }
            values.pop();
        }
        false
    }
    if search(t, &gens, &mut values, n, &mut phi) {
        consistent(t, &gens, &values, n, &mut phi);
        Some(phi)
    } else {
        None
    }
}

/// Limit on the number of normal subgroups the generic search keeps.
const NORMAL_SUBGROUP_CAP: usize = 20_000;

/// Generic search: all normal subgroups as joins of normal closures of
/// single elements, then complementary pairs.
fn normal_subgroup_pairs(t: &MulTable) -> Result<Option<(Vec<usize>, Vec<usize>)>, OracleError> {
    let orders = element_orders(t);
    let group_gens = generating_set(t, &[], |x, y| orders[x] > orders[y]);
    let mut all: Vec<Vec<bool>> = Vec::new();
    let mut seen: HashSet<Vec<bool>> = HashSet::new();
    let mut basic: Vec<Vec<usize>> = Vec::new();
    for g in 1..t.n {
        let nc = normal_closure(t, &[g], &group_gens);
        if seen.insert(nc.clone()) {
            all.push(nc.clone());
            basic.push(members(&nc));
        }
    }
    let mut i = 0;
    while i < all.len() {
        let cur = members(&all[i]);
        for b in &basic {
            if b.iter().all(|&x| all[i][x]) {
                continue;
            }
            let mut seeds = cur.clone();
            seeds.extend(b.iter().copied());
            let j = subgroup(t, &seeds);
            if seen.insert(j.clone()) {
                all.push(j);
                if all.len() > NORMAL_SUBGROUP_CAP {
                    return Err(OracleError::TooLarge { n: t.n as u64, bound: NORMAL_SUBGROUP_CAP });
                }
            }
        }
        i += 1;
    }
    let sizes: Vec<usize> = all.iter().map(|s| s.iter().filter(|&&b| b).count()).collect();
    for (hi, h) in all.iter().enumerate() {
        for (ki, k) in all.iter().enumerate() {
            if sizes[hi] * sizes[ki] != t.n || sizes[hi] == 1 || sizes[ki] == 1 {
                continue;
            }
            if (1..t.n).all(|x| !(h[x] && k[x])) {
                return Ok(Some((members(h), members(k))));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presentation::parse;

    fn table(text: &str) -> MulTable {
        build_table(&parse(text).unwrap(), DEFAULT_TABLE_BOUND).unwrap()
    }

    const G1: &str = "group { prime 2; center t1:2; comm t1; xp 1; yp 1 }";
    const G2: &str = "group { prime 2; center t1:2; comm t1; xp t1; yp t1 }";

    #[test]
    fn small_tables_are_groups() {
        for t in [table(G1), table(G2), dihedral(4), quaternion(), cyclic(6), direct_product(&dihedral(3), &cyclic(2))] {
            assert!(t.is_latin_square());
            assert!(t.is_associative());
        }
    }

    #[test]
    fn d4_and_q8_profiles() {
        let d = order_profile(&table(G1));
        assert_eq!(d.all, BTreeMap::from([(1, 1), (2, 5), (4, 2)]));
        let q = order_profile(&table(G2));
        assert_eq!(q.all, BTreeMap::from([(1, 1), (2, 1), (4, 6)]));
        assert_eq!(exponent_of(&table(G1)), 4);
        assert_eq!(exponent_of(&table(G2)), 4);
    }

    #[test]
    fn identifies_d4_and_q8() {
        assert!(brute_iso(&table(G1), &dihedral(4), 512).unwrap().is_some());
        assert!(brute_iso(&table(G2), &quaternion(), 512).unwrap().is_some());
        assert!(brute_iso(&table(G1), &table(G2), 512).unwrap().is_none());
        assert!(brute_iso(&dihedral(4), &quaternion(), 512).unwrap().is_none());
    }

    #[test]
    fn relabeled_copy_is_found() {
        let t = table("group { prime 3; center t1:3, t2:3; comm t1; xp 1; yp t2 }");
        let n = t.n();
        let mut perm: Vec<usize> = (0..n).collect();
        perm[1..].reverse();
        let r = relabel(&t, &perm);
        let map = brute_iso(&t, &r, 512).unwrap().expect("relabeled copy");
        assert!(is_isomorphism(&t, &r, &map));
    }

    #[test]
    fn center_and_quotient_examples() {
        let (z, flag) = center_and_quotient(&table(G1));
        assert_eq!((z.len(), flag), (2, true));
        let (z, flag) = center_and_quotient(&cyclic(4));
        assert_eq!((z.len(), flag), (4, false));
        let (z, flag) = center_and_quotient(&table("group { prime 2; center t1:2, t2:2, t3:2; comm t1; xp t2; yp t3 }"));
        assert_eq!((z.len(), flag), (8, true));
    }

    #[test]
    fn infinite_and_large_are_refused() {
        let g = parse("group { prime 2; center t1:2, u1:inf; comm t1; xp 1; yp u1 }").unwrap();
        assert_eq!(build_table(&g, 4096), Err(OracleError::InfiniteGroup));
        let g = parse("group { prime 3; center t1:3, t2:729; comm t1; xp 1; yp 1 }").unwrap();
        assert!(matches!(build_table(&g, 4096), Err(OracleError::TooLarge { .. })));
    }

    #[test]
    fn direct_factors() {
        assert_eq!(direct_factor_search(&table(G1), 512).unwrap(), None);
        assert_eq!(direct_factor_search(&table(G2), 512).unwrap(), None);
        let prod = direct_product(&table(G1), &cyclic(3));
        let (h, k) = direct_factor_search(&prod, 512).unwrap().expect("split");
        assert_eq!(h.len() * k.len(), 24);
        assert_eq!(direct_factor_search(&cyclic(8), 512).unwrap(), None);
        assert!(direct_factor_search(&cyclic(6), 512).unwrap().is_some());
        // generic path: S3 x S3 splits, S3 and D4 x ... do not need it
        let s3 = dihedral(3);
        assert_eq!(direct_factor_search(&s3, 512).unwrap(), None);
        assert!(direct_factor_search(&direct_product(&s3, &s3), 512).unwrap().is_some());
    }

    #[test]
    fn g3_has_noncentral_order_p_and_g4_does_not() {
        let g3 = order_profile(&table("group { prime 3; center t1:3, t2:3; comm t1; xp 1; yp t2 }"));
        let g4 = order_profile(&table("group { prime 3; center t1:3, t2:3; comm t1; xp t1; yp t2 }"));
        assert!(g3.noncentral_count(3) > 0);
        assert_eq!(g4.noncentral_count(3), 0);
    }

    #[test]
    fn export_header() {
        let text = cyclic(2).export_text();
        assert_eq!(text, "order 2\n0 1\n1 0\n");
    }
}
