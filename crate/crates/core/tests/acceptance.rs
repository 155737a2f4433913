//! Acceptance suite: one PASS/FAIL line per criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use cpxcp::abelian::{AbelianInvariants, CyclicOrder};
use cpxcp::classify::{canonical_form, canonical_iso, classify, distinguishing_invariant, enumerate_forms, CanonicalForm};
use cpxcp::decompose::decompose;
use cpxcp::engine::{commutator, elements, mul, power, Element};
use cpxcp::normalize::{replay, scramble};
use cpxcp::oracle::{brute_iso, build_table, direct_factor_search, exponent_of, order_profile, relabel, MulTable};
use cpxcp::{parse, GroupPresentation};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

const ALL: [u8; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];
const FINITE: [u8; 5] = [1, 2, 3, 4, 7];

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn form(family: u8, p: u64, m: &[u32]) -> CanonicalForm {
    CanonicalForm::new(family, p, m, 1, AbelianInvariants { torsion: vec![], free_rank: 0 }).unwrap()
}

fn table_of(f: &CanonicalForm, bound: usize) -> MulTable {
    build_table(&f.presentation(), bound).unwrap()
}

fn forms(ps: &[u64], max_m: u32, families: &[u8]) -> Vec<CanonicalForm> {
    ps.iter().flat_map(|&p| enumerate_forms(p, max_m, families)).collect()
}

fn small_group_identification() -> Outcome {
    let d8 = cpxcp::oracle::dihedral(4);
    let q8 = cpxcp::oracle::quaternion();
    let g1 = table_of(&form(1, 2, &[1]), 4096);
    let g2 = table_of(&form(2, 2, &[1]), 4096);
    ensure(brute_iso(&g1, &d8, 512).unwrap().is_some(), || "G1(2,1) is not dihedral of order 8".into())?;
    ensure(brute_iso(&g2, &q8, 512).unwrap().is_some(), || "G2(2,1) is not quaternion".into())?;
    ensure(brute_iso(&g1, &q8, 512).unwrap().is_none(), || "G1(2,1) matched quaternion".into())?;
    ensure(brute_iso(&g2, &d8, 512).unwrap().is_none(), || "G2(2,1) matched dihedral".into())?;
    Ok("G1(2,1) ~ D8, G2(2,1) ~ Q8".into())
}

fn exponent_law() -> Outcome {
    let mut checked = 0;
    for (p, m1s) in [(3u64, [1u32, 2]), (2, [2, 3])] {
        for m1 in m1s {
            let e1 = exponent_of(&table_of(&form(1, p, &[m1]), 4096));
            let e2 = exponent_of(&table_of(&form(2, p, &[m1]), 4096));
            ensure(e1 == p.pow(m1), || format!("exp G1({p},{m1}) = {e1}"))?;
            ensure(e2 == p.pow(m1 + 1), || format!("exp G2({p},{m1}) = {e2}"))?;
            checked += 2;
        }
    }
    let t1 = table_of(&form(1, 2, &[1]), 4096);
    let t2 = table_of(&form(2, 2, &[1]), 4096);
    ensure(exponent_of(&t1) == 4 && exponent_of(&t2) == 4, || "p = 2, m1 = 1 exponents are not both 4".into())?;
    ensure(order_profile(&t1) != order_profile(&t2), || "p = 2, m1 = 1 order profiles agree".into())?;
    Ok(format!("{checked} exponents match; p = 2, m1 = 1 both 4 and separated by order profile"))
}

fn family_separation() -> Outcome {
    const BOUND: usize = 729;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let instances: Vec<(CanonicalForm, MulTable)> = forms(&[2, 3], 2, &FINITE)
        .into_iter()
        .filter(|f| f.order().unwrap() <= BOUND as u64)
        .map(|f| {
            let t = table_of(&f, BOUND);
            (f, t)
        })
        .collect();
    // control: every instance is found isomorphic to a shuffled copy
    for (f, t) in &instances {
        let mut perm: Vec<usize> = (1..t.n()).collect();
        perm.shuffle(&mut rng);
        perm.insert(0, 0);
        let copy = relabel(t, &perm);
        ensure(brute_iso(t, &copy, BOUND).unwrap().is_some(), || format!("{f} not matched to a relabeled copy"))?;
    }
    let mut pairs = 0;
    for (i, (fa, ta)) in instances.iter().enumerate() {
        for (fb, tb) in &instances[i + 1..] {
            if fa.family() == fb.family() || ta.n() != tb.n() {
                continue;
            }
            pairs += 1;
            ensure(brute_iso(ta, tb, BOUND).unwrap().is_none(), || format!("{fa} ~ {fb}"))?;
        }
    }
    Ok(format!("{} instances, {pairs} cross-family pairs non-isomorphic", instances.len()))
}

/// `h` and `k` are subgroups with trivial intersection, commuting
/// elementwise, with `|h| |k| = |G|`.
fn is_direct_split(t: &MulTable, h: &[usize], k: &[usize]) -> bool {
    let mut in_h = vec![false; t.n()];
    let mut in_k = vec![false; t.n()];
    h.iter().for_each(|&a| in_h[a] = true);
    k.iter().for_each(|&a| in_k[a] = true);
    h.len() > 1
        && k.len() > 1
        && h.len() * k.len() == t.n()
        && (1..t.n()).all(|a| !(in_h[a] && in_k[a]))
        && h.iter().all(|&a| h.iter().all(|&b| in_h[t.mul(a, b)]))
        && k.iter().all(|&a| k.iter().all(|&b| in_k[t.mul(a, b)]))
        && h.iter().all(|&a| k.iter().all(|&b| t.mul(a, b) == t.mul(b, a)))
}

fn indecomposability() -> Outcome {
    let instances: Vec<CanonicalForm> =
        forms(&[2, 3, 5], 3, &FINITE).into_iter().filter(|f| f.order().unwrap() <= 256).collect();
    for f in &instances {
        let t = table_of(f, 4096);
        ensure(direct_factor_search(&t, 512).unwrap().is_none(), || format!("{f} splits"))?;
    }
    let complements: [&[u64]; 5] = [&[2], &[3], &[4], &[2, 2], &[5]];
    let mut splits = 0;
    for f in instances.iter().filter(|f| f.order().unwrap() <= 128) {
        for c in complements {
            let g = f.with_complement(AbelianInvariants { torsion: c.to_vec(), free_rank: 0 });
            if g.order().unwrap() > 512 {
                continue;
            }
            let t = table_of(&g, 4096);
            let found = direct_factor_search(&t, 512).unwrap();
            ensure(matches!(&found, Some((h, k)) if is_direct_split(&t, h, k)), || format!("{g}: no valid split"))?;
            splits += 1;
        }
    }
    Ok(format!("{} instances indecomposable, {splits} products D x A split", instances.len()))
}

fn scramble_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let instances = forms(&[2, 3], 2, &ALL);
    for f in &instances {
        let g = f.presentation();
        for _ in 0..100 {
            let steps = rng.gen_range(1..=12);
            let (h, _) = scramble(&g, steps, &mut rng);
            let (got, moves) = classify(&h);
            ensure(&got == f, || format!("{f}: scramble of {h} classified as {got}"))?;
            ensure(replay(&h, &moves).as_ref() == Ok(&g), || format!("{f}: transcript of {h} does not replay"))?;
        }
    }
    Ok(format!("{} instances x 100 scrambles", instances.len()))
}

/// Structural form of `D`: `t1` of order `p^{m1}` generating `s`, further
/// factors of `p`-power or infinite order, `x^p` off the third factor.
fn check_d_form(d: &GroupPresentation) -> Result<(), String> {
    let z = d.center();
    let p = d.p();
    ensure((1..=3).contains(&z.rank()), || format!("center rank {}", z.rank()))?;
    let CyclicOrder::Finite(n1) = z.order_of(0) else { return Err("t1 is infinite".into()) };
    let m1 = (0..).find(|&k| p.pow(k) >= n1).unwrap();
    ensure(m1 >= 1 && p.pow(m1) == n1, || format!("o(t1) = {n1} is not a power of {p}"))?;
    ensure(d.s() == &z.scale(&z.generator(0), p.pow(m1 - 1) as i64), || "s is not t1^(p^(m1-1))".into())?;
    for i in 1..z.rank() {
        if let CyclicOrder::Finite(n) = z.order_of(i) {
            let mut k = n;
            while k % p == 0 {
                k /= p;
            }
            ensure(k == 1, || format!("factor {i} has order {n}"))?;
        }
    }
    ensure(z.rank() < 3 || d.xp().0[2] == 0, || "x^p has a z3 coordinate".into())?;
    Ok(())
}

fn decomposition_soundness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let orders = [2, 3, 4, 5, 6, 8, 9, 12, 16, 25, 27];
    let mut ranks = [0usize; 6];
    for case in 0..200 {
        let p = [2, 2, 3, 3, 5][rng.gen_range(0..5)];
        let g = common::random_presentation(&mut rng, p, 5, &orders, 512);
        ranks[g.center().rank()] += 1;
        let res = decompose(&g);
        let n = g.order().unwrap();
        let (nd, na) = (res.d.order().unwrap(), res.a.order().unwrap());
        ensure(nd * na == n, || format!("case {case}: |D| |A| = {nd} * {na} != {n} for {g}"))?;
        check_d_form(&res.d).map_err(|e| format!("case {case}: {g}: {e}"))?;
        let ta = build_table(&g, 4096).unwrap();
        let tb = build_table(&res.product(), 4096).unwrap();
        ensure(brute_iso(&ta, &tb, 512).unwrap().is_some(), || format!("case {case}: product not isomorphic to {g}"))?;
        ensure(replay(&g, &res.moves).as_ref() == Ok(&res.product()), || format!("case {case}: moves do not replay"))?;
    }
    Ok(format!("200 random inputs (center ranks 1..5: {:?}) decomposed soundly", &ranks[1..]))
}

fn inverse_in(g: &GroupPresentation, a: &Element) -> Result<Element, String> {
    let ai = power(g, a, -1);
    let e = Element::identity(g);
    ensure(mul(g, a, &ai) == e && mul(g, &ai, a) == e, || format!("bad inverse of {a}"))?;
    Ok(ai)
}

fn check_powers(g: &GroupPresentation, a: &Element) -> Result<(), String> {
    let ai = inverse_in(g, a)?;
    let (mut up, mut down) = (Element::identity(g), Element::identity(g));
    for n in 0..=20 {
        ensure(power(g, a, n) == up, || format!("{a}^{n} in {g}"))?;
        if n <= 5 {
            ensure(power(g, a, -n) == down, || format!("{a}^-{n} in {g}"))?;
        }
        up = mul(g, &up, a);
        down = mul(g, &down, &ai);
    }
    Ok(())
}

fn random_element<R: Rng>(g: &GroupPresentation, rng: &mut R) -> Element {
    let z = common::random_central(g.center(), rng);
    Element::new(g, rng.gen_range(0..g.p() as i64), rng.gen_range(0..g.p() as i64), z)
}

fn engine_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut instances: Vec<GroupPresentation> = forms(&[2, 3], 2, &ALL).iter().map(|f| f.presentation()).collect();
    for _ in 0..20 {
        let p = [2, 3][rng.gen_range(0..2)];
        instances.push(common::random_presentation(&mut rng, p, 4, &[0, 2, 3, 4, 6, 9], 81));
    }
    let mut exhaustive = 0;
    for g in &instances {
        if g.order().is_some_and(|n| n <= 81) {
            let t = build_table(g, 81).unwrap();
            ensure(t.is_latin_square() && t.is_associative(), || format!("{g} is not a group"))?;
            for a in elements(g).unwrap() {
                check_powers(g, &a)?;
            }
            exhaustive += 1;
        } else {
            for _ in 0..50 {
                check_powers(g, &random_element(g, &mut rng))?;
            }
        }
        for _ in 0..1000 {
            let a = random_element(g, &mut rng);
            let b = random_element(g, &mut rng);
            let (ai, bi) = (inverse_in(g, &a)?, inverse_in(g, &b)?);
            let direct = mul(g, &mul(g, &mul(g, &ai, &bi), &a), &b);
            ensure(commutator(g, &a, &b).unwrap() == direct, || format!("[{a}, {b}] in {g}"))?;
        }
    }
    Ok(format!("{} instances, {exhaustive} checked exhaustively", instances.len()))
}

fn infinite_families() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let infinite = forms(&[2, 3, 5], 2, &[5, 6, 8, 9]);
    for f in &infinite {
        let g = f.presentation();
        for _ in 0..100 {
            let (h, _) = scramble(&g, rng.gen_range(1..=12), &mut rng);
            ensure(&canonical_form(&h) == f, || format!("{f}: scramble {h} misclassified"))?;
        }
    }
    for p in [2, 3, 5] {
        for f8 in enumerate_forms(p, 2, &[8]) {
            for f9 in enumerate_forms(p, 2, &[9]) {
                let why = distinguishing_invariant(&f8, &f9);
                ensure(!canonical_iso(&f8, &f9), || format!("{f8} ~ {f9}"))?;
                ensure(why.as_deref().is_some_and(|w| w.contains("rank")), || format!("{f8} vs {f9}: {why:?}"))?;
            }
        }
    }
    let mut round_trips = 0;
    let extras = [AbelianInvariants { torsion: vec![], free_rank: 0 }, AbelianInvariants { torsion: vec![2, 6], free_rank: 1 }];
    for f in forms(&[2, 3, 5], 2, &ALL) {
        for c in &extras {
            let f = f.with_complement(c.clone());
            let g = f.presentation();
            let (h, _) = scramble(&g, 6, &mut rng);
            for pres in [g, h] {
                let back = parse(&pres.to_dsl()).map_err(|e| format!("{pres}: {e}"))?;
                ensure(back == pres, || format!("DSL round trip of {pres}"))?;
                let back = GroupPresentation::from_json(&pres.to_json().to_string()).map_err(|e| e.to_string())?;
                ensure(back == pres, || format!("JSON round trip of {pres}"))?;
                ensure(canonical_form(&back) == f, || format!("{pres} reclassified"))?;
                round_trips += 1;
            }
        }
    }
    Ok(format!("{} infinite instances scramble-invariant, 8 vs 9 separated, {round_trips} round trips", infinite.len()))
}

fn main() {
    let criteria: [(&str, u64, fn() -> Outcome); 8] = [
        ("small-group identification", 1, small_group_identification),
        ("exponent law", 10, exponent_law),
        ("family separation", 60, family_separation),
        ("indecomposability", 60, indecomposability),
        ("scramble invariance", 30, scramble_invariance),
        ("decomposition soundness", 120, decomposition_soundness),
        ("engine correctness", 30, engine_correctness),
        ("infinite families", 10, infinite_families),
    ];
    let mut passed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panic: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > Duration::from_secs(*limit) => Err(format!("took longer than {limit} s")),
            r => r,
        };
        match result {
            Ok(detail) => {
                passed += 1;
                println!("criterion {} ({name}): PASS [{:.2}s] {detail}", i + 1, elapsed.as_secs_f64());
            }
            Err(why) => println!("criterion {} ({name}): FAIL [{:.2}s] {why}", i + 1, elapsed.as_secs_f64()),
        }
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed != criteria.len() {
        std::process::exit(1);
    }
}
