#![allow(dead_code)]

use cpxcp::abelian::{central_order, CentralVector, CyclicOrder, Factor, FgAbelian};
use cpxcp::GroupPresentation;
use rand::Rng;

/// A random element of the center, free coordinates in `-3..=3`.
pub fn random_central<R: Rng + ?Sized>(z: &FgAbelian, rng: &mut R) -> CentralVector {
    CentralVector(
        z.factors()
            .iter()
            .map(|f| match f.order {
                CyclicOrder::Finite(n) => rng.gen_range(0..n as i64),
                CyclicOrder::Infinite => rng.gen_range(-3..=3),
            })
            .collect(),
    )
}

/// A random element of order exactly `p`, if one exists after some tries.
pub fn random_order_p<R: Rng + ?Sized>(z: &FgAbelian, p: u64, rng: &mut R) -> Option<CentralVector> {
    for _ in 0..50 {
        let v = random_central(z, rng);
        if let CyclicOrder::Finite(n) = central_order(z, &v) {
            if n % p == 0 {
                let w = z.scale(&v, (n / p) as i64);
                if central_order(z, &w) == CyclicOrder::Finite(p) {
                    return Some(w);
                }
            }
        }
    }
    None
}

/// Random valid presentation with prime `p`, at most `max_rank` center
/// factors drawn from `orders` (`0` meaning infinite), and `|G| <= max_order`
/// when finite. The rank is uniform over the ranks that can fit.
pub fn random_presentation<R: Rng + ?Sized>(
    rng: &mut R,
    p: u64,
    max_rank: usize,
    orders: &[u64],
    max_order: u64,
) -> GroupPresentation {
    let min_factor = orders.iter().copied().filter(|&n| n > 0).min().unwrap_or(2);
    let mut feasible = 1;
    while feasible < max_rank && min_factor.pow(feasible as u32 + 1) * p * p <= max_order {
        feasible += 1;
    }
    let mut rank = rng.gen_range(1..=feasible);
    for attempt in 1.. {
        if attempt % 500 == 0 {
            rank = rng.gen_range(1..=feasible);
        }
        let divisible: Vec<u64> = orders.iter().copied().filter(|&n| n > 0 && n % p == 0).collect();
        let factors: Vec<Factor> = (0..rank)
            .map(|i| {
                // one factor always carries an element of order p
                let n = if i == 0 {
                    divisible.get(rng.gen_range(0..divisible.len().max(1))).copied().unwrap_or(p)
                } else {
                    orders[rng.gen_range(0..orders.len())]
                };
                if n == 0 {
                    Factor::infinite(format!("z{}", i + 1))
                } else {
                    Factor::finite(format!("z{}", i + 1), n)
                }
            })
            .collect();
        let Ok(z) = FgAbelian::new(factors) else { continue };
        if z.rank() == 0 {
            continue;
        }
        if let Some(n) = z.order() {
            if n * p * p > max_order {
                continue;
            }
        }
        let Some(s) = random_order_p(&z, p, rng) else { continue };
        let xp = random_central(&z, rng);
        let yp = random_central(&z, rng);
        if let Ok(g) = GroupPresentation::new(p, z, s, xp, yp) {
            return g;
        }
    }
    unreachable!()
}
