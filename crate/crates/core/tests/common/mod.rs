//! Shared helpers for the integration suites: independent oracles and
//! random parameter generators. Everything here deliberately avoids the
//! code paths it is used to check.

use altbm_core::map_alt::MapParams;
use altbm_core::numerics::{mat_exp, Matrix};
use altbm_core::sampling::RandomStream;

/// Time-domain covariance along the signed-semigroup route:
/// `integral_0^t b exp((C - D) s) e ds`, evaluated through the augmented
/// block exponential `exp([[A, I], [0, 0]] t) = [[e^{At}, int e^{As} ds], [0, I]]`.
///
/// Independent of the Laplace-transform implementation; validated against
/// Monte Carlo before being used as a cross-check oracle.
pub fn signed_semigroup_cov(map: &MapParams, t: f64) -> f64 {
    let n = map.dim();
    let a = map.c().sub(map.d());
    let mut block = Matrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            block.set(i, j, a.get(i, j));
        }
        block.set(i, n + i, 1.0);
    }
    let exponential = mat_exp(&block, t);
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            total += map.b()[i] * exponential.get(i, n + j);
        }
    }
    total
}

/// Random valid MAP parameters with `n` background states: positive `D`,
/// positive `C` off-diagonals, diagonal balancing the rows exactly, and a
/// normalized random initial law.
pub fn random_map(s: &mut RandomStream, n: usize) -> MapParams {
    let span = |s: &mut RandomStream| 0.05 + 1.45 * s.next_uniform();
    let mut c = Matrix::zeros(n, n);
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            d.set(i, j, span(s));
            if i != j {
                c.set(i, j, span(s));
            }
        }
        let total: f64 = (0..n)
            .map(|j| d.get(i, j) + if i == j { 0.0 } else { c.get(i, j) })
            .sum();
        c.set(i, i, -total);
    }
    let raw: Vec<f64> = (0..n).map(|_| 0.1 + s.next_uniform()).collect();
    let sum: f64 = raw.iter().sum();
    let b: Vec<f64> = raw.iter().map(|x| x / sum).collect();
    MapParams::new(b, c, d).expect("random parameters satisfy the invariants")
}
