//! Seeded random instances.

use rand::Rng;

use crate::error::Result;
use crate::scalar::Scalar;
use crate::valuation::{DensityValuation, GridValuation};

/// Monotone 1-Lipschitz valuation on the grid of step `1/g`: `V[j][k] = h(F(k) - F(j))`
/// for a prefix `F` with cell densities in `[0, 1]` and a concave `h` of slope at most 1.
pub fn random_grid_valuation<R: Rng>(rng: &mut R, g: u64) -> Result<GridValuation> {
    let gi = g as i64;
    let mut prefix = vec![Scalar::zero()];
    for _ in 0..g {
        let d = Scalar::new(rng.gen_range(0..=8), 8 * gi);
        let last = prefix.last().unwrap().clone();
        prefix.push(last + d);
    }
    let slope = Scalar::new(1, rng.gen_range(1..=4));
    let knee = Scalar::new(rng.gen_range(1..=8), 8);
    let h = move |t: Scalar| {
        if t <= knee {
            t
        } else {
            &knee + (t - &knee) * &slope
        }
    };
    GridValuation::tabulate(g, |j, k| Ok(h(&prefix[k as usize] - &prefix[j as usize])))
}

pub fn random_grid_instance<R: Rng>(rng: &mut R, agents: usize, g: u64) -> Result<Vec<GridValuation>> {
    (0..agents).map(|_| random_grid_valuation(rng, g)).collect()
}

/// Normalized piecewise-constant density with `pieces` equal segments and random weights,
/// some of which may be zero.
pub fn random_density<R: Rng>(rng: &mut R, pieces: usize) -> Result<DensityValuation> {
    let mut w: Vec<i64> = (0..pieces).map(|_| if rng.gen_bool(0.2) { 0 } else { rng.gen_range(1..=16) }).collect();
    if w.iter().all(|&x| x == 0) {
        w[0] = 1;
    }
    let total: i64 = w.iter().sum();
    let weights: Vec<Scalar> = w.iter().map(|&x| Scalar::new(x, total)).collect();
    DensityValuation::from_weights(&weights)
}

pub fn random_density_instance<R: Rng>(rng: &mut R, agents: usize, pieces: usize) -> Result<Vec<DensityValuation>> {
    (0..agents).map(|_| random_density(rng, pieces)).collect()
}
