//! Query-count sweeps over ε on fixed seeded instance families.

use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CakeError, Result};
use crate::gen::{random_density_instance, random_grid_instance};
use crate::query::Mode;
use crate::scalar::Scalar;
use crate::solver::{solve4, solve4_rw};
use crate::valuation::{DensityValuation, SharedValuation};

/// Grid cells of the value-mode family.
pub const FAMILY_GRID: u64 = 64;
/// Density segments of the Robertson–Webb family.
pub const FAMILY_SEGMENTS: usize = 8;

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct BenchRow {
    pub epsilon: Scalar,
    /// `log2(1/ε)`.
    pub bits: u32,
    pub value_queries: u64,
    pub cut_queries: u64,
    #[serde(skip)]
    pub wall: Duration,
}

impl BenchRow {
    pub fn total(&self) -> u64 {
        self.value_queries + self.cut_queries
    }
}

enum Instance {
    Grid(Vec<SharedValuation>),
    Density(Vec<Arc<DensityValuation>>),
}

pub fn pow2_inv(bits: u32) -> Scalar {
    Scalar::from_big(BigInt::from(1), BigInt::from(1) << bits)
}

/// Solve every instance of the family at each `ε = 2^-bits`, summing query counts per `ε`.
/// Fails if any output is not `ε`-envy-free.
pub fn sweep(mode: Mode, seeds: &[u64], bits: impl IntoIterator<Item = u32>) -> Result<Vec<BenchRow>> {
    let family = seeds
        .iter()
        .map(|&s| {
            let mut rng = ChaCha8Rng::seed_from_u64(s);
            Ok(match mode {
                Mode::ValueOnly => Instance::Grid(
                    random_grid_instance(&mut rng, 4, FAMILY_GRID)?
                        .into_iter()
                        .map(|v| Arc::new(v) as SharedValuation)
                        .collect(),
                ),
                Mode::RobertsonWebb => Instance::Density(
                    random_density_instance(&mut rng, 4, FAMILY_SEGMENTS)?.into_iter().map(Arc::new).collect(),
                ),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for b in bits {
        let eps = pow2_inv(b);
        let start = Instant::now();
        let (mut vq, mut cq) = (0, 0);
        for (inst, seed) in family.iter().zip(seeds) {
            let r = match inst {
                Instance::Grid(v) => solve4(v, &eps, false)?,
                Instance::Density(v) => solve4_rw(v, &eps, false)?,
            };
            if r.max_envy > eps {
                return Err(CakeError::InternalInvariantViolation(format!(
                    "seed {seed} at epsilon {eps}: envy {}",
                    r.max_envy
                )));
            }
            vq += r.queries.total_value();
            cq += r.queries.total_cut();
        }
        rows.push(BenchRow { epsilon: eps, bits: b, value_queries: vq, cut_queries: cq, wall: start.elapsed() });
    }
    Ok(rows)
}

/// Least-squares slope of `ln(count)` against `ln(log2(1/ε))`.
pub fn fit_exponent(points: &[(u32, u64)]) -> f64 {
    let xy: Vec<(f64, f64)> = points.iter().map(|&(b, c)| ((b as f64).ln(), (c.max(1) as f64).ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_law() {
        let pts: Vec<(u32, u64)> = (8..=20).map(|b| (b, (b as u64).pow(3) * 7)).collect();
        assert!((fit_exponent(&pts) - 3.0).abs() < 1e-3);
    }

    #[test]
    fn small_sweep_is_envy_free() {
        let rows = sweep(Mode::RobertsonWebb, &[3], [6, 7]).unwrap();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.cut_queries > 0));
    }
}
