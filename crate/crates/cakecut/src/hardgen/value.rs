//! Valuations induced by a grid labeling, evaluated lazily on the grid `D` of step `δ = 1/(10N)`.
//!
//! Integer values are in units `u = δ/512`, so `β = 64u`, `γ = 8u` and `ε = u`.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::One;

use super::ieol::EoLGraph;
use super::label::{first_label, second_label, GridLabeling};
use crate::error::{domain, Result};
use crate::oracle::UnitTable;
use crate::scalar::Scalar;
use crate::valuation::{grid_interp, SharedValuation, Valuation};

pub const UNITS_PER_DELTA: i128 = 512;
pub const BETA_UNITS: i128 = 64;
pub const GAMMA_UNITS: i128 = 8;
pub const EPS_UNITS: i128 = 1;

#[derive(Debug, Clone)]
pub struct HardValuation {
    labeling: Arc<GridLabeling>,
    /// `N`, the labeling grid size.
    size: u64,
}

pub fn hard_valuation(labeling: Arc<GridLabeling>) -> HardValuation {
    let size = labeling.size() as u64;
    HardValuation { labeling, size }
}

impl HardValuation {
    pub fn labeling(&self) -> &GridLabeling {
        &self.labeling
    }

    /// Cells of `D`, i.e. `10N`.
    pub fn grid(&self) -> u64 {
        10 * self.size
    }

    pub fn delta(&self) -> Scalar {
        Scalar::new(1, self.grid() as i64)
    }

    pub fn unit(&self) -> Scalar {
        Scalar::new(1, UNITS_PER_DELTA as i64 * self.grid() as i64)
    }

    pub fn beta(&self) -> Scalar {
        self.unit().mul_int(BETA_UNITS as i64)
    }

    pub fn gamma(&self) -> Scalar {
        self.unit().mul_int(GAMMA_UNITS as i64)
    }

    pub fn epsilon(&self) -> Scalar {
        self.unit()
    }

    /// Value of `[j, k]` on `D` in units of [`Self::unit`], for `j <= k`.
    pub fn units(&self, j: u64, k: u64) -> i128 {
        let n = self.size;
        let (l0, l1) = (2 * n, 3 * n);
        let (m0, m1) = (9 * n / 2, 11 * n / 2);
        let (r0, r1) = (7 * n, 8 * n);
        if j == 0 && (l0..=l1).contains(&k) {
            let boost = self.labeling.boost((k - l0) as i64) as i128;
            return UNITS_PER_DELTA * k as i128 + BETA_UNITS * boost;
        }
        if (l0..=l1).contains(&j) && (m0..=m1).contains(&k) {
            let l = self.labeling.label((j - l0) as i64, (k - m0) as i64);
            return self.units(0, j) + GAMMA_UNITS * first_label(l) as i128;
        }
        if (m0..=m1).contains(&j) && (r0..=r1).contains(&k) {
            let l = self.labeling.label((8 * n - k) as i64, (j - m0) as i64);
            return UNITS_PER_DELTA * (10 * n - k) as i128 + GAMMA_UNITS * second_label(l) as i128;
        }
        UNITS_PER_DELTA * (k - j) as i128
    }
}

impl Valuation for HardValuation {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        let g = self.grid();
        let v = grid_interp(g, a, b, |j, k| Ok(Scalar::from_big(BigInt::from(self.units(j, k)), BigInt::one())))?;
        Ok(v * self.unit())
    }
}

impl UnitTable for HardValuation {
    fn cells(&self) -> u64 {
        self.grid()
    }
    fn value(&self, j: u64, k: u64) -> i128 {
        self.units(j, k)
    }
}

/// A valuation's values on the grid of step `δ/2`, in units of `u/2`.
#[derive(Debug, Clone)]
pub struct RefinedTable<'a> {
    base: &'a HardValuation,
}

impl<'a> RefinedTable<'a> {
    pub fn new(base: &'a HardValuation) -> Self {
        RefinedTable { base }
    }

    pub fn unit(&self) -> Scalar {
        self.base.unit() / Scalar::from_int(2)
    }
}

impl UnitTable for RefinedTable<'_> {
    fn cells(&self) -> u64 {
        2 * self.base.grid()
    }

    fn value(&self, j: u64, k: u64) -> i128 {
        let g = self.base.grid();
        let v = |a, b| self.base.units(a, b);
        let (ja, jb) = ((j / 2).min(g - 1), (k / 2).min(g - 1));
        let (wa, wb) = ((j - 2 * ja) as i128, (k - 2 * jb) as i128);
        if ja == jb {
            return (k - j) as i128 * v(ja, ja + 1);
        }
        if wa + wb <= 2 {
            (2 - wa - wb) * v(ja, jb) + wb * v(ja, jb + 1) + wa * v(ja + 1, jb)
        } else {
            (wa + wb - 2) * v(ja + 1, jb + 1) + (2 - wa) * v(ja, jb + 1) + (2 - wb) * v(ja + 1, jb)
        }
    }
}

/// Four agents sharing one valuation built from the labeling of `g`.
pub fn identical_instance(g: &EoLGraph) -> Result<[Arc<HardValuation>; 4]> {
    if !g.is_standard() {
        return domain("identical instances need a graph without branching");
    }
    let labeling = Arc::new(super::label::embed_labeling(&g.edges(), g.n)?);
    let v = Arc::new(hard_valuation(labeling));
    Ok([v.clone(), v.clone(), v.clone(), v])
}

pub fn shared(vals: &[Arc<HardValuation>; 4]) -> Vec<SharedValuation> {
    vals.iter().map(|v| v.clone() as SharedValuation).collect()
}

/// The four valuations of an instance given per-party edge sets.
pub fn party_valuations(supersets: &[BTreeSet<super::ieol::Edge>; 4], n: usize) -> Result<[Arc<HardValuation>; 4]> {
    let mut out = Vec::with_capacity(4);
    for s in supersets {
        out.push(Arc::new(hard_valuation(Arc::new(super::label::embed_labeling(s, n)?))));
    }
    Ok(out.try_into().expect("four parties"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardgen::label::{embed_labeling, E};
    use crate::scalar::rat;

    fn path12() -> HardValuation {
        let edges: BTreeSet<_> = [(1, 2)].into_iter().collect();
        hard_valuation(Arc::new(embed_labeling(&edges, 2).unwrap()))
    }

    #[test]
    fn constants() {
        let v = path12();
        assert!(v.delta() > v.beta() && v.beta() > v.gamma() && v.gamma() > v.epsilon());
        assert_eq!(v.gamma(), v.delta() / Scalar::from_int(64));
        assert_eq!(v.epsilon(), v.gamma() / Scalar::from_int(8));
    }

    #[test]
    fn plain_and_suffix_values() {
        let v = path12();
        assert_eq!(v.eval(&rat(1, 10), &rat(3, 5)).unwrap(), rat(1, 2));
        let g = v.grid();
        for j in (0..=g).step_by(997) {
            let a = Scalar::new(j as i64, g as i64);
            assert_eq!(v.eval(&a, &Scalar::one()).unwrap(), Scalar::one() - &a);
        }
    }

    #[test]
    fn middle_piece_uses_first_label() {
        let v = path12();
        let n = v.size;
        let (x, y) = (n / 2, n / 2);
        assert_eq!(v.labeling().label(x as i64, y as i64), E);
        let a = rat(1, 4);
        let b = rat(1, 2);
        assert_eq!(v.units(2 * n + x, 9 * n / 2 + y), 512 * (2 * n + x) as i128 + 8);
        assert_eq!(v.eval(&a, &b).unwrap(), a + v.gamma());
    }

    #[test]
    fn refined_matches_exact() {
        let v = path12();
        let t = RefinedTable::new(&v);
        let g2 = t.cells() as i64;
        let unit = t.unit();
        let n = v.size as i64;
        for (j, k) in [(0, 4 * n + 1), (4 * n + 1, 9 * n + 3), (9 * n + 1, 15 * n + 7), (10, 11), (3, 20 * n)] {
            let exact = v.eval(&Scalar::new(j, g2), &Scalar::new(k, g2)).unwrap();
            assert_eq!(exact, unit.mul_int(t.value(j as u64, k as u64) as i64), "{j} {k}");
        }
    }

    #[test]
    fn identical_requires_standard_graph() {
        let g = EoLGraph::from_edges(3, &[(1, 2), (1, 3)].into_iter().collect()).unwrap();
        assert!(identical_instance(&g).is_err());
        let p = EoLGraph::from_edges(2, &[(1, 2)].into_iter().collect()).unwrap();
        let vals = identical_instance(&p).unwrap();
        assert!(vals.iter().all(|v| Arc::ptr_eq(v, &vals[0])));
    }
}
