//! Valuation transformations: strong hungriness, grid linearization and quantile flattening.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use num_traits::ToPrimitive;

use crate::error::{domain, Result};
use crate::scalar::Scalar;
use crate::valuation::{
    bisect_cut, check_pair, check_point, grid_interp, grid_size, DensityValuation, GridValuation, SharedValuation,
    Valuation,
};

/// `v'(a, b) = v(a, b) / 2 + eps * (b - a)`.
#[derive(Debug, Clone)]
pub struct Hungrified {
    inner: SharedValuation,
    eps: Scalar,
}

impl Valuation for Hungrified {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        check_pair(a, b)?;
        if b <= a {
            return Ok(Scalar::zero());
        }
        Ok(self.inner.eval(a, b)? / Scalar::from_int(2) + &self.eps * (b - a))
    }
}

pub fn strongly_hungrify(v: SharedValuation, eps: &Scalar) -> Result<Hungrified> {
    if !eps.is_positive() {
        return domain(format!("hungriness parameter {eps} must be positive"));
    }
    Ok(Hungrified { inner: v, eps: eps.clone() })
}

/// Grid interpolation of `inner` evaluated on demand; corner values are queried from `inner`
/// once and remembered.
#[derive(Debug)]
pub struct LazyGrid {
    inner: SharedValuation,
    g: u64,
    corners: Mutex<HashMap<(u64, u64), Scalar>>,
}

impl LazyGrid {
    pub fn new(inner: SharedValuation, step: &Scalar) -> Result<Self> {
        Ok(LazyGrid { inner, g: grid_size(step)?, corners: Mutex::new(HashMap::new()) })
    }

    pub fn cells(&self) -> u64 {
        self.g
    }
}

impl Valuation for LazyGrid {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        let g = self.g as i64;
        grid_interp(self.g, a, b, |j, k| {
            if let Some(v) = self.corners.lock().unwrap().get(&(j, k)) {
                return Ok(v.clone());
            }
            let v = self.inner.eval(&Scalar::new(j as i64, g), &Scalar::new(k as i64, g))?;
            self.corners.lock().unwrap().insert((j, k), v.clone());
            Ok(v)
        })
    }
}

/// Tabulate `v` on the grid of step `delta`.
pub fn grid_linearize(v: &dyn Valuation, delta: &Scalar) -> Result<GridValuation> {
    let g = grid_size(delta)?;
    let gi = g as i64;
    GridValuation::tabulate(g, |j, k| v.eval(&Scalar::new(j as i64, gi), &Scalar::new(k as i64, gi)))
}

/// Minimal `b >= a` with `v(a, b) = alpha` by grid bisection and a segment solve.
pub fn exact_cut_on_grid(v: &GridValuation, a: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
    check_point(a)?;
    if alpha.is_negative() {
        return domain("negative cut value");
    }
    bisect_cut(v.cells(), a, alpha, |x, y| v.eval(x, y))
}

/// The composed preprocessing used by the value-query solver: hungrify with `eps`,
/// then interpolate on the grid of step `eps`.
pub fn preprocess_value(v: SharedValuation, eps: &Scalar) -> Result<LazyGrid> {
    let h: SharedValuation = Arc::new(strongly_hungrify(v, eps)?);
    LazyGrid::new(h, eps)
}

/// Additive valuation evened out between the `m`-quantiles of its base.
pub struct FlattenedValuation {
    base: Arc<DensityValuation>,
    m: u64,
    quantiles: Mutex<Vec<Option<Scalar>>>,
    base_value: AtomicU64,
    base_cut: AtomicU64,
}

impl fmt::Debug for FlattenedValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FlattenedValuation(m = {})", self.m)
    }
}

pub fn rw_flatten(v: Arc<DensityValuation>, m: u64) -> Result<FlattenedValuation> {
    if m == 0 {
        return domain("flattening needs m >= 1");
    }
    let mut q = vec![None; (m + 1) as usize];
    q[0] = Some(Scalar::zero());
    q[m as usize] = Some(Scalar::one());
    Ok(FlattenedValuation {
        base: v,
        m,
        quantiles: Mutex::new(q),
        base_value: AtomicU64::new(0),
        base_cut: AtomicU64::new(0),
    })
}

impl FlattenedValuation {
    pub fn m(&self) -> u64 {
        self.m
    }

    pub fn base(&self) -> &DensityValuation {
        &self.base
    }

    /// Base queries spent so far as `(value, cut)`.
    pub fn base_queries(&self) -> (u64, u64) {
        (self.base_value.load(Ordering::Relaxed), self.base_cut.load(Ordering::Relaxed))
    }

    /// Quantile `x_j`, fixed at first discovery by the base cut query `(0, j/m)`.
    pub fn quantile(&self, j: u64) -> Scalar {
        let mut q = self.quantiles.lock().unwrap();
        if let Some(x) = &q[j as usize] {
            return x.clone();
        }
        self.base_cut.fetch_add(1, Ordering::Relaxed);
        let x = self
            .base
            .cut(&Scalar::zero(), &Scalar::new(j as i64, self.m as i64))
            .expect("valid cut")
            .expect("normalized base");
        q[j as usize] = Some(x.clone());
        x
    }

    /// Quantiles discovered so far.
    pub fn known_quantiles(&self) -> Vec<Option<Scalar>> {
        self.quantiles.lock().unwrap().clone()
    }

    /// `v~(0, b)`.
    pub fn prefix_value(&self, b: &Scalar) -> Result<Scalar> {
        check_point(b)?;
        let m = self.m as i64;
        self.base_value.fetch_add(1, Ordering::Relaxed);
        let alpha = self.base.eval(&Scalar::zero(), b)?;
        let ms = Scalar::from_int(m);
        if self.m == 1 {
            return Ok(b.clone());
        }
        if alpha.is_zero() {
            let x1 = self.quantile(1);
            return Ok(b / (&ms * x1));
        }
        if alpha == Scalar::one() {
            let x = self.quantile(self.m - 1);
            return Ok(Scalar::one() - (Scalar::one() - b) / (&ms * (Scalar::one() - x)));
        }
        let j = alpha.ceil_mul(self.m).to_u64().unwrap().clamp(1, self.m - 1);
        let xj = self.quantile(j);
        let jm = Scalar::new(j as i64, m);
        if b >= &xj {
            let xn = self.quantile(j + 1);
            Ok(jm + (b - &xj) / (&ms * (xn - &xj)))
        } else {
            let xp = self.quantile(j - 1);
            Ok(jm - (&xj - b) / (&ms * (&xj - xp)))
        }
    }

    /// Position with `v~(0, y) = alpha`.
    pub fn prefix_cut(&self, alpha: &Scalar) -> Result<Scalar> {
        if alpha.is_negative() || alpha > &Scalar::one() {
            return domain(format!("cut value {alpha} outside [0,1]"));
        }
        let m = self.m as i64;
        let j = alpha.ceil_mul(self.m).to_u64().unwrap().max(1);
        let x0 = self.quantile(j - 1);
        let x1 = self.quantile(j);
        let t = alpha.mul_int(m) - Scalar::from_int(j as i64 - 1);
        Ok(&x0 + (x1 - &x0) * t)
    }
}

impl Valuation for FlattenedValuation {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        check_pair(a, b)?;
        if b <= a {
            return Ok(Scalar::zero());
        }
        Ok(self.prefix_value(b)? - self.prefix_value(a)?)
    }

    fn cut(&self, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(x)?;
        if alpha.is_zero() {
            return Ok(Some(x.clone()));
        }
        let target = self.prefix_value(x)? + alpha;
        if target > Scalar::one() {
            return Ok(None);
        }
        Ok(Some(self.prefix_cut(&target)?))
    }

    fn rcut(&self, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(y)?;
        if alpha.is_zero() {
            return Ok(Some(y.clone()));
        }
        let target = self.prefix_value(y)? - alpha;
        if target.is_negative() {
            return Ok(None);
        }
        Ok(Some(self.prefix_cut(&target)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::valuation::{validate_grid_valuation, GridFlags};

    #[test]
    fn hungrify_examples() {
        let u: SharedValuation = Arc::new(DensityValuation::uniform());
        let h = strongly_hungrify(u.clone(), &rat(1, 100)).unwrap();
        assert_eq!(h.eval(&rat(0, 1), &rat(1, 1)).unwrap(), rat(51, 100));
        assert!(strongly_hungrify(u, &rat(0, 1)).is_err());
        let zero: SharedValuation = Arc::new(GridValuation::tabulate(1, |_, _| Ok(Scalar::zero())).unwrap());
        let hz = strongly_hungrify(zero, &rat(1, 8)).unwrap();
        assert_eq!(hz.eval(&rat(1, 4), &rat(3, 4)).unwrap(), rat(1, 16));
    }

    #[test]
    fn linearize_uniform_half() {
        let u = DensityValuation::uniform();
        let g = grid_linearize(&u, &rat(1, 2)).unwrap();
        assert_eq!(g.rows(), vec![vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![rat(0, 1), rat(1, 2)], vec![rat(0, 1)]]);
        assert_eq!(g.eval(&rat(1, 4), &rat(3, 4)).unwrap(), rat(1, 2));
        assert!(grid_linearize(&u, &rat(2, 3)).is_err());
    }

    #[test]
    fn hungrified_grid_passes_validator() {
        let u: SharedValuation = Arc::new(DensityValuation::uniform());
        let h = strongly_hungrify(u, &rat(1, 100)).unwrap();
        let g = grid_linearize(&h, &rat(1, 16)).unwrap();
        let rep = validate_grid_valuation(
            &g,
            &GridFlags { monotone: true, strongly_hungry: Some(rat(1, 100)), lipschitz: Some(rat(1, 1)) },
        );
        assert!(rep.passed());
    }

    #[test]
    fn exact_cut_examples() {
        let u = DensityValuation::uniform();
        let g = grid_linearize(&u, &rat(1, 6)).unwrap();
        assert_eq!(exact_cut_on_grid(&g, &rat(0, 1), &rat(1, 3)).unwrap(), Some(rat(1, 3)));
        assert_eq!(exact_cut_on_grid(&g, &rat(2, 7), &rat(0, 1)).unwrap(), Some(rat(2, 7)));
    }

    #[test]
    fn flatten_examples() {
        let u = Arc::new(DensityValuation::uniform());
        let f = rw_flatten(u, 4).unwrap();
        for j in 0..=4 {
            assert_eq!(f.quantile(j), rat(j as i64, 4));
        }
        assert_eq!(f.cut(&rat(0, 1), &rat(3, 10)).unwrap(), Some(rat(3, 10)));
        let skew =
            Arc::new(DensityValuation::new(vec![rat(0, 1), rat(1, 2), rat(1, 1)], vec![rat(2, 1), rat(0, 1)]).unwrap());
        let f2 = rw_flatten(skew, 2).unwrap();
        assert_eq!(f2.quantile(1), rat(1, 4));
        assert_eq!(f2.eval(&rat(0, 1), &rat(1, 8)).unwrap(), rat(1, 4));
        // beyond the mass the flattened density stays positive
        assert_eq!(f2.eval(&rat(1, 2), &rat(1, 1)).unwrap(), rat(1, 3));
    }
}
