//! Valuations over subintervals of the unit cake, divisions and allocations.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{domain, CakeError, Result};
use crate::scalar::Scalar;

/// Evaluator `v(a, b)` for the interval `[a, b]` of the cake `[0, 1]`.
pub trait Valuation: Send + Sync + fmt::Debug {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar>;

    /// Minimal `y >= x` with `v(x, y) = alpha`, or `None` when `v(x, 1) < alpha`.
    fn cut(&self, _x: &Scalar, _alpha: &Scalar) -> Result<Option<Scalar>> {
        domain("this valuation does not answer cut queries")
    }

    /// Maximal `x <= y` with `v(x, y) = alpha`, or `None` when `v(0, y) < alpha`.
    fn rcut(&self, _y: &Scalar, _alpha: &Scalar) -> Result<Option<Scalar>> {
        domain("this valuation does not answer cut queries")
    }
}

pub type SharedValuation = Arc<dyn Valuation>;

impl<V: Valuation + ?Sized> Valuation for Arc<V> {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        (**self).eval(a, b)
    }
    fn cut(&self, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        (**self).cut(x, alpha)
    }
    fn rcut(&self, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        (**self).rcut(y, alpha)
    }
}

pub(crate) fn check_point(x: &Scalar) -> Result<()> {
    if x.in_unit() {
        Ok(())
    } else {
        domain(format!("position {x} outside [0,1]"))
    }
}

pub(crate) fn check_pair(a: &Scalar, b: &Scalar) -> Result<()> {
    check_point(a)?;
    check_point(b)
}

fn to_u64(x: num_bigint::BigInt) -> u64 {
    x.to_u64().expect("grid index fits in u64")
}

/// Grid cell `j` with `j/g <= x <= (j+1)/g`; the point 1 belongs to the last cell.
pub fn cell_of(x: &Scalar, g: u64) -> u64 {
    to_u64(x.floor_mul(g)).min(g - 1)
}

/// Triangular interpolation of corner values on the grid of step `1/g`.
///
/// `corner(j, k)` must return the value at `(j/g, k/g)` for `j <= k`. Within a
/// cell that contains both endpoints the value is `(b - a) * g * corner(j, j+1)`.
pub fn grid_interp<F>(g: u64, a: &Scalar, b: &Scalar, mut corner: F) -> Result<Scalar>
where
    F: FnMut(u64, u64) -> Result<Scalar>,
{
    check_pair(a, b)?;
    if b <= a {
        return Ok(Scalar::zero());
    }
    let ja = cell_of(a, g);
    let jb = cell_of(b, g);
    let gb = BigInt::from(g);
    if ja == jb {
        return Ok((b - a) * Scalar::from_big(gb, BigInt::one()) * corner(ja, ja + 1)?);
    }
    // da = na / qa and db = nb / qb; the weights share the denominator qa * qb
    let (qa, qb) = (a.denom(), b.denom());
    let na = a.numer() * &gb - BigInt::from(ja) * qa;
    let nb = b.numer() * &gb - BigInt::from(jb) * qb;
    let q = qa * qb;
    let (wa, wb) = (&na * qb, &nb * qa);
    let terms = if &wa + &wb <= q {
        [(&q - &wa - &wb, ja, jb), (wb, ja, jb + 1), (wa, ja + 1, jb)]
    } else {
        [(&wa + &wb - &q, ja + 1, jb + 1), (&q - &wa, ja, jb + 1), (&q - &wb, ja + 1, jb)]
    };
    let mut num = BigInt::zero();
    let mut den = BigInt::one();
    for (w, j, k) in terms {
        if w.is_zero() {
            continue;
        }
        let c = corner(j, k)?;
        if c.is_zero() {
            continue;
        }
        if c.denom() == &den {
            num += w * c.numer();
        } else {
            let l = den.lcm(c.denom());
            num = num * (&l / &den) + w * c.numer() * (&l / c.denom());
            den = l;
        }
    }
    Ok(Scalar::from_big(num, den * q))
}

/// Additive valuation with a piecewise-constant density.
#[derive(Clone, PartialEq, Eq, Serialize)]
pub struct DensityValuation {
    breakpoints: Vec<Scalar>,
    densities: Vec<Scalar>,
    #[serde(skip)]
    prefix: Vec<Scalar>,
}

impl fmt::Debug for DensityValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityValuation")
            .field("breakpoints", &self.breakpoints)
            .field("densities", &self.densities)
            .finish()
    }
}

impl DensityValuation {
    pub fn new(breakpoints: Vec<Scalar>, densities: Vec<Scalar>) -> Result<Self> {
        if breakpoints.len() < 2 || densities.len() + 1 != breakpoints.len() {
            return domain("need k+1 breakpoints for k densities");
        }
        if !breakpoints[0].is_zero() || breakpoints[breakpoints.len() - 1] != Scalar::one() {
            return domain("breakpoints must start at 0 and end at 1");
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return domain("breakpoints must be strictly increasing");
        }
        if densities.iter().any(|d| d.is_negative()) {
            return domain("densities must be nonnegative");
        }
        let mut prefix = vec![Scalar::zero()];
        for (w, d) in breakpoints.windows(2).zip(&densities) {
            let last = prefix.last().unwrap().clone();
            prefix.push(last + (&w[1] - &w[0]) * d);
        }
        if prefix.last().unwrap() != &Scalar::one() {
            return domain(format!("total mass {} differs from 1", prefix.last().unwrap()));
        }
        Ok(DensityValuation { breakpoints, densities, prefix })
    }

    pub fn uniform() -> Self {
        Self::new(vec![Scalar::zero(), Scalar::one()], vec![Scalar::one()]).unwrap()
    }

    /// Density `w_t * k` on the `t`-th of `k` equal segments; weights must sum to 1.
    pub fn from_weights(weights: &[Scalar]) -> Result<Self> {
        let k = weights.len() as i64;
        let bps = (0..=k).map(|j| Scalar::new(j, k)).collect();
        let ds = weights.iter().map(|w| w.mul_int(k)).collect();
        Self::new(bps, ds)
    }

    pub fn breakpoints(&self) -> &[Scalar] {
        &self.breakpoints
    }

    pub fn densities(&self) -> &[Scalar] {
        &self.densities
    }

    fn segment(&self, x: &Scalar) -> usize {
        // last segment s with breakpoints[s] <= x
        let idx = self.breakpoints.partition_point(|b| b <= x);
        idx.saturating_sub(1).min(self.densities.len() - 1)
    }

    /// Cumulative mass `v(0, x)`.
    pub fn mass(&self, x: &Scalar) -> Scalar {
        let s = self.segment(x);
        &self.prefix[s] + (x - &self.breakpoints[s]) * &self.densities[s]
    }

    /// Minimal position with cumulative mass `target`.
    fn inverse_min(&self, target: &Scalar) -> Scalar {
        if target.is_zero() {
            return Scalar::zero();
        }
        // first prefix index with prefix >= target
        let idx = self.prefix.partition_point(|p| p < target);
        let s = idx - 1;
        &self.breakpoints[s] + (target - &self.prefix[s]) / &self.densities[s]
    }

    /// Maximal position with cumulative mass `target`.
    fn inverse_max(&self, target: &Scalar) -> Scalar {
        if target == &Scalar::one() {
            return Scalar::one();
        }
        // last prefix index with prefix <= target
        let idx = self.prefix.partition_point(|p| p <= target);
        let s = idx - 1;
        &self.breakpoints[s] + (target - &self.prefix[s]) / &self.densities[s]
    }
}

impl Valuation for DensityValuation {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        check_pair(a, b)?;
        if b <= a {
            return Ok(Scalar::zero());
        }
        Ok(self.mass(b) - self.mass(a))
    }

    fn cut(&self, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(x)?;
        if alpha.is_negative() {
            return domain("negative cut value");
        }
        if alpha.is_zero() {
            return Ok(Some(x.clone()));
        }
        let target = self.mass(x) + alpha;
        if target > Scalar::one() {
            return Ok(None);
        }
        Ok(Some(Scalar::max_of(x, &self.inverse_min(&target))))
    }

    fn rcut(&self, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(y)?;
        if alpha.is_negative() {
            return domain("negative cut value");
        }
        if alpha.is_zero() {
            return Ok(Some(y.clone()));
        }
        let target = self.mass(y) - alpha;
        if target.is_negative() {
            return Ok(None);
        }
        Ok(Some(Scalar::min_of(y, &self.inverse_max(&target))))
    }
}

/// Valuation given by its values on the grid `{0, 1/g, ..., 1}` and triangular interpolation.
#[derive(Clone, PartialEq, Eq)]
pub struct GridValuation {
    g: u64,
    values: Vec<Scalar>,
}

impl fmt::Debug for GridValuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridValuation(step 1/{})", self.g)
    }
}

impl GridValuation {
    /// Build from rows `values[j]` holding `V[j][k]` for `k >= j` (length `g + 1 - j`),
    /// or full square rows (entries below the diagonal are ignored).
    pub fn from_rows(step: &Scalar, rows: &[Vec<Scalar>]) -> Result<Self> {
        let g = grid_size(step)?;
        let n = (g + 1) as usize;
        if rows.len() != n {
            return domain(format!("expected {n} rows, got {}", rows.len()));
        }
        let mut values = vec![Scalar::zero(); n * n];
        for (j, row) in rows.iter().enumerate() {
            let offset = if row.len() == n { 0 } else { j };
            if row.len() != n && row.len() != n - j {
                return domain(format!("row {j} has length {}", row.len()));
            }
            for (t, x) in row.iter().enumerate() {
                let k = t + offset;
                if k < j {
                    continue;
                }
                if k == j && !x.is_zero() {
                    return domain(format!("V[{j}][{j}] must be 0"));
                }
                if x.is_negative() || x > &Scalar::one() {
                    return domain(format!("V[{j}][{k}] = {x} outside [0,1]"));
                }
                values[j * n + k] = x.clone();
            }
        }
        Ok(GridValuation { g, values })
    }

    /// Tabulate `f(j, k)` for all `j <= k`.
    pub fn tabulate<F>(g: u64, mut f: F) -> Result<Self>
    where
        F: FnMut(u64, u64) -> Result<Scalar>,
    {
        let n = (g + 1) as usize;
        let mut values = vec![Scalar::zero(); n * n];
        for j in 0..=g {
            for k in j + 1..=g {
                values[j as usize * n + k as usize] = f(j, k)?;
            }
        }
        Ok(GridValuation { g, values })
    }

    pub fn cells(&self) -> u64 {
        self.g
    }

    pub fn step(&self) -> Scalar {
        Scalar::new(1, self.g as i64)
    }

    /// Table entry `V[j][k]`; zero for `k <= j`.
    pub fn at(&self, j: u64, k: u64) -> &Scalar {
        let n = (self.g + 1) as usize;
        &self.values[j as usize * n + k as usize]
    }

    pub fn rows(&self) -> Vec<Vec<Scalar>> {
        (0..=self.g).map(|j| (j..=self.g).map(|k| self.at(j, k).clone()).collect()).collect()
    }
}

pub fn grid_size(step: &Scalar) -> Result<u64> {
    if !step.is_positive() {
        return domain("grid step must be positive");
    }
    let inv = step.recip();
    if !inv.is_integer() {
        return domain(format!("1/step is not an integer for step {step}"));
    }
    inv.floor().to_u64().ok_or_else(|| CakeError::Domain("grid too large".into()))
}

impl Valuation for GridValuation {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        grid_interp(self.g, a, b, |j, k| Ok(self.at(j, k).clone()))
    }

    /// Linear scan over grid points followed by a segment solve.
    fn cut(&self, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(x)?;
        if alpha.is_negative() {
            return domain("negative cut value");
        }
        if alpha.is_zero() {
            return Ok(Some(x.clone()));
        }
        let g = self.g;
        let mut prev = (x.clone(), Scalar::zero());
        let first = to_u64(x.floor_mul(g)) + 1;
        for k in first..=g {
            let y = Scalar::new(k as i64, g as i64);
            for p in segment_knots_b(g, x, &prev.0, &y) {
                let fp = self.eval(x, &p)?;
                if &fp >= alpha {
                    return Ok(Some(solve_segment(&prev, &(p, fp), alpha)));
                }
                prev = (p, fp);
            }
        }
        Ok(None)
    }

    fn rcut(&self, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        check_point(y)?;
        if alpha.is_negative() {
            return domain("negative cut value");
        }
        if alpha.is_zero() {
            return Ok(Some(y.clone()));
        }
        let g = self.g;
        let mut prev = (y.clone(), Scalar::zero());
        let first = to_u64(y.ceil_mul(g));
        for k in (0..first).rev() {
            let x = Scalar::new(k as i64, g as i64);
            for p in segment_knots_a(g, y, &prev.0, &x) {
                let fp = self.eval(&p, y)?;
                if &fp >= alpha {
                    return Ok(Some(solve_segment(&prev, &(p, fp), alpha)));
                }
                prev = (p, fp);
            }
        }
        Ok(None)
    }
}

/// Points where `y -> v(x, y)` may bend on `(from, to]`, ending with `to`.
pub(crate) fn segment_knots_b(g: u64, x: &Scalar, from: &Scalar, to: &Scalar) -> Vec<Scalar> {
    let mut pts = Vec::with_capacity(2);
    let gs = Scalar::from_int(g as i64);
    let ja = cell_of(x, g);
    let abar = Scalar::new(ja as i64 + 1, g as i64);
    // within the cell of `to`, the diagonal of the triangulation sits at b = b_lo + (abar - x)
    let jb = cell_of(&Scalar::max_of(from, x), g);
    if jb != ja {
        let blo = Scalar::from_int(jb as i64) / &gs;
        let knot = blo + (&abar - x);
        if &knot > from && &knot < to {
            pts.push(knot);
        }
    }
    pts.push(to.clone());
    pts
}

/// Points where `x -> v(x, y)` may bend on `[to, from)`, in decreasing order, ending with `to`.
pub(crate) fn segment_knots_a(g: u64, y: &Scalar, from: &Scalar, to: &Scalar) -> Vec<Scalar> {
    let mut pts = Vec::with_capacity(2);
    let gs = Scalar::from_int(g as i64);
    let jb = cell_of(y, g);
    let blo = Scalar::from_int(jb as i64) / &gs;
    // cell of the open interval (to, from)
    let mid = (from + to).div_int(2);
    let ja = cell_of(&mid, g);
    if ja != jb {
        let abar = Scalar::from_int(ja as i64 + 1) / &gs;
        let knot = abar - (y - &blo);
        if &knot > to && &knot < from {
            pts.push(knot);
        }
    }
    pts.push(to.clone());
    pts
}

/// Minimal `y >= x` with `f(x, y) = alpha` for a monotone `f` linear on the grid of step `1/g`:
/// grid bisection, then an exact solve on the located segment.
pub fn bisect_cut<F>(g: u64, x: &Scalar, alpha: &Scalar, mut f: F) -> Result<Option<Scalar>>
where
    F: FnMut(&Scalar, &Scalar) -> Result<Scalar>,
{
    if alpha.is_zero() {
        return Ok(Some(x.clone()));
    }
    let first = to_u64(x.floor_mul(g)) + 1;
    if first > g {
        return Ok(None);
    }
    let pt = |k: u64| Scalar::new(k as i64, g as i64);
    let top = f(x, &Scalar::one())?;
    if &top < alpha {
        return Ok(None);
    }
    // invariant: f(x, pt(lo)) < alpha <= f(x, pt(hi)); pt(first - 1) stands for x itself
    let (mut lo, mut hi) = (first - 1, g);
    let (mut flo, mut fhi) = (Scalar::zero(), top);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let fm = f(x, &pt(mid))?;
        if &fm >= alpha {
            hi = mid;
            fhi = fm;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    let p0 = if lo == first - 1 { x.clone() } else { pt(lo) };
    let p1 = pt(hi);
    let mut prev = (p0.clone(), flo);
    for p in segment_knots_b(g, x, &p0, &p1) {
        let fp = if p == p1 { fhi.clone() } else { f(x, &p)? };
        if &fp >= alpha {
            return Ok(Some(solve_segment(&prev, &(p, fp), alpha)));
        }
        prev = (p, fp);
    }
    Err(CakeError::InternalInvariantViolation("cut bisection lost its bracket".into()))
}

/// Maximal `x <= y` with `f(x, y) = alpha`; mirror image of [`bisect_cut`].
pub fn bisect_rcut<F>(g: u64, y: &Scalar, alpha: &Scalar, mut f: F) -> Result<Option<Scalar>>
where
    F: FnMut(&Scalar, &Scalar) -> Result<Scalar>,
{
    if alpha.is_zero() {
        return Ok(Some(y.clone()));
    }
    let last = to_u64(y.ceil_mul(g));
    if last == 0 {
        return Ok(None);
    }
    let pt = |k: u64| Scalar::new(k as i64, g as i64);
    let top = f(&Scalar::zero(), y)?;
    if &top < alpha {
        return Ok(None);
    }
    // invariant: f(pt(hi), y) < alpha <= f(pt(lo), y); pt(last) stands for y itself
    let (mut lo, mut hi) = (0u64, last);
    let (mut flo, mut fhi) = (top, Scalar::zero());
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let fm = f(&pt(mid), y)?;
        if &fm >= alpha {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    let p0 = if hi == last { y.clone() } else { pt(hi) };
    let p1 = pt(lo);
    let mut prev = (p0.clone(), fhi);
    for p in segment_knots_a(g, y, &p0, &p1) {
        let fp = if p == p1 { flo.clone() } else { f(&p, y)? };
        if &fp >= alpha {
            return Ok(Some(solve_segment(&prev, &(p, fp), alpha)));
        }
        prev = (p, fp);
    }
    Err(CakeError::InternalInvariantViolation("reverse cut bisection lost its bracket".into()))
}

/// Root of the linear function through `(p0, f0)` and `(p1, f1)` at level `alpha`, with `f0 < alpha <= f1`.
pub(crate) fn solve_segment(lo: &(Scalar, Scalar), hi: &(Scalar, Scalar), alpha: &Scalar) -> Scalar {
    let (p0, f0) = lo;
    let (p1, f1) = hi;
    if f1 == alpha {
        return p1.clone();
    }
    p0 + (alpha - f0) * (p1 - p0) / (f1 - f0)
}

/// Cut positions `0 <= c_1 <= ... <= c_{n-1} <= 1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Division {
    pub cuts: Vec<Scalar>,
}

impl Division {
    pub fn new(cuts: Vec<Scalar>) -> Result<Self> {
        for c in &cuts {
            check_point(c)?;
        }
        if cuts.windows(2).any(|w| w[0] > w[1]) {
            return domain("cuts must be nondecreasing");
        }
        Ok(Division { cuts })
    }

    pub fn three(l: Scalar, m: Scalar, r: Scalar) -> Result<Self> {
        Self::new(vec![l, m, r])
    }

    pub fn pieces_count(&self) -> usize {
        self.cuts.len() + 1
    }

    pub fn piece(&self, p: usize) -> (Scalar, Scalar) {
        let lo = if p == 0 { Scalar::zero() } else { self.cuts[p - 1].clone() };
        let hi = if p == self.cuts.len() { Scalar::one() } else { self.cuts[p].clone() };
        (lo, hi)
    }

    pub fn pieces(&self) -> Vec<(Scalar, Scalar)> {
        (0..self.pieces_count()).map(|p| self.piece(p)).collect()
    }
}

/// A division plus `assignment[piece] = agent` (0-based).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Allocation {
    pub division: Division,
    pub assignment: Vec<usize>,
}

impl Allocation {
    pub fn new(division: Division, assignment: Vec<usize>) -> Result<Self> {
        let n = division.pieces_count();
        let mut seen = vec![false; n];
        if assignment.len() != n {
            return domain("assignment length differs from piece count");
        }
        for &a in &assignment {
            if a >= n || seen[a] {
                return domain("assignment is not a permutation");
            }
            seen[a] = true;
        }
        Ok(Allocation { division, assignment })
    }

    pub fn identity(division: Division) -> Self {
        let n = division.pieces_count();
        Allocation { division, assignment: (0..n).collect() }
    }

    /// Piece held by `agent`.
    pub fn piece_of(&self, agent: usize) -> usize {
        self.assignment.iter().position(|&a| a == agent).expect("permutation")
    }
}

/// Matrix `vals[i](piece p)` for all agents and pieces.
pub fn value_matrix<V: Valuation + ?Sized>(vals: &[&V], div: &Division) -> Result<Vec<Vec<Scalar>>> {
    let pieces = div.pieces();
    vals.iter().map(|v| pieces.iter().map(|(a, b)| v.eval(a, b)).collect()).collect()
}

/// Largest envy over all agent/piece pairs, floored at 0.
pub fn max_envy<V: Valuation + ?Sized>(vals: &[&V], alloc: &Allocation) -> Result<Scalar> {
    if vals.len() != alloc.division.pieces_count() {
        return domain(format!("{} valuations for {} pieces", vals.len(), alloc.division.pieces_count()));
    }
    let m = value_matrix(vals, &alloc.division)?;
    Ok(envy_of_matrix(&m, &alloc.assignment))
}

pub(crate) fn envy_of_matrix(m: &[Vec<Scalar>], assignment: &[usize]) -> Scalar {
    let mut worst = Scalar::zero();
    for (p, &i) in assignment.iter().enumerate() {
        let own = &m[i][p];
        for other in &m[i] {
            let e = other - own;
            if e > worst {
                worst = e;
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Default)]
pub struct GridFlags {
    pub monotone: bool,
    pub strongly_hungry: Option<Scalar>,
    pub lipschitz: Option<Scalar>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Property {
    Monotone,
    StronglyHungry,
    Lipschitz,
}

/// Grid pair `(j, k) -> (j2, k2)` violating `property`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub property: Property,
    pub from: (u64, u64),
    pub to: (u64, u64),
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub checked_pairs: u64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Exhaustive check of the requested properties on all grid-point pairs.
pub fn validate_grid_valuation(v: &GridValuation, flags: &GridFlags) -> ValidationReport {
    let g = v.g;
    let step = v.step();
    let mut rep = ValidationReport::default();
    let hungry = flags.strongly_hungry.as_ref().map(|e| e * &step);
    let lip = flags.lipschitz.as_ref().map(|l| l * &step);
    let pts: Vec<(u64, u64)> = (0..=g).flat_map(|j| (j..=g).map(move |k| (j, k))).collect();
    for &(j, k) in &pts {
        let base = v.at(j, k);
        if flags.monotone || hungry.is_some() {
            for j2 in 0..=j {
                for k2 in k..=g {
                    if (j2, k2) == (j, k) {
                        continue;
                    }
                    rep.checked_pairs += 1;
                    let wide = v.at(j2, k2);
                    if flags.monotone && wide < base {
                        rep.violations.push(Violation { property: Property::Monotone, from: (j, k), to: (j2, k2) });
                    }
                    if let Some(h) = &hungry {
                        let need = base + h.mul_int(((k2 - k) + (j - j2)) as i64);
                        if wide < &need {
                            rep.violations.push(Violation {
                                property: Property::StronglyHungry,
                                from: (j, k),
                                to: (j2, k2),
                            });
                        }
                    }
                }
            }
        }
        if let Some(l) = &lip {
            for &(j2, k2) in &pts {
                if (j2, k2) <= (j, k) {
                    continue;
                }
                rep.checked_pairs += 1;
                let d = (j.abs_diff(j2) + k.abs_diff(k2)) as i64;
                if (base - v.at(j2, k2)).abs() > l.mul_int(d) {
                    rep.violations.push(Violation { property: Property::Lipschitz, from: (j, k), to: (j2, k2) });
                }
            }
        }
    }
    rep
}
