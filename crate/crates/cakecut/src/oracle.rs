//! Exhaustive grid search for least-envy connected allocations.

use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{domain, CakeError, Result};
use crate::scalar::Scalar;
use crate::solver::next_permutation;
use crate::valuation::{grid_size, max_envy, Allocation, Division, Valuation};

/// Default cap on division-assignment evaluations.
pub const DEFAULT_BUDGET: u64 = 4_000_000_000;

/// Grid values `v(j/g, k/g)` as integer multiples of a shared unit.
pub trait UnitTable: Sync {
    fn cells(&self) -> u64;
    fn value(&self, j: u64, k: u64) -> i128;
}

/// Upper-triangular integer table.
#[derive(Debug, Clone)]
pub struct IntTable {
    g: u64,
    data: Vec<i128>,
}

fn tri_index(g: u64, j: u64, k: u64) -> usize {
    (j * (g + 1) - j * j.saturating_sub(1) / 2 + (k - j)) as usize
}

impl UnitTable for IntTable {
    fn cells(&self) -> u64 {
        self.g
    }
    fn value(&self, j: u64, k: u64) -> i128 {
        self.data[tri_index(self.g, j, k)]
    }
}

/// Tabulate every valuation on the grid of `g` cells over one common denominator.
/// Returns the tables and the unit `1/denominator`.
pub fn tabulate_units(vals: &[&dyn Valuation], g: u64) -> Result<(Vec<IntTable>, Scalar)> {
    let gi = g as i64;
    let raw: Vec<Vec<Scalar>> = vals
        .iter()
        .map(|v| {
            (0..=g)
                .into_par_iter()
                .map(|j| {
                    (j..=g)
                        .map(|k| v.eval(&Scalar::new(j as i64, gi), &Scalar::new(k as i64, gi)))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
                .map(|rows| rows.into_iter().flatten().collect())
        })
        .collect::<Result<_>>()?;
    let mut den = BigInt::one();
    for x in raw.iter().flatten() {
        if &den % x.denom() != BigInt::from(0) {
            den = den.lcm(x.denom());
        }
    }
    let limit: BigInt = BigInt::one() << 100;
    let tables = raw
        .iter()
        .map(|row| {
            let data = row
                .iter()
                .map(|x| {
                    let n = x.numer() * (&den / x.denom());
                    if n.magnitude() > limit.magnitude() {
                        return Err(CakeError::Resource("grid values do not fit an integer table".into()));
                    }
                    Ok(n.to_i128().expect("bounded"))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(IntTable { g, data })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((tables, Scalar::from_big(BigInt::one(), den)))
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct OracleResult {
    pub best: Allocation,
    pub best_envy: Scalar,
    pub grid_step: Scalar,
    pub evaluations: u64,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut all = vec![p.clone()];
    while next_permutation(&mut p) {
        all.push(p.clone());
    }
    all
}

fn binomial(n: u64, k: u64) -> u128 {
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn factorial(n: usize) -> u64 {
    (1..=n as u64).product()
}

/// Number of divisions into `pieces` pieces with cuts on a grid of `g` cells.
pub fn division_count(g: u64, pieces: usize) -> u128 {
    binomial(g + pieces as u64 - 1, pieces as u64 - 1)
}

fn piece_values(tables: &[&dyn UnitTable], ends: &[u64], out: &mut [[i128; 4]; 4]) {
    for (i, t) in tables.iter().enumerate() {
        for p in 0..ends.len() - 1 {
            out[i][p] = t.value(ends[p], ends[p + 1]);
        }
    }
}

/// For each table, the first index holding the same object.
fn aliases(tables: &[&dyn UnitTable]) -> Vec<usize> {
    let addr = |t: &&dyn UnitTable| *t as *const dyn UnitTable as *const ();
    (0..tables.len()).map(|i| (0..=i).find(|&j| addr(&tables[j]) == addr(&tables[i])).unwrap()).collect()
}

fn piece_values_shared(tables: &[&dyn UnitTable], alias: &[usize], ends: &[u64], out: &mut [[i128; 4]; 4]) {
    for (i, t) in tables.iter().enumerate() {
        if alias[i] != i {
            out[i] = out[alias[i]];
            continue;
        }
        for p in 0..ends.len() - 1 {
            out[i][p] = t.value(ends[p], ends[p + 1]);
        }
    }
}

/// Least envy over `perms` for value matrix `v`, ignoring permutations that cannot beat `bound`.
fn least_envy(v: &[[i128; 4]; 4], n: usize, perms: &[Vec<usize>], bound: i128) -> Option<(i128, usize)> {
    let mut rowmax = [0i128; 4];
    for i in 0..n {
        rowmax[i] = v[i][..n].iter().copied().max().unwrap();
    }
    let mut best: Option<(i128, usize)> = None;
    for (pi, perm) in perms.iter().enumerate() {
        let limit = best.map_or(bound, |b| b.0);
        let mut e = 0i128;
        for (p, &i) in perm.iter().enumerate() {
            e = e.max(rowmax[i] - v[i][p]);
            if e >= limit {
                break;
            }
        }
        if e < limit {
            best = Some((e, pi));
        }
    }
    best
}

/// Brute force over all step-grid divisions and all assignments.
pub fn brute_force(vals: &[&dyn Valuation], step: &Scalar) -> Result<OracleResult> {
    brute_force_with_budget(vals, step, DEFAULT_BUDGET)
}

pub fn brute_force_with_budget(vals: &[&dyn Valuation], step: &Scalar, budget: u64) -> Result<OracleResult> {
    let n = vals.len();
    if !(2..=4).contains(&n) {
        return domain(format!("the oracle handles 2 to 4 agents, got {n}"));
    }
    let g = grid_size(step)?;
    let evaluations = division_count(g, n) * factorial(n) as u128;
    if evaluations > budget as u128 {
        return Err(CakeError::Resource(format!(
            "{evaluations} division-assignment evaluations exceed the budget {budget}"
        )));
    }
    let (tables, unit) = tabulate_units(vals, g)?;
    let refs: Vec<&dyn UnitTable> = tables.iter().map(|t| t as &dyn UnitTable).collect();
    let (envy, cuts, perm) = search_units(&refs, n, g);
    let gi = g as i64;
    let division = Division::new(cuts.iter().map(|&c| Scalar::new(c as i64, gi)).collect())?;
    let best = Allocation::new(division, perm)?;
    let best_envy = max_envy(vals, &best)?;
    if best_envy != Scalar::from_big(BigInt::from(envy), BigInt::one()) * &unit {
        return Err(CakeError::InternalInvariantViolation("oracle table disagrees with exact envy".into()));
    }
    Ok(OracleResult { best, best_envy, grid_step: step.clone(), evaluations: evaluations as u64 })
}

type Candidate = (i128, Vec<u64>, Vec<usize>);

fn search_units(tables: &[&dyn UnitTable], n: usize, g: u64) -> Candidate {
    let perms = permutations(n);
    (0..=g)
        .into_par_iter()
        .filter_map(|c1| {
            let mut ends = vec![0u64; n + 1];
            ends[1] = c1;
            ends[n] = g;
            let mut v = [[0i128; 4]; 4];
            let mut best: Option<Candidate> = None;
            let mut visit = |ends: &[u64]| {
                piece_values(tables, ends, &mut v);
                let bound = best.as_ref().map_or(i128::MAX, |b| b.0);
                if let Some((e, pi)) = least_envy(&v, n, &perms, bound) {
                    best = Some((e, ends[1..n].to_vec(), perms[pi].clone()));
                }
            };
            match n {
                2 => visit(&ends),
                3 => {
                    for c2 in c1..=g {
                        ends[2] = c2;
                        visit(&ends);
                    }
                }
                _ => {
                    for c2 in c1..=g {
                        for c3 in c2..=g {
                            ends[2] = c2;
                            ends[3] = c3;
                            visit(&ends);
                        }
                    }
                }
            }
            best
        })
        .min()
        .expect("at least one division")
}

/// Bounds on the cuts `(l, m, r)` searched by [`constrained_search`].
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Constraints {
    pub l_range: (Scalar, Scalar),
    pub m_range: (Scalar, Scalar),
    /// Largest allowed `|1 - r - l|`.
    pub band: Scalar,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConstrainedResult {
    pub divisions: Vec<Division>,
    pub evaluations: u64,
}

/// All divisions with cuts on the step grid inside `c` that admit an `eps`-envy-free assignment.
pub fn constrained_search(
    vals: &[&dyn Valuation],
    eps: &Scalar,
    c: &Constraints,
    step: &Scalar,
    budget: u64,
) -> Result<ConstrainedResult> {
    if vals.len() != 4 {
        return domain("constrained search needs four agents");
    }
    let g = grid_size(step)?;
    let (tables, unit) = tabulate_units(vals, g)?;
    let refs: Vec<&dyn UnitTable> = tables.iter().map(|t| t as &dyn UnitTable).collect();
    constrained_search_units(&refs, &unit, eps, c, budget)
}

fn index_range(lo: &Scalar, hi: &Scalar, g: u64) -> Option<(u64, u64)> {
    let a = lo.ceil_mul(g).to_u64().unwrap_or(0);
    let b = hi.floor_mul(g).to_u64()?.min(g);
    (a <= b).then_some((a, b))
}

/// [`constrained_search`] on integer tables sharing `unit`.
pub fn constrained_search_units(
    tables: &[&dyn UnitTable],
    unit: &Scalar,
    eps: &Scalar,
    c: &Constraints,
    budget: u64,
) -> Result<ConstrainedResult> {
    if tables.len() != 4 {
        return domain("constrained search needs four agents");
    }
    for (lo, hi) in [&c.l_range, &c.m_range] {
        if !lo.in_unit() || !hi.in_unit() || lo > hi {
            return domain(format!("inconsistent range [{lo}, {hi}]"));
        }
    }
    if c.band.is_negative() {
        return domain("negative band width");
    }
    let g = tables[0].cells();
    if tables.iter().any(|t| t.cells() != g) {
        return domain("tables on different grids");
    }
    let eps_units = (eps / unit).floor().to_i128().unwrap_or(i128::MAX);
    let w = c.band.floor_mul(g).to_u64().unwrap_or(u64::MAX);
    let empty = ConstrainedResult { divisions: Vec::new(), evaluations: 0 };
    let (Some((l0, l1)), Some((m0, m1))) =
        (index_range(&c.l_range.0, &c.l_range.1, g), index_range(&c.m_range.0, &c.m_range.1, g))
    else {
        return Ok(empty);
    };
    let r_range = |j: u64, k: u64| {
        let lo = (g - j).saturating_sub(w).max(k);
        let hi = (g - j).saturating_add(w).min(g);
        (lo, hi)
    };
    let mut planned: u128 = 0;
    for j in l0..=l1 {
        for k in m0.max(j)..=m1 {
            let (lo, hi) = r_range(j, k);
            if lo <= hi {
                planned += (hi - lo + 1) as u128;
            }
        }
    }
    if planned > budget as u128 {
        return Err(CakeError::Resource(format!("{planned} divisions exceed the budget {budget}")));
    }
    let spent = AtomicU64::new(0);
    let gi = g as i64;
    let alias = aliases(tables);
    let found: Vec<Vec<(u64, u64, u64)>> = (l0..=l1)
        .into_par_iter()
        .map(|j| {
            let mut out = Vec::new();
            let mut local = 0u64;
            let mut v = [[0i128; 4]; 4];
            for k in m0.max(j)..=m1 {
                let (lo, hi) = r_range(j, k);
                for t in lo..=hi {
                    piece_values_shared(tables, &alias, &[0, j, k, t, g], &mut v);
                    let (ok, checked) = envy_free_exists(&v, eps_units);
                    local += checked.max(1);
                    if ok {
                        out.push((j, k, t));
                    }
                }
            }
            if spent.fetch_add(local, Ordering::Relaxed) + local > budget {
                return Err(CakeError::Resource(format!("evaluations exceed the budget {budget}")));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let divisions = found
        .into_iter()
        .flatten()
        .map(|(j, k, t)| {
            Division::three(Scalar::new(j as i64, gi), Scalar::new(k as i64, gi), Scalar::new(t as i64, gi))
        })
        .collect::<Result<_>>()?;
    Ok(ConstrainedResult { divisions, evaluations: spent.load(Ordering::Relaxed) })
}

/// Whether some assignment gives every agent a piece within `eps` of its best,
/// together with the number of complete assignments examined.
fn envy_free_exists(v: &[[i128; 4]; 4], eps: i128) -> (bool, u64) {
    let mut ok = [[false; 4]; 4];
    for i in 0..4 {
        let top = v[i].iter().copied().max().unwrap();
        for p in 0..4 {
            ok[i][p] = top - v[i][p] <= eps;
        }
    }
    for p in 0..4 {
        if !(0..4).any(|i| ok[i][p]) {
            return (false, 0);
        }
    }
    let mut checked = 0u64;
    let found = assign(&ok, 0, 0, &mut checked);
    (found, checked)
}

fn assign(ok: &[[bool; 4]; 4], p: usize, used: u8, checked: &mut u64) -> bool {
    if p == 4 {
        *checked += 1;
        return true;
    }
    (0..4).any(|i| used & (1 << i) == 0 && ok[i][p] && assign(ok, p + 1, used | (1 << i), checked))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::valuation::DensityValuation;

    #[test]
    fn uniform_four_agents() {
        let u = DensityValuation::uniform();
        let vals: Vec<&dyn Valuation> = vec![&u, &u, &u, &u];
        let r = brute_force(&vals, &rat(1, 8)).unwrap();
        assert_eq!(r.best_envy, Scalar::zero());
        assert_eq!(r.best.division.cuts, vec![rat(1, 4), rat(1, 2), rat(3, 4)]);
    }

    #[test]
    fn cut_and_choose() {
        let u = DensityValuation::uniform();
        let vals: Vec<&dyn Valuation> = vec![&u, &u];
        let r = brute_force(&vals, &rat(1, 16)).unwrap();
        assert_eq!(r.best_envy, Scalar::zero());
        assert_eq!(r.best.division.cuts, vec![rat(1, 2)]);
    }

    #[test]
    fn budget_and_arity() {
        let u = DensityValuation::uniform();
        let vals: Vec<&dyn Valuation> = vec![&u, &u, &u, &u];
        assert!(matches!(brute_force_with_budget(&vals, &rat(1, 64), 1000), Err(CakeError::Resource(_))));
        assert!(brute_force(&vals[..1], &rat(1, 4)).is_err());
    }

    #[test]
    fn constrained_uniform() {
        let u = DensityValuation::uniform();
        let vals: Vec<&dyn Valuation> = vec![&u, &u, &u, &u];
        let c = Constraints { l_range: (rat(0, 1), rat(1, 1)), m_range: (rat(0, 1), rat(1, 1)), band: rat(1, 1) };
        let r = constrained_search(&vals, &rat(0, 1), &c, &rat(1, 8), DEFAULT_BUDGET).unwrap();
        assert_eq!(r.divisions, vec![Division::three(rat(1, 4), rat(1, 2), rat(3, 4)).unwrap()]);
        let off = Constraints { l_range: (rat(1, 3), rat(1, 3)), m_range: (rat(0, 1), rat(1, 1)), band: rat(0, 1) };
        assert!(constrained_search(&vals, &rat(1, 8), &off, &rat(1, 8), DEFAULT_BUDGET).unwrap().divisions.is_empty());
    }
}
