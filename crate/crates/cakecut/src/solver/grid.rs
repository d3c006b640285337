//! Value-query mode: valuations are linear on a known grid, so every cut and
//! equation is solved exactly from finitely many value queries.

use std::sync::Arc;

use crate::error::{domain, CakeError, Result};
use crate::pl::{End, Equation, Term};
use crate::preprocess::preprocess_value;
use crate::query::{Mode, QuerySession};
use crate::scalar::Scalar;
use crate::valuation::{max_envy, Allocation, Division, SharedValuation, Valuation};

use super::probe::{Access, Probe};
use super::{best_assignment, condition_holds_at, supporters, InvariantWitness, SolveReport, TrailId, TrailKind};

fn at(x: &Scalar) -> End {
    End::At(x.clone())
}

fn var(k: usize) -> End {
    End::Var(k)
}

fn zero() -> End {
    End::At(Scalar::zero())
}

fn one() -> End {
    End::At(Scalar::one())
}

fn eq(terms: Vec<Term>) -> Equation {
    Equation::new(terms, Scalar::zero())
}

fn eq_at(terms: Vec<Term>, rhs: &Scalar) -> Equation {
    Equation::new(terms, rhs.clone())
}

/// Reflect a division computed in the mirrored frame.
pub(crate) fn reflect(d: Division) -> Division {
    Division { cuts: d.cuts.iter().rev().map(|c| Scalar::one() - c).collect() }
}

fn reflect_bracket((p, q): (Scalar, Scalar)) -> (Scalar, Scalar) {
    (Scalar::one() - q, Scalar::one() - p)
}

/// Run `f` in the reflected frame.
pub(crate) fn mirrored<T>(probe: &mut Probe, f: impl FnOnce(&mut Probe) -> Result<T>) -> Result<T> {
    let was = probe.is_mirrored();
    probe.set_mirrored(!was);
    let r = f(probe);
    probe.set_mirrored(was);
    r
}

fn ordered(l: Scalar, m: Scalar, r: Scalar) -> Option<Division> {
    (l <= m && m <= r).then(|| Division { cuts: vec![l, m, r] })
}

/// Division of the cake into `n <= 4` pieces of equal value for agent `i`.
pub(crate) fn grid_equipartition(p: &mut Probe, i: usize, n: usize) -> Result<Division> {
    match n {
        0 => domain("cannot divide into zero pieces"),
        1 => Ok(Division { cuts: vec![] }),
        2 => {
            let e = eq(vec![Term::new(1, i, zero(), var(0)), Term::new(-1, i, var(0), one())]);
            let x = p.root_1d(&Scalar::zero(), &Scalar::one(), &e)?;
            Ok(Division { cuts: vec![x] })
        }
        3 => {
            let lc = chained_cell(p, i, 1)?;
            let rc = reflect_bracket(mirrored(p, |p| chained_cell(p, i, 1))?);
            let eqs = [
                eq(vec![Term::new(1, i, zero(), var(0)), Term::new(-1, i, var(0), var(1))]),
                eq(vec![Term::new(1, i, var(0), var(1)), Term::new(-1, i, var(1), one())]),
            ];
            Ok(Division { cuts: p.solve_cells(&[lc, rc], &eqs)? })
        }
        4 => {
            let lc = chained_cell(p, i, 2)?;
            let rc = reflect_bracket(mirrored(p, |p| chained_cell(p, i, 2))?);
            let mc = p.grid_search(&Scalar::zero(), &Scalar::one(), |p, x| {
                let l = halve(p, i, &Scalar::zero(), x)?;
                let r = halve(p, i, x, &Scalar::one())?;
                Ok(p.prefix(i, &l)? >= p.value(i, &r, &Scalar::one())?)
            })?;
            let eqs = [
                eq(vec![Term::new(1, i, zero(), var(0)), Term::new(-1, i, var(0), var(1))]),
                eq(vec![Term::new(1, i, var(0), var(1)), Term::new(-1, i, var(1), var(2))]),
                eq(vec![Term::new(1, i, var(1), var(2)), Term::new(-1, i, var(2), one())]),
            ];
            Ok(Division { cuts: p.solve_cells(&[lc, mc, rc], &eqs)? })
        }
        _ => domain(format!("value-mode equipartition supports at most 4 pieces, got {n}")),
    }
}

/// Point splitting `[a, b]` into halves of equal value for agent `i`.
fn halve(p: &mut Probe, i: usize, a: &Scalar, b: &Scalar) -> Result<Scalar> {
    let e = eq(vec![Term::new(1, i, at(a), var(0)), Term::new(-1, i, var(0), at(b))]);
    p.root_1d(a, b, &e)
}

/// Cell of the first cut of an equipartition: from `x` take `extra` further pieces
/// worth `v_i(0, x)` and compare the remainder.
fn chained_cell(p: &mut Probe, i: usize, extra: usize) -> Result<(Scalar, Scalar)> {
    p.grid_search(&Scalar::zero(), &Scalar::one(), |p, x| {
        let alpha = p.prefix(i, x)?;
        let mut y = x.clone();
        for _ in 0..extra {
            match p.cut(i, &y, &alpha)? {
                Some(z) => y = z,
                None => return Ok(true),
            }
        }
        Ok(p.value(i, &y, &Scalar::one())? <= alpha)
    })
}

/// Division on trail `t` at level `alpha` in the current frame.
pub(crate) fn grid_trail_point(p: &mut Probe, t: TrailId, alpha: &Scalar) -> Result<Option<Division>> {
    if t.needs_mirror() {
        let d = mirrored(p, |p| grid_trail_point(p, t.mirrored(), alpha))?;
        return Ok(d.map(reflect));
    }
    let (o, z) = (Scalar::zero(), Scalar::one());
    macro_rules! get {
        ($e:expr) => {
            match $e? {
                Some(v) => v,
                None => return Ok(None),
            }
        };
    }
    let a = (t.i as usize).saturating_sub(1);
    match (t.kind, t.k, t.k2) {
        (TrailKind::A, 4, _) => {
            let l = get!(p.cut(0, &o, alpha));
            let m = get!(p.cut(0, &l, alpha));
            let r = get!(p.cut(0, &m, alpha));
            Ok(ordered(l, m, r))
        }
        (TrailKind::A, 3, _) => {
            let l = get!(p.cut(0, &o, alpha));
            let m = get!(p.cut(0, &l, alpha));
            let r = get!(p.rcut(0, &z, alpha));
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 3, 4) => {
            let l = get!(p.cut(0, &o, alpha));
            let m = get!(p.cut(0, &l, alpha));
            let e = eq(vec![Term::new(1, a, at(&m), var(0)), Term::new(-1, a, var(0), one())]);
            let r = p.root_1d(&m, &z, &e)?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 2, 3) => {
            let l = get!(p.cut(0, &o, alpha));
            let r = get!(p.rcut(0, &z, alpha));
            if l > r {
                return Ok(None);
            }
            let e = eq(vec![Term::new(1, a, at(&l), var(0)), Term::new(-1, a, var(0), at(&r))]);
            let m = p.root_1d(&l, &r, &e)?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 2, 4) => {
            let l = get!(p.cut(0, &o, alpha));
            let rmin = get!(p.cut(0, &l, alpha));
            let mmax = get!(p.rcut(0, &z, alpha));
            let rc = p.grid_search(&rmin, &z, |p, r| {
                let m = p.rcut(0, r, alpha)?.expect("cut inside the search range");
                Ok(p.value(a, &l, &m)? >= p.value(a, r, &z)?)
            })?;
            let mc = p.grid_search(&l, &mmax, |p, m| {
                let r = p.cut(0, m, alpha)?.expect("cut inside the search range");
                Ok(p.value(a, &l, m)? >= p.value(a, &r, &z)?)
            })?;
            let eqs = [
                eq_at(vec![Term::new(1, 0, var(0), var(1))], alpha),
                eq(vec![Term::new(1, a, at(&l), var(0)), Term::new(-1, a, var(1), one())]),
            ];
            let s = p.solve_cells(&[mc, rc], &eqs)?;
            Ok(ordered(l, s[0].clone(), s[1].clone()))
        }
        (TrailKind::B, 1, 4) => {
            let r1 = get!(p.rcut(0, &z, alpha));
            let lmax = get!(p.rcut(0, &r1, alpha));
            let l1 = get!(p.cut(0, &o, alpha));
            let rmin = get!(p.cut(0, &l1, alpha));
            let lc = p.grid_search(&o, &lmax, |p, l| {
                let m = p.cut(0, l, alpha)?.expect("cut inside the search range");
                let r = p.cut(0, &m, alpha)?.expect("cut inside the search range");
                Ok(p.prefix(a, l)? >= p.value(a, &r, &z)?)
            })?;
            let rc = p.grid_search(&rmin, &z, |p, r| {
                let m = p.rcut(0, r, alpha)?.expect("cut inside the search range");
                let l = p.rcut(0, &m, alpha)?.expect("cut inside the search range");
                Ok(p.prefix(a, &l)? >= p.value(a, r, &z)?)
            })?;
            let mc = p.grid_search(&l1, &r1, |p, m| {
                let l = p.rcut(0, m, alpha)?.expect("cut inside the search range");
                let r = p.cut(0, m, alpha)?.expect("cut inside the search range");
                Ok(p.prefix(a, &l)? >= p.value(a, &r, &z)?)
            })?;
            let eqs = [
                eq_at(vec![Term::new(1, 0, var(0), var(1))], alpha),
                eq_at(vec![Term::new(1, 0, var(1), var(2))], alpha),
                eq(vec![Term::new(1, a, zero(), var(0)), Term::new(-1, a, var(2), one())]),
            ];
            let s = p.solve_cells(&[lc, mc, rc], &eqs)?;
            Ok(ordered(s[0].clone(), s[1].clone(), s[2].clone()))
        }
        _ => Err(CakeError::InternalInvariantViolation(format!("trail {t} has no direct form"))),
    }
}

fn preprocessed(vals: &[SharedValuation], eps: &Scalar) -> Result<(Vec<SharedValuation>, u64)> {
    let g = (Scalar::from_int(12) / eps).ceil_mul(1);
    let g: u64 = g.try_into().map_err(|_| CakeError::Resource(format!("grid too fine for epsilon {eps}")))?;
    let step = Scalar::new(1, g as i64);
    let pre = vals
        .iter()
        .map(|v| preprocess_value(v.clone(), &step).map(|x| Arc::new(x) as SharedValuation))
        .collect::<Result<Vec<_>>>()?;
    Ok((pre, g))
}

fn check_eps(eps: &Scalar) -> Result<()> {
    if !eps.is_positive() || eps > &Scalar::one() {
        return domain(format!("epsilon {eps} outside (0, 1]"));
    }
    Ok(())
}

fn envy_under(vals: &[SharedValuation], alloc: &Allocation) -> Result<Scalar> {
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
    max_envy(&refs, alloc)
}

/// ε-envy-free connected allocation for two agents: agent 1 halves its preprocessed
/// valuation and agent 2 picks the piece it prefers.
pub fn solve2(vals: &[SharedValuation], eps: &Scalar, trace: bool) -> Result<SolveReport> {
    check_eps(eps)?;
    if vals.len() != 2 {
        return domain(format!("solve2 needs 2 agents, got {}", vals.len()));
    }
    let (pre, g) = preprocessed(&vals[..1], eps)?;
    let mut session = QuerySession::new(vec![pre[0].clone(), vals[1].clone()], Mode::ValueOnly);
    if trace {
        session = session.with_trace();
    }
    let alloc = {
        let mut p = Probe::new(&mut session, Access::Grid(g))?;
        let d = grid_equipartition(&mut p, 0, 2)?;
        let x = d.cuts[0].clone();
        let left = p.value(1, &Scalar::zero(), &x)?;
        let right = p.value(1, &x, &Scalar::one())?;
        let assignment = if left >= right { vec![1, 0] } else { vec![0, 1] };
        Allocation { division: d, assignment }
    };
    let max_envy = envy_under(vals, &alloc)?;
    Ok(SolveReport {
        allocation: alloc,
        max_envy,
        queries: session.counts().clone(),
        witness: None,
        bracket: None,
        iterations: 0,
        trace: session.trace().map(|t| t.to_vec()),
        base_queries: None,
    })
}

/// ε-envy-free connected allocation for four agents using value queries only.
pub fn solve4(vals: &[SharedValuation], eps: &Scalar, trace: bool) -> Result<SolveReport> {
    check_eps(eps)?;
    if vals.len() != 4 {
        return domain(format!("solve4 needs 4 agents, got {}", vals.len()));
    }
    let (pre, g) = preprocessed(vals, eps)?;
    let eps_p = Scalar::new(1, g as i64);
    let mut session = QuerySession::new(pre, Mode::ValueOnly);
    if trace {
        session = session.with_trace();
    }
    let (alloc, witness, bracket, iterations) = {
        let mut p = Probe::new(&mut session, Access::Grid(g))?;
        let eq4 = grid_equipartition(&mut p, 0, 4)?;
        let m = p.value_matrix(&eq4)?;
        let (perm, e) = best_assignment(&m);
        if e.is_zero() {
            (Allocation { division: eq4, assignment: perm }, None, None, 0)
        } else {
            let alpha4 = m[0][0].clone();
            let width = (&eps_p * &eps_p * &eps_p * &eps_p).div_int(12);
            let mut lo = alpha4;
            let mut hi = Scalar::one();
            let mut w_lo: Option<InvariantWitness> = None;
            let mut iterations = 0;
            while &hi - &lo > width {
                iterations += 1;
                let mid = (&lo + &hi).div_int(2);
                match condition_holds_at(&mut p, &mid)? {
                    Some(w) => {
                        lo = mid;
                        w_lo = Some(w);
                    }
                    None => hi = mid,
                }
            }
            let w = match w_lo {
                Some(w) => w,
                None => condition_holds_at(&mut p, &lo)?.ok_or_else(|| {
                    CakeError::InternalInvariantViolation(format!("no trail satisfies the invariant at {lo}"))
                })?,
            };
            let m = p.value_matrix(&w.division)?;
            let (perm, _) = best_assignment(&m);
            (Allocation { division: w.division.clone(), assignment: perm }, Some(w), Some((lo, hi)), iterations)
        }
    };
    let max_envy = envy_under(vals, &alloc)?;
    Ok(SolveReport {
        allocation: alloc,
        max_envy,
        queries: session.counts().clone(),
        witness,
        bracket,
        iterations,
        trace: session.trace().map(|t| t.to_vec()),
        base_queries: None,
    })
}

pub(crate) fn witness_for(t: TrailId, alpha: &Scalar, division: Division, m: &[Vec<Scalar>]) -> InvariantWitness {
    InvariantWitness { trail: t, alpha: alpha.clone(), division, supporting: supporters(m) }
}
