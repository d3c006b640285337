//! Robertson–Webb mode: valuations are flattened between quantiles, so every trail
//! is piecewise linear with breakpoints at quantiles and can be confined by binary
//! search over quantile indices.

use std::sync::Arc;

use crate::error::{domain, CakeError, Result};
use crate::preprocess::{rw_flatten, FlattenedValuation};
use crate::query::{Mode, QueryCounts, QuerySession};
use crate::scalar::Scalar;
use crate::valuation::{max_envy, Allocation, DensityValuation, Division, SharedValuation, Valuation};

use super::grid::{mirrored, reflect};
use super::probe::{Access, Probe};
use super::{best_assignment, condition_holds_at, next_permutation, SolveReport, TrailId, TrailKind};

type Fun<'a> = &'a mut dyn FnMut(&mut Probe<'_>, &Scalar) -> Result<Scalar>;

pub(crate) fn rw_equipartition(p: &mut Probe, i: usize, n: usize) -> Result<Division> {
    if n == 0 {
        return domain("cannot divide into zero pieces");
    }
    let cuts = (1..n).map(|j| p.inverse(i, &Scalar::new(j as i64, n as i64))).collect::<Result<Vec<_>>>()?;
    Ok(Division { cuts })
}

/// Shrink `[t1, t2]`, keeping `s(t1) <= 0 <= s(t2)`, until the monotone curve `c`
/// stays between two consecutive quantiles of every agent in `agents`.
/// `cinv(x)` must return the parameter at which `c` passes through `x`.
fn refine(
    p: &mut Probe,
    agents: &[usize],
    mut t1: Scalar,
    mut t2: Scalar,
    c: Fun,
    cinv: Fun,
    s: Fun,
) -> Result<(Scalar, Scalar)> {
    let m = p.quantile_count();
    for &q in agents {
        let c1 = c(p, &t1)?;
        let c2 = c(p, &t2)?;
        if c1 == c2 {
            continue;
        }
        let inc = c1 < c2;
        let level = |p: &mut Probe, x: &Scalar| -> Result<Scalar> { p.prefix(q, x) };
        let (xlo, xhi) = if inc { (&c1, &c2) } else { (&c2, &c1) };
        let flo = level(p, xlo)?;
        let fhi = level(p, xhi)?;
        let mut jl = (flo.floor_mul(m) + 1u32).try_into().unwrap_or(u64::MAX).min(m);
        let mut jh: u64 = fhi.ceil_mul(m).try_into().unwrap_or(0u64).max(1);
        while jl < jh {
            let j = jl + (jh - jl) / 2;
            let xj = p.quantile(q, j)?;
            let t = cinv(p, &xj)?;
            debug_assert!(t1 <= t && t <= t2, "refined parameter left its bracket");
            let upper = !s(p, &t)?.is_negative();
            if upper {
                t2 = t;
            } else {
                t1 = t;
            }
            if upper == inc {
                jh = j;
            } else {
                jl = j + 1;
            }
        }
    }
    Ok((t1, t2))
}

/// Root of `s`, affine on `[t1, t2]`, with `s(t1) <= 0 <= s(t2)`.
fn linear_root(p: &mut Probe, t1: &Scalar, t2: &Scalar, s: Fun) -> Result<Scalar> {
    let s1 = s(p, t1)?;
    let s2 = s(p, t2)?;
    if s1.is_zero() || s1 == s2 {
        return Ok(t1.clone());
    }
    let t = t1 + (t2 - t1) * (-&s1) / (&s2 - &s1);
    let st = s(p, &t)?;
    if !st.is_zero() {
        return Err(CakeError::InternalInvariantViolation(format!("residual {st} after linear solve")));
    }
    Ok(t)
}

/// Inverse of the increasing map `t -> c(t)` assuming it is affine between the given samples.
fn affine_inverse(t1: &Scalar, t2: &Scalar, y1: &Scalar, y2: &Scalar, y: &Scalar) -> Scalar {
    t1 + (y - y1) * (t2 - t1) / (y2 - y1)
}

pub(crate) fn rw_trail_point(p: &mut Probe, t: TrailId, alpha: &Scalar) -> Result<Option<Division>> {
    if t.needs_mirror() {
        let d = mirrored(p, |p| direct_trail(p, t.mirrored(), alpha))?;
        return Ok(d.map(|c| reflect(Division { cuts: c.to_vec() })));
    }
    Ok(direct_trail(p, t, alpha)?.map(|c| Division { cuts: c.to_vec() }))
}

fn ordered(l: Scalar, m: Scalar, r: Scalar) -> Option<[Scalar; 3]> {
    (l <= m && m <= r).then_some([l, m, r])
}

/// Trail cuts in the current frame for a trail without mirroring.
fn direct_trail(p: &mut Probe, t: TrailId, alpha: &Scalar) -> Result<Option<[Scalar; 3]>> {
    let one = Scalar::one();
    let a = (t.i as usize).saturating_sub(1);
    let two_a = alpha.mul_int(2);
    match (t.kind, t.k, t.k2) {
        (TrailKind::A, 4, _) => {
            if alpha.mul_int(3) > one {
                return Ok(None);
            }
            let l = p.inverse(0, alpha)?;
            let m = p.inverse(0, &two_a)?;
            let r = p.inverse(0, &alpha.mul_int(3))?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::A, 3, _) => {
            if alpha.mul_int(3) > one {
                return Ok(None);
            }
            let l = p.inverse(0, alpha)?;
            let m = p.inverse(0, &two_a)?;
            let r = p.inverse(0, &(&one - alpha))?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 3, 4) => {
            if two_a > one {
                return Ok(None);
            }
            let l = p.inverse(0, alpha)?;
            let m = p.inverse(0, &two_a)?;
            let gm = p.prefix(a, &m)?;
            let r = p.inverse(a, &(gm + &one).div_int(2))?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 2, 3) => {
            if two_a > one {
                return Ok(None);
            }
            let l = p.inverse(0, alpha)?;
            let r = p.inverse(0, &(&one - alpha))?;
            let gl = p.prefix(a, &l)?;
            let gr = p.prefix(a, &r)?;
            let m = p.inverse(a, &(gl + gr).div_int(2))?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 2, 4) => {
            if two_a > one {
                return Ok(None);
            }
            let l = p.inverse(0, alpha)?;
            let gl = p.prefix(a, &l)?;
            let beta = &one - &gl;
            let m_of = |p: &mut Probe<'_>, t: &Scalar| p.inverse(a, &(&gl + t));
            let r_of = |p: &mut Probe<'_>, t: &Scalar| p.inverse(a, &(Scalar::one() - t));
            let mut s = |p: &mut Probe<'_>, t: &Scalar| -> Result<Scalar> {
                let m = m_of(p, t)?;
                let r = r_of(p, t)?;
                Ok(alpha - (p.prefix(0, &r)? - p.prefix(0, &m)?))
            };
            let (mut t1, mut t2) = (Scalar::zero(), beta.div_int(2));
            let gl2 = gl.clone();
            (t1, t2) =
                refine(p, &[0, a], t1, t2, &mut |p, t| m_of(p, t), &mut |p, x| Ok(p.prefix(a, x)? - &gl2), &mut s)?;
            (t1, t2) = refine(
                p,
                &[0, a],
                t1,
                t2,
                &mut |p, t| r_of(p, t),
                &mut |p, x| Ok(Scalar::one() - p.prefix(a, x)?),
                &mut s,
            )?;
            let ts = linear_root(p, &t1, &t2, &mut s)?;
            let m = m_of(p, &ts)?;
            let r = r_of(p, &ts)?;
            Ok(ordered(l, m, r))
        }
        (TrailKind::B, 1, 4) => {
            if two_a > one {
                return Ok(None);
            }
            let l_of = |p: &mut Probe<'_>, t: &Scalar| p.inverse(a, t);
            let r_of = |p: &mut Probe<'_>, t: &Scalar| p.inverse(a, &(Scalar::one() - t));
            let mut s = |p: &mut Probe<'_>, t: &Scalar| -> Result<Scalar> {
                let l = l_of(p, t)?;
                let r = r_of(p, t)?;
                Ok(&two_a - (p.prefix(0, &r)? - p.prefix(0, &l)?))
            };
            let (mut t1, mut t2) = (Scalar::zero(), Scalar::half());
            (t1, t2) = refine(p, &[0, a], t1, t2, &mut |p, t| l_of(p, t), &mut |p, x| p.prefix(a, x), &mut s)?;
            (t1, t2) = refine(
                p,
                &[0, a],
                t1,
                t2,
                &mut |p, t| r_of(p, t),
                &mut |p, x| Ok(Scalar::one() - p.prefix(a, x)?),
                &mut s,
            )?;
            let ts = linear_root(p, &t1, &t2, &mut s)?;
            let l = l_of(p, &ts)?;
            let r = r_of(p, &ts)?;
            let fl = p.prefix(0, &l)?;
            let m = p.inverse(0, &(fl + alpha))?;
            Ok(ordered(l, m, r))
        }
        _ => Err(CakeError::InternalInvariantViolation(format!("trail {t} has no direct form"))),
    }
}

/// Cut `w` of trail `t` (current frame, no mirroring) as a function of `alpha`.
fn trail_cut(p: &mut Probe, t: TrailId, w: usize, alpha: &Scalar) -> Result<Scalar> {
    direct_trail(p, t, alpha)?
        .map(|c| c[w].clone())
        .ok_or_else(|| CakeError::InternalInvariantViolation(format!("trail {t} undefined at {alpha}")))
}

/// Confinement order of the cuts: cuts defined through the others come last.
fn cut_order(t: TrailId) -> [usize; 3] {
    match (t.kind, t.k, t.k2) {
        (TrailKind::B, 2, 3) | (TrailKind::B, 2, 4) | (TrailKind::B, 1, 4) => [0, 2, 1],
        _ => [0, 1, 2],
    }
}

/// Parameter `alpha` at which cut `w` of trail `t` passes through `x`, for `alpha` in
/// the bracket `[a1, a2]` on which the previously confined cuts are linear.
fn cut_inverse(p: &mut Probe, t: TrailId, w: usize, x: &Scalar, a1: &Scalar, a2: &Scalar) -> Result<Scalar> {
    let one = Scalar::one();
    let a = (t.i as usize).saturating_sub(1);
    let fx = p.prefix(0, x)?;
    let affine = |p: &mut Probe, agent: usize| -> Result<Scalar> {
        let c1 = trail_cut(p, t, w, a1)?;
        let c2 = trail_cut(p, t, w, a2)?;
        let y1 = p.prefix(agent, &c1)?;
        let y2 = p.prefix(agent, &c2)?;
        let y = p.prefix(agent, x)?;
        Ok(affine_inverse(a1, a2, &y1, &y2, &y))
    };
    match (t.kind, t.k, t.k2, w) {
        (TrailKind::B, 1, 4, 0) => {
            let t0 = p.prefix(a, x)?;
            let r = p.inverse(a, &(&one - t0))?;
            Ok((p.prefix(0, &r)? - fx).div_int(2))
        }
        (TrailKind::B, 1, 4, 2) => {
            let t0 = &one - p.prefix(a, x)?;
            let l = p.inverse(a, &t0)?;
            Ok((fx - p.prefix(0, &l)?).div_int(2))
        }
        (_, _, _, 0) => Ok(fx),
        (TrailKind::A, _, _, 1) | (TrailKind::B, 3, 4, 1) => Ok(fx.div_int(2)),
        (TrailKind::A, 4, _, 2) => Ok(fx.div_int(3)),
        (TrailKind::A, 3, _, 2) | (TrailKind::B, 2, 3, 2) => Ok(&one - fx),
        (TrailKind::B, 3, 4, 2) => {
            let gm = p.prefix(a, x)?.mul_int(2) - &one;
            let m = p.inverse(a, &gm)?;
            Ok(p.prefix(0, &m)?.div_int(2))
        }
        (TrailKind::B, 2, 3, 1) => affine(p, a),
        (TrailKind::B, 2, 4, 2) => {
            let gr = p.prefix(a, x)?;
            let beta = &one - &gr;
            let lmax = p.inverse(a, &(gr.mul_int(2) - &one))?;
            let umax = p.prefix(0, &lmax)?;
            let m_of = |p: &mut Probe<'_>, u: &Scalar| -> Result<Scalar> {
                let l = p.inverse(0, u)?;
                let gl = p.prefix(a, &l)?;
                p.inverse(a, &(gl + &beta))
            };
            let mut s = |p: &mut Probe<'_>, u: &Scalar| -> Result<Scalar> {
                let m = m_of(p, u)?;
                Ok(u - (&fx - p.prefix(0, &m)?))
            };
            let (mut u1, mut u2) = (Scalar::zero(), umax);
            (u1, u2) = refine(p, &[0, a], u1, u2, &mut |p, u| p.inverse(0, u), &mut |p, y| p.prefix(0, y), &mut s)?;
            (u1, u2) = refine(
                p,
                &[0, a],
                u1,
                u2,
                &mut |p, u| m_of(p, u),
                &mut |p, y| {
                    let gy = p.prefix(a, y)?;
                    let l = p.inverse(a, &(gy - &beta))?;
                    p.prefix(0, &l)
                },
                &mut s,
            )?;
            linear_root(p, &u1, &u2, &mut s)
        }
        (TrailKind::B, 2, 4, 1) | (TrailKind::B, 1, 4, 1) => affine(p, 0),
        _ => Err(CakeError::InternalInvariantViolation(format!("no inverse for cut {w} of trail {t}"))),
    }
}

fn invariant_sign(p: &mut Probe, alpha: &Scalar) -> Result<Scalar> {
    Ok(if condition_holds_at(p, alpha)?.is_some() { Scalar::from_int(-1) } else { Scalar::one() })
}

fn confine(p: &mut Probe, t: TrailId, a1: Scalar, a2: Scalar) -> Result<(Scalar, Scalar)> {
    let (mut a1, mut a2) = (a1, a2);
    for w in cut_order(t) {
        let (b1, b2) = (a1.clone(), a2.clone());
        (a1, a2) = refine(
            p,
            &[0, 1, 2, 3],
            a1,
            a2,
            &mut |p, al| trail_cut(p, t, w, al),
            &mut |p, x| cut_inverse(p, t, w, x, &b1, &b2),
            &mut |p, al| invariant_sign(p, al),
        )?;
    }
    Ok((a1, a2))
}

/// Exactly envy-free division on trail `t` for `alpha` in `[a1, a2]`, where every cut is
/// linear in `alpha`; returns the smallest such `alpha` for the first feasible assignment.
fn envy_free_on(p: &mut Probe, t: TrailId, a1: &Scalar, a2: &Scalar) -> Result<Option<Allocation>> {
    let single = a1 == a2 || (t.kind == TrailKind::A && a2 > &Scalar::new(1, 3));
    let Some(d0) = super::trail_point(p, t, a1)? else { return Ok(None) };
    let m0 = p.value_matrix(&d0)?;
    if single {
        let (perm, e) = best_assignment(&m0);
        return Ok(e.is_zero().then_some(Allocation { division: d0, assignment: perm }));
    }
    let Some(d1) = super::trail_point(p, t, a2)? else { return Ok(None) };
    let m1 = p.value_matrix(&d1)?;
    let n = m0.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best: Option<(Scalar, Vec<usize>)> = None;
    loop {
        let (mut lo, mut hi) = (Scalar::zero(), Scalar::one());
        let mut feasible = true;
        'outer: for (piece, &j) in perm.iter().enumerate() {
            for q in 0..n {
                let c0 = &m0[j][piece] - &m0[j][q];
                let c1 = (&m1[j][piece] - &m1[j][q]) - &c0;
                if c1.is_zero() {
                    if c0.is_negative() {
                        feasible = false;
                        break 'outer;
                    }
                } else {
                    let b = -&c0 / &c1;
                    if c1.is_positive() {
                        lo = Scalar::max_of(&lo, &b);
                    } else {
                        hi = Scalar::min_of(&hi, &b);
                    }
                }
            }
        }
        if feasible && lo <= hi && best.as_ref().is_none_or(|(l, _)| &lo < l) {
            best = Some((lo, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let Some((lam, perm)) = best else { return Ok(None) };
    let cuts = d0.cuts.iter().zip(&d1.cuts).map(|(x0, x1)| x0 + (x1 - x0) * &lam).collect();
    let d = Division { cuts };
    let m = p.value_matrix(&d)?;
    if !super::envy_of_matrix(&m, &perm).is_zero() {
        return Err(CakeError::InternalInvariantViolation(format!("trail {t} is not linear on its bracket")));
    }
    Ok(Some(Allocation { division: d, assignment: perm }))
}

/// ε-envy-free connected allocation for four agents with additive valuations using
/// Robertson–Webb queries.
pub fn solve4_rw(vals: &[Arc<DensityValuation>], eps: &Scalar, trace: bool) -> Result<SolveReport> {
    if !eps.is_positive() || eps > &Scalar::one() {
        return domain(format!("epsilon {eps} outside (0, 1]"));
    }
    if vals.len() != 4 {
        return domain(format!("solve4_rw needs 4 agents, got {}", vals.len()));
    }
    let m: u64 = (Scalar::from_int(4) / eps)
        .ceil_mul(1)
        .try_into()
        .map_err(|_| CakeError::Resource(format!("too many quantiles for epsilon {eps}")))?;
    let flat: Vec<Arc<FlattenedValuation>> =
        vals.iter().map(|v| rw_flatten(v.clone(), m).map(Arc::new)).collect::<Result<_>>()?;
    let shared: Vec<SharedValuation> = flat.iter().map(|f| f.clone() as SharedValuation).collect();
    let mut session = QuerySession::new(shared, Mode::RobertsonWebb);
    if trace {
        session = session.with_trace();
    }
    let (alloc, witness, bracket, iterations) = {
        let mut p = Probe::new(&mut session, Access::Quantiles(m))?;
        let eq4 = rw_equipartition(&mut p, 0, 4)?;
        let mat = p.value_matrix(&eq4)?;
        let (perm, e) = best_assignment(&mat);
        if e.is_zero() {
            (Allocation { division: eq4, assignment: perm }, None, None, 0)
        } else {
            let (mut a1, mut a2) = (Scalar::new(1, 4), Scalar::half());
            let third = Scalar::new(1, 3);
            if condition_holds_at(&mut p, &third)?.is_some() {
                a1 = third.clone();
            } else {
                a2 = third.clone();
            }
            let mut iterations = 1;
            for t in TrailId::all() {
                if t.kind == TrailKind::A && a2 > third {
                    continue;
                }
                let before = (a1.clone(), a2.clone());
                (a1, a2) = if t.needs_mirror() {
                    let (b1, b2) = (a1.clone(), a2.clone());
                    mirrored(&mut p, |p| confine(p, t.mirrored(), b1, b2))?
                } else {
                    confine(&mut p, t, a1, a2)?
                };
                if (a1.clone(), a2.clone()) != before {
                    iterations += 1;
                }
            }
            let mut found = None;
            for t in TrailId::all() {
                if let Some(al) = envy_free_on(&mut p, t, &a1, &a2)? {
                    found = Some(al);
                    break;
                }
            }
            let alloc = found.ok_or_else(|| {
                CakeError::InternalInvariantViolation(format!("no envy-free division on [{a1}, {a2}]"))
            })?;
            let w = condition_holds_at(&mut p, &a1)?;
            (alloc, w, Some((a1, a2)), iterations)
        }
    };
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref() as &dyn Valuation).collect();
    let max_envy = max_envy(&refs, &alloc)?;
    let mut base = QueryCounts { value: vec![], cut: vec![] };
    for f in &flat {
        let (v, c) = f.base_queries();
        base.value.push(v);
        base.cut.push(c);
    }
    Ok(SolveReport {
        allocation: alloc,
        max_envy,
        queries: session.counts().clone(),
        witness,
        bracket,
        iterations,
        trace: session.trace().map(|t| t.to_vec()),
        base_queries: Some(base),
    })
}
