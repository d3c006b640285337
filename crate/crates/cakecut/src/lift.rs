//! Reduction from `n` agents to `n + 1` agents and the matching allocation pull-back.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{domain, CakeError, Result};
use crate::scalar::Scalar;
use crate::solver::{solve4, SolveReport};
use crate::valuation::{max_envy, Allocation, Division, SharedValuation, Valuation};

/// `0` on `[0, 1/3]`, then `6 (t - 1/3)` up to `1/2`.
pub fn phi(t: &Scalar) -> Result<Scalar> {
    if t.is_negative() || t > &Scalar::half() {
        return domain(format!("phi is defined on [0, 1/2], got {t}"));
    }
    let third = Scalar::new(1, 3);
    if t <= &third {
        return Ok(Scalar::zero());
    }
    Ok(Scalar::from_int(6) * (t - third))
}

fn right_overlap(a: &Scalar, b: &Scalar) -> Scalar {
    let lo = Scalar::max_of(a, &Scalar::half());
    if b > &lo {
        b - lo
    } else {
        Scalar::zero()
    }
}

/// One lifted valuation. `base = None` is the extra agent who only values `[1/2, 1]`.
#[derive(Debug, Clone)]
pub struct LiftedValuation {
    base: Option<SharedValuation>,
    scale: Scalar,
}

impl Valuation for LiftedValuation {
    fn eval(&self, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        if !a.in_unit() || !b.in_unit() {
            return domain(format!("interval [{a}, {b}] outside [0,1]"));
        }
        if b <= a {
            return Ok(Scalar::zero());
        }
        let mut v = Scalar::new(2, 3) * phi(&right_overlap(a, b))?;
        if let Some(base) = &self.base {
            let one = Scalar::one();
            let x = Scalar::min_of(&a.mul_int(2), &one);
            let y = Scalar::min_of(&b.mul_int(2), &one);
            v = v + base.eval(&x, &y)? / Scalar::from_int(3);
        }
        Ok(v * &self.scale)
    }
}

#[derive(Debug, Clone)]
pub struct LiftedInstance {
    pub base: Vec<SharedValuation>,
    pub lifted: Vec<SharedValuation>,
    /// Factor applied to every lifted valuation (`1` or `1/5`).
    pub scale: Scalar,
    /// Whether all agents share one valuation.
    pub identical: bool,
}

/// Lift `n` valuations to `n + 1`. With `normalize`, lifted values are divided by 5 so the
/// instance is 1-Lipschitz again. When every base valuation is the same object, the extra agent
/// shares it too.
pub fn lift_valuations(base: &[SharedValuation], normalize: bool) -> Result<LiftedInstance> {
    if base.is_empty() {
        return domain("lifting needs at least one agent");
    }
    let scale = if normalize { Scalar::new(1, 5) } else { Scalar::one() };
    let identical = base.iter().all(|v| Arc::ptr_eq(v, &base[0]));
    let mut lifted: Vec<SharedValuation> = base
        .iter()
        .map(|v| Arc::new(LiftedValuation { base: Some(v.clone()), scale: scale.clone() }) as SharedValuation)
        .collect();
    if identical {
        let shared = lifted[0].clone();
        lifted = vec![shared; base.len() + 1];
    } else {
        lifted.push(Arc::new(LiftedValuation { base: None, scale: scale.clone() }));
    }
    Ok(LiftedInstance { base: base.to_vec(), lifted, scale, identical })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct PullBack {
    pub allocation: Allocation,
    pub swapped: bool,
    /// Envy bound proved for the base instance.
    pub bound: Scalar,
    pub max_envy: Scalar,
}

/// Map an `eps`-envy-free allocation of `inst.lifted` back to the base agents.
pub fn pull_back(alloc: &Allocation, inst: &LiftedInstance, eps: &Scalar) -> Result<PullBack> {
    let n = inst.base.len();
    let div = &alloc.division;
    if div.pieces_count() != n + 1 || alloc.assignment.len() != n + 1 {
        return domain(format!("expected an allocation for {} agents", n + 1));
    }
    let raw_eps = eps / &inst.scale;
    let mut assignment = alloc.assignment.clone();
    let extra = n;
    let last = n;
    let holder = assignment[last];
    let mut swapped = false;
    if holder != extra {
        if !inst.identical {
            let (c, _) = div.piece(last);
            let p = phi(&right_overlap(&c, &Scalar::one()))?;
            if p > Scalar::new(3, 2) * &raw_eps {
                return Err(CakeError::ContractViolation(
                    "the extra agent envies the rightmost piece beyond epsilon".into(),
                ));
            }
            swapped = true;
        }
        let q = alloc.piece_of(extra);
        assignment.swap(q, last);
    }
    let (start, _) = div.piece(last);
    if start < Scalar::half() {
        return Err(CakeError::ContractViolation(format!("the extra agent's piece starts at {start}, left of 1/2")));
    }
    let one = Scalar::one();
    let cuts = div.cuts[..n - 1].iter().map(|x| Scalar::min_of(&x.mul_int(2), &one)).collect();
    let allocation = Allocation::new(Division::new(cuts)?, assignment[..n].to_vec())?;
    let refs: Vec<&dyn Valuation> = inst.base.iter().map(|v| v.as_ref()).collect();
    let envy = max_envy(&refs, &allocation)?;
    let factor = if swapped { 12 } else { 6 };
    let bound = raw_eps.mul_int(factor);
    if envy > bound {
        return Err(CakeError::ContractViolation(format!("pulled-back envy {envy} exceeds {bound}")));
    }
    Ok(PullBack { allocation, swapped, bound, max_envy: envy })
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct Solve3Report {
    pub allocation: Allocation,
    pub max_envy: Scalar,
    pub lifted: SolveReport,
    pub swapped: bool,
}

/// Three agents through the four-agent solver on the normalized lift.
pub fn solve3(vals: &[SharedValuation], eps: &Scalar, trace: bool) -> Result<Solve3Report> {
    if vals.len() != 3 {
        return domain(format!("solve3 needs 3 agents, got {}", vals.len()));
    }
    if !eps.is_positive() || eps > &Scalar::one() {
        return domain(format!("epsilon {eps} outside (0, 1]"));
    }
    let inst = lift_valuations(vals, true)?;
    let inner = eps / Scalar::from_int(30);
    let lifted = solve4(&inst.lifted, &inner, trace)?;
    let pb = pull_back(&lifted.allocation, &inst, &lifted.max_envy.clone().max(inner))?;
    if pb.max_envy > *eps {
        return Err(CakeError::InternalInvariantViolation(format!("solve3 envy {} exceeds {eps}", pb.max_envy)));
    }
    Ok(Solve3Report { allocation: pb.allocation, max_envy: pb.max_envy, lifted, swapped: pb.swapped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;
    use crate::valuation::DensityValuation;

    fn uniform() -> SharedValuation {
        Arc::new(DensityValuation::uniform())
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&rat(1, 5)).unwrap(), rat(0, 1));
        assert_eq!(phi(&rat(1, 3)).unwrap(), rat(0, 1));
        assert_eq!(phi(&rat(1, 2)).unwrap(), rat(1, 1));
        assert!(phi(&rat(3, 5)).is_err());
    }

    #[test]
    fn lifted_uniform() {
        let inst = lift_valuations(&[uniform(), uniform()], false).unwrap();
        let v = &inst.lifted[0];
        assert_eq!(v.eval(&rat(0, 1), &rat(1, 1)).unwrap(), rat(1, 1));
        assert_eq!(v.eval(&rat(0, 1), &rat(1, 2)).unwrap(), rat(1, 3));
        assert_eq!(inst.lifted[2].eval(&rat(1, 2), &rat(1, 1)).unwrap(), rat(2, 3));
        let norm = lift_valuations(&[uniform()], true).unwrap();
        assert_eq!(norm.lifted[0].eval(&rat(0, 1), &rat(1, 1)).unwrap(), rat(1, 5));
    }

    #[test]
    fn single_agent_pull_back() {
        let inst = lift_valuations(&[uniform()], false).unwrap();
        assert!(inst.identical);
        let alloc = Allocation::new(Division::new(vec![rat(2, 3)]).unwrap(), vec![0, 1]).unwrap();
        let pb = pull_back(&alloc, &inst, &rat(1, 10)).unwrap();
        assert_eq!(pb.allocation.division.cuts, Vec::<Scalar>::new());
        assert_eq!(pb.allocation.assignment, vec![0]);
    }

    #[test]
    fn degenerate_extra_piece() {
        let other: SharedValuation = Arc::new(DensityValuation::from_weights(&[rat(1, 4), rat(3, 4)]).unwrap());
        let inst = lift_valuations(&[uniform(), other], false).unwrap();
        let alloc = Allocation::new(Division::new(vec![rat(1, 4), rat(1, 1)]).unwrap(), vec![0, 1, 2]).unwrap();
        let pb = pull_back(&alloc, &inst, &rat(1, 2)).unwrap();
        assert!(!pb.swapped);
        assert_eq!(pb.allocation.division.cuts, vec![rat(1, 2)]);
    }

    #[test]
    fn rejects_left_extra_piece() {
        let inst = lift_valuations(&[uniform(), uniform()], false).unwrap();
        let alloc = Allocation::new(Division::new(vec![rat(1, 5), rat(2, 5)]).unwrap(), vec![0, 1, 2]).unwrap();
        assert!(matches!(pull_back(&alloc, &inst, &rat(1, 100)), Err(CakeError::ContractViolation(_))));
    }
}
