use std::collections::HashMap;

use num_traits::ToPrimitive;

use crate::error::{CakeError, Result};
use crate::pl::{solve_in_cells, CornerSource, End, Equation};
use crate::query::{Mode, QuerySession};
use crate::scalar::Scalar;
use crate::valuation::{bisect_cut, bisect_rcut, Division};

/// How exact answers are obtained from the session.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Access {
    /// Value queries only; valuations are linear on the grid of step `1/g`.
    Grid(u64),
    /// Robertson–Webb queries on valuations flattened between their `m`-quantiles.
    Quantiles(u64),
}

/// Session wrapper used by the four-agent algorithms.
///
/// Answers are remembered, so repeating a question costs nothing; the frame can be
/// mirrored (`x -> 1 - x`) so that symmetric cases share one implementation.
pub struct Probe<'s> {
    session: &'s mut QuerySession,
    access: Access,
    mirrored: bool,
    values: HashMap<(usize, Scalar, Scalar), Scalar>,
    cuts: HashMap<(usize, bool, Scalar, Scalar), Option<Scalar>>,
}

impl<'s> Probe<'s> {
    pub fn new(session: &'s mut QuerySession, access: Access) -> Result<Self> {
        let ok = matches!(
            (access, session.mode()),
            (Access::Grid(_), Mode::ValueOnly) | (Access::Quantiles(_), Mode::RobertsonWebb)
        );
        if !ok {
            return Err(CakeError::Domain("probe access does not match the session mode".into()));
        }
        Ok(Probe { session, access, mirrored: false, values: HashMap::new(), cuts: HashMap::new() })
    }

    pub fn access(&self) -> Access {
        self.access
    }

    pub fn session(&self) -> &QuerySession {
        self.session
    }

    pub fn agents(&self) -> usize {
        self.session.agents()
    }

    pub(crate) fn grid(&self) -> u64 {
        match self.access {
            Access::Grid(g) => g,
            Access::Quantiles(_) => unreachable!("grid access on a quantile probe"),
        }
    }

    pub(crate) fn quantile_count(&self) -> u64 {
        match self.access {
            Access::Quantiles(m) => m,
            Access::Grid(_) => unreachable!("quantile access on a grid probe"),
        }
    }

    pub(crate) fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    pub(crate) fn set_mirrored(&mut self, m: bool) -> bool {
        std::mem::replace(&mut self.mirrored, m)
    }

    fn raw_value(&mut self, i: usize, a: Scalar, b: Scalar) -> Result<Scalar> {
        if b <= a {
            return Ok(Scalar::zero());
        }
        let key = (i, a, b);
        if let Some(v) = self.values.get(&key) {
            return Ok(v.clone());
        }
        let v = self.session.value_query(i, &key.1, &key.2)?;
        self.values.insert(key, v.clone());
        Ok(v)
    }

    /// `v_i(a, b)` in the current frame.
    pub fn value(&mut self, i: usize, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        if self.mirrored {
            self.raw_value(i, Scalar::one() - b, Scalar::one() - a)
        } else {
            self.raw_value(i, a.clone(), b.clone())
        }
    }

    pub fn prefix(&mut self, i: usize, x: &Scalar) -> Result<Scalar> {
        self.value(i, &Scalar::zero(), x)
    }

    fn raw_cut(&mut self, i: usize, reverse: bool, x: Scalar, alpha: Scalar) -> Result<Option<Scalar>> {
        let key = (i, reverse, x, alpha);
        if let Some(v) = self.cuts.get(&key) {
            return Ok(v.clone());
        }
        let (x, alpha) = (&key.2, &key.3);
        let y = match self.access {
            Access::Grid(g) => {
                let was = self.set_mirrored(false);
                let r = if reverse {
                    bisect_rcut(g, x, alpha, |a, b| self.value(i, a, b))
                } else {
                    bisect_cut(g, x, alpha, |a, b| self.value(i, a, b))
                };
                self.set_mirrored(was);
                r?
            }
            Access::Quantiles(_) => {
                if reverse {
                    self.session.reverse_cut_query(i, x, alpha)?
                } else {
                    self.session.cut_query(i, x, alpha)?
                }
            }
        };
        self.cuts.insert(key, y.clone());
        Ok(y)
    }

    /// Minimal `y >= x` with `v_i(x, y) = alpha` in the current frame.
    pub fn cut(&mut self, i: usize, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        if self.mirrored {
            let r = self.raw_cut(i, true, Scalar::one() - x, alpha.clone())?;
            Ok(r.map(|y| Scalar::one() - y))
        } else {
            self.raw_cut(i, false, x.clone(), alpha.clone())
        }
    }

    /// Maximal `x <= y` with `v_i(x, y) = alpha` in the current frame.
    pub fn rcut(&mut self, i: usize, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        if self.mirrored {
            let r = self.raw_cut(i, false, Scalar::one() - y, alpha.clone())?;
            Ok(r.map(|x| Scalar::one() - x))
        } else {
            self.raw_cut(i, true, y.clone(), alpha.clone())
        }
    }

    /// Position with prefix value `a` for agent `i`.
    pub fn inverse(&mut self, i: usize, a: &Scalar) -> Result<Scalar> {
        let a = Scalar::max_of(&Scalar::zero(), &Scalar::min_of(a, &Scalar::one()));
        self.cut(i, &Scalar::zero(), &a)?
            .ok_or_else(|| CakeError::InternalInvariantViolation(format!("no prefix of value {a}")))
    }

    /// Quantile `j / m` of agent `i` in the current frame.
    pub(crate) fn quantile(&mut self, i: usize, j: u64) -> Result<Scalar> {
        let m = self.quantile_count() as i64;
        self.inverse(i, &Scalar::new(j as i64, m))
    }

    /// Values of all pieces of `d` (original frame) for every agent.
    pub fn value_matrix(&mut self, d: &Division) -> Result<Vec<Vec<Scalar>>> {
        let was = self.set_mirrored(false);
        let pieces = d.pieces();
        let mut out = Vec::with_capacity(self.agents());
        for i in 0..self.agents() {
            let mut row = Vec::with_capacity(pieces.len());
            for (a, b) in &pieces {
                match self.value(i, a, b) {
                    Ok(v) => row.push(v),
                    Err(e) => {
                        self.set_mirrored(was);
                        return Err(e);
                    }
                }
            }
            out.push(row);
        }
        self.set_mirrored(was);
        Ok(out)
    }

    pub(crate) fn eval_equation(&mut self, eq: &Equation, vars: &[Scalar]) -> Result<Scalar> {
        let mut s = -&eq.rhs;
        for t in &eq.terms {
            let pos = |e: &End| match e {
                End::At(x) => x.clone(),
                End::Var(v) => vars[*v].clone(),
            };
            let v = self.value(t.agent, &pos(&t.a), &pos(&t.b))?;
            s += &v.mul_int(t.coef);
        }
        Ok(s)
    }

    /// Bracket `[p, q]` within one grid cell containing the threshold of a monotone
    /// predicate on `[lo, hi]`; the predicate is assumed true at `hi`.
    pub(crate) fn grid_search<F>(&mut self, lo: &Scalar, hi: &Scalar, mut pred: F) -> Result<(Scalar, Scalar)>
    where
        F: FnMut(&mut Self, &Scalar) -> Result<bool>,
    {
        if lo >= hi {
            return Ok((hi.clone(), hi.clone()));
        }
        let g = self.grid();
        let first = (lo.floor_mul(g) + 1u32).to_i64().expect("grid index");
        let last = (hi.ceil_mul(g) - 1u32).to_i64().expect("grid index");
        let inner = (last - first + 1).max(0);
        let pos = |t: i64| -> Scalar {
            if t == 0 {
                lo.clone()
            } else if t == inner + 1 {
                hi.clone()
            } else {
                Scalar::new(first + t - 1, g as i64)
            }
        };
        let (mut l, mut h) = (0i64, inner + 1);
        while h - l > 1 {
            let mid = l + (h - l) / 2;
            if pred(self, &pos(mid))? {
                h = mid;
            } else {
                l = mid;
            }
        }
        Ok((pos(l), pos(h)))
    }

    /// Root of an increasing single-unknown equation on `[lo, hi]`.
    pub(crate) fn root_1d(&mut self, lo: &Scalar, hi: &Scalar, eq: &Equation) -> Result<Scalar> {
        let br = self.grid_search(lo, hi, |p, x| Ok(!p.eval_equation(eq, std::slice::from_ref(x))?.is_negative()))?;
        self.solve_cells(&[br], std::slice::from_ref(eq)).map(|v| v[0].clone())
    }

    pub(crate) fn solve_cells(&mut self, brackets: &[(Scalar, Scalar)], eqs: &[Equation]) -> Result<Vec<Scalar>> {
        let g = self.grid();
        solve_in_cells(self, g, brackets, eqs)?
            .ok_or_else(|| CakeError::InternalInvariantViolation("no exact solution in the located cells".into()))
    }
}

impl CornerSource for Probe<'_> {
    fn corner(&mut self, agent: usize, j: u64, k: u64) -> Result<Scalar> {
        let g = self.grid() as i64;
        self.value(agent, &Scalar::new(j as i64, g), &Scalar::new(k as i64, g))
    }

    fn value(&mut self, agent: usize, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        Probe::value(self, agent, a, b)
    }
}
