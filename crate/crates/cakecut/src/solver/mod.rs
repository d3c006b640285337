//! Connected envy-free division for two, three and four agents.

mod grid;
mod probe;
mod rw;

use std::fmt;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::query::{QueryCounts, TraceEntry};
use crate::scalar::Scalar;
pub(crate) use crate::valuation::envy_of_matrix;
use crate::valuation::{Allocation, Division};

pub use grid::{solve2, solve4};
pub use probe::{Access, Probe};
pub use rw::solve4_rw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TrailKind {
    /// Agent 1 is indifferent among the three pieces other than `k`.
    A,
    /// Agent 1 values all pieces except `k` and `k2` at `alpha`; agent `i` is indifferent between those two.
    B,
}

/// Identifier of a trail; pieces and agents are numbered from 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct TrailId {
    pub kind: TrailKind,
    pub k: u8,
    pub k2: u8,
    pub i: u8,
}

impl TrailId {
    pub fn a(k: u8) -> Result<Self> {
        if !(1..=4).contains(&k) {
            return domain(format!("piece {k} outside 1..=4"));
        }
        Ok(TrailId { kind: TrailKind::A, k, k2: 0, i: 0 })
    }

    pub fn b(i: u8, k: u8, k2: u8) -> Result<Self> {
        if !(2..=4).contains(&i) || !(1..=4).contains(&k) || !(1..=4).contains(&k2) || k == k2 {
            return domain(format!("invalid trail ({i}; {k}, {k2})"));
        }
        Ok(TrailId { kind: TrailKind::B, k: k.min(k2), k2: k.max(k2), i })
    }

    /// All 22 trails in enumeration order.
    pub fn all() -> Vec<TrailId> {
        let mut out: Vec<TrailId> = (1..=4).map(|k| TrailId::a(k).unwrap()).collect();
        for i in 2..=4 {
            for k in 1..=4 {
                for k2 in k + 1..=4 {
                    out.push(TrailId::b(i, k, k2).unwrap());
                }
            }
        }
        out
    }

    /// The same trail after reflecting the cake.
    pub fn mirrored(self) -> TrailId {
        match self.kind {
            TrailKind::A => TrailId { k: 5 - self.k, ..self },
            TrailKind::B => TrailId { k: 5 - self.k2, k2: 5 - self.k, ..self },
        }
    }

    /// Whether the trail is computed in the reflected frame.
    pub(crate) fn needs_mirror(self) -> bool {
        match self.kind {
            TrailKind::A => self.k <= 2,
            TrailKind::B => self.k == 1 && self.k2 <= 3,
        }
    }
}

impl fmt::Display for TrailId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TrailKind::A => write!(f, "A{}", self.k),
            TrailKind::B => write!(f, "B{}({},{})", self.i, self.k, self.k2),
        }
    }
}

/// A division on a trail together with the agents supporting each piece.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InvariantWitness {
    pub trail: TrailId,
    pub alpha: Scalar,
    pub division: Division,
    /// `supporting[p]` lists the agents (0-based) who weakly prefer piece `p`.
    pub supporting: Vec<Vec<usize>>,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub allocation: Allocation,
    /// Envy under the input valuations.
    pub max_envy: Scalar,
    pub queries: QueryCounts,
    pub witness: Option<InvariantWitness>,
    pub bracket: Option<(Scalar, Scalar)>,
    pub iterations: u32,
    #[serde(skip)]
    pub trace: Option<Vec<TraceEntry>>,
    /// Queries spent on the underlying valuations when they are accessed through a transformation.
    pub base_queries: Option<QueryCounts>,
}

/// Division of the cake into `n` pieces of equal value for agent `i` (0-based).
pub fn equipartition(probe: &mut Probe, i: usize, n: usize) -> Result<Division> {
    match probe.access() {
        Access::Grid(_) => grid::grid_equipartition(probe, i, n),
        Access::Quantiles(_) => rw::rw_equipartition(probe, i, n),
    }
}

/// Division on trail `t` at level `alpha`, or `None` where the trail is undefined.
pub fn trail_point(probe: &mut Probe, t: TrailId, alpha: &Scalar) -> Result<Option<Division>> {
    let was = probe.set_mirrored(false);
    let r = match probe.access() {
        Access::Grid(_) => grid::grid_trail_point(probe, t, alpha),
        Access::Quantiles(_) => rw::rw_trail_point(probe, t, alpha),
    };
    probe.set_mirrored(was);
    r
}

/// First trail (in enumeration order) whose invariant holds at `alpha`.
pub fn condition_holds_at(probe: &mut Probe, alpha: &Scalar) -> Result<Option<InvariantWitness>> {
    for t in TrailId::all() {
        if let Some(d) = trail_point(probe, t, alpha)? {
            if lazy_condition(probe, t, alpha, &d)? {
                let m = probe.value_matrix(&d)?;
                return Ok(Some(grid::witness_for(t, alpha, d, &m)));
            }
        }
    }
    Ok(None)
}

/// Same test as [`condition_holds`], querying only the rows it needs.
fn lazy_condition(probe: &mut Probe, t: TrailId, alpha: &Scalar, d: &Division) -> Result<bool> {
    let was = probe.set_mirrored(false);
    let r = lazy_condition_inner(probe, t, alpha, d);
    probe.set_mirrored(was);
    r
}

fn lazy_condition_inner(probe: &mut Probe, t: TrailId, alpha: &Scalar, d: &Division) -> Result<bool> {
    let pieces = d.pieces();
    let row = |probe: &mut Probe, j: usize| -> Result<Vec<Scalar>> {
        pieces.iter().map(|(a, b)| probe.value(j, a, b)).collect()
    };
    let r0 = row(probe, 0)?;
    match t.kind {
        TrailKind::A => {
            let p = (t.k - 1) as usize;
            if r0[p] > *alpha {
                return Ok(false);
            }
            let mut count = 0;
            for j in 1..4 {
                if preferred(&row(probe, j)?, p) {
                    count += 1;
                }
            }
            Ok(count >= 2)
        }
        TrailKind::B => {
            let (p, q, i) = ((t.k - 1) as usize, (t.k2 - 1) as usize, (t.i - 1) as usize);
            if r0[p] > *alpha || r0[q] > *alpha {
                return Ok(false);
            }
            let ri = row(probe, i)?;
            if !preferred(&ri, p) || !preferred(&ri, q) {
                return Ok(false);
            }
            let (mut fp, mut fq) = (false, false);
            for j in (1..4).filter(|&j| j != i) {
                let rj = row(probe, j)?;
                fp |= preferred(&rj, p);
                fq |= preferred(&rj, q);
            }
            Ok(fp && fq)
        }
    }
}

fn preferred(row: &[Scalar], p: usize) -> bool {
    row.iter().all(|v| v <= &row[p])
}

/// Agents (0-based) weakly preferring each piece.
pub(crate) fn supporters(m: &[Vec<Scalar>]) -> Vec<Vec<usize>> {
    let pieces = m.first().map_or(0, |r| r.len());
    (0..pieces).map(|p| (0..m.len()).filter(|&j| preferred(&m[j], p)).collect()).collect()
}

/// Whether the value matrix of a division on trail `t` at level `alpha` satisfies the
/// trail's invariant condition.
pub fn condition_holds(t: TrailId, alpha: &Scalar, m: &[Vec<Scalar>]) -> bool {
    let others = |p: usize, skip: usize| (1..4).filter(|&j| j != skip).any(|j| preferred(&m[j], p));
    match t.kind {
        TrailKind::A => {
            let p = (t.k - 1) as usize;
            m[0][p] <= *alpha && (1..4).filter(|&j| preferred(&m[j], p)).count() >= 2
        }
        TrailKind::B => {
            let (p, q, i) = ((t.k - 1) as usize, (t.k2 - 1) as usize, (t.i - 1) as usize);
            m[0][p] <= *alpha
                && m[0][q] <= *alpha
                && preferred(&m[i], p)
                && preferred(&m[i], q)
                && others(p, i)
                && others(q, i)
        }
    }
}

/// Advance `p` to the next permutation in lexicographic order.
pub fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Assignment (`piece -> agent`) of least envy for a value matrix; ties go to the
/// lexicographically first permutation.
pub fn best_assignment(m: &[Vec<Scalar>]) -> (Vec<usize>, Scalar) {
    let mut perm: Vec<usize> = (0..m.len()).collect();
    let mut best = (perm.clone(), envy_of_matrix(m, &perm));
    while next_permutation(&mut perm) {
        let e = envy_of_matrix(m, &perm);
        if e < best.1 {
            best = (perm.clone(), e);
        }
    }
    best
}

/// Least-envy assignment of `division` if its envy is at most `eps`.
pub fn assign_pieces(division: &Division, m: &[Vec<Scalar>], eps: &Scalar) -> Option<Allocation> {
    let (perm, e) = best_assignment(m);
    (e <= *eps).then(|| Allocation { division: division.clone(), assignment: perm })
}
