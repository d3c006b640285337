//! Counted access to agent valuations.

use std::io::Write;

use serde::Serialize;

use crate::error::{domain, CakeError, Result};
use crate::scalar::Scalar;
use crate::valuation::{bisect_cut, bisect_rcut, check_point, SharedValuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    ValueOnly,
    RobertsonWebb,
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceEntry {
    pub agent: usize,
    pub kind: &'static str,
    pub args: Vec<Scalar>,
    pub answer: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct QueryCounts {
    pub value: Vec<u64>,
    pub cut: Vec<u64>,
}

impl QueryCounts {
    pub fn total_value(&self) -> u64 {
        self.value.iter().sum()
    }
    pub fn total_cut(&self) -> u64 {
        self.cut.iter().sum()
    }
    pub fn total(&self) -> u64 {
        self.total_value() + self.total_cut()
    }
}

/// The only path from algorithms to valuations; every access is counted.
#[derive(Debug)]
pub struct QuerySession {
    agents: Vec<SharedValuation>,
    counts: QueryCounts,
    mode: Mode,
    trace: Option<Vec<TraceEntry>>,
}

impl QuerySession {
    pub fn new(agents: Vec<SharedValuation>, mode: Mode) -> Self {
        let n = agents.len();
        QuerySession { agents, counts: QueryCounts { value: vec![0; n], cut: vec![0; n] }, mode, trace: None }
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn agents(&self) -> usize {
        self.agents.len()
    }

    pub fn counts(&self) -> &QueryCounts {
        &self.counts
    }

    pub fn trace(&self) -> Option<&[TraceEntry]> {
        self.trace.as_deref()
    }

    /// Write the trace as JSON lines.
    pub fn write_trace<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for e in self.trace.iter().flatten() {
            serde_json::to_writer(&mut w, e)?;
            writeln!(w)?;
        }
        Ok(())
    }

    fn agent(&self, i: usize) -> Result<&SharedValuation> {
        self.agents.get(i).ok_or_else(|| CakeError::Domain(format!("no agent {i}")))
    }

    fn record(&mut self, agent: usize, kind: &'static str, args: Vec<Scalar>, answer: Option<Scalar>) {
        if let Some(t) = &mut self.trace {
            t.push(TraceEntry { agent, kind, args, answer });
        }
    }

    pub fn value_query(&mut self, i: usize, a: &Scalar, b: &Scalar) -> Result<Scalar> {
        let v = self.agent(i)?.eval(a, b)?;
        self.counts.value[i] += 1;
        if self.trace.is_some() {
            self.record(i, "value", vec![a.clone(), b.clone()], Some(v.clone()));
        }
        Ok(v)
    }

    fn require_rw(&self) -> Result<()> {
        if self.mode != Mode::RobertsonWebb {
            return domain("cut queries are unavailable in value-only mode");
        }
        Ok(())
    }

    /// Minimal `y >= x` with `v_i(x, y) = alpha`; `None` is NoSuchCut.
    pub fn cut_query(&mut self, i: usize, x: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        self.require_rw()?;
        check_cut_args(x, alpha)?;
        let y = self.agent(i)?.cut(x, alpha)?;
        self.counts.cut[i] += 1;
        if self.trace.is_some() {
            self.record(i, "cut", vec![x.clone(), alpha.clone()], y.clone());
        }
        Ok(y)
    }

    /// Maximal `x <= y` with `v_i(x, y) = alpha`.
    pub fn reverse_cut_query(&mut self, i: usize, y: &Scalar, alpha: &Scalar) -> Result<Option<Scalar>> {
        self.require_rw()?;
        check_cut_args(y, alpha)?;
        let x = self.agent(i)?.rcut(y, alpha)?;
        self.counts.cut[i] += 1;
        if self.trace.is_some() {
            self.record(i, "reverse-cut", vec![y.clone(), alpha.clone()], x.clone());
        }
        Ok(x)
    }

    /// Cut query answered with value queries on a valuation that is linear on the grid of step `1/g`.
    pub fn simulate_cut(&mut self, i: usize, x: &Scalar, alpha: &Scalar, g: u64) -> Result<Option<Scalar>> {
        check_cut_args(x, alpha)?;
        bisect_cut(g, x, alpha, |a, b| self.value_query(i, a, b))
    }

    /// Reverse cut answered with value queries on a grid-linear valuation.
    pub fn simulate_reverse_cut(&mut self, i: usize, y: &Scalar, alpha: &Scalar, g: u64) -> Result<Option<Scalar>> {
        check_cut_args(y, alpha)?;
        bisect_rcut(g, y, alpha, |a, b| self.value_query(i, a, b))
    }
}

fn check_cut_args(x: &Scalar, alpha: &Scalar) -> Result<()> {
    check_point(x)?;
    if alpha.is_negative() || alpha > &Scalar::one() {
        return domain(format!("cut value {alpha} outside [0,1]"));
    }
    Ok(())
}
