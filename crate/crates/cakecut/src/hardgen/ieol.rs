//! End-of-Line graphs and their four-party intersection variant.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{domain, CakeError, Result};

/// Directed edge `(from, to)` on vertices `1..=n`.
pub type Edge = (usize, usize);

pub const PARTIES: usize = 4;

/// Directed graph on vertices `1..=n` with per-vertex successor and predecessor lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EoLGraph {
    pub n: usize,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
}

impl EoLGraph {
    pub fn from_edges(n: usize, edges: &BTreeSet<Edge>) -> Result<Self> {
        let mut succ = vec![Vec::new(); n + 1];
        let mut pred = vec![Vec::new(); n + 1];
        for &(u, v) in edges {
            check_edge(n, (u, v))?;
            succ[u].push(v);
            pred[v].push(u);
        }
        Ok(EoLGraph { n, succ, pred })
    }

    pub fn edges(&self) -> BTreeSet<Edge> {
        (1..=self.n).flat_map(|u| self.succ[u].iter().map(move |&v| (u, v))).collect()
    }

    /// Vertices with exactly one incident edge, counting an implicit edge into vertex 1.
    pub fn solutions(&self) -> Vec<usize> {
        (1..=self.n)
            .filter(|&v| {
                let ins = self.pred[v].len() + usize::from(v == 1);
                ins + self.succ[v].len() == 1
            })
            .collect()
    }

    pub fn is_standard(&self) -> bool {
        (1..=self.n).all(|v| self.succ[v].len() <= 1 && self.pred[v].len() <= 1)
    }
}

fn check_edge(n: usize, (u, v): Edge) -> Result<()> {
    if u == 0 || v == 0 || u > n || v > n || u == v {
        return domain(format!("edge {u}->{v} is not an edge on vertices 1..={n}"));
    }
    Ok(())
}

/// Four edge supersets whose intersection is the hidden active graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IEoLInstance {
    pub n: usize,
    pub supersets: [BTreeSet<Edge>; PARTIES],
    /// Owning party (1-based) of each vertex; index 0 is unused.
    pub owner: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromiseViolation {
    pub promise: u8,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct PromiseReport {
    pub violations: Vec<PromiseViolation>,
}

impl PromiseReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, promise: u8, detail: String) {
        self.violations.push(PromiseViolation { promise, detail });
    }
}

impl IEoLInstance {
    pub fn active(&self) -> BTreeSet<Edge> {
        let mut it = self.supersets.iter();
        let first = it.next().unwrap().clone();
        it.fold(first, |acc, s| acc.intersection(s).copied().collect())
    }

    pub fn union(&self) -> BTreeSet<Edge> {
        self.supersets.iter().flatten().copied().collect()
    }

    pub fn active_graph(&self) -> EoLGraph {
        EoLGraph::from_edges(self.n, &self.active()).expect("validated edges")
    }
}

/// Exhaustive check of the four promises.
pub fn validate_promises(inst: &IEoLInstance) -> PromiseReport {
    let mut rep = PromiseReport::default();
    let n = inst.n;
    for s in &inst.supersets {
        for &e in s {
            if check_edge(n, e).is_err() {
                rep.push(0, format!("edge {}->{} is outside the vertex set", e.0, e.1));
            }
        }
    }
    if !rep.passed() {
        return rep;
    }
    let active = inst.active();
    let deg = |edges: &BTreeSet<Edge>, v: usize| {
        let ins = edges.iter().filter(|e| e.1 == v).count();
        let outs = edges.iter().filter(|e| e.0 == v).count();
        (ins, outs)
    };
    for v in 1..=n {
        let (i, o) = deg(&active, v);
        if i > 1 || o > 1 {
            rep.push(0, format!("vertex {v} has {i} active incoming and {o} active outgoing edges"));
        }
    }
    for (p, s) in inst.supersets.iter().enumerate() {
        let (i, o) = deg(s, 1);
        if i != 0 || o != 1 {
            rep.push(0, format!("party {} sees {i} edges into and {o} edges out of vertex 1", p + 1));
        }
    }
    let mut inactive_parties: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for e in inst.union().difference(&active) {
        let holders: Vec<usize> = (0..PARTIES).filter(|&p| inst.supersets[p].contains(e)).collect();
        if holders.len() > 1 {
            rep.push(1, format!("inactive edge {}->{} appears in {} supersets", e.0, e.1, holders.len()));
        }
        for &p in &holders {
            inactive_parties.entry(e.0).or_default().insert(p);
            inactive_parties.entry(e.1).or_default().insert(p);
        }
    }
    for (v, ps) in &inactive_parties {
        if ps.len() > 1 {
            let names: Vec<String> = ps.iter().map(|p| (p + 1).to_string()).collect();
            rep.push(2, format!("vertex {v} has inactive edges from parties {}", names.join(", ")));
        }
    }
    for (p, s) in inst.supersets.iter().enumerate() {
        for v in 1..=n {
            let (i, o) = deg(s, v);
            if (i > 1 || o > 1) && inst.owner.get(v) != Some(&(p + 1)) {
                rep.push(3, format!("party {} branches at vertex {v} owned by another party", p + 1));
            }
        }
    }
    rep
}

/// Instance whose active graph is `path` (starting at vertex 1), with each party's superset
/// extended by its `(party, edge)` decorations. Vertices touched by a decoration are owned by
/// the decorating party, all others by party 1.
pub fn make_path_instance(n: usize, path: &[usize], decorations: &[(usize, Edge)]) -> Result<IEoLInstance> {
    if path.first() != Some(&1) {
        return domain("the active path must start at vertex 1");
    }
    let distinct: BTreeSet<usize> = path.iter().copied().collect();
    if distinct.len() != path.len() {
        return domain("the active path repeats a vertex");
    }
    let mut active = BTreeSet::new();
    for w in path.windows(2) {
        check_edge(n, (w[0], w[1]))?;
        active.insert((w[0], w[1]));
    }
    if path.len() < 2 {
        return domain("the active path needs at least one edge");
    }
    let mut supersets: [BTreeSet<Edge>; PARTIES] = std::array::from_fn(|_| active.clone());
    let mut owner = vec![1; n + 1];
    owner[0] = 0;
    for &(p, e) in decorations {
        if !(1..=PARTIES).contains(&p) {
            return domain(format!("party {p} outside 1..={PARTIES}"));
        }
        check_edge(n, e)?;
        supersets[p - 1].insert(e);
        owner[e.0] = p;
        owner[e.1] = p;
    }
    let inst = IEoLInstance { n, supersets, owner };
    let rep = validate_promises(&inst);
    if let Some(v) = rep.violations.into_iter().next() {
        return Err(CakeError::PromiseViolation { promise: v.promise, detail: v.detail });
    }
    Ok(inst)
}
