//! Square-by-square classification against the six sufficient conditions for the absence of
//! an envy-free division.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::ieol::EoLGraph;
use super::label::{GridLabeling, C, E, L, R};
use crate::error::{domain, CakeError, Result};

pub const AGENTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Claim {
    AllAgentsAgree,
    AllAgentsSamePartialLabel,
    ThreeAgentsIdentical,
    TwoAgentsEnvironmentNoBoost,
    ThreeAgentsPositiveNoBoost,
    ThreeAgentsNegativeBoost,
}

impl Claim {
    pub const ALL: [Claim; 6] = [
        Claim::AllAgentsAgree,
        Claim::AllAgentsSamePartialLabel,
        Claim::ThreeAgentsIdentical,
        Claim::TwoAgentsEnvironmentNoBoost,
        Claim::ThreeAgentsPositiveNoBoost,
        Claim::ThreeAgentsNegativeBoost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::AllAgentsAgree => "all-agents-agree",
            Claim::AllAgentsSamePartialLabel => "all-agents-same-partial-label",
            Claim::ThreeAgentsIdentical => "3-agents-identical",
            Claim::TwoAgentsEnvironmentNoBoost => "2-agents-environment-no-boost",
            Claim::ThreeAgentsPositiveNoBoost => "3-agents-positive-no-boost",
            Claim::ThreeAgentsNegativeBoost => "3-agents-negative-boost",
        }
    }
}

impl Serialize for Claim {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

const fn bit(l: u8) -> u8 {
    1 << l
}

const PARTIAL: [u8; 4] = [bit(L) | bit(E), bit(L) | bit(C), bit(R) | bit(C), bit(R) | bit(E)];

/// Labels at the corners `(x,y), (x+1,y), (x,y+1), (x+1,y+1)` and boosts at columns `x, x+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SquareView {
    pub labels: [[u8; 4]; AGENTS],
    pub boost: [[i8; 2]; AGENTS],
}

impl SquareView {
    pub fn read(labelings: &[&GridLabeling; AGENTS], x: i64, y: i64) -> Self {
        let corners = [(x, y), (x + 1, y), (x, y + 1), (x + 1, y + 1)];
        SquareView {
            labels: labelings.map(|g| corners.map(|(a, b)| g.label(a, b))),
            boost: labelings.map(|g| [g.boost(x), g.boost(x + 1)]),
        }
    }

    fn masks(&self) -> [u8; AGENTS] {
        self.labels.map(|c| c.iter().fold(0, |m, &l| m | bit(l)))
    }

    fn no_boost(&self) -> bool {
        self.boost.iter().all(|b| *b == [0, 0])
    }

    pub fn holds(&self, claim: Claim) -> bool {
        let m = self.masks();
        let union = m.iter().fold(0, |a, b| a | b);
        let count = |f: &dyn Fn(u8) -> bool| m.iter().filter(|&&x| f(x)).count();
        match claim {
            Claim::AllAgentsAgree => {
                self.labels.iter().all(|l| *l == self.labels[0])
                    && union & (bit(E) | bit(C)) != bit(E) | bit(C)
                    && union & (bit(L) | bit(R)) != bit(L) | bit(R)
            }
            Claim::AllAgentsSamePartialLabel => PARTIAL.iter().any(|&s| union & !s == 0),
            Claim::ThreeAgentsIdentical => [E, C, L, R].iter().any(|&c| count(&|x| x == bit(c)) >= 3),
            Claim::TwoAgentsEnvironmentNoBoost => self.no_boost() && count(&|x| x == bit(E)) >= 2,
            Claim::ThreeAgentsPositiveNoBoost => {
                self.no_boost() && [bit(C) | bit(L), bit(E) | bit(L)].iter().any(|&s| count(&|x| x & !s == 0) >= 3)
            }
            Claim::ThreeAgentsNegativeBoost => (0..AGENTS).any(|a| {
                let others = (0..AGENTS).filter(|&o| o != a);
                let allowed = match self.boost[a] {
                    [1, 1] => bit(E) | bit(R),
                    [-1, -1] => bit(C) | bit(R),
                    _ => return false,
                };
                others.into_iter().all(|o| self.boost[o] == [0, 0] && m[o] & !allowed == 0)
            }),
        }
    }

    /// First claim in [`Claim::ALL`] order whose hypothesis holds.
    pub fn first_claim(&self) -> Option<Claim> {
        Claim::ALL.into_iter().find(|&c| self.holds(c))
    }

    /// Whether the agents disagree on some corner.
    pub fn disagreement(&self) -> bool {
        self.labels.iter().any(|l| *l != self.labels[0]) || self.boost.iter().any(|b| *b != self.boost[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RegionKind {
    Outside,
    Vertex,
    Crossing,
}

/// Inclusive range of square lower-left corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
pub struct Window {
    pub x0: i64,
    pub x1: i64,
    pub y0: i64,
    pub y1: i64,
}

impl Window {
    pub fn around(cx: i64, cy: i64, r: i64) -> Self {
        Window { x0: cx - r, x1: cx + r, y0: cy - r, y1: cy + r }
    }

    pub fn squares(&self) -> u64 {
        ((self.x1 - self.x0 + 1).max(0) * (self.y1 - self.y0 + 1).max(0)) as u64
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CategoryReport {
    pub squares: u64,
    pub exempt: u64,
    /// Solution vertices of the active graph, whose regions are exempt.
    pub solution_vertices: Vec<usize>,
    /// Count per `region/claim`, attributing each square to its first holding claim.
    pub counts: BTreeMap<String, u64>,
    pub uncategorized: u64,
    /// Up to 32 uncategorized squares.
    pub examples: Vec<(i64, i64)>,
}

/// Active graph shared by the four labelings.
pub fn active_graph(labelings: &[&GridLabeling; AGENTS]) -> Result<EoLGraph> {
    let n = labelings[0].n();
    if labelings.iter().any(|g| g.n() != n) {
        return domain("labelings built for different n");
    }
    let mut active = labelings[0].edges().clone();
    for g in &labelings[1..] {
        active = active.intersection(g.edges()).copied().collect();
    }
    EoLGraph::from_edges(n, &active)
}

pub(crate) fn touches_region(g: &GridLabeling, v: usize, x: i64, y: i64) -> bool {
    let (lo, hi) = g.layout().vertex_range(v);
    x + 1 >= lo && x <= hi && y + 1 >= lo && y <= hi
}

/// Squares of `window` (all `N²` squares when `None`) classified by region and claim.
pub fn enumerate_square_categories(
    labelings: &[&GridLabeling; AGENTS],
    window: Option<Window>,
    budget: u64,
) -> Result<CategoryReport> {
    let graph = active_graph(labelings)?;
    let solutions = graph.solutions();
    let first = labelings[0];
    let size = first.size();
    let w = window.unwrap_or(Window { x0: 0, x1: size - 1, y0: 0, y1: size - 1 });
    let w = Window { x0: w.x0.max(0), x1: w.x1.min(size - 1), y0: w.y0.max(0), y1: w.y1.min(size - 1) };
    if w.squares() > budget {
        return Err(CakeError::Resource(format!("{} squares exceed the budget {budget}", w.squares())));
    }
    let crossings = first.layout().crossings();
    let region_of = |x: i64, y: i64| {
        if crossings.iter().any(|c| c.contains(x, y)) {
            RegionKind::Crossing
        } else if first.layout().vertex_at(x).is_some() && first.layout().vertex_at(x) == first.layout().vertex_at(y) {
            RegionKind::Vertex
        } else {
            RegionKind::Outside
        }
    };
    type Partial = (u64, BTreeMap<(RegionKind, Claim), u64>, u64, Vec<(i64, i64)>);
    let merged: Partial = (w.x0..=w.x1)
        .into_par_iter()
        .fold(
            || (0, BTreeMap::new(), 0, Vec::new()),
            |mut acc: Partial, x| {
                for y in w.y0..=w.y1 {
                    if solutions.iter().any(|&v| touches_region(first, v, x, y)) {
                        acc.0 += 1;
                        continue;
                    }
                    let view = SquareView::read(labelings, x, y);
                    match view.first_claim() {
                        Some(c) => *acc.1.entry((region_of(x, y), c)).or_default() += 1,
                        None => {
                            acc.2 += 1;
                            if acc.3.len() < 32 {
                                acc.3.push((x, y));
                            }
                        }
                    }
                }
                acc
            },
        )
        .reduce(
            || (0, BTreeMap::new(), 0, Vec::new()),
            |mut a, b| {
                a.0 += b.0;
                for (k, v) in b.1 {
                    *a.1.entry(k).or_default() += v;
                }
                a.2 += b.2;
                a.3.extend(b.3);
                a.3.sort();
                a.3.truncate(32);
                a
            },
        );
    let counts = merged.1.into_iter().map(|((r, c), v)| (format!("{}/{}", serde_region(r), c.name()), v)).collect();
    Ok(CategoryReport {
        squares: w.squares(),
        exempt: merged.0,
        solution_vertices: solutions,
        counts,
        uncategorized: merged.2,
        examples: merged.3,
    })
}

fn serde_region(r: RegionKind) -> &'static str {
    match r {
        RegionKind::Outside => "outside",
        RegionKind::Vertex => "vertex",
        RegionKind::Crossing => "crossing",
    }
}
