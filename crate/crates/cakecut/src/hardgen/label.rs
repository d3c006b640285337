//! One party's four-colour labeling of the grid, computed lazily from the path geometry.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, OnceLock};

use super::ieol::Edge;
use super::layout::{Crossing, Layout, Port, Pt};
use crate::error::Result;

/// Label codes. `(first, second)` signs: E = (+,-), C = (-,+), L = (+,+), R = (-,-).
pub const E: u8 = 0;
pub const C: u8 = 1;
pub const L: u8 = 2;
pub const R: u8 = 3;

pub fn first_label(l: u8) -> i8 {
    if l == E || l == L {
        1
    } else {
        -1
    }
}

pub fn second_label(l: u8) -> i8 {
    if l == C || l == L {
        1
    } else {
        -1
    }
}

pub fn label_name(l: u8) -> &'static str {
    ["E", "C", "L", "R"][l as usize]
}

/// Whether two labels have both coordinates different.
pub fn opposite(a: u8, b: u8) -> bool {
    a != b && a >> 1 == b >> 1
}

const TILE: i64 = 128;

/// Axis-parallel centerline segment in doubled coordinates.
#[derive(Debug, Clone, Copy)]
struct Segment {
    a: Pt,
    b: Pt,
}

impl Segment {
    /// `(L∞ distance, projection misses the segment, label)` for the doubled point `p`.
    fn probe(&self, p: Pt) -> (i64, bool, u8) {
        let (a, b) = (self.a, self.b);
        let (along, lo, hi, dir, off) = if a.1 == b.1 {
            (p.0, a.0.min(b.0), a.0.max(b.0), (b.0 - a.0).signum(), p.1 - a.1)
        } else {
            (p.1, a.1.min(b.1), a.1.max(b.1), (b.1 - a.1).signum(), a.0 - p.0)
        };
        let gap = if along < lo {
            lo - along
        } else if along > hi {
            along - hi
        } else {
            0
        };
        let d = gap.max(off.abs());
        let label = if d < 2 {
            C
        } else if off * dir > 0 {
            L
        } else {
            R
        };
        (d, gap > 0, label)
    }
}

fn paint(segments: &[Segment], ids: impl Iterator<Item = usize>, p: Pt) -> Option<u8> {
    let mut best: Option<(i64, bool, u8)> = None;
    for i in ids {
        let hit = segments[i].probe(p);
        if hit.0 < 6 && best.is_none_or(|b| (hit.0, hit.1) < (b.0, b.1)) {
            best = Some(hit);
        }
    }
    best.map(|b| b.2)
}

fn segments_of(route: &[Pt]) -> impl Iterator<Item = Segment> + '_ {
    route.windows(2).map(|w| Segment { a: w[0], b: w[1] })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Connector {
    Environment,
    Overwrite,
    Route,
}

/// Which parts of a crossing this party draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize)]
pub enum View {
    None,
    Vertical,
    Horizontal,
    Both,
}

struct CrossingPaint {
    crossing: Crossing,
    view: View,
    segments: Vec<Segment>,
}

/// Gadget polylines in local centerline units for an upward crossing.
fn gadget(view: View) -> Vec<Vec<(i64, i64)>> {
    match view {
        View::None => vec![],
        View::Vertical => vec![vec![(0, -40), (0, 40)]],
        View::Horizontal => vec![vec![(-40, 0), (8, 0), (8, -7), (22, -7), (22, 0), (40, 0)]],
        View::Both => {
            vec![vec![(-40, 0), (15, 0), (15, 7), (0, 7), (0, 40)], vec![(0, -40), (0, -7), (22, -7), (22, 0), (40, 0)]]
        }
    }
}

/// Lazily evaluated labeling of `{0..N}²` for one party's edge set.
pub struct GridLabeling {
    layout: Arc<Layout>,
    edges: BTreeSet<Edge>,
    connectors: Vec<Connector>,
    segments: Vec<Segment>,
    index: HashMap<(i64, i64), Vec<usize>>,
    crossings: Vec<CrossingPaint>,
    tiles_per_side: i64,
    tiles: Vec<OnceLock<Box<[u8]>>>,
}

impl fmt::Debug for GridLabeling {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GridLabeling(n = {}, edges = {:?})", self.layout.n, self.edges)
    }
}

/// Labeling of one party's edge set.
pub fn embed_labeling(edges: &BTreeSet<Edge>, n: usize) -> Result<GridLabeling> {
    GridLabeling::new(Arc::new(Layout::new(n)?), edges.clone())
}

impl GridLabeling {
    pub fn new(layout: Arc<Layout>, edges: BTreeSet<Edge>) -> Result<Self> {
        let n = layout.n;
        let g = super::ieol::EoLGraph::from_edges(n, &edges)?;
        let mut routes: Vec<Vec<Pt>> = vec![layout.start_route()];
        routes.extend(edges.iter().map(|&e| layout.edge_route(e)));
        let mut connectors = vec![Connector::Environment; n + 1];
        for v in 1..=n {
            let mut ins: Vec<Port> = g.pred[v].iter().map(|&u| layout.in_port((u, v))).collect();
            if v == 1 {
                ins.push(layout.start_port());
            }
            let outs: Vec<Port> = g.succ[v].iter().map(|&w| layout.out_port((v, w))).collect();
            connectors[v] = match (ins.len(), outs.len()) {
                (i, o) if i > 1 || o > 1 => Connector::Overwrite,
                (1, 1) => {
                    routes.push(layout.connector_route(v, ins[0], outs[0]));
                    Connector::Route
                }
                _ => Connector::Environment,
            };
        }
        let segments: Vec<Segment> = routes.iter().flat_map(|r| segments_of(r)).collect();
        let mut index: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, s) in segments.iter().enumerate() {
            // integer bounding box grown by the painted half-width
            let x0 = (s.a.0.min(s.b.0) - 6).div_euclid(2);
            let x1 = (s.a.0.max(s.b.0) + 6).div_euclid(2);
            let y0 = (s.a.1.min(s.b.1) - 6).div_euclid(2);
            let y1 = (s.a.1.max(s.b.1) + 6).div_euclid(2);
            for tx in x0.max(0) / TILE..=x1.clamp(0, layout.size) / TILE {
                for ty in y0.max(0) / TILE..=y1.clamp(0, layout.size) / TILE {
                    index.entry((tx, ty)).or_default().push(i);
                }
            }
        }
        let crossings = layout
            .crossings()
            .into_iter()
            .map(|c| {
                let view = match (edges.contains(&c.vertical), edges.contains(&c.horizontal)) {
                    (false, false) => View::None,
                    (true, false) => View::Vertical,
                    (false, true) => View::Horizontal,
                    (true, true) => View::Both,
                };
                let segments = gadget(view)
                    .iter()
                    .flat_map(|poly| {
                        let pts: Vec<Pt> = poly.iter().map(|&p| c.place(p)).collect();
                        segments_of(&pts).collect::<Vec<_>>()
                    })
                    .collect();
                CrossingPaint { crossing: c, view, segments }
            })
            .collect();
        let tiles_per_side = layout.size / TILE + 1;
        let tiles = (0..tiles_per_side * tiles_per_side).map(|_| OnceLock::new()).collect();
        Ok(GridLabeling { layout, edges, connectors, segments, index, crossings, tiles_per_side, tiles })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn shared_layout(&self) -> Arc<Layout> {
        self.layout.clone()
    }

    pub fn n(&self) -> usize {
        self.layout.n
    }

    pub fn size(&self) -> i64 {
        self.layout.size
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    /// Potential crossings with this party's view of each.
    pub fn crossing_directory(&self) -> Vec<(Crossing, View)> {
        self.crossings.iter().map(|c| (c.crossing, c.view)).collect()
    }

    fn crossing_at_column(&self, x: i64) -> Option<&CrossingPaint> {
        let i = self.crossings.partition_point(|c| c.crossing.x_range().1 < x);
        self.crossings.get(i).filter(|c| c.crossing.x_range().0 <= x)
    }

    /// Boost sign in `{-1, 0, 1}` at grid column `x`.
    pub fn boost(&self, x: i64) -> i8 {
        match self.crossing_at_column(x) {
            Some(c) if c.view == View::Both => c.crossing.boost_sign(x),
            _ => 0,
        }
    }

    /// Label at grid point `(x, y)` with `0 <= x, y <= N`.
    pub fn label(&self, x: i64, y: i64) -> u8 {
        let (tx, ty) = (x / TILE, y / TILE);
        let tile = self.tiles[(tx * self.tiles_per_side + ty) as usize].get_or_init(|| self.compute_tile(tx, ty));
        tile[((x - tx * TILE) * TILE + (y - ty * TILE)) as usize]
    }

    fn compute_tile(&self, tx: i64, ty: i64) -> Box<[u8]> {
        let ids = self.index.get(&(tx, ty)).map(Vec::as_slice).unwrap_or(&[]);
        let mut out = vec![E; (TILE * TILE) as usize];
        for dx in 0..TILE {
            let x = tx * TILE + dx;
            if x > self.layout.size {
                break;
            }
            for dy in 0..TILE {
                let y = ty * TILE + dy;
                if y > self.layout.size {
                    break;
                }
                out[(dx * TILE + dy) as usize] = self.compute(x, y, ids);
            }
        }
        out.into_boxed_slice()
    }

    /// Uncached label; `ids` are candidate segments near the point.
    fn compute(&self, x: i64, y: i64, ids: &[usize]) -> u8 {
        let size = self.layout.size;
        if y <= 2 {
            return C;
        }
        if y >= size - 2 {
            return E;
        }
        if x <= 2 {
            return L;
        }
        if x >= size - 2 {
            return R;
        }
        let p = (2 * x, 2 * y);
        if y <= 4 {
            let xs = self.layout.start_x();
            if x <= xs - 3 {
                return L;
            }
            if x >= xs + 4 {
                return R;
            }
            return paint(&self.segments, ids.iter().copied(), p).unwrap_or(E);
        }
        if let (Some(v), Some(w)) = (self.layout.vertex_at(x), self.layout.vertex_at(y)) {
            let (lo, hi) = self.layout.connector_range(v);
            if v == w && (lo..=hi).contains(&x) && (lo..=hi).contains(&y) {
                match self.connectors[v] {
                    Connector::Overwrite => return R,
                    Connector::Environment => return E,
                    Connector::Route => {}
                }
            }
        }
        if let Some(c) = self.crossing_at_column(x) {
            if c.crossing.contains(x, y) {
                return paint(&c.segments, 0..c.segments.len(), p).unwrap_or(E);
            }
        }
        paint(&self.segments, ids.iter().copied(), p).unwrap_or(E)
    }

    /// Labels of `[x0, x1] × [y0, y1]`, row by row from the top.
    pub fn window(&self, x0: i64, x1: i64, y0: i64, y1: i64) -> Vec<Vec<u8>> {
        (y0..=y1).rev().map(|y| (x0..=x1).map(|x| self.label(x, y)).collect()).collect()
    }
}

/// The grid point labels written as `E`, `C`, `L`, `R` rows, top row first.
pub fn render_ascii(rows: &[Vec<u8>]) -> String {
    rows.iter().map(|r| r.iter().map(|&l| label_name(l)).collect::<String>() + "\n").collect()
}
