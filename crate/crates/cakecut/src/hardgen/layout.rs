//! Placement of vertex regions, lanes and routed paths on the `{0..N}²` grid.
//!
//! Path centerlines run between grid points. Points are kept in doubled coordinates so that
//! centerline vertices are odd integers and grid points even ones.

use serde::Serialize;

use super::ieol::Edge;
use crate::error::{CakeError, Result};

/// Point in doubled coordinates.
pub type Pt = (i64, i64);

/// Centerline through the gap between integer rows or columns `c` and `c + 1`.
pub fn mid(c: i64) -> i64 {
    2 * c + 1
}

/// Sublane width and distances of jogs below (up paths) or above (down paths) a lane row.
const SUBLANE: i64 = 100;
const ROW_OFFSET: i64 = 200;
const UP_JOG: i64 = 20;
const DOWN_JOG: i64 = 381;
/// Half-extent of the square crossing region around its center.
pub const CROSS_LO: i64 = 24;
pub const CROSS_HI: i64 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CrossingKind {
    /// An upward path crossing a left lane.
    Up,
    /// A downward path crossing a right lane.
    Down,
}

/// Potential crossing of the vertical part of one edge with the horizontal part of another.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Crossing {
    pub cx: i64,
    pub cy: i64,
    pub kind: CrossingKind,
    pub vertical: Edge,
    pub horizontal: Edge,
}

impl Crossing {
    pub fn x_range(&self) -> (i64, i64) {
        (self.cx - CROSS_LO, self.cx + CROSS_HI)
    }

    pub fn contains(&self, x: i64, y: i64) -> bool {
        (self.cx - CROSS_LO..=self.cx + CROSS_HI).contains(&x) && (self.cy - CROSS_LO..=self.cy + CROSS_HI).contains(&y)
    }

    /// Columns `(c1-, c1+, c2+, c2-)`, two grid columns each.
    pub fn boost_columns(&self) -> [[i64; 2]; 4] {
        let local = [[1, 2], [3, 4], [5, 6], [7, 8]];
        local.map(|pair| {
            pair.map(|x| match self.kind {
                CrossingKind::Up => self.cx + x,
                CrossingKind::Down => self.cx + 1 - x,
            })
        })
    }

    /// Boost sign of grid column `x` for an agent that sees both paths.
    pub fn boost_sign(&self, x: i64) -> i8 {
        let cols = self.boost_columns();
        let signs = [-1, 1, 1, -1];
        for (c, s) in cols.iter().zip(signs) {
            if c.contains(&x) {
                return s;
            }
        }
        0
    }

    /// `p` given in gadget coordinates (relative to the center, in centerline units) mapped to the grid.
    pub fn place(&self, p: (i64, i64)) -> Pt {
        let (x, y) = match self.kind {
            CrossingKind::Up => p,
            CrossingKind::Down => (-p.0, -p.1),
        };
        (mid(self.cx) + 2 * x, mid(self.cy) + 2 * y)
    }
}

/// Where a path meets a connector boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Top,
    Bottom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Port {
    pub side: Side,
    pub at: Pt,
}

#[derive(Debug, Clone, Serialize)]
pub struct Layout {
    pub n: usize,
    /// Grid size `N = 300 n^4`.
    pub size: i64,
    /// A third of a vertex region, `100 n^3`.
    pub third: i64,
    /// Lane width `100 n^2`.
    pub lane: i64,
}

impl Layout {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(CakeError::Geometry(format!("the embedding needs n >= 2, got {n}")));
        }
        if n > 64 {
            return Err(CakeError::Geometry(format!("n = {n} is too large for the grid coordinates")));
        }
        let m = n as i64;
        Ok(Layout { n, size: 300 * m.pow(4), third: 100 * m.pow(3), lane: 100 * m * m })
    }

    pub fn base(&self, j: usize) -> i64 {
        3 * self.third * (j as i64 - 1)
    }

    /// Inclusive coordinate range of the vertex region `V(j)` along either axis.
    pub fn vertex_range(&self, j: usize) -> (i64, i64) {
        let b = self.base(j);
        (b + 1, b + 3 * self.third)
    }

    /// Inclusive coordinate range of the connector of `V(j)` along either axis.
    pub fn connector_range(&self, j: usize) -> (i64, i64) {
        let b = self.base(j);
        (b + self.third + 1, b + 2 * self.third)
    }

    /// Vertex whose region contains the diagonal position `c`.
    pub fn vertex_at(&self, c: i64) -> Option<usize> {
        if c < 1 || c > self.size {
            return None;
        }
        Some(((c - 1) / (3 * self.third)) as usize + 1)
    }

    /// Row `c` of the horizontal lane carrying `p -> q` inside the band of `V(q)`.
    pub fn row(&self, q: usize, p: usize) -> i64 {
        self.base(q) + self.third + self.lane * (p as i64 - 1) + ROW_OFFSET
    }

    fn row_floor(&self, q: usize, p: usize) -> i64 {
        self.row(q, p) - ROW_OFFSET
    }

    fn sublane_center(&self, lane_x: i64, s: usize) -> i64 {
        lane_x + SUBLANE * (s as i64 - 1) + SUBLANE / 2
    }

    fn sublane(&self, q: usize, p: usize) -> usize {
        (q - 1) * self.n + p
    }

    fn top_lane(&self, j: usize, k: usize) -> i64 {
        self.base(j) + 2 * self.third + self.lane * (k as i64 - 1)
    }

    fn bottom_lane(&self, j: usize, k: usize) -> i64 {
        self.base(j) + self.lane * (k as i64 - 1)
    }

    fn exit_x(&self, j: usize, k: usize) -> i64 {
        self.base(j) + self.third + self.lane * (k as i64 - 1) + ROW_OFFSET
    }

    /// Column of the start path.
    pub fn start_x(&self) -> i64 {
        self.third + self.third / 2
    }

    pub fn start_port(&self) -> Port {
        Port { side: Side::Bottom, at: (mid(self.start_x()), mid(self.third)) }
    }

    pub fn out_port(&self, (j, k): Edge) -> Port {
        let b = self.base(j);
        if k > j {
            Port { side: Side::Top, at: (mid(self.exit_x(j, k)), mid(b + 2 * self.third)) }
        } else {
            Port { side: Side::Bottom, at: (mid(self.exit_x(j, k)), mid(b + self.third)) }
        }
    }

    pub fn in_port(&self, (j, k): Edge) -> Port {
        let b = self.base(k);
        let y = mid(self.row(k, j));
        if j < k {
            Port { side: Side::Left, at: (mid(b + self.third), y) }
        } else {
            Port { side: Side::Right, at: (mid(b + 2 * self.third), y) }
        }
    }

    /// Lane rows passed by the vertical part of `j -> k`, in travel order, before its turn.
    pub fn rows_passed(&self, (j, k): Edge) -> Vec<(usize, usize)> {
        let n = self.n;
        let mut rows = Vec::new();
        if k > j {
            for q in j + 1..=k {
                let last = if q == k { j - 1 } else { n };
                rows.extend((1..=last).map(|p| (q, p)));
            }
        } else {
            for q in (k..j).rev() {
                let first = if q == k { j + 1 } else { 1 };
                rows.extend((first..=n).rev().map(|p| (q, p)));
            }
        }
        rows
    }

    /// Centerline of `j -> k` from its out-port to its in-port.
    pub fn edge_route(&self, e: Edge) -> Vec<Pt> {
        let (j, k) = e;
        let up = k > j;
        let out = self.out_port(e).at;
        let inp = self.in_port(e).at;
        let step = 100 * if up { self.n as i64 - k as i64 + 1 } else { -(k as i64) };
        let turn_y = if up { self.base(j) + 2 * self.third + step } else { self.base(j) + self.third + step };
        let lane_x = if up { self.top_lane(j, k) } else { self.bottom_lane(j, k) };
        let rows = self.rows_passed(e);
        let first = rows.first().map(|&(q, p)| self.sublane(q, p)).unwrap_or(if up {
            j * self.n + 1
        } else {
            (j - 1) * self.n
        });
        let mut x = self.sublane_center(lane_x, first);
        let mut pts = vec![out, (out.0, mid(turn_y)), (mid(x), mid(turn_y))];
        for &(q, p) in rows.iter().skip(1) {
            let nx = self.sublane_center(lane_x, self.sublane(q, p));
            if nx != x {
                let jog = if up { self.row_floor(q, p) + UP_JOG } else { self.row_floor(q, p) + DOWN_JOG };
                pts.push((mid(x), mid(jog)));
                pts.push((mid(nx), mid(jog)));
                x = nx;
            }
        }
        pts.push((mid(x), inp.1));
        pts.push(inp);
        pts
    }

    /// Start path from below the grid up to the bottom of the first connector.
    pub fn start_route(&self) -> Vec<Pt> {
        let p = self.start_port().at;
        vec![(p.0, -21), p]
    }

    /// Route inside the connector of `v` joining an in-port to an out-port.
    pub fn connector_route(&self, v: usize, from: Port, to: Port) -> Vec<Pt> {
        let (a, b) = (from.at, to.at);
        match from.side {
            Side::Left | Side::Right => vec![a, (b.0, a.1), b],
            Side::Top | Side::Bottom => {
                if a.0 == b.0 {
                    vec![a, b]
                } else {
                    let m = mid(self.base(v) + self.third + self.third / 2);
                    vec![a, (a.0, m), (b.0, m), b]
                }
            }
        }
    }

    /// Every place where the vertical part of one possible edge meets the horizontal part of another.
    pub fn crossings(&self) -> Vec<Crossing> {
        let n = self.n;
        let mut out = Vec::new();
        for j in 1..=n {
            for k in 1..=n {
                if j == k {
                    continue;
                }
                let up = k > j;
                let lane_x = if up { self.top_lane(j, k) } else { self.bottom_lane(j, k) };
                for (q, p) in self.rows_passed((j, k)) {
                    let hits =
                        if up { p < q && (p < j || (p == j && q < k)) } else { p > q && (p > j || (p == j && q > k)) };
                    if hits {
                        out.push(Crossing {
                            cx: self.sublane_center(lane_x, self.sublane(q, p)),
                            cy: self.row(q, p),
                            kind: if up { CrossingKind::Up } else { CrossingKind::Down },
                            vertical: (j, k),
                            horizontal: (p, q),
                        });
                    }
                }
            }
        }
        out.sort_by_key(|c| c.cx);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants() {
        let l = Layout::new(2).unwrap();
        assert_eq!((l.size, l.third, l.lane), (4800, 800, 400));
        assert_eq!(l.vertex_range(2), (2401, 4800));
        assert_eq!(l.connector_range(1), (801, 1600));
        assert!(Layout::new(1).is_err());
    }

    #[test]
    fn routes_are_axis_parallel_and_join_ports() {
        for n in 2..=4 {
            let l = Layout::new(n).unwrap();
            for j in 1..=n {
                for k in 1..=n {
                    if j == k {
                        continue;
                    }
                    let r = l.edge_route((j, k));
                    assert_eq!(r[0], l.out_port((j, k)).at);
                    assert_eq!(*r.last().unwrap(), l.in_port((j, k)).at);
                    for w in r.windows(2) {
                        assert!(w[0].0 == w[1].0 || w[0].1 == w[1].1);
                        assert!(w[0].0 % 2 != 0 && w[0].1 % 2 != 0);
                    }
                }
            }
        }
    }

    #[test]
    fn crossings_are_x_disjoint() {
        assert!(Layout::new(2).unwrap().crossings().is_empty());
        for n in 3..=5 {
            let c = Layout::new(n).unwrap().crossings();
            assert!(!c.is_empty());
            for w in c.windows(2) {
                assert!(w[0].x_range().1 < w[1].x_range().0);
            }
        }
    }

    #[test]
    fn crossing_lies_on_both_routes() {
        let l = Layout::new(4).unwrap();
        for c in l.crossings() {
            let on = |route: &[Pt], p: Pt| {
                route.windows(2).any(|w| {
                    let (a, b) = (w[0], w[1]);
                    (a.0 == b.0 && a.0 == p.0 && a.1.min(b.1) < p.1 && p.1 < a.1.max(b.1))
                        || (a.1 == b.1 && a.1 == p.1 && a.0.min(b.0) < p.0 && p.0 < a.0.max(b.0))
                })
            };
            let center = (mid(c.cx), mid(c.cy));
            assert!(on(&l.edge_route(c.vertical), center), "{c:?}");
            assert!(on(&l.edge_route(c.horizontal), center), "{c:?}");
        }
    }
}
