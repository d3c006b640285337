//! Checks on hard instances: mapping envy-free divisions back to End-of-Line solutions,
//! sampled refutation of the six claims, and global well-formedness of the labelings.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::categories::{active_graph, touches_region, Claim, SquareView, Window, AGENTS};
use super::label::{first_label, second_label, GridLabeling, C, E, L};
use super::value::{HardValuation, RefinedTable};
use crate::error::{domain, Result};
use crate::oracle::{constrained_search_units, ConstrainedResult, Constraints, UnitTable};
use crate::scalar::Scalar;
use crate::solver::best_assignment;
use crate::valuation::{value_matrix, Division, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum EolOutcome {
    Vertex(usize),
    NotInSolutionRegion,
}

/// Labeling-grid coordinate of `t` on an axis starting at `origin` (in units of `δ = 1/(10N)`).
fn axis(t: &Scalar, origin: &Scalar, size: i64) -> Scalar {
    (t - origin) * Scalar::from_int(10 * size)
}

/// Squares `[s, s+1]` containing the coordinate `c`, clipped to `0..size`.
fn squares_at(c: &Scalar, size: i64) -> Vec<i64> {
    let f = c.floor().to_i64().expect("bounded coordinate");
    let mut out = vec![f];
    if Scalar::from_int(f) == *c {
        out.push(f - 1);
    }
    out.retain(|&s| (0..size).contains(&s));
    out
}

/// The End-of-Line solution whose vertex region touches the square of `(l, m)`.
pub fn ef_to_eol(div: &Division, labelings: &[&GridLabeling; AGENTS]) -> Result<EolOutcome> {
    if div.cuts.len() != 3 {
        return domain("expected a division into four pieces");
    }
    let (l, m) = (&div.cuts[0], &div.cuts[1]);
    if l < &Scalar::new(1, 5) || l > &Scalar::new(3, 10) || m < &Scalar::new(9, 20) || m > &Scalar::new(11, 20) {
        return domain(format!("cuts l = {l}, m = {m} lie outside the embedding ranges"));
    }
    let g = labelings[0];
    let size = g.size();
    let xs = squares_at(&axis(l, &Scalar::new(1, 5), size), size);
    let ys = squares_at(&axis(m, &Scalar::new(9, 20), size), size);
    let solutions = active_graph(labelings)?.solutions();
    for &v in &solutions {
        if xs.iter().any(|&x| ys.iter().any(|&y| touches_region(g, v, x, y))) {
            return Ok(EolOutcome::Vertex(v));
        }
    }
    Ok(EolOutcome::NotInSolutionRegion)
}

/// Windows of squares around every crossing region and every vertex-region corner, where the
/// gadgets live.
pub fn gadget_windows(g: &GridLabeling) -> Vec<Window> {
    let last = g.size() - 1;
    let layout = g.layout();
    let mut out: Vec<Window> = layout.crossings().iter().map(|c| Window::around(c.cx, c.cy, 80)).collect();
    for v in 1..=g.n() {
        let (lo, hi) = layout.vertex_range(v);
        for (cx, cy) in [(lo, lo), (hi, hi), (lo, hi), (hi, lo)] {
            out.push(Window::around(cx, cy, 60));
        }
    }
    out.into_iter()
        .map(|w| Window { x0: w.x0.max(0), x1: w.x1.min(last), y0: w.y0.max(0), y1: w.y1.min(last) })
        .collect()
}

/// The embedding ranges `l ∈ [0.2, 0.3]`, `m ∈ [0.45, 0.55]` with `|1 - r - l| <= band`.
pub fn embedding_constraints(band: Scalar) -> Constraints {
    Constraints {
        l_range: (Scalar::new(1, 5), Scalar::new(3, 10)),
        m_range: (Scalar::new(9, 20), Scalar::new(11, 20)),
        band,
    }
}

/// [`constrained_search_units`] at tolerance `ε` on the `δ/2` refinement of `D`.
pub fn hard_search(vals: &[Arc<HardValuation>; AGENTS], c: &Constraints, budget: u64) -> Result<ConstrainedResult> {
    let tables: Vec<RefinedTable> = vals.iter().map(|v| RefinedTable::new(v)).collect();
    let first = |i: usize| (0..=i).find(|&j| Arc::ptr_eq(&vals[j], &vals[i])).unwrap();
    let refs: Vec<&dyn UnitTable> = (0..AGENTS).map(|i| &tables[first(i)] as &dyn UnitTable).collect();
    constrained_search_units(&refs, &tables[0].unit(), &vals[0].epsilon(), c, budget)
}

/// Whether no two crossing regions share a column.
pub fn crossings_disjoint(g: &GridLabeling) -> bool {
    let c = g.layout().crossings();
    c.windows(2).all(|w| w[0].x_range().1 < w[1].x_range().0)
}

/// Largest change of either label coordinate between horizontally or vertically adjacent grid points.
pub fn max_label_step(g: &GridLabeling, w: Window) -> i8 {
    let mut worst = 0;
    for x in w.x0..=w.x1 {
        for y in w.y0..=w.y1 {
            let here = g.label(x, y);
            for (dx, dy) in [(1, 0), (0, 1)] {
                if x + dx > w.x1 || y + dy > w.y1 {
                    continue;
                }
                let there = g.label(x + dx, y + dy);
                let d1 = (first_label(here) - first_label(there)).abs();
                let d2 = (second_label(here) - second_label(there)).abs();
                worst = worst.max(d1).max(d2);
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ClaimSample {
    pub claim: Claim,
    /// Squares in the scanned windows satisfying the hypothesis.
    pub squares: u64,
    /// Of those, squares where some agents disagree.
    pub disagreeing: u64,
    pub sampled: usize,
    /// Sampled divisions that nevertheless admit an `ε`-envy-free assignment.
    pub counterexamples: Vec<Division>,
}

struct Pool {
    seen: u64,
    kept: Vec<(i64, i64)>,
}

impl Pool {
    fn offer(&mut self, sq: (i64, i64), cap: usize, rng: &mut ChaCha8Rng) {
        self.seen += 1;
        if self.kept.len() < cap {
            self.kept.push(sq);
        } else {
            let i = rng.gen_range(0..self.seen);
            if (i as usize) < cap {
                self.kept[i as usize] = sq;
            }
        }
    }
}

/// Division with `(l, m)` at a random quarter-grid point of square `(x, y)` and `r` on a
/// `β/2` step within `2β` of `1 - l`.
fn division_in_square(x: i64, y: i64, size: i64, rng: &mut ChaCha8Rng) -> Result<Division> {
    let q = 40 * size;
    let l = Scalar::new(1, 5) + Scalar::new(4 * x + rng.gen_range(0..=4), q);
    let m = Scalar::new(9, 20) + Scalar::new(4 * y + rng.gen_range(0..=4), q);
    let mut r = Scalar::one() - &l + Scalar::new(rng.gen_range(-4..=4), 160 * size);
    if r < Scalar::new(7, 10) || r > Scalar::new(4, 5) {
        r = Scalar::one() - &l;
    }
    Division::three(l, m, r)
}

/// For every claim, up to `per_claim` divisions whose `(l, m)` square satisfies its hypothesis,
/// each checked exactly over all assignments. Squares where agents disagree are preferred.
pub fn sample_claims(
    vals: &[Arc<HardValuation>; AGENTS],
    windows: &[Window],
    per_claim: usize,
    seed: u64,
) -> Result<Vec<ClaimSample>> {
    let labelings: [&GridLabeling; AGENTS] = std::array::from_fn(|i| vals[i].labeling());
    let size = labelings[0].size();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pools: BTreeMap<(Claim, bool), Pool> = BTreeMap::new();
    for w in windows {
        for x in w.x0.max(0)..=w.x1.min(size - 1) {
            for y in w.y0.max(0)..=w.y1.min(size - 1) {
                let view = SquareView::read(&labelings, x, y);
                let dis = view.disagreement();
                for c in Claim::ALL {
                    if view.holds(c) {
                        pools.entry((c, dis)).or_insert(Pool { seen: 0, kept: Vec::new() }).offer(
                            (x, y),
                            per_claim,
                            &mut rng,
                        );
                    }
                }
            }
        }
    }
    let eps = vals[0].epsilon();
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref() as &dyn Valuation).collect();
    let mut out = Vec::new();
    for claim in Claim::ALL {
        let empty = Pool { seen: 0, kept: Vec::new() };
        let dis = pools.get(&(claim, true)).unwrap_or(&empty);
        let agree = pools.get(&(claim, false)).unwrap_or(&empty);
        let mut squares: Vec<(i64, i64)> = dis.kept.iter().chain(&agree.kept).copied().take(per_claim).collect();
        let mut sample = ClaimSample {
            claim,
            squares: dis.seen + agree.seen,
            disagreeing: dis.seen,
            sampled: 0,
            counterexamples: Vec::new(),
        };
        if squares.is_empty() {
            out.push(sample);
            continue;
        }
        let base = squares.len();
        for i in 0..per_claim.saturating_sub(base) {
            squares.push(squares[i % base]);
        }
        for (x, y) in squares {
            let div = division_in_square(x, y, size, &mut rng)?;
            let (_, envy) = best_assignment(&value_matrix(&refs, &div)?);
            if envy <= eps {
                sample.counterexamples.push(div);
            }
            sample.sampled += 1;
        }
        out.push(sample);
    }
    Ok(out)
}

/// SVG rendering of the labels in `w`, one square cell per grid point.
pub fn export_svg(g: &GridLabeling, w: Window) -> String {
    let (cols, rows) = (w.x1 - w.x0 + 1, w.y1 - w.y0 + 1);
    let colour = |l: u8| match l {
        E => "#e8e8e8",
        C => "#3060c0",
        L => "#40a040",
        _ => "#d04040",
    };
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {cols} {rows}" shape-rendering="crispEdges">"#
    );
    for x in w.x0..=w.x1 {
        for y in w.y0..=w.y1 {
            let b = g.boost(x);
            let _ = write!(
                s,
                r#"<rect x="{}" y="{}" width="1" height="1" fill="{}""#,
                x - w.x0,
                w.y1 - y,
                colour(g.label(x, y))
            );
            if b != 0 {
                let _ = write!(s, r#" stroke="{}" stroke-width="0.1""#, if b > 0 { "#000" } else { "#fff" });
            }
            s.push_str("/>\n");
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hardgen::ieol::EoLGraph;
    use crate::hardgen::value::identical_instance;
    use crate::scalar::rat;

    #[test]
    fn outside_ranges_is_rejected() {
        let g = EoLGraph::from_edges(2, &[(1, 2)].into_iter().collect()).unwrap();
        let vals = identical_instance(&g).unwrap();
        let labs: [&GridLabeling; 4] = std::array::from_fn(|i| vals[i].labeling());
        let bad = Division::three(rat(1, 10), rat(1, 2), rat(3, 4)).unwrap();
        assert!(ef_to_eol(&bad, &labs).is_err());
        let far = Division::three(rat(21, 100), rat(46, 100), rat(79, 100)).unwrap();
        assert_eq!(ef_to_eol(&far, &labs).unwrap(), EolOutcome::NotInSolutionRegion);
        let inside = Division::three(rat(29, 100), rat(54, 100), rat(71, 100)).unwrap();
        assert_eq!(ef_to_eol(&inside, &labs).unwrap(), EolOutcome::Vertex(2));
        assert!(crossings_disjoint(labs[0]));
    }

    #[test]
    fn svg_has_one_cell_per_point() {
        let g = EoLGraph::from_edges(2, &[(1, 2)].into_iter().collect()).unwrap();
        let vals = identical_instance(&g).unwrap();
        let svg = export_svg(vals[0].labeling(), Window { x0: 0, x1: 3, y0: 0, y1: 2 });
        assert_eq!(svg.matches("<rect").count(), 12);
    }
}
