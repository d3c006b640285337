//! Browser bindings: solve a generated or pasted instance, check it against the grid oracle,
//! and render part of a hard instance's labeling.

use std::collections::BTreeSet;

use cakecut::gen::{random_density_instance, random_grid_instance};
use cakecut::hardgen::{embed_labeling, export_svg, Window};
use cakecut::io::{ErrorReport, InstanceFile, SolverResult, ValuationSpec};
use cakecut::lift::solve3;
use cakecut::oracle::brute_force_with_budget;
use cakecut::solver::{solve2, solve4, solve4_rw};
use cakecut::{CakeError, Scalar, Valuation};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wasm_bindgen::prelude::*;

/// Oracle evaluations allowed in the page.
pub const ORACLE_BUDGET: u64 = 50_000_000;
/// Largest rendered labeling window side.
pub const MAX_WINDOW: i64 = 400;

fn err(e: CakeError) -> String {
    serde_json::to_string(&ErrorReport::from(&e)).expect("serializable")
}

fn scalar(s: &str) -> Result<Scalar, String> {
    s.trim().parse::<Scalar>().map_err(err)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serializable")
}

/// Seeded instance: `kind` is `grid` (monotone, step 1/64) or `density` (additive, 8 segments).
pub fn random_instance_json(kind: &str, agents: usize, seed: u64) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let agents_spec = match kind {
        "grid" => random_grid_instance(&mut rng, agents, 64).map_err(err)?.iter().map(ValuationSpec::grid).collect(),
        "density" => {
            random_density_instance(&mut rng, agents, 8).map_err(err)?.iter().map(ValuationSpec::density).collect()
        }
        _ => return Err(err(CakeError::Domain(format!("unknown instance kind {kind}")))),
    };
    Ok(to_json(&InstanceFile { agents: agents_spec, seed: Some(seed) }))
}

/// Run the solver that matches the instance's agent count, or the cut-query solver with `rw`.
pub fn solve_json(instance: &str, epsilon: &str, rw: bool) -> Result<String, String> {
    let inst = InstanceFile::parse(instance).map_err(err)?;
    let eps = scalar(epsilon)?;
    let r = if rw {
        let r = solve4_rw(&inst.build_densities().map_err(err)?, &eps, false).map_err(err)?;
        SolverResult::new(&r.allocation, &r.max_envy, Some(&r.queries))
    } else {
        let vals = inst.build().map_err(err)?;
        match vals.len() {
            2 => {
                let r = solve2(&vals, &eps, false).map_err(err)?;
                SolverResult::new(&r.allocation, &r.max_envy, Some(&r.queries))
            }
            3 => {
                let r = solve3(&vals, &eps, false).map_err(err)?;
                SolverResult::new(&r.allocation, &r.max_envy, Some(&r.lifted.queries))
            }
            _ => {
                let r = solve4(&vals, &eps, false).map_err(err)?;
                SolverResult::new(&r.allocation, &r.max_envy, Some(&r.queries))
            }
        }
    };
    Ok(to_json(&r))
}

/// Least-envy allocation over the grid of `step`.
pub fn oracle_json(instance: &str, step: &str) -> Result<String, String> {
    let inst = InstanceFile::parse(instance).map_err(err)?;
    let vals = inst.build().map_err(err)?;
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
    let r = brute_force_with_budget(&refs, &scalar(step)?, ORACLE_BUDGET).map_err(err)?;
    let mut out = SolverResult::new(&r.best, &r.best_envy, None);
    out.grid_step = Some(r.grid_step);
    Ok(to_json(&out))
}

/// SVG of the labeling of the path `path` (comma separated, from vertex 1) on `n` vertices.
pub fn labeling_svg_string(n: usize, path: &str, x0: i64, x1: i64, y0: i64, y1: i64) -> Result<String, String> {
    let verts: Vec<usize> = path
        .split(',')
        .map(|t| t.trim().parse().map_err(|_| err(CakeError::Parse(format!("bad vertex {t:?}")))))
        .collect::<Result<_, _>>()?;
    let edges: BTreeSet<(usize, usize)> = verts.windows(2).map(|w| (w[0], w[1])).collect();
    if x1 < x0 || y1 < y0 || x1 - x0 > MAX_WINDOW || y1 - y0 > MAX_WINDOW {
        return Err(err(CakeError::Domain(format!("window sides must be between 0 and {MAX_WINDOW}"))));
    }
    let g = embed_labeling(&edges, n).map_err(err)?;
    let last = g.size();
    let w = Window { x0: x0.max(0), x1: x1.min(last), y0: y0.max(0), y1: y1.min(last) };
    Ok(export_svg(&g, w))
}

#[wasm_bindgen]
pub fn random_instance(kind: &str, agents: usize, seed: u64) -> Result<String, JsValue> {
    random_instance_json(kind, agents, seed).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve(instance: &str, epsilon: &str, rw: bool) -> Result<String, JsValue> {
    solve_json(instance, epsilon, rw).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn oracle(instance: &str, step: &str) -> Result<String, JsValue> {
    oracle_json(instance, step).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn labeling_svg(n: usize, path: &str, x0: i64, x1: i64, y0: i64, y1: i64) -> Result<String, JsValue> {
    labeling_svg_string(n, path, x0, x1, y0, y1).map_err(|e| JsValue::from_str(&e))
}
