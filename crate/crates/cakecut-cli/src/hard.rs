use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;
use std::sync::Arc;

use cakecut::hardgen::{
    crossings_disjoint, ef_to_eol, embedding_constraints, enumerate_square_categories, export_svg, gadget_windows,
    hard_search, identical_instance, make_path_instance, max_label_step, party_valuations, sample_claims,
    validate_promises, Edge, EoLGraph, EolOutcome, GridLabeling, HardValuation, IEoLInstance, Window,
};
use cakecut::io::ValuationSpec;
use cakecut::{CakeError, Scalar};
use clap::Args;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::{read_text, write_json, CliError, CliResult};

#[derive(Args)]
pub struct InstanceArgs {
    /// Hard instance JSON written by `gen-hard`.
    #[arg(long = "in", conflicts_with_all = ["n", "path"])]
    input: Option<PathBuf>,
    /// Vertex count.
    #[arg(long)]
    n: Option<usize>,
    /// Active path from vertex 1, comma separated.
    #[arg(long, value_delimiter = ',')]
    path: Vec<usize>,
    /// JSON list of `{"party": p, "edge": [u, v]}` inactive edges.
    #[arg(long)]
    decorations: Option<PathBuf>,
}

#[derive(Args)]
pub struct GenArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 30_000_000)]
    budget_squares: u64,
    #[arg(long, default_value_t = 100_000_000)]
    budget_divisions: u64,
    /// Also sample divisions for each claim and check them exactly.
    #[arg(long)]
    verify_claims: bool,
    #[arg(long, default_value_t = 1000)]
    claim_samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Render party `--svg-party`'s labels on `x0,x1,y0,y1` to `--svg-out`.
    #[arg(long, value_parser = parse_window)]
    export_svg: Option<Window>,
    #[arg(long, default_value_t = 1)]
    svg_party: usize,
    #[arg(long, default_value = "labeling.svg")]
    svg_out: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_window(s: &str) -> Result<Window, String> {
    let v: Vec<i64> =
        s.split(',').map(|t| t.trim().parse().map_err(|e| format!("{t}: {e}"))).collect::<Result<_, _>>()?;
    match v[..] {
        [x0, x1, y0, y1] if x0 <= x1 && y0 <= y1 => Ok(Window { x0, x1, y0, y1 }),
        _ => Err("expected x0,x1,y0,y1 with x0 <= x1 and y0 <= y1".into()),
    }
}

#[derive(Deserialize)]
struct Decoration {
    party: usize,
    edge: Edge,
}

#[derive(Serialize, Deserialize)]
pub struct HardFile {
    pub instance: IEoLInstance,
    pub agents: Vec<ValuationSpec>,
}

fn load(a: &InstanceArgs) -> CliResult<IEoLInstance> {
    if let Some(p) = &a.input {
        let file: HardFile = serde_json::from_str(&read_text(p)?).map_err(|e| CakeError::Parse(e.to_string()))?;
        return Ok(file.instance);
    }
    let n = a.n.ok_or_else(|| CakeError::Domain("either --in or --n and --path are required".into()))?;
    let decorations: Vec<Decoration> = match &a.decorations {
        Some(p) => serde_json::from_str(&read_text(p)?).map_err(|e| CakeError::Parse(e.to_string()))?,
        None => Vec::new(),
    };
    let decs: Vec<(usize, Edge)> = decorations.iter().map(|d| (d.party, d.edge)).collect();
    Ok(make_path_instance(n, &a.path, &decs)?)
}

pub fn gen(a: &GenArgs) -> CliResult<()> {
    let instance = load(&a.instance)?;
    let agents = instance
        .supersets
        .iter()
        .map(|s| ValuationSpec::LazyHard { n: instance.n, edges: s.iter().copied().collect() })
        .collect();
    write_json(&a.out, &HardFile { instance, agents })
}

#[derive(Serialize, PartialEq, Eq, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    status: Status,
    detail: Value,
}

fn pass_if(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

fn valuations(inst: &IEoLInstance) -> CliResult<([Arc<HardValuation>; 4], bool)> {
    let identical = inst.supersets.iter().all(|s| s == &inst.supersets[0]);
    if identical {
        let g = EoLGraph::from_edges(inst.n, &inst.supersets[0])?;
        if g.is_standard() {
            return Ok((identical_instance(&g)?, true));
        }
    }
    Ok((party_valuations(&inst.supersets, inst.n)?, false))
}

fn categories(labs: &[&GridLabeling; 4], budget: u64) -> CliResult<Check> {
    let size = labs[0].size() as u64;
    let (scope, windows) = if size * size <= budget {
        ("full", vec![None])
    } else {
        ("gadget-windows", gadget_windows(labs[0]).into_iter().map(Some).collect())
    };
    let (mut squares, mut exempt, mut unc) = (0, 0, 0);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut examples = Vec::new();
    for w in windows {
        let r = enumerate_square_categories(labs, w, budget)?;
        squares += r.squares;
        exempt += r.exempt;
        unc += r.uncategorized;
        for (k, v) in r.counts {
            *counts.entry(k).or_default() += v;
        }
        examples.extend(r.examples);
    }
    examples.truncate(32);
    Ok(Check {
        name: "square-categories",
        status: pass_if(unc == 0),
        detail: json!({ "scope": scope, "squares": squares, "exempt": exempt, "uncategorized": unc, "counts": counts, "examples": examples }),
    })
}

fn search(vals: &[Arc<HardValuation>; 4], identical: bool, budget: u64) -> CliResult<Check> {
    if !identical {
        let detail = json!("the search runs on identical-agent instances only");
        return Ok(Check { name: "envy-free-divisions", status: Status::Skipped, detail });
    }
    let r = match hard_search(vals, &embedding_constraints(Scalar::zero()), budget) {
        Ok(r) => r,
        Err(CakeError::Resource(m)) => {
            return Ok(Check { name: "envy-free-divisions", status: Status::Skipped, detail: json!(m) })
        }
        Err(e) => return Err(e.into()),
    };
    let labs: [&GridLabeling; 4] = std::array::from_fn(|i| vals[i].labeling());
    let mut vertices: BTreeMap<String, u64> = BTreeMap::new();
    let mut stray = 0;
    for d in &r.divisions {
        match ef_to_eol(d, &labs)? {
            EolOutcome::Vertex(v) => *vertices.entry(v.to_string()).or_default() += 1,
            EolOutcome::NotInSolutionRegion => stray += 1,
        }
    }
    Ok(Check {
        name: "envy-free-divisions",
        status: pass_if(!r.divisions.is_empty() && stray == 0),
        detail: json!({ "divisions": r.divisions.len(), "evaluations": r.evaluations, "byVertex": vertices, "outsideSolutions": stray }),
    })
}

pub fn verify(a: &VerifyArgs) -> CliResult<()> {
    let inst = load(&a.instance)?;
    let mut checks = Vec::new();
    let promises = validate_promises(&inst);
    checks.push(Check { name: "promises", status: pass_if(promises.passed()), detail: json!(promises.violations) });
    let (vals, identical) = valuations(&inst)?;
    let labs: [&GridLabeling; 4] = std::array::from_fn(|i| vals[i].labeling());
    let disjoint = labs.iter().all(|g| crossings_disjoint(g));
    checks.push(Check {
        name: "crossings-disjoint",
        status: pass_if(disjoint),
        detail: json!(labs[0].layout().crossings().len()),
    });
    let step = gadget_windows(labs[0]).into_iter().flat_map(|w| labs.map(|g| max_label_step(g, w))).max().unwrap_or(0);
    checks.push(Check { name: "label-steps", status: pass_if(step <= 2), detail: json!(step) });
    checks.push(categories(&labs, a.budget_squares)?);
    checks.push(search(&vals, identical, a.budget_divisions)?);
    if a.verify_claims {
        for s in sample_claims(&vals, &gadget_windows(labs[0]), a.claim_samples, a.seed)? {
            let status = if s.squares == 0 {
                Status::Skipped
            } else {
                pass_if(s.counterexamples.is_empty() && s.sampled >= a.claim_samples)
            };
            checks.push(Check { name: s.claim.name(), status, detail: json!(s) });
        }
    }
    if let Some(w) = a.export_svg {
        let party = labs.get(a.svg_party.wrapping_sub(1)).ok_or_else(|| CakeError::Domain("no such party".into()))?;
        fs::write(&a.svg_out, export_svg(party, w))?;
    }
    let passed = checks.iter().all(|c| c.status != Status::Fail);
    write_json(&a.out, &json!({ "passed": passed, "checks": checks }))?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Failed)
    }
}
