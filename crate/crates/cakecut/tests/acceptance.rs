//! End-to-end acceptance checks, one line per criterion. Run with `cargo test --test acceptance`.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cakecut::bench::{fit_exponent, sweep};
use cakecut::gen::{random_density, random_grid_instance, random_grid_valuation};
use cakecut::hardgen::{
    ef_to_eol, embed_labeling, embedding_constraints, enumerate_square_categories, gadget_windows, hard_search,
    identical_instance, make_path_instance, party_valuations, sample_claims, EoLGraph, EolOutcome, GridLabeling,
};
use cakecut::lift::solve3;
use cakecut::oracle::brute_force;
use cakecut::preprocess::{grid_linearize, rw_flatten, strongly_hungrify};
use cakecut::solver::solve4;
use cakecut::{
    rat, validate_grid_valuation, Allocation, Division, GridFlags, Mode, Scalar, SharedValuation, Valuation,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS_DESK: (i64, i64) = (1, 64);
const PER_INSTANCE: Duration = Duration::from_secs(1);
const ORACLE_STEP: (i64, i64) = (1, 256);
const ORACLE_SLACK: (i64, i64) = (6, 256);
const VALUE_EXPONENT: f64 = 3.3;
const RW_EXPONENT: f64 = 2.3;
const SWEEP_BITS: std::ops::RangeInclusive<u32> = 8..=20;
const SWEEP_SEEDS: [u64; 2] = [1, 2];
const RANDOM_POINTS: usize = 10_000;
const BASE_QUERIES_PER_QUERY: u64 = 4;
const SQUARE_MINUTES: u64 = 10;
const DIVISION_BUDGET: u64 = 100_000_000;
const CLAIM_SAMPLES: usize = 1000;

/// Value queries summed over `SWEEP_SEEDS` at each `ε = 2^-bits`.
const FROZEN_VALUE: [u64; 13] =
    [89532, 121794, 152875, 180857, 210301, 268814, 311443, 381164, 444932, 527353, 559235, 679868, 777619];
/// Value and cut queries summed over `SWEEP_SEEDS` at each `ε = 2^-bits`.
const FROZEN_RW: [(u64, u64); 13] = [
    (8198, 4706),
    (10679, 6352),
    (10590, 6688),
    (11335, 7322),
    (14091, 9456),
    (14725, 10042),
    (16664, 11592),
    (17660, 12522),
    (19789, 14298),
    (18779, 13927),
    (20847, 15639),
    (23429, 17772),
    (24914, 18780),
];

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

/// Envy recomputed from piece values, independent of the library's envy routine.
fn envy_of(vals: &[SharedValuation], alloc: &Allocation) -> Result<Scalar, String> {
    let pieces = alloc.division.pieces();
    let mut worst = Scalar::zero();
    for (i, v) in vals.iter().enumerate() {
        let own = pieces[alloc.piece_of(i)].clone();
        let mine = v.eval(&own.0, &own.1).map_err(e)?;
        for (a, b) in &pieces {
            let d = v.eval(a, b).map_err(e)? - &mine;
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

/// Whether some assignment of the pieces of `d` is `eps`-envy-free, by trying all of them.
fn admits_ef(vals: &[SharedValuation], d: &Division, eps: &Scalar) -> Result<bool, String> {
    let pieces = d.pieces();
    let mut m = Vec::new();
    for v in vals {
        m.push(pieces.iter().map(|(a, b)| v.eval(a, b).map_err(e)).collect::<Result<Vec<_>, _>>()?);
    }
    let n = vals.len();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut stack = vec![0; n];
    let ok = |p: &[usize]| (0..n).all(|i| (0..n).all(|k| &m[i][k] - &m[i][p[i]] <= *eps));
    if ok(&perm) {
        return Ok(true);
    }
    let mut i = 0;
    while i < n {
        if stack[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(stack[i], i);
            }
            if ok(&perm) {
                return Ok(true);
            }
            stack[i] += 1;
            i = 0;
        } else {
            stack[i] = 0;
            i += 1;
        }
    }
    Ok(false)
}

fn grid_instance(seed: u64, agents: usize) -> Result<Vec<SharedValuation>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_grid_instance(&mut rng, agents, 64)
        .map_err(e)?
        .into_iter()
        .map(|v| Arc::new(v) as SharedValuation)
        .collect())
}

fn random_point<R: Rng>(rng: &mut R) -> Scalar {
    Scalar::new(rng.gen_range(0..=10_007), 10_007)
}

fn desk_scale() -> Outcome {
    let eps = rat(EPS_DESK.0, EPS_DESK.1);
    let mut slowest = Duration::ZERO;
    let mut total = Duration::ZERO;
    for seed in 0..200 {
        let vals = grid_instance(seed, 4)?;
        let t = Instant::now();
        let r = solve4(&vals, &eps, false).map_err(e)?;
        let el = t.elapsed();
        slowest = slowest.max(el);
        total += el;
        let envy = envy_of(&vals, &r.allocation)?;
        ensure(envy <= eps, || format!("seed {seed}: envy {envy}"))?;
        ensure(envy == r.max_envy, || format!("seed {seed}: reported {} but recomputed {envy}", r.max_envy))?;
    }
    ensure(total / 200 < PER_INSTANCE, || format!("mean time {:?}", total / 200))?;
    Ok(format!("200/200 within 1/64, mean {:?}, slowest {:?}", total / 200, slowest))
}

fn oracle_agreement() -> Outcome {
    let eps = rat(EPS_DESK.0, EPS_DESK.1);
    let slack = rat(ORACLE_SLACK.0, ORACLE_SLACK.1);
    let mut worst_gap: Option<Scalar> = None;
    for seed in 0..50 {
        let vals = grid_instance(seed, 4)?;
        let r = solve4(&vals, &eps, false).map_err(e)?;
        let envy = envy_of(&vals, &r.allocation)?;
        ensure(envy <= eps, || format!("seed {seed}: envy {envy}"))?;
        let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
        let o = brute_force(&refs, &rat(ORACLE_STEP.0, ORACLE_STEP.1)).map_err(e)?;
        let oracle_envy = envy_of(&vals, &o.best)?;
        ensure(oracle_envy == o.best_envy, || format!("seed {seed}: oracle envy mismatch"))?;
        ensure(o.best_envy <= &envy + &slack, || format!("seed {seed}: grid best {} vs solver {envy}", o.best_envy))?;
        let gap = &o.best_envy - &envy;
        if worst_gap.as_ref().is_none_or(|w| &gap > w) {
            worst_gap = Some(gap);
        }
    }
    Ok(format!("50/50 agree, largest grid-minus-solver envy {}", worst_gap.unwrap()))
}

fn exponent_line(points: &[(u32, u64)]) -> String {
    let counts: Vec<String> = points.iter().map(|p| p.1.to_string()).collect();
    format!("exponent {:.3}, counts [{}]", fit_exponent(points), counts.join(", "))
}

fn value_scaling() -> Outcome {
    let rows = sweep(Mode::ValueOnly, &SWEEP_SEEDS, SWEEP_BITS).map_err(e)?;
    let points: Vec<(u32, u64)> = rows.iter().map(|r| (r.bits, r.value_queries)).collect();
    let line = exponent_line(&points);
    ensure(fit_exponent(&points) <= VALUE_EXPONENT, || line.clone())?;
    let counts: Vec<u64> = points.iter().map(|p| p.1).collect();
    ensure(counts == FROZEN_VALUE, || format!("counts changed: {line}"))?;
    Ok(line)
}

fn rw_scaling() -> Outcome {
    let rows = sweep(Mode::RobertsonWebb, &SWEEP_SEEDS, SWEEP_BITS).map_err(e)?;
    let points: Vec<(u32, u64)> = rows.iter().map(|r| (r.bits, r.total())).collect();
    let pairs: Vec<(u64, u64)> = rows.iter().map(|r| (r.value_queries, r.cut_queries)).collect();
    let line = format!("{}, value/cut {:?}", exponent_line(&points), pairs);
    ensure(fit_exponent(&points) <= RW_EXPONENT, || line.clone())?;
    ensure(pairs == FROZEN_RW, || format!("counts changed: {line}"))?;
    Ok(line)
}

fn preprocessing() -> Outcome {
    let eps = rat(EPS_DESK.0, EPS_DESK.1);
    let delta = eps.clone();
    let two_delta = delta.mul_int(2);
    let flags = GridFlags { monotone: true, strongly_hungry: Some(eps.clone()), lipschitz: Some(Scalar::one()) };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut pairs = 0;
    let mut points = 0;
    for (i, g) in [90u64, 100, 128, 150, 200, 37].into_iter().enumerate() {
        let base: SharedValuation = Arc::new(random_grid_valuation(&mut rng, g).map_err(e)?);
        let hungry = strongly_hungrify(base, &eps).map_err(e)?;
        let grid = grid_linearize(&hungry, &delta).map_err(e)?;
        let rep = validate_grid_valuation(&grid, &flags);
        ensure(rep.passed(), || format!("valuation {i}: {:?}", &rep.violations[..rep.violations.len().min(3)]))?;
        pairs += rep.checked_pairs;
        for _ in 0..RANDOM_POINTS / 6 + 1 {
            let (x, y) = (random_point(&mut rng), random_point(&mut rng));
            let (a, b) = if x <= y { (x, y) } else { (y, x) };
            let d = grid.eval(&a, &b).map_err(e)? - hungry.eval(&a, &b).map_err(e)?;
            ensure(Scalar::max_of(&d, &-d.clone()) <= two_delta, || format!("valuation {i} at ({a}, {b}): {d}"))?;
            points += 1;
        }
    }
    ensure(points >= RANDOM_POINTS, || format!("{points} points"))?;
    Ok(format!("6 valuations, {pairs} grid pairs, {points} random points"))
}

fn flattening() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_queries = 0;
    for i in 0..50 {
        let pieces = rng.gen_range(3..=11);
        let base = Arc::new(random_density(&mut rng, pieces).map_err(e)?);
        for m in [4u64, 16, 64] {
            let f = rw_flatten(base.clone(), m).map_err(e)?;
            let mi = m as i64;
            let xs: Vec<Scalar> = (0..=m).map(|j| f.quantile(j)).collect();
            for j in 1..=m as usize {
                ensure(xs[j - 1] < xs[j], || format!("{i}/{m}: quantiles not increasing at {j}"))?;
                let got = base.eval(&Scalar::zero(), &xs[j]).map_err(e)?;
                ensure(got == rat(j as i64, mi), || format!("{i}/{m}: v(0, x_{j}) = {got}"))?;
            }
            // linear between quantiles
            for j in 1..=m as usize {
                for _ in 0..4 {
                    let t = random_point(&mut rng);
                    let y = &xs[j - 1] + (&xs[j] - &xs[j - 1]) * &t;
                    let got = f.eval(&xs[j - 1], &y).map_err(e)?;
                    ensure(got == &t / Scalar::from_int(mi), || format!("{i}/{m}: segment {j} at t = {t}"))?;
                }
            }
            // both differences are piecewise linear, so extremes sit on the union of breakpoints
            let mut knots: BTreeSet<Scalar> = xs.iter().cloned().collect();
            knots.extend(base.breakpoints().iter().cloned());
            for _ in 0..20 {
                knots.insert(random_point(&mut rng));
            }
            let knots: Vec<Scalar> = knots.into_iter().collect();
            let approx = rat(2, mi);
            for (p, a) in knots.iter().enumerate() {
                for b in &knots[p..] {
                    let vt = f.eval(a, b).map_err(e)?;
                    let d = &vt - base.eval(a, b).map_err(e)?;
                    ensure(Scalar::max_of(&d, &-d.clone()) <= approx, || format!("{i}/{m}: ({a}, {b}) off by {d}"))?;
                    ensure(vt >= (b - a) / Scalar::from_int(mi), || format!("{i}/{m}: ({a}, {b}) not hungry"))?;
                }
            }
            // simulated one-endpoint queries on a fresh memo
            for _ in 0..10 {
                let fresh = rw_flatten(base.clone(), m).map_err(e)?;
                fresh.prefix_value(&random_point(&mut rng)).map_err(e)?;
                let (v, c) = fresh.base_queries();
                worst_queries = worst_queries.max(v + c);
                let fresh = rw_flatten(base.clone(), m).map_err(e)?;
                fresh.prefix_cut(&random_point(&mut rng)).map_err(e)?;
                let (v, c) = fresh.base_queries();
                worst_queries = worst_queries.max(v + c);
            }
            for edge in [Scalar::zero(), Scalar::one(), xs[1].clone(), xs[m as usize - 1].clone()] {
                let fresh = rw_flatten(base.clone(), m).map_err(e)?;
                fresh.prefix_value(&edge).map_err(e)?;
                let (v, c) = fresh.base_queries();
                worst_queries = worst_queries.max(v + c);
            }
        }
    }
    ensure(worst_queries <= BASE_QUERIES_PER_QUERY, || format!("{worst_queries} base queries for one query"))?;
    Ok(format!("150 flattenings exact, at most {worst_queries} base queries per simulated query"))
}

fn lift_round_trip() -> Outcome {
    let eps = rat(EPS_DESK.0, EPS_DESK.1);
    let mut worst = Scalar::zero();
    for seed in 0..100 {
        let vals = grid_instance(1000 + seed, 3)?;
        let r = solve3(&vals, &eps, false).map_err(e)?;
        let envy = envy_of(&vals, &r.allocation)?;
        ensure(envy <= eps, || format!("seed {seed}: envy {envy}"))?;
        worst = Scalar::max_of(&worst, &envy);
    }
    Ok(format!("100/100 within 1/64, worst {worst}"))
}

fn labelings(n: usize, path: &[usize], decorations: &[(usize, (usize, usize))]) -> Result<Vec<GridLabeling>, String> {
    let inst = make_path_instance(n, path, decorations).map_err(e)?;
    inst.supersets.iter().map(|s| embed_labeling(s, n).map_err(e)).collect()
}

fn square_categories() -> Outcome {
    let labs = labelings(2, &[1, 2], &[])?;
    let refs: [&GridLabeling; 4] = std::array::from_fn(|i| &labs[i]);
    let size = refs[0].size();
    ensure(size == 4800, || format!("grid side {size}"))?;
    let t = Instant::now();
    let rep = enumerate_square_categories(&refs, None, u64::MAX).map_err(e)?;
    let el = t.elapsed();
    ensure(rep.squares == (size * size) as u64, || format!("{} squares", rep.squares))?;
    ensure(rep.uncategorized == 0, || {
        format!("{} uncategorized, e.g. {:?}", rep.uncategorized, &rep.examples[..rep.examples.len().min(4)])
    })?;
    ensure(el < Duration::from_secs(60 * SQUARE_MINUTES), || format!("took {el:?}"))?;
    Ok(format!("{} squares, {} exempt, 0 uncategorized in {el:?}", rep.squares, rep.exempt))
}

fn hard_end_to_end() -> Outcome {
    let g = EoLGraph::from_edges(2, &[(1, 2)].into_iter().collect()).map_err(e)?;
    let vals = identical_instance(&g).map_err(e)?;
    let band = vals[0].beta().mul_int(2);
    let r = hard_search(&vals, &embedding_constraints(band), DIVISION_BUDGET).map_err(e)?;
    ensure(r.evaluations <= DIVISION_BUDGET, || format!("{} evaluations", r.evaluations))?;
    ensure(!r.divisions.is_empty(), || "no envy-free division found".into())?;
    let labs: [&GridLabeling; 4] = std::array::from_fn(|i| vals[i].labeling());
    let eps = vals[0].epsilon();
    let shared: Vec<SharedValuation> = vals.iter().map(|v| v.clone() as SharedValuation).collect();
    for d in &r.divisions {
        let out = ef_to_eol(d, &labs).map_err(e)?;
        ensure(out == EolOutcome::Vertex(2), || format!("{:?} maps to {out:?}", d.cuts))?;
        ensure(admits_ef(&shared, d, &eps)?, || format!("{:?} admits no envy-free assignment", d.cuts))?;
    }
    Ok(format!("{} divisions, all in V(2), {} evaluations", r.divisions.len(), r.evaluations))
}

fn toolbox_claims() -> Outcome {
    let inst = make_path_instance(3, &[1, 3], &[(2, (2, 3))]).map_err(e)?;
    let vals = party_valuations(&inst.supersets, 3).map_err(e)?;
    let windows = gadget_windows(vals[0].labeling());
    let samples = sample_claims(&vals, &windows, CLAIM_SAMPLES, 7).map_err(e)?;
    ensure(samples.len() == 6, || format!("{} claims", samples.len()))?;
    let mut parts = Vec::new();
    for s in &samples {
        let name = s.claim.name();
        ensure(s.squares > 0, || format!("{name}: no square satisfies the hypothesis"))?;
        ensure(s.sampled >= CLAIM_SAMPLES, || format!("{name}: {} samples", s.sampled))?;
        ensure(s.counterexamples.is_empty(), || format!("{name}: counterexample {:?}", s.counterexamples[0].cuts))?;
        parts.push(format!("{name} {}", s.sampled));
    }
    Ok(format!("0 counterexamples ({})", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("desk-scale correctness", desk_scale),
        ("oracle agreement", oracle_agreement),
        ("value-query scaling", value_scaling),
        ("cut-query scaling", rw_scaling),
        ("preprocessing invariants", preprocessing),
        ("quantile flattening", flattening),
        ("three-agent lift", lift_round_trip),
        ("square categories", square_categories),
        ("hard instance search", hard_end_to_end),
        ("toolbox claims", toolbox_claims),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(d) => println!("criterion {:>2} PASS {name} ({secs:.1}s): {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name} ({secs:.1}s): {d}", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
