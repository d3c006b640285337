use std::sync::Arc;

use cakecut::gen::random_grid_instance;
use cakecut::oracle::{brute_force, constrained_search, Constraints};
use cakecut::{rat, Scalar, SharedValuation, Valuation};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, agents: usize) -> Vec<SharedValuation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_grid_instance(&mut rng, agents, 16).unwrap().into_iter().map(|v| Arc::new(v) as SharedValuation).collect()
}

/// Least envy over all divisions on the `1/g` grid, visited in shuffled order and with every assignment tried.
fn independent_best(vals: &[SharedValuation], g: i64, seed: u64) -> Scalar {
    let mut divisions = Vec::new();
    for a in 0..=g {
        for b in a..=g {
            for c in b..=g {
                divisions.push([a, b, c]);
            }
        }
    }
    divisions.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let perms: Vec<[usize; 4]> = (0..24)
        .map(|mut k| {
            let mut rest = vec![0, 1, 2, 3];
            let mut p = [0; 4];
            for (slot, f) in p.iter_mut().zip([6, 2, 1, 1]) {
                *slot = rest.remove(k / f);
                k %= f;
            }
            p
        })
        .collect();
    let mut best: Option<Scalar> = None;
    for d in divisions {
        let pts: Vec<Scalar> = [0, d[0], d[1], d[2], g].iter().map(|&x| Scalar::new(x, g)).collect();
        let m: Vec<Vec<Scalar>> =
            vals.iter().map(|v| (0..4).map(|p| v.eval(&pts[p], &pts[p + 1]).unwrap()).collect()).collect();
        for p in &perms {
            let mut envy = Scalar::zero();
            for i in 0..4 {
                for k in 0..4 {
                    envy = Scalar::max_of(&envy, &(&m[i][k] - &m[i][p[i]]));
                }
            }
            if best.as_ref().is_none_or(|b| &envy < b) {
                best = Some(envy);
            }
        }
    }
    best.unwrap()
}

#[test]
fn oracle_is_optimal_on_its_grid() {
    for seed in 0..4 {
        let vals = instance(seed, 4);
        let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
        let r = brute_force(&refs, &rat(1, 12)).unwrap();
        assert_eq!(r.best_envy, independent_best(&vals, 12, seed));
        assert_eq!(r.evaluations, 455 * 24);
    }
}

#[test]
fn refining_never_hurts() {
    for seed in 10..14 {
        let vals = instance(seed, 4);
        let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
        let mut last: Option<Scalar> = None;
        for g in [4, 8, 16, 32] {
            let e = brute_force(&refs, &rat(1, g)).unwrap().best_envy;
            if let Some(l) = &last {
                assert!(&e <= l, "seed {seed}: step 1/{g} gives {e} after {l}");
            }
            last = Some(e);
        }
    }
}

#[test]
fn constrained_search_respects_the_band() {
    let vals = instance(20, 4);
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
    let c = Constraints { l_range: (rat(0, 1), rat(1, 2)), m_range: (rat(1, 4), rat(3, 4)), band: rat(1, 8) };
    let eps = rat(1, 8);
    let r = constrained_search(&refs, &eps, &c, &rat(1, 32), 10_000_000).unwrap();
    for d in &r.divisions {
        let (l, m, rr) = (&d.cuts[0], &d.cuts[1], &d.cuts[2]);
        let off = Scalar::one() - rr - l;
        assert!(l <= &rat(1, 2) && m >= &rat(1, 4) && m <= &rat(3, 4));
        assert!(Scalar::max_of(&off, &-off.clone()) <= rat(1, 8));
    }
}
