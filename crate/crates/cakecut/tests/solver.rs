use std::sync::Arc;

use cakecut::gen::{random_density_instance, random_grid_instance};
use cakecut::preprocess::preprocess_value;
use cakecut::solver::{condition_holds_at, solve2, solve4, solve4_rw, Access, Probe};
use cakecut::{max_envy, rat, DensityValuation, Mode, QuerySession, Scalar, SharedValuation, Valuation};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn grid_instance(seed: u64, agents: usize, g: u64) -> Vec<SharedValuation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_grid_instance(&mut rng, agents, g).unwrap().into_iter().map(|v| Arc::new(v) as SharedValuation).collect()
}

fn envy(vals: &[SharedValuation], alloc: &cakecut::Allocation) -> Scalar {
    let refs: Vec<&dyn Valuation> = vals.iter().map(|v| v.as_ref()).collect();
    max_envy(&refs, alloc).unwrap()
}

/// Grid size the value-query solver preprocesses with at `eps`.
fn solver_grid(eps: &Scalar) -> u64 {
    (Scalar::from_int(12) / eps).ceil_mul(1).try_into().unwrap()
}

#[test]
fn uniform_agents_get_the_equipartition() {
    let u: SharedValuation = Arc::new(DensityValuation::uniform());
    let r = solve4(&vec![u.clone(); 4], &rat(1, 16), false).unwrap();
    assert_eq!(r.max_envy, Scalar::zero());
    assert_eq!(r.allocation.division.cuts, vec![rat(1, 4), rat(1, 2), rat(3, 4)]);
    let r = solve2(&vec![u; 2], &rat(1, 16), false).unwrap();
    assert!(r.max_envy <= rat(1, 16));
}

#[test]
fn bad_arguments_are_domain_errors() {
    let vals = grid_instance(0, 4, 8);
    for eps in [rat(0, 1), rat(-1, 4), rat(3, 2)] {
        assert_eq!(solve4(&vals, &eps, false).unwrap_err().kind(), "DomainError");
    }
    assert_eq!(solve4(&vals[..3], &rat(1, 8), false).unwrap_err().kind(), "DomainError");
}

#[test]
fn trace_matches_counters() {
    let vals = grid_instance(4, 4, 16);
    let r = solve4(&vals, &rat(1, 32), true).unwrap();
    assert_eq!(r.trace.as_ref().unwrap().len() as u64, r.queries.total());
    assert_eq!(r.queries.total_cut(), 0);
}

#[test]
fn bracket_ends_keep_the_invariant() {
    let eps = rat(1, 32);
    let g = solver_grid(&eps);
    let mut checked = 0;
    for seed in 0..6 {
        let vals = grid_instance(seed, 4, 16);
        let r = solve4(&vals, &eps, false).unwrap();
        let Some((lo, hi)) = r.bracket else { continue };
        let pre: Vec<SharedValuation> = vals
            .iter()
            .map(|v| Arc::new(preprocess_value(v.clone(), &rat(1, g as i64)).unwrap()) as SharedValuation)
            .collect();
        let mut s = QuerySession::new(pre, Mode::ValueOnly);
        let mut p = Probe::new(&mut s, Access::Grid(g)).unwrap();
        assert!(condition_holds_at(&mut p, &lo).unwrap().is_some(), "seed {seed}: no witness at {lo}");
        assert!(condition_holds_at(&mut p, &hi).unwrap().is_none(), "seed {seed}: witness at {hi}");
        assert!(condition_holds_at(&mut p, &Scalar::one()).unwrap().is_none());
        let w = r.witness.unwrap();
        assert!(w.alpha >= lo);
        checked += 1;
    }
    assert!(checked > 0);
}

#[test]
fn preprocessed_output_is_tight() {
    // the allocation is near envy-free for the preprocessed agents, which is what yields eps for the originals
    let eps = rat(1, 16);
    let g = solver_grid(&eps);
    let delta = rat(1, g as i64);
    for seed in 0..5 {
        let vals = grid_instance(100 + seed, 4, 32);
        let r = solve4(&vals, &eps, false).unwrap();
        let pre: Vec<SharedValuation> =
            vals.iter().map(|v| Arc::new(preprocess_value(v.clone(), &delta).unwrap()) as SharedValuation).collect();
        assert!(envy(&pre, &r.allocation) <= delta, "seed {seed}");
        assert!(envy(&vals, &r.allocation) <= eps, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solve4_is_eps_envy_free(seed in any::<u64>(), bits in 3u32..7) {
        let eps = Scalar::new(1, 1 << bits);
        let vals = grid_instance(seed, 4, 16);
        let r = solve4(&vals, &eps, false).unwrap();
        prop_assert_eq!(&envy(&vals, &r.allocation), &r.max_envy);
        prop_assert!(r.max_envy <= eps);
    }

    #[test]
    fn solve2_is_eps_envy_free(seed in any::<u64>(), bits in 3u32..10) {
        let eps = Scalar::new(1, 1 << bits);
        let vals = grid_instance(seed, 2, 24);
        let r = solve2(&vals, &eps, false).unwrap();
        prop_assert!(envy(&vals, &r.allocation) <= eps);
    }

    #[test]
    fn solve4_rw_is_eps_envy_free(seed in any::<u64>(), bits in 3u32..12) {
        let eps = Scalar::new(1, 1 << bits);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let vals: Vec<Arc<DensityValuation>> = random_density_instance(&mut rng, 4, 6).unwrap().into_iter().map(Arc::new).collect();
        let r = solve4_rw(&vals, &eps, false).unwrap();
        let shared: Vec<SharedValuation> = vals.iter().map(|v| v.clone() as SharedValuation).collect();
        prop_assert!(envy(&shared, &r.allocation) <= eps);
        prop_assert!(r.queries.total_cut() > 0);
    }
}
