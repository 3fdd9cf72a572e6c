mod common;

use ensemble_pac::ensemble::{mix_model, simplex_grid, trace_inner, FeatureMap, ModelEnsemble, WeightMatrix};
use ensemble_pac::learner::sampler::uniform_base_draw;
use ensemble_pac::learner::{
    exact_measurement, iteration_bound, optimistic_select, run_pac, LearnerConfig, PacError, VersionSpace,
};
use ensemble_pac::mdp::{backward_induction, evaluate_policy_exact, random_mdp, RandomMdpShape, TabularMdp};
use ensemble_pac::rng::RngStream;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64, k: usize, d: usize) -> (TabularMdp, ModelEnsemble, FeatureMap, WeightMatrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = RandomMdpShape {
        num_states: 4,
        num_actions: 2,
        horizon: 3,
        max_reward_atoms: 2,
    };
    let first = random_mdp(shape, None, &mut rng);
    let p1 = first.initial_dist().to_vec();
    let mut models = vec![first];
    for _ in 1..k {
        models.push(random_mdp(shape, Some(&p1), &mut rng));
    }
    let ensemble = ModelEnsemble::new(models).unwrap();
    let cells: Vec<usize> = (0..4).map(|s| s % d).collect();
    let phi = FeatureMap::state_partition(2, d, &cells).unwrap();
    let w_star = WeightMatrix::new(uniform_base_draw(k, d, &mut rng)).unwrap();
    let target = mix_model(&ensemble, &phi, &w_star).unwrap();
    (target, ensemble, phi, w_star)
}

fn config(seed: u64, w_star: &WeightMatrix, n: usize) -> LearnerConfig {
    LearnerConfig {
        epsilon: 0.1,
        delta: 0.1,
        theta: 0.0,
        n,
        n_eval: n,
        max_iterations: 60,
        oracle_samples: 60,
        candidate_grid: simplex_grid(w_star.num_models(), w_star.dim(), 6),
        master_seed: seed,
        known_w_star: Some(w_star.clone()),
        volume_samples: Some(3000),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Whenever a cut's estimates are close to their expectations, `W*`
    /// satisfies it; volume only shrinks; explored iterations stay under
    /// the bound.
    #[test]
    fn run_invariants(seed in 0u64..10_000, k in 2usize..=3, d in 1usize..=2, n in prop::sample::select(vec![200usize, 1000])) {
        let (target, ens, phi, w_star) = instance(seed, k, d);
        let cfg = config(seed, &w_star, n);
        let records = match run_pac(&target, &ens, &phi, &cfg) {
            Ok(res) => {
                let bound = iteration_bound(d, k, 3, cfg.epsilon).unwrap().ceil() as usize;
                prop_assert!(res.explored_iterations() <= bound);
                res.records
            }
            Err(PacError::Invalid(e)) => panic!("{e}"),
            Err(e) => e.records().to_vec(),
        };
        let tol = cfg.epsilon / (12.0 * ((d * k) as f64).sqrt());
        let mut last = 1.0;
        for r in &records {
            let v = r.volume_estimate.unwrap();
            prop_assert!(v <= last);
            last = v;
            if let Some(c) = &r.constraint_added {
                let exact = exact_measurement(&target, &ens, &phi, &r.w).unwrap();
                let deviation = (c.y_hat - exact.alpha).abs()
                    + trace_inner(w_star.entries(), &(&c.z_hat - &exact.z)).abs();
                if deviation <= tol {
                    prop_assert!(c.admits(w_star.entries()));
                }
            }
        }
    }

    /// The selected model's value dominates every contained grid candidate.
    #[test]
    fn selection_is_optimistic_over_the_pool(seed in 0u64..10_000, k in 2usize..=3) {
        let (_, ens, phi, w_star) = instance(seed, k, 2);
        let cfg = config(seed, &w_star, 100);
        let vs = VersionSpace::new(k, 2);
        let sel = optimistic_select(&vs, &ens, &phi, &cfg, None, &RngStream::from_seed(seed)).unwrap();
        for w in &cfg.candidate_grid {
            let m = mix_model(&ens, &phi, w).unwrap();
            prop_assert!(sel.value >= backward_induction(&m).0.initial_value(m.initial_dist()) - 1e-12);
        }
        prop_assert!(vs.contains(&sel.w).unwrap());
    }
}

#[test]
fn desk_instance_reaches_near_optimal_value() {
    let desk = common::desk();
    assert!((desk.v_star - 0.7).abs() < 1e-12);
    let mut cfg = config(1, &desk.w_star, 2000);
    cfg.epsilon = 0.2;
    cfg.candidate_grid = simplex_grid(2, 2, 20);
    let res = run_pac(&desk.target, &desk.ensemble, &desk.phi, &cfg).unwrap();
    assert!(evaluate_policy_exact(&desk.target, &res.policy).unwrap() >= desk.v_star - 0.2);
    // The first optimistic pick over-promises and forces exploration.
    assert!(res.records[0].optimistic_value > 0.85);
    assert!(res.explored_iterations() >= 1);
}

#[test]
fn misspecified_run_with_theta_budget() {
    // Target outside the class; a θ large enough to cover the misfit keeps
    // the run from eliminating every candidate.
    let desk = common::desk();
    let perturbed = {
        // Layered, so the blend keeps the bounded-return structure.
        let stray = common::layered(
            [[2, 2], [5, 5], [3, 3]],
            [0.0, 0.0, 0.3, 0.3, 0.0, 0.1].map(common::point),
        );
        let blend = ModelEnsemble::new(vec![desk.target.clone(), stray]).unwrap();
        mix_model(
            &blend,
            &FeatureMap::constant(6, 2),
            &WeightMatrix::from_rows(vec![vec![0.98], vec![0.02]]).unwrap(),
        )
        .unwrap()
    };
    let theta = ensemble_pac::ensemble::sup_misfit(&desk.ensemble, &desk.phi, &desk.w_star, &perturbed).unwrap();
    let mut cfg = config(3, &desk.w_star, 2000);
    cfg.epsilon = 0.2;
    cfg.theta = theta;
    let res = run_pac(&perturbed, &desk.ensemble, &desk.phi, &cfg).unwrap();
    let v_star = backward_induction(&perturbed).0.initial_value(perturbed.initial_dist());
    let slack = 0.2 + (3.0 * 2.0 + 2.0) * 3.0 * theta;
    assert!(evaluate_policy_exact(&perturbed, &res.policy).unwrap() >= v_star - slack);
    assert!(res.records.iter().all(|r| r.wstar_retained == Some(true)));
}
