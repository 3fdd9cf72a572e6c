#![allow(dead_code)]

use ensemble_pac::ensemble::{mix_model, FeatureMap, ModelEnsemble, WeightMatrix};
use ensemble_pac::mdp::{MdpSpec, RewardDist, TabularMdp};
use ensemble_pac::selection::PartitionFamily;

/// Layered instance: state 0, then {1, 2}, then {3, 4, 5} (absorbing).
/// Two base models that disagree on transitions and rewards in both layers;
/// the target follows model 0 early and model 1 late.
pub struct Desk {
    pub target: TabularMdp,
    pub ensemble: ModelEnsemble,
    pub phi: FeatureMap,
    pub family: PartitionFamily,
    pub w_star: WeightMatrix,
    pub v_star: f64,
}

pub fn layered(next: [[usize; 2]; 3], rewards: [RewardDist; 6]) -> TabularMdp {
    let mut transitions = Vec::new();
    let mut reward_rows = Vec::new();
    for s in 0..6 {
        for a in 0..2 {
            let mut row = vec![0.0; 6];
            row[if s < 3 { next[s][a] } else { s }] = 1.0;
            transitions.push(row);
            reward_rows.push(rewards[s].clone());
        }
    }
    TabularMdp::new(MdpSpec {
        num_states: 6,
        num_actions: 2,
        horizon: 3,
        initial_dist: vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        transitions,
        rewards: reward_rows,
        enforce_bounded_return: true,
    })
    .unwrap()
}

pub fn point(r: f64) -> RewardDist {
    RewardDist::point(r).unwrap()
}

pub fn desk() -> Desk {
    let m0 = layered(
        [[1, 2], [3, 4], [4, 5]],
        [point(0.0), point(0.1), point(0.2), point(0.6), point(0.3), point(0.0)],
    );
    let noisy = RewardDist::new(vec![0.28, 0.32], vec![0.5, 0.5]).unwrap();
    let m1 = layered(
        [[2, 1], [4, 3], [5, 4]],
        [point(0.0), point(0.3), point(0.0), point(0.0), noisy, point(0.5)],
    );
    let ensemble = ModelEnsemble::new(vec![m0, m1]).unwrap();
    let phi = FeatureMap::state_partition(2, 2, &[0, 0, 0, 1, 1, 1]).unwrap();
    let w_star = WeightMatrix::identity(2);
    let target = mix_model(&ensemble, &phi, &w_star).unwrap();
    let family = PartitionFamily::new(vec![
        FeatureMap::constant(6, 2),
        phi.clone(),
        FeatureMap::state_partition(2, 4, &[0, 1, 1, 2, 2, 3]).unwrap(),
    ])
    .unwrap();
    let v_star = ensemble_pac::mdp::backward_induction(&target)
        .0
        .initial_value(target.initial_dist());
    Desk {
        target,
        ensemble,
        phi,
        family,
        w_star,
        v_star,
    }
}
