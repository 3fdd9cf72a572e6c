//! Binary-tree instances where finding the rewarding leaf is hard, plus the
//! partitions and state aggregations that make them realizable.
//!
//! Node `(level, offset)` has state index `2^level - 1 + offset`; action `a`
//! moves to child `(level + 1, 2·offset + a)`. Leaves sit at level `H`, emit
//! their reward on the next action and then loop on themselves, so every
//! episode lasts `H + 1` steps.

use serde::{Deserialize, Serialize};

use crate::ensemble::{mix_model, FeatureMap, ModelEnsemble, WeightMatrix};
use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, RewardDist, TabularMdp};
use crate::selection::PartitionFamily;

/// Largest supported depth (8191 states).
pub const MAX_DEPTH: usize = 12;

/// Complete binary tree of depth `H` with two base models: every leaf pays 1
/// in the first and 0 in the second.
#[derive(Clone, Debug)]
pub struct TreeInstance {
    depth: usize,
    ensemble: ModelEnsemble,
}

impl TreeInstance {
    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn num_states(&self) -> usize {
        (1 << (self.depth + 1)) - 1
    }

    pub fn num_leaves(&self) -> usize {
        1 << self.depth
    }

    pub fn node(&self, level: usize, offset: usize) -> usize {
        node_index(level, offset)
    }

    pub fn leaf(&self, i: usize) -> usize {
        node_index(self.depth, i)
    }

    pub fn ensemble(&self) -> &ModelEnsemble {
        &self.ensemble
    }

    pub fn models(&self) -> &[TabularMdp] {
        self.ensemble.models()
    }
}

fn node_index(level: usize, offset: usize) -> usize {
    (1 << level) - 1 + offset
}

/// Level and offset of state `s`.
pub fn node_position(s: usize) -> (usize, usize) {
    let level = (usize::BITS - 1 - (s + 1).leading_zeros()) as usize;
    (level, s + 1 - (1 << level))
}

fn check_depth(depth: usize) -> Result<()> {
    if depth == 0 || depth > MAX_DEPTH {
        return Err(Error::param("depth", format!("{depth} is not in 1..={MAX_DEPTH}")));
    }
    Ok(())
}

fn check_leaf(depth: usize, leaf: usize) -> Result<()> {
    if leaf >= 1 << depth {
        return Err(Error::param(
            "leaf",
            format!("{leaf} is out of range for depth {depth}"),
        ));
    }
    Ok(())
}

fn tree_mdp(depth: usize, leaf_reward: f64) -> Result<TabularMdp> {
    let num_states = (1 << (depth + 1)) - 1;
    let mut transitions = Vec::with_capacity(2 * num_states);
    let mut rewards = Vec::with_capacity(2 * num_states);
    for s in 0..num_states {
        let (level, offset) = node_position(s);
        for a in 0..2 {
            let mut row = vec![0.0; num_states];
            if level < depth {
                row[node_index(level + 1, 2 * offset + a)] = 1.0;
                rewards.push(RewardDist::point(0.0)?);
            } else {
                row[s] = 1.0;
                rewards.push(RewardDist::point(leaf_reward)?);
            }
            transitions.push(row);
        }
    }
    let mut initial_dist = vec![0.0; num_states];
    initial_dist[0] = 1.0;
    TabularMdp::new(MdpSpec {
        num_states,
        num_actions: 2,
        horizon: depth + 1,
        initial_dist,
        transitions,
        rewards,
        enforce_bounded_return: true,
    })
}

pub fn tree_base_models(depth: usize) -> Result<TreeInstance> {
    check_depth(depth)?;
    Ok(TreeInstance {
        depth,
        ensemble: ModelEnsemble::new(vec![tree_mdp(depth, 1.0)?, tree_mdp(depth, 0.0)?])?,
    })
}

/// Two cells: leaf `i` alone in cell 0, every other state in cell 1.
pub fn leaf_partition(depth: usize, leaf: usize) -> Result<FeatureMap> {
    check_depth(depth)?;
    check_leaf(depth, leaf)?;
    let n = (1 << (depth + 1)) - 1;
    let target = node_index(depth, leaf);
    let cells: Vec<usize> = (0..n).map(|s| usize::from(s != target)).collect();
    FeatureMap::state_partition(2, 2, &cells)
}

/// One cell per leaf; inner nodes share cell 0.
pub fn per_leaf_partition(depth: usize) -> Result<FeatureMap> {
    check_depth(depth)?;
    let n = (1 << (depth + 1)) - 1;
    let cells: Vec<usize> = (0..n)
        .map(|s| match node_position(s) {
            (level, offset) if level == depth => offset,
            _ => 0,
        })
        .collect();
    FeatureMap::state_partition(2, 1 << depth, &cells)
}

/// The tree MDP whose only rewarding leaf is `i`: the base models mixed under
/// [`leaf_partition`] with the identity weights.
pub fn rewarding_leaf_mdp(depth: usize, leaf: usize) -> Result<TabularMdp> {
    let tree = tree_base_models(depth)?;
    mix_model(
        tree.ensemble(),
        &leaf_partition(depth, leaf)?,
        &WeightMatrix::identity(2),
    )
}

/// `{one cell, one cell per leaf}`.
pub fn nested_pair(depth: usize) -> Result<PartitionFamily> {
    check_depth(depth)?;
    let n = (1 << (depth + 1)) - 1;
    PartitionFamily::new(vec![FeatureMap::constant(n, 2), per_leaf_partition(depth)?])
}

/// Weights under [`per_leaf_partition`]: `(1/2 + 2ε, 1/2 - 2ε)` for leaf `i`,
/// `(1/2, 1/2)` elsewhere.
pub fn biased_leaf_weights(depth: usize, leaf: usize, epsilon: f64) -> Result<WeightMatrix> {
    check_depth(depth)?;
    check_leaf(depth, leaf)?;
    if !(0.0..0.25).contains(&epsilon) {
        return Err(Error::param("epsilon", format!("{epsilon} is not in [0, 1/4)")));
    }
    let leaves = 1 << depth;
    let mut top = vec![0.5; leaves];
    let mut bottom = vec![0.5; leaves];
    top[leaf] = 0.5 + 2.0 * epsilon;
    bottom[leaf] = 0.5 - 2.0 * epsilon;
    WeightMatrix::from_rows(vec![top, bottom])
}

/// Tree MDP with Bernoulli(1/2) leaves except leaf `i`, which is
/// Bernoulli(1/2 + 2ε).
pub fn biased_leaf_mdp(depth: usize, leaf: usize, epsilon: f64) -> Result<TabularMdp> {
    let w = biased_leaf_weights(depth, leaf, epsilon)?;
    let tree = tree_base_models(depth)?;
    mix_model(tree.ensemble(), &per_leaf_partition(depth)?, &w)
}

/// State aggregation: a class per state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateAggregation {
    pub num_classes: usize,
    pub classes: Vec<usize>,
}

impl StateAggregation {
    pub fn feature_map(&self, num_actions: usize) -> Result<FeatureMap> {
        FeatureMap::state_partition(num_actions, self.num_classes, &self.classes)
    }
}

/// For each leaf `i`: the root alone, then per level the node on the path to
/// `i` and the rest of the level; `2H + 1` classes.
pub fn path_abstraction_family(depth: usize) -> Result<Vec<StateAggregation>> {
    check_depth(depth)?;
    let n = (1 << (depth + 1)) - 1;
    Ok((0..1usize << depth)
        .map(|leaf| {
            let classes = (0..n)
                .map(|s| {
                    let (level, offset) = node_position(s);
                    if level == 0 {
                        0
                    } else if offset == leaf >> (depth - level) {
                        2 * level - 1
                    } else {
                        2 * level
                    }
                })
                .collect();
            StateAggregation {
                num_classes: 2 * depth + 1,
                classes,
            }
        })
        .collect())
}

/// Exhaustive check that states in a common class have identical rewards
/// and identical transition mass into every class, for every action.
pub fn is_bisimulation(mdp: &TabularMdp, aggregation: &StateAggregation) -> Result<bool> {
    let ns = mdp.num_states();
    if aggregation.classes.len() != ns || aggregation.classes.iter().any(|c| *c >= aggregation.num_classes) {
        return Err(Error::ShapeMismatch("aggregation does not match the MDP".into()));
    }
    const TOL: f64 = 1e-12;
    let lumped = |s: usize, a: usize| {
        let mut mass = vec![0.0; aggregation.num_classes];
        for (next, p) in mdp.transition(s, a).iter().enumerate() {
            mass[aggregation.classes[next]] += p;
        }
        mass
    };
    let mut representative: Vec<Option<usize>> = vec![None; aggregation.num_classes];
    for s in 0..ns {
        let class = aggregation.classes[s];
        let Some(rep) = representative[class] else {
            representative[class] = Some(s);
            continue;
        };
        for a in 0..mdp.num_actions() {
            if mdp.reward(s, a).l1_distance(mdp.reward(rep, a)) > TOL {
                return Ok(false);
            }
            if lumped(s, a)
                .iter()
                .zip(lumped(rep, a))
                .any(|(x, y)| (x - y).abs() > TOL)
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{approx_error, simplex_grid, sup_misfit};
    use crate::mdp::backward_induction;
    use crate::selection::check_nested;

    fn optimal(mdp: &TabularMdp) -> f64 {
        backward_induction(mdp).0.initial_value(mdp.initial_dist())
    }

    #[test]
    fn tree_shape() {
        let t1 = tree_base_models(1).unwrap();
        assert_eq!((t1.num_states(), t1.num_leaves()), (3, 2));
        let t3 = tree_base_models(3).unwrap();
        assert_eq!((t3.num_states(), t3.num_leaves()), (15, 8));
        assert_eq!(t3.models()[0].num_states(), 15);
        assert_eq!(optimal(&t3.models()[0]), 1.0);
        assert_eq!(optimal(&t3.models()[1]), 0.0);
        assert!(tree_base_models(0).is_err());
        assert!(tree_base_models(13).is_err());
        for s in 0..15 {
            let (l, o) = node_position(s);
            assert_eq!(t3.node(l, o), s);
            assert!(o < 1 << l);
        }
        // Children of every inner node are deterministic and distinct.
        let m = &t3.models()[0];
        for s in 0..7 {
            let (l, o) = node_position(s);
            for a in 0..2 {
                assert_eq!(m.transition(s, a)[t3.node(l + 1, 2 * o + a)], 1.0);
                assert_eq!(m.mean_reward(s, a), 0.0);
            }
        }
    }

    #[test]
    fn leaf_partitions_realize_single_rewarding_leaf() {
        let depth = 3;
        let tree = tree_base_models(depth).unwrap();
        let mut maps = Vec::new();
        for i in 0..8 {
            let phi = leaf_partition(depth, i).unwrap();
            let mdp = rewarding_leaf_mdp(depth, i).unwrap();
            assert_eq!(optimal(&mdp), 1.0);
            for j in 0..8 {
                assert_eq!(mdp.mean_reward(tree.leaf(j), 0), if i == j { 1.0 } else { 0.0 });
            }
            assert_eq!(
                sup_misfit(tree.ensemble(), &phi, &WeightMatrix::identity(2), &mdp).unwrap(),
                0.0
            );
            maps.push(phi);
        }
        for i in 0..8 {
            for j in 0..i {
                assert_ne!(maps[i], maps[j]);
            }
        }
        assert!(leaf_partition(depth, 8).is_err());
        assert_eq!(leaf_partition(1, 0).unwrap().cells().unwrap(), vec![1, 1, 0, 0, 1, 1]);
    }

    #[test]
    fn biased_leaves() {
        let depth = 3;
        assert_eq!(optimal(&biased_leaf_mdp(depth, 2, 0.0).unwrap()), 0.5);
        let tree = tree_base_models(depth).unwrap();
        for i in 0..8 {
            let mdp = biased_leaf_mdp(depth, i, 0.1).unwrap();
            let (values, policy) = backward_induction(&mdp);
            assert!((values.initial_value(mdp.initial_dist()) - 0.7).abs() < 1e-12);
            // The greedy path reaches leaf i.
            let mut s = 0;
            for h in 0..depth {
                s = mdp
                    .transition(s, policy.action(h, s))
                    .iter()
                    .position(|p| *p == 1.0)
                    .unwrap();
            }
            assert_eq!(s, tree.leaf(i));
            let leaf_reward = mdp.reward(tree.leaf(i), 0);
            assert_eq!(leaf_reward.support(), &[0.0, 1.0]);
            assert!((leaf_reward.probs()[1] - 0.7).abs() < 1e-12);
        }
        assert!(biased_leaf_mdp(depth, 0, 0.25).is_err());
        assert!(biased_leaf_mdp(depth, 0, -0.1).is_err());
    }

    #[test]
    fn coarse_partition_misses_biased_leaf() {
        let depth = 2;
        let tree = tree_base_models(depth).unwrap();
        let eps = 0.1;
        let mdp = biased_leaf_mdp(depth, 1, eps).unwrap();
        let family = nested_pair(depth).unwrap();
        assert!(check_nested(&family).unwrap());
        assert_eq!(family.dims(), vec![1, 4]);
        let (fine, _) = approx_error(
            tree.ensemble(),
            &family.partitions()[1],
            &mdp,
            &[biased_leaf_weights(depth, 1, eps).unwrap()],
        )
        .unwrap();
        assert!(fine < 1e-12);
        let (coarse, _) =
            approx_error(tree.ensemble(), &family.partitions()[0], &mdp, &simplex_grid(2, 1, 100)).unwrap();
        assert!(coarse >= 2.0 * eps - 1e-12, "{coarse}");
    }

    #[test]
    fn path_abstractions() {
        for depth in 1..=4 {
            let family = path_abstraction_family(depth).unwrap();
            assert_eq!(family.len(), 1 << depth);
            for (i, agg) in family.iter().enumerate() {
                let used: std::collections::BTreeSet<_> = agg.classes.iter().collect();
                assert_eq!(used.len(), 2 * depth + 1);
                let mdp = rewarding_leaf_mdp(depth, i).unwrap();
                assert!(is_bisimulation(&mdp, agg).unwrap());
                // Another leaf's abstraction lumps leaf i with a zero leaf
                // (at depth 1 every class is a singleton).
                if depth > 1 {
                    let other = &family[(i + 1) % family.len()];
                    assert!(!is_bisimulation(&mdp, other).unwrap());
                }
            }
            for i in 0..family.len() {
                for j in 0..i {
                    assert_ne!(family[i], family[j]);
                }
            }
        }
    }

    #[test]
    fn returns_are_bounded() {
        let tree = tree_base_models(4).unwrap();
        for m in tree.models() {
            assert!(m.return_upper_bound() <= 1.0);
        }
        assert!(biased_leaf_mdp(4, 3, 0.2).unwrap().return_upper_bound() <= 1.0);
    }
}
