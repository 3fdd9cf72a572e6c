//! Choosing among nested partition feature maps with doubling budgets.
//!
//! Round `r` runs the learner on the largest partition with `d ≤ 2^r`, then
//! certifies its policy against a known optimal value `v*`. The first
//! partition whose policy looks near-optimal wins.

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{simplex_grid, FeatureKind, FeatureMap, ModelEnsemble};
use crate::error::{Error, Result};
use crate::learner::{default_sample_sizes, iteration_bound, run_pac, IterationRecord, LearnerConfig, PacError};
use crate::mdp::{monte_carlo_value, Policy, TabularMdp};
use crate::rng::RngStream;

/// Partition feature maps ordered by non-decreasing dimension.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<FeatureMap>", into = "Vec<FeatureMap>")]
pub struct PartitionFamily {
    partitions: Vec<FeatureMap>,
}

impl TryFrom<Vec<FeatureMap>> for PartitionFamily {
    type Error = Error;
    fn try_from(partitions: Vec<FeatureMap>) -> Result<Self> {
        Self::new(partitions)
    }
}

impl From<PartitionFamily> for Vec<FeatureMap> {
    fn from(family: PartitionFamily) -> Self {
        family.partitions
    }
}

impl PartitionFamily {
    pub fn new(partitions: Vec<FeatureMap>) -> Result<Self> {
        let first = partitions.first().ok_or(Error::Empty("partition family"))?;
        let shape = (first.num_states(), first.num_actions());
        for (i, p) in partitions.iter().enumerate() {
            if p.kind() == FeatureKind::Tabular {
                return Err(Error::InvalidFeatureMap(format!(
                    "family member {i} is not a partition"
                )));
            }
            if (p.num_states(), p.num_actions()) != shape {
                return Err(Error::ShapeMismatch(format!(
                    "family member {i} covers a different pair grid"
                )));
            }
        }
        if partitions.windows(2).any(|w| w[0].dim() > w[1].dim()) {
            return Err(Error::InvalidFeatureMap(
                "family dimensions must be non-decreasing".into(),
            ));
        }
        Ok(Self { partitions })
    }

    pub fn len(&self) -> usize {
        self.partitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.partitions.is_empty()
    }

    pub fn partitions(&self) -> &[FeatureMap] {
        &self.partitions
    }

    pub fn dims(&self) -> Vec<usize> {
        self.partitions.iter().map(FeatureMap::dim).collect()
    }

    /// Index of the largest member with `d ≤ budget`.
    pub fn pick(&self, budget: usize) -> Option<usize> {
        self.partitions.iter().rposition(|p| p.dim() <= budget)
    }
}

/// Whether `coarse`'s cells are unions of `fine`'s cells.
pub fn refines(fine: &FeatureMap, coarse: &FeatureMap) -> Result<bool> {
    if (fine.num_states(), fine.num_actions()) != (coarse.num_states(), coarse.num_actions()) {
        return Err(Error::ShapeMismatch("partitions cover different pair grids".into()));
    }
    let (Some(fine), Some(coarse)) = (fine.cells(), coarse.cells()) else {
        return Err(Error::InvalidFeatureMap(
            "refinement needs partition feature maps".into(),
        ));
    };
    let mut image: Vec<Option<usize>> = vec![None; fine.iter().max().map_or(0, |m| m + 1)];
    for (f, c) in fine.iter().zip(&coarse) {
        match image[*f] {
            Some(seen) if seen != *c => return Ok(false),
            _ => image[*f] = Some(*c),
        }
    }
    Ok(true)
}

/// Every later (larger-`d`) member refines every earlier one.
pub fn check_nested(family: &PartitionFamily) -> Result<bool> {
    let p = family.partitions();
    for j in 1..p.len() {
        for i in 0..j {
            if !refines(&p[j], &p[i])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Parameters for [`run_model_selection`]. Unset sizes fall back to the
/// per-round defaults of the learner's analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub epsilon: f64,
    pub delta: f64,
    pub v_star: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_eval: Option<usize>,
    /// Trajectories for certifying each round's policy.
    #[serde(default)]
    pub certify_trajectories: Option<usize>,
    pub oracle_samples: usize,
    /// Simplex-grid resolution per round, reduced until the grid has at most
    /// `max_grid_points` members. Zero disables the grid.
    #[serde(default)]
    pub grid_resolution: usize,
    #[serde(default = "default_max_grid_points")]
    pub max_grid_points: usize,
    pub master_seed: u64,
}

fn default_max_grid_points() -> usize {
    2000
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::param("epsilon", format!("{} is not in (0, 1)", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::param("delta", format!("{} is not in (0, 1)", self.delta)));
        }
        if !(0.0..=1.0).contains(&self.v_star) {
            return Err(Error::param("v_star", format!("{} is not in [0, 1]", self.v_star)));
        }
        if self.oracle_samples == 0 || [self.n, self.n_eval, self.certify_trajectories].contains(&Some(0)) {
            return Err(Error::param("sample sizes", "must be at least 1"));
        }
        Ok(())
    }

    /// `ceil(9/(2ε²) · ln(2N/δ))` unless overridden.
    pub fn certify_size(&self, family_len: usize) -> usize {
        self.certify_trajectories.unwrap_or_else(|| {
            (9.0 / (2.0 * self.epsilon * self.epsilon) * (2.0 * family_len as f64 / self.delta).ln()).ceil() as usize
        })
    }
}

/// Number of members of `simplex_grid(num_models, dim, resolution)`.
fn grid_size(num_models: usize, dim: usize, resolution: usize) -> f64 {
    // Compositions of `resolution` into `num_models` parts, per column.
    let mut per_column = 1.0;
    for i in 1..num_models {
        per_column *= (resolution + i) as f64 / i as f64;
    }
    per_column.round().powi(dim as i32)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundOutcome {
    Terminated,
    IterationCap,
    EmptyVersionSpace,
}

#[derive(Clone, Debug)]
pub struct RoundRecord {
    pub round: usize,
    /// Family index of the partition run this round.
    pub index: usize,
    pub dim: usize,
    pub iteration_cap: usize,
    pub outcome: RoundOutcome,
    pub iterations: Vec<IterationRecord>,
    /// Certification estimate of the round's policy, if it produced one.
    pub value_estimate: Option<f64>,
    pub certified: bool,
    pub trajectories_used: usize,
}

#[derive(Clone, Debug)]
pub struct SelectionResult {
    pub chosen_index: usize,
    pub policy: Policy,
    pub rounds: Vec<RoundRecord>,
    pub total_trajectories: usize,
}

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("no realizable partition certified after {} rounds", .rounds.len())]
    Exhausted {
        rounds: Vec<RoundRecord>,
        total_trajectories: usize,
    },
}

/// Doubling model selection over a nested partition family.
pub fn run_model_selection(
    target: &TabularMdp,
    ensemble: &ModelEnsemble,
    family: &PartitionFamily,
    config: &SelectionConfig,
) -> std::result::Result<SelectionResult, SelectionError> {
    config.validate()?;
    if !check_nested(family)? {
        return Err(Error::InvalidFeatureMap("partition family is not nested".into()).into());
    }
    ensemble.check_target(target)?;
    let (k, horizon, n_family) = (ensemble.len(), target.horizon(), family.len());
    let epsilon = config.epsilon / 2.0;
    let delta = config.delta / (2.0 * n_family as f64);
    let certify = config.certify_size(n_family);
    let threshold = config.v_star - 2.0 * config.epsilon / 3.0;
    let root = RngStream::from_seed(config.master_seed);

    let mut rounds = Vec::new();
    let mut total = 0;
    let mut previous: Option<usize> = None;
    let mut r = 0usize;
    while previous != Some(n_family - 1) {
        let budget = 1usize.checked_shl(r as u32).unwrap_or(usize::MAX);
        let round = r;
        r += 1;
        let Some(index) = family.pick(budget) else { continue };
        if previous == Some(index) {
            continue;
        }
        previous = Some(index);

        let phi = &family.partitions()[index];
        let dim = phi.dim();
        let sizes = default_sample_sizes(dim, k, horizon, epsilon, delta)?;
        let iteration_cap = (iteration_bound(dim, k, horizon, epsilon)?.floor() as usize).max(1);
        let mut resolution = config.grid_resolution;
        while resolution > 0 && grid_size(k, dim, resolution) > config.max_grid_points as f64 {
            resolution -= 1;
        }
        let learner = LearnerConfig {
            epsilon,
            delta,
            theta: 0.0,
            n: config.n.unwrap_or(sizes.n),
            n_eval: config.n_eval.unwrap_or(sizes.n_eval),
            max_iterations: iteration_cap,
            oracle_samples: config.oracle_samples,
            candidate_grid: if resolution > 0 {
                simplex_grid(k, dim, resolution)
            } else {
                Vec::new()
            },
            master_seed: root.derive("round", round as u64).rng(0).next_u64(),
            known_w_star: None,
            volume_samples: None,
        };
        let (outcome, iterations, policy, mut used) = match run_pac(target, ensemble, phi, &learner) {
            Ok(res) => (
                RoundOutcome::Terminated,
                res.records,
                Some(res.policy),
                res.trajectories_used,
            ),
            Err(PacError::Invalid(e)) => return Err(e.into()),
            Err(PacError::IterationCap {
                records,
                trajectories_used,
                ..
            }) => (RoundOutcome::IterationCap, records, None, trajectories_used),
            Err(PacError::EmptyVersionSpace {
                records,
                trajectories_used,
                ..
            }) => (RoundOutcome::EmptyVersionSpace, records, None, trajectories_used),
        };
        let value_estimate = match &policy {
            Some(p) => {
                used += certify;
                Some(monte_carlo_value(
                    target,
                    p,
                    certify,
                    &root.derive("certify", round as u64),
                )?)
            }
            None => None,
        };
        let certified = value_estimate.is_some_and(|v| v >= threshold);
        total += used;
        rounds.push(RoundRecord {
            round,
            index,
            dim,
            iteration_cap,
            outcome,
            iterations,
            value_estimate,
            certified,
            trajectories_used: used,
        });
        if certified {
            return Ok(SelectionResult {
                chosen_index: index,
                policy: policy.expect("certified rounds have a policy"),
                rounds,
                total_trajectories: total,
            });
        }
    }
    Err(SelectionError::Exhausted {
        rounds,
        total_trajectories: total,
    })
}
