//! Optimistic version-space elimination over the combination weights `W`.
//!
//! Each iteration plans in the most optimistic model still consistent with
//! the data, checks its predicted value against a Monte-Carlo estimate in
//! the real environment, and either returns that model's policy or collects
//! fresh trajectories to add one linear cut `|ŷ - ⟨W, Ẑ⟩| ≤ τ` on `W`.

pub mod diagnostics;
pub mod sampler;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensemble::{discriminator_vector, in_base_set, mix_model, FeatureMap, ModelEnsemble, WeightMatrix};
use crate::error::{Error, Result};
use crate::mdp::{backward_induction, monte_carlo_value, rollouts, Policy, TabularMdp, Trajectory, ValueTable};
use crate::rng::RngStream;

pub use diagnostics::{
    exact_measurement, exact_z, mc_volume, model_error, per_step_error, value_gap, ExactMeasurement,
};

/// Approximate equality constraint on `W` from one exploration round.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub z_hat: Array2<f64>,
    pub y_hat: f64,
    pub tolerance: f64,
}

impl LinearConstraint {
    /// `|ŷ - ⟨W, Ẑ⟩|`.
    pub fn residual(&self, w: &Array2<f64>) -> f64 {
        (self.y_hat - crate::ensemble::trace_inner(w, &self.z_hat)).abs()
    }

    pub fn admits(&self, w: &Array2<f64>) -> bool {
        self.residual(w) <= self.tolerance
    }
}

/// `W_0` intersected with an append-only list of linear cuts.
#[derive(Clone, Debug, PartialEq)]
pub struct VersionSpace {
    num_models: usize,
    dim: usize,
    constraints: Vec<LinearConstraint>,
}

impl VersionSpace {
    /// The unconstrained base set `W_0` of `K × d` column-stochastic matrices.
    pub fn new(num_models: usize, dim: usize) -> Self {
        Self {
            num_models,
            dim,
            constraints: Vec::new(),
        }
    }

    pub fn num_models(&self) -> usize {
        self.num_models
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn constraints(&self) -> &[LinearConstraint] {
        &self.constraints
    }

    fn check_dims(&self, shape: (usize, usize)) -> Result<()> {
        if shape != (self.num_models, self.dim) {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{}, version space is {}x{}",
                shape.0, shape.1, self.num_models, self.dim
            )));
        }
        Ok(())
    }

    pub fn push(&mut self, constraint: LinearConstraint) -> Result<()> {
        self.check_dims(constraint.z_hat.dim())?;
        self.constraints.push(constraint);
        Ok(())
    }

    pub fn contains(&self, w: &WeightMatrix) -> Result<bool> {
        self.contains_matrix(w.entries())
    }

    /// Membership for an arbitrary matrix: in `W_0` and inside every cut.
    pub fn contains_matrix(&self, w: &Array2<f64>) -> Result<bool> {
        self.check_dims(w.dim())?;
        Ok(in_base_set(w) && self.constraints.iter().all(|c| c.admits(w)))
    }
}

/// Per-run sample sizes from the PAC analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    /// Bound on exploration iterations, rounded up.
    pub iterations: usize,
    /// Exploration trajectories per iteration.
    pub n: usize,
    /// Evaluation trajectories per iteration.
    pub n_eval: usize,
}

fn check_accuracy(epsilon: f64, delta: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::param("epsilon", format!("{epsilon} is not in (0, 1)")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param("delta", format!("{delta} is not in (0, 1)")));
    }
    Ok(())
}

/// `dK · ln(2√(2K)H/ε) / ln(5/3)`, before rounding.
pub fn iteration_bound(dim: usize, num_models: usize, horizon: usize, epsilon: f64) -> Result<f64> {
    let (d, k, h) = (dim as f64, num_models as f64, horizon as f64);
    let ratio = 2.0 * (2.0 * k).sqrt() * h / epsilon;
    if ratio.is_nan() || ratio <= 1.0 || dim == 0 || num_models == 0 {
        return Err(Error::param(
            "epsilon",
            format!("{epsilon} must be below 2·sqrt(2K)·H = {}", 2.0 * (2.0 * k).sqrt() * h),
        ));
    }
    Ok(d * k * ratio.ln() / (5.0_f64 / 3.0).ln())
}

/// Iteration bound `T`, and the `n`, `n_eval` that make every iteration's
/// estimates accurate with total failure probability `δ`.
pub fn default_sample_sizes(
    dim: usize,
    num_models: usize,
    horizon: usize,
    epsilon: f64,
    delta: f64,
) -> Result<SampleSizes> {
    check_accuracy(epsilon, delta)?;
    let iterations = iteration_bound(dim, num_models, horizon, epsilon)?.ceil() as usize;
    let (d, k, h, t) = (dim as f64, num_models as f64, horizon as f64, iterations as f64);
    let n_eval = 32.0 * h * h / (epsilon * epsilon) * (4.0 * t / delta).ln();
    let n = 1800.0 * d * d * k * h * h / (epsilon * epsilon) * (8.0 * d * k * t / delta).ln();
    Ok(SampleSizes {
        iterations,
        n: n.ceil() as usize,
        n_eval: n_eval.ceil() as usize,
    })
}

/// Run parameters for [`run_pac`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnerConfig {
    pub epsilon: f64,
    pub delta: f64,
    /// Assumed approximation error of the model class.
    pub theta: f64,
    pub n: usize,
    pub n_eval: usize,
    pub max_iterations: usize,
    /// Version-space draws per optimistic selection.
    pub oracle_samples: usize,
    /// Candidates always offered to the optimistic oracle.
    #[serde(default)]
    pub candidate_grid: Vec<WeightMatrix>,
    pub master_seed: u64,
    /// Known true parameter, for retention telemetry only.
    #[serde(default)]
    pub known_w_star: Option<WeightMatrix>,
    /// Samples for the per-iteration volume estimate; `None` disables it.
    #[serde(default)]
    pub volume_samples: Option<usize>,
}

impl LearnerConfig {
    /// Config with the analysis' sample sizes and iteration bound.
    pub fn with_default_sizes(
        dim: usize,
        num_models: usize,
        horizon: usize,
        epsilon: f64,
        delta: f64,
        master_seed: u64,
    ) -> Result<Self> {
        let sizes = default_sample_sizes(dim, num_models, horizon, epsilon, delta)?;
        Ok(Self {
            epsilon,
            delta,
            theta: 0.0,
            n: sizes.n,
            n_eval: sizes.n_eval,
            max_iterations: sizes.iterations + 1,
            oracle_samples: 200,
            candidate_grid: Vec::new(),
            master_seed,
            known_w_star: None,
            volume_samples: None,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_accuracy(self.epsilon, self.delta)?;
        if !(self.theta >= 0.0 && self.theta.is_finite()) {
            return Err(Error::param("theta", format!("{} must be non-negative", self.theta)));
        }
        for (name, value) in [
            ("n", self.n),
            ("n_eval", self.n_eval),
            ("max_iterations", self.max_iterations),
            ("oracle_samples", self.oracle_samples),
        ] {
            if value == 0 {
                return Err(Error::param(name, "must be at least 1"));
            }
        }
        if self.volume_samples == Some(0) {
            return Err(Error::param("volume_samples", "must be at least 1"));
        }
        Ok(())
    }

    /// Half-width of each cut: `ε/(12√(dK)) + Hθ`.
    pub fn cut_tolerance(&self, dim: usize, num_models: usize, horizon: usize) -> f64 {
        self.epsilon / (12.0 * ((dim * num_models) as f64).sqrt()) + horizon as f64 * self.theta
    }

    /// Largest optimistic-minus-estimated gap that stops the search:
    /// `3ε/4 + (3√(dK)+1)Hθ`.
    pub fn termination_threshold(&self, dim: usize, num_models: usize, horizon: usize) -> f64 {
        0.75 * self.epsilon + (3.0 * ((dim * num_models) as f64).sqrt() + 1.0) * horizon as f64 * self.theta
    }
}

/// Telemetry for one iteration of [`run_pac`].
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub t: usize,
    pub w: WeightMatrix,
    pub optimistic_value: f64,
    pub mc_estimate: f64,
    pub terminated: bool,
    pub constraint_added: Option<LinearConstraint>,
    /// Whether the known `W*` is still in the version space after this
    /// iteration's update.
    pub wstar_retained: Option<bool>,
    /// Fraction of a fixed set of `W_0` draws inside the version space after
    /// this iteration's update.
    pub volume_estimate: Option<f64>,
    pub pool_size: usize,
}

#[derive(Clone, Debug)]
pub struct PacResult {
    pub policy: Policy,
    pub final_w: WeightMatrix,
    pub records: Vec<IterationRecord>,
    pub trajectories_used: usize,
}

impl PacResult {
    /// Monte-Carlo value of the returned policy from the final iteration.
    pub fn value_estimate(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.mc_estimate)
    }

    pub fn explored_iterations(&self) -> usize {
        self.records.iter().filter(|r| r.constraint_added.is_some()).count()
    }
}

/// How the candidate pool of one optimistic selection was assembled.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolDiagnostics {
    pub grid_size: usize,
    pub grid_accepted: usize,
    pub previous_accepted: bool,
    pub sampler: SamplerKind,
    pub draws: usize,
    pub draws_accepted: usize,
    pub constraints: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplerKind {
    HitAndRun,
    Rejection,
}

#[derive(Debug, Error)]
pub enum PacError {
    #[error(transparent)]
    Invalid(#[from] Error),

    #[error("empty version space sample at iteration {iteration} ({} cuts, {} of {} grid candidates and {} of {} draws accepted)",
        .diagnostics.constraints, .diagnostics.grid_accepted, .diagnostics.grid_size, .diagnostics.draws_accepted, .diagnostics.draws)]
    EmptyVersionSpace {
        iteration: usize,
        diagnostics: PoolDiagnostics,
        records: Vec<IterationRecord>,
        trajectories_used: usize,
    },

    #[error("iteration cap of {cap} reached without termination")]
    IterationCap {
        cap: usize,
        records: Vec<IterationRecord>,
        trajectories_used: usize,
    },
}

impl PacError {
    pub fn records(&self) -> &[IterationRecord] {
        match self {
            PacError::Invalid(_) => &[],
            PacError::EmptyVersionSpace { records, .. } | PacError::IterationCap { records, .. } => records,
        }
    }

    pub fn trajectories_used(&self) -> usize {
        match self {
            PacError::Invalid(_) => 0,
            PacError::EmptyVersionSpace { trajectories_used, .. }
            | PacError::IterationCap { trajectories_used, .. } => *trajectories_used,
        }
    }
}

/// Outcome of one optimistic selection.
#[derive(Clone, Debug)]
pub struct Selection {
    pub w: WeightMatrix,
    pub policy: Policy,
    pub values: ValueTable,
    pub value: f64,
    pub pool_size: usize,
    pub diagnostics: PoolDiagnostics,
}

#[derive(Debug, Error)]
pub enum SelectError {
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("no candidate survives the version-space filter")]
    Empty(PoolDiagnostics),
}

/// Candidate pool for the optimistic oracle: grid members and the previous
/// optimum that pass the filter, then version-space draws.
fn candidate_pool(
    vs: &VersionSpace,
    config: &LearnerConfig,
    previous: Option<&WeightMatrix>,
    stream: &RngStream,
) -> Result<(Vec<Array2<f64>>, PoolDiagnostics)> {
    let mut pool: Vec<Array2<f64>> = Vec::new();
    for w in &config.candidate_grid {
        if vs.contains(w)? {
            pool.push(w.entries().clone());
        }
    }
    let grid_accepted = pool.len();
    let previous = match previous {
        Some(w) if vs.contains(w)? => Some(w.entries().clone()),
        _ => None,
    };
    let previous_accepted = previous.is_some();
    let barycenter = WeightMatrix::uniform(vs.num_models(), vs.dim()).into_inner();
    let start = previous
        .clone()
        .or_else(|| vs.contains_matrix(&barycenter).ok()?.then_some(barycenter))
        .or_else(|| pool.first().cloned());
    if let Some(w) = previous {
        pool.push(w);
    }
    let draws = config.oracle_samples;
    let (sampler, samples) = match start {
        Some(start) => (
            SamplerKind::HitAndRun,
            sampler::hit_and_run(vs, &start, draws, &mut stream.rng(0)),
        ),
        None => (
            SamplerKind::Rejection,
            (0..draws)
                .map(|i| sampler::uniform_base_draw(vs.num_models(), vs.dim(), &mut stream.rng(i as u64 + 1)))
                .collect(),
        ),
    };
    let mut draws_accepted = 0;
    for w in samples {
        if vs.contains_matrix(&w)? {
            pool.push(w);
            draws_accepted += 1;
        }
    }
    let diagnostics = PoolDiagnostics {
        grid_size: config.candidate_grid.len(),
        grid_accepted,
        previous_accepted,
        sampler,
        draws,
        draws_accepted,
        constraints: vs.constraints().len(),
    };
    Ok((pool, diagnostics))
}

/// Approximate `argmax_{W ∈ vs} v_W` over a sampled candidate pool. Ties go
/// to the earliest candidate.
pub fn optimistic_select(
    vs: &VersionSpace,
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    config: &LearnerConfig,
    previous: Option<&WeightMatrix>,
    stream: &RngStream,
) -> std::result::Result<Selection, SelectError> {
    ensemble.check_features(phi)?;
    if vs.num_models() != ensemble.len() || vs.dim() != phi.dim() {
        return Err(Error::ShapeMismatch("version space does not match ensemble and features".into()).into());
    }
    let (pool, diagnostics) = candidate_pool(vs, config, previous, stream)?;
    if pool.is_empty() {
        return Err(SelectError::Empty(diagnostics));
    }
    let initial = ensemble.reference().initial_dist();
    let values: Vec<f64> = pool
        .par_iter()
        .map(|w| {
            let w = WeightMatrix::new(w.clone())?;
            let (table, _) = backward_induction(&mix_model(ensemble, phi, &w)?);
            Ok(table.initial_value(initial))
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    let w = WeightMatrix::new(pool[best].clone())?;
    let (table, policy) = backward_induction(&mix_model(ensemble, phi, &w)?);
    Ok(Selection {
        w,
        policy,
        value: values[best],
        values: table,
        pool_size: pool.len(),
        diagnostics,
    })
}

/// Measurement matrix and outcome from exploration trajectories:
/// `Ẑ = (1/n) Σ_i Σ_h V̄_h(s_h, a_h) φ(s_h, a_h)ᵀ`, `ŷ = (1/n) Σ_i Σ_h r_h + V_{h+1}(s_{h+1})`,
/// where `V` is the optimistic model's optimal value table and `V̄_h` its
/// per-base-model projection.
pub fn estimate_constraint(
    trajectories: &[Trajectory],
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    values: &ValueTable,
    config: &LearnerConfig,
) -> Result<LinearConstraint> {
    if trajectories.is_empty() {
        return Err(Error::Empty("trajectory batch"));
    }
    ensemble.check_features(phi)?;
    let reference = ensemble.reference();
    let (ns, na, horizon, k, d) = (
        reference.num_states(),
        reference.num_actions(),
        reference.horizon(),
        ensemble.len(),
        phi.dim(),
    );
    if values.horizon() != horizon {
        return Err(Error::ShapeMismatch(
            "value table horizon differs from the ensemble".into(),
        ));
    }
    // V̄ for every (h, s, a), filled on first visit.
    let mut vbar: Vec<Option<Vec<f64>>> = vec![None; horizon * ns * na];
    let mut z = Array2::<f64>::zeros((k, d));
    let mut y = 0.0;
    for traj in trajectories {
        if traj.steps.len() != horizon {
            return Err(Error::ShapeMismatch(
                "trajectory length differs from the horizon".into(),
            ));
        }
        for (h, step) in traj.steps.iter().enumerate() {
            let slot = &mut vbar[(h * ns + step.state) * na + step.action];
            if slot.is_none() {
                *slot = Some(discriminator_vector(
                    ensemble,
                    values.v_step(h + 1),
                    step.state,
                    step.action,
                )?);
            }
            let v = slot.as_ref().unwrap();
            let features = phi.features(step.state, step.action);
            for (i, vi) in v.iter().enumerate() {
                for (j, fj) in features.iter().enumerate() {
                    if *fj != 0.0 {
                        z[(i, j)] += vi * fj;
                    }
                }
            }
            y += step.reward + values.v(h + 1, traj.next_state(h));
        }
    }
    let n = trajectories.len() as f64;
    Ok(LinearConstraint {
        z_hat: z / n,
        y_hat: y / n,
        tolerance: config.cut_tolerance(d, k, horizon),
    })
}

/// Optimistic version-space elimination. `target` is only accessed through
/// simulated rollouts.
pub fn run_pac(
    target: &TabularMdp,
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    config: &LearnerConfig,
) -> std::result::Result<PacResult, PacError> {
    config.validate()?;
    ensemble.check_features(phi)?;
    ensemble.check_target(target)?;
    let (k, d, horizon) = (ensemble.len(), phi.dim(), target.horizon());
    if let Some(w) = config
        .candidate_grid
        .iter()
        .chain(&config.known_w_star)
        .find(|w| w.num_models() != k || w.dim() != d)
    {
        return Err(Error::ShapeMismatch(format!(
            "configured weight matrix is {}x{}, expected {k}x{d}",
            w.num_models(),
            w.dim()
        ))
        .into());
    }
    let root = RngStream::from_seed(config.master_seed);
    let volume_stream = root.derive("volume", 0);
    let threshold = config.termination_threshold(d, k, horizon);
    let mut vs = VersionSpace::new(k, d);
    let mut previous: Option<WeightMatrix> = None;
    let mut records = Vec::new();
    let mut used = 0;

    for t in 1..=config.max_iterations {
        let selection = match optimistic_select(
            &vs,
            ensemble,
            phi,
            config,
            previous.as_ref(),
            &root.derive("select", t as u64),
        ) {
            Ok(s) => s,
            Err(SelectError::Invalid(e)) => return Err(e.into()),
            Err(SelectError::Empty(diagnostics)) => {
                return Err(PacError::EmptyVersionSpace {
                    iteration: t,
                    diagnostics,
                    records,
                    trajectories_used: used,
                })
            }
        };
        let estimate = monte_carlo_value(target, &selection.policy, config.n_eval, &root.derive("eval", t as u64))?;
        used += config.n_eval;
        let terminated = selection.value - estimate <= threshold;
        let constraint_added = if terminated {
            None
        } else {
            let batch = rollouts(target, &selection.policy, config.n, &root.derive("explore", t as u64))?;
            used += config.n;
            let constraint = estimate_constraint(&batch, ensemble, phi, &selection.values, config)?;
            vs.push(constraint.clone())?;
            Some(constraint)
        };
        let wstar_retained = config.known_w_star.as_ref().map(|w| vs.contains(w)).transpose()?;
        let volume_estimate = config
            .volume_samples
            .map(|n| mc_volume(&vs, n, &volume_stream))
            .transpose()?;
        records.push(IterationRecord {
            t,
            w: selection.w.clone(),
            optimistic_value: selection.value,
            mc_estimate: estimate,
            terminated,
            constraint_added,
            wstar_retained,
            volume_estimate,
            pool_size: selection.pool_size,
        });
        if terminated {
            return Ok(PacResult {
                policy: selection.policy,
                final_w: selection.w,
                records,
                trajectories_used: used,
            });
        }
        previous = Some(selection.w);
    }
    Err(PacError::IterationCap {
        cap: config.max_iterations,
        records,
        trajectories_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::simplex_grid;
    use crate::mdp::{evaluate_policy_exact, random_mdp, MdpSpec, RandomMdpShape, RewardDist};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn config(epsilon: f64) -> LearnerConfig {
        LearnerConfig {
            epsilon,
            delta: 0.1,
            theta: 0.0,
            n: 500,
            n_eval: 500,
            max_iterations: 40,
            oracle_samples: 50,
            candidate_grid: Vec::new(),
            master_seed: 3,
            known_w_star: None,
            volume_samples: None,
        }
    }

    fn random_ensemble(seed: u64, k: usize) -> ModelEnsemble {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shape = RandomMdpShape {
            num_states: 3,
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
        ModelEnsemble::new(models).unwrap()
    }

    /// Single state and action, deterministic reward `r`.
    fn bandit(r: f64) -> TabularMdp {
        TabularMdp::new(MdpSpec {
            num_states: 1,
            num_actions: 1,
            horizon: 1,
            initial_dist: vec![1.0],
            transitions: vec![vec![1.0]],
            rewards: vec![RewardDist::point(r).unwrap()],
            enforce_bounded_return: true,
        })
        .unwrap()
    }

    #[test]
    fn theorem_constants() {
        let s = default_sample_sizes(1, 2, 2, 0.5, 0.1).unwrap();
        assert_eq!(s.iterations, 11);
        assert_eq!(s.n_eval, (512.0 * 440.0_f64.ln()).ceil() as usize);
        assert_eq!(
            s.n,
            (1800.0 * 2.0 * 4.0 / 0.25 * (8.0 * 2.0 * 11.0 / 0.1_f64).ln()).ceil() as usize
        );
        // ε ≥ 2√(2K)H makes the logarithm non-positive.
        assert!(default_sample_sizes(1, 2, 2, 0.9, 0.1).is_ok());
        assert!(iteration_bound(1, 1, 1, 2.0 * 2.0_f64.sqrt()).is_err());
        assert!(default_sample_sizes(1, 2, 2, 1.5, 0.1).is_err());
    }

    #[test]
    fn doubling_dimension_quadruples_polynomial_factor() {
        // With the log term fixed, n scales with d^2.
        let poly = |d: f64| 1800.0 * d * d * 2.0 * 9.0 / 0.04;
        assert_eq!(poly(2.0) / poly(1.0), 4.0);
    }

    #[test]
    fn version_space_membership() {
        let vs = VersionSpace::new(2, 2);
        assert!(vs.contains(&WeightMatrix::uniform(2, 2)).unwrap());
        assert!(!vs.contains_matrix(&array![[0.5, 0.5], [0.4, 0.5]]).unwrap());
        assert!(vs.contains_matrix(&array![[0.5], [0.5]]).is_err());

        let single = VersionSpace::new(1, 3);
        assert!(single.contains_matrix(&array![[1.0, 1.0, 1.0]]).unwrap());
        assert!(!single.contains_matrix(&array![[1.0, 0.9, 1.0]]).unwrap());

        let mut vs = VersionSpace::new(2, 1);
        vs.push(LinearConstraint {
            z_hat: Array2::zeros((2, 1)),
            y_hat: 0.0,
            tolerance: 0.01,
        })
        .unwrap();
        for w in simplex_grid(2, 1, 10) {
            assert!(vs.contains(&w).unwrap());
        }

        let mut vs = VersionSpace::new(1, 1);
        vs.push(LinearConstraint {
            z_hat: array![[2.0]],
            y_hat: 1.9,
            tolerance: 0.05,
        })
        .unwrap();
        assert!(!vs.contains_matrix(&array![[1.0]]).unwrap());
    }

    #[test]
    fn singleton_grid_and_dominance() {
        let ens = ModelEnsemble::new(vec![bandit(0.9), bandit(0.2)]).unwrap();
        let phi = FeatureMap::constant(1, 1);
        let w = WeightMatrix::from_rows(vec![vec![0.4], vec![0.6]]).unwrap();
        let mut cfg = config(0.2);
        cfg.candidate_grid = vec![w.clone()];
        // Make the sampler contribute nothing new: a cut that only admits w.
        let mut vs = VersionSpace::new(2, 1);
        vs.push(LinearConstraint {
            z_hat: array![[1.0], [0.0]],
            y_hat: 0.4,
            tolerance: 0.0,
        })
        .unwrap();
        let sel = optimistic_select(&vs, &ens, &phi, &cfg, None, &RngStream::from_seed(0)).unwrap();
        assert_eq!(sel.w, w);
        assert!((sel.value - (0.4 * 0.9 + 0.6 * 0.2)).abs() < 1e-12);

        // Pointwise dominance: more weight on the high-reward model wins.
        let hi = WeightMatrix::from_rows(vec![vec![0.8], vec![0.2]]).unwrap();
        cfg.candidate_grid = vec![w, hi.clone()];
        cfg.oracle_samples = 1;
        let vs = VersionSpace::new(2, 1);
        let sel = optimistic_select(&vs, &ens, &phi, &cfg, None, &RngStream::from_seed(0)).unwrap();
        assert!(sel.value >= 0.8 * 0.9 + 0.2 * 0.2 - 1e-12);
    }

    #[test]
    fn selection_matches_exhaustive_grid() {
        let ens = random_ensemble(10, 2);
        let phi = FeatureMap::constant(3, 2);
        let grid = simplex_grid(2, 1, 10);
        let mut cfg = config(0.2);
        cfg.candidate_grid = grid.clone();
        cfg.oracle_samples = 1;
        // A cut with zero tolerance at an off-grid point leaves only the
        // grid, so only grid values can be selected.
        let vs = VersionSpace::new(2, 1);
        let sel = optimistic_select(&vs, &ens, &phi, &cfg, None, &RngStream::from_seed(1)).unwrap();
        let best_grid = grid
            .iter()
            .map(|w| {
                let m = mix_model(&ens, &phi, w).unwrap();
                backward_induction(&m).0.initial_value(m.initial_dist())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(sel.value >= best_grid);
        assert_eq!(sel.pool_size, grid.len() + 1);
    }

    #[test]
    fn empty_pool_is_an_error() {
        let ens = ModelEnsemble::new(vec![bandit(0.9), bandit(0.2)]).unwrap();
        let phi = FeatureMap::constant(1, 1);
        let mut vs = VersionSpace::new(2, 1);
        vs.push(LinearConstraint {
            z_hat: array![[1.0], [1.0]],
            y_hat: 5.0,
            tolerance: 0.1,
        })
        .unwrap();
        let err = optimistic_select(&vs, &ens, &phi, &config(0.2), None, &RngStream::from_seed(0)).unwrap_err();
        match err {
            SelectError::Empty(diag) => {
                assert_eq!(diag.sampler, SamplerKind::Rejection);
                assert_eq!(diag.draws_accepted, 0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constraint_from_deterministic_path() {
        // Two-step deterministic chain: 0 -> 1 -> 1, rewards 0.2 then 0.3.
        let chain = |r1: f64| {
            TabularMdp::new(MdpSpec {
                num_states: 2,
                num_actions: 1,
                horizon: 2,
                initial_dist: vec![1.0, 0.0],
                transitions: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                rewards: vec![RewardDist::point(0.2).unwrap(), RewardDist::point(r1).unwrap()],
                enforce_bounded_return: true,
            })
            .unwrap()
        };
        let ens = ModelEnsemble::new(vec![chain(0.3), chain(0.5)]).unwrap();
        let phi = FeatureMap::constant(2, 1);
        let w = WeightMatrix::from_rows(vec![vec![0.5], vec![0.5]]).unwrap();
        let model = mix_model(&ens, &phi, &w).unwrap();
        let (values, policy) = backward_induction(&model);
        let target = ens.models()[0].clone();
        let trajs = rollouts(&target, &policy, 1, &RngStream::from_seed(0)).unwrap();
        let c = estimate_constraint(&trajs, &ens, &phi, &values, &config(0.2)).unwrap();
        // V_1(1) = 0.4 in the mixed model; V̄_0(0) = 0.2 + 0.4 for both
        // models, V̄_1(1) = (0.3, 0.5).
        assert!((c.z_hat[(0, 0)] - 0.9).abs() < 1e-12);
        assert!((c.z_hat[(1, 0)] - 1.1).abs() < 1e-12);
        assert!((c.y_hat - (0.2 + 0.4 + 0.3)).abs() < 1e-12);
        assert!((c.tolerance - 0.2 / (12.0 * 2.0_f64.sqrt())).abs() < 1e-15);
        // The true parameter satisfies the cut exactly.
        assert!(c.residual(WeightMatrix::basis(0, 2, 1).entries()) < 1e-12);

        let zero = |_: ()| {
            TabularMdp::new(MdpSpec {
                num_states: 2,
                num_actions: 1,
                horizon: 2,
                initial_dist: vec![1.0, 0.0],
                transitions: vec![vec![0.0, 1.0], vec![0.0, 1.0]],
                rewards: vec![RewardDist::point(0.0).unwrap(); 2],
                enforce_bounded_return: true,
            })
            .unwrap()
        };
        let ens0 = ModelEnsemble::new(vec![zero(()), zero(())]).unwrap();
        let (values0, policy0) = backward_induction(&ens0.models()[0]);
        let trajs0 = rollouts(&ens0.models()[0], &policy0, 3, &RngStream::from_seed(0)).unwrap();
        let c0 = estimate_constraint(&trajs0, &ens0, &phi, &values0, &config(0.2)).unwrap();
        assert_eq!(c0.y_hat, 0.0);
        assert!(c0.z_hat.iter().all(|x| *x == 0.0));
        assert!(estimate_constraint(&[], &ens0, &phi, &values0, &config(0.2)).is_err());
    }

    #[test]
    fn degenerate_ensembles_terminate_immediately() {
        let ens = random_ensemble(20, 1);
        let twin = ModelEnsemble::new(vec![ens.models()[0].clone(), ens.models()[0].clone()]).unwrap();
        let phi = FeatureMap::constant(3, 2);
        let target = ens.models()[0].clone();
        let (_, optimal) = backward_induction(&target);

        let single = run_pac(&target, &ens, &phi, &config(0.2)).unwrap();
        assert_eq!(single.records.len(), 1);
        assert!(single.records[0].terminated);
        assert_eq!(single.policy, optimal);
        assert_eq!(single.trajectories_used, 500);

        let result = run_pac(&target, &twin, &phi, &config(0.2)).unwrap();
        assert_eq!(result.records.len(), 1);
        assert_eq!(result.explored_iterations(), 0);
        assert_eq!(result.policy, optimal);
    }

    #[test]
    fn realizable_run_retains_w_star_and_is_reproducible() {
        let ens = random_ensemble(30, 2);
        let phi = FeatureMap::constant(3, 2);
        let w_star = WeightMatrix::from_rows(vec![vec![0.7], vec![0.3]]).unwrap();
        let target = mix_model(&ens, &phi, &w_star).unwrap();
        let mut cfg = config(0.1);
        cfg.n = 4000;
        cfg.n_eval = 4000;
        cfg.candidate_grid = simplex_grid(2, 1, 20);
        cfg.known_w_star = Some(w_star);
        cfg.volume_samples = Some(2000);
        let a = run_pac(&target, &ens, &phi, &cfg).unwrap();
        let b = run_pac(&target, &ens, &phi, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        let v_star = backward_induction(&target).0.initial_value(target.initial_dist());
        assert!(evaluate_policy_exact(&target, &a.policy).unwrap() >= v_star - 0.1);
        let explored = a.explored_iterations();
        assert_eq!(a.trajectories_used, a.records.len() * 4000 + explored * 4000);
        let mut last = 1.0;
        for r in &a.records {
            assert_eq!(r.terminated, r.constraint_added.is_none());
            let v = r.volume_estimate.unwrap();
            assert!(v <= last);
            last = v;
        }
    }

    #[test]
    fn iteration_cap_carries_records() {
        let ens = random_ensemble(40, 2);
        let phi = FeatureMap::constant(3, 2);
        // Target far outside the class; one iteration allowed.
        let target = {
            let mut spec = ens.models()[0].spec().clone();
            spec.rewards = vec![RewardDist::point(0.0).unwrap(); 6];
            TabularMdp::new(spec).unwrap()
        };
        let mut cfg = config(0.05);
        cfg.max_iterations = 1;
        match run_pac(&target, &ens, &phi, &cfg) {
            Err(PacError::IterationCap {
                cap,
                records,
                trajectories_used,
            }) => {
                assert_eq!(cap, 1);
                assert_eq!(records.len(), 1);
                assert_eq!(trajectories_used, 1000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = config(0.2);
        cfg.epsilon = 1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(0.2);
        cfg.n = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = config(0.2);
        cfg.theta = -0.1;
        assert!(cfg.validate().is_err());
        let cfg = LearnerConfig::with_default_sizes(1, 2, 2, 0.5, 0.1, 0).unwrap();
        assert_eq!(cfg.max_iterations, 12);
    }
}
