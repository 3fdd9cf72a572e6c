//! Manifest-driven runs with JSON-lines reports.
//!
//! A report is one JSON object per line: the run's records in order, then a
//! final object with `"type": "summary"`. Decimals are rounded to 12
//! significant digits when records are built, so a written report parses
//! back to exactly the in-memory records.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::ensemble::{
    approx_error, mix_model, simplex_grid, sup_misfit, trace_inner, FeatureMap, ModelEnsemble, WeightMatrix,
};
use crate::error::{Error, Result};
use crate::hard::{
    biased_leaf_mdp, biased_leaf_weights, leaf_partition, nested_pair, path_abstraction_family, rewarding_leaf_mdp,
    tree_base_models,
};
use crate::io;
use crate::learner::sampler::uniform_base_draw;
use crate::learner::{
    default_sample_sizes, exact_z, model_error, per_step_error, run_pac, value_gap, IterationRecord, LearnerConfig,
    PacError,
};
use crate::mdp::{backward_induction, evaluate_policy_exact, random_mdp, Policy, RandomMdpShape, TabularMdp};
use crate::rng::RngStream;
use crate::selection::{run_model_selection, RoundRecord, SelectionConfig, SelectionError};

/// Significant digits kept for report decimals.
pub const REPORT_DIGITS: usize = 12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub seed: u64,
    /// Report path, relative to the manifest.
    #[serde(default)]
    pub output: Option<PathBuf>,
    pub run: RunSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum RunSpec {
    Pac(PacSpec),
    Select(SelectSpec),
    Generate(GenerateSpec),
    Diagnose(DiagnoseSpec),
}

impl RunSpec {
    pub fn command(&self) -> &'static str {
        match self {
            RunSpec::Pac(_) => "pac",
            RunSpec::Select(_) => "select",
            RunSpec::Generate(_) => "generate",
            RunSpec::Diagnose(_) => "diagnose",
        }
    }
}

fn default_oracle_samples() -> usize {
    200
}

/// Learner run. Unset sample sizes use the analysis defaults.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacSpec {
    pub target: PathBuf,
    pub ensemble: PathBuf,
    pub features: PathBuf,
    /// Known true weights, for retention telemetry.
    #[serde(default)]
    pub w_star: Option<PathBuf>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_eval: Option<usize>,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    /// Simplex-grid resolution for the oracle's fixed candidates; 0 for none.
    #[serde(default)]
    pub grid_resolution: usize,
    #[serde(default)]
    pub volume_samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectSpec {
    pub target: PathBuf,
    pub ensemble: PathBuf,
    pub family: PathBuf,
    /// Known optimal value; computed by planning in the target when unset.
    #[serde(default)]
    pub v_star: Option<f64>,
    pub epsilon: f64,
    pub delta: f64,
    #[serde(default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub n_eval: Option<usize>,
    #[serde(default)]
    pub certify_trajectories: Option<usize>,
    #[serde(default = "default_oracle_samples")]
    pub oracle_samples: usize,
    #[serde(default)]
    pub grid_resolution: usize,
    #[serde(default)]
    pub max_grid_points: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    /// Bundle directory, relative to the manifest.
    pub out_dir: PathBuf,
    pub instance: InstanceSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceSpec {
    /// Tree base models and the nested `{1, 2^H}` family. With `leaf`, also
    /// a target: the single rewarding leaf, or with `epsilon` the biased
    /// Bernoulli leaf.
    Tree {
        depth: usize,
        #[serde(default)]
        leaf: Option<usize>,
        #[serde(default)]
        epsilon: Option<f64>,
    },
    /// Random base models, a random state partition and a realizable target.
    Random {
        num_states: usize,
        num_actions: usize,
        horizon: usize,
        num_models: usize,
        dim: usize,
        #[serde(default = "default_reward_atoms")]
        max_reward_atoms: usize,
    },
}

fn default_reward_atoms() -> usize {
    2
}

/// Exact error decomposition for a set of weight matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnoseSpec {
    pub target: PathBuf,
    pub ensemble: PathBuf,
    pub features: PathBuf,
    /// Reference weights; defaults to the best candidate by misfit.
    #[serde(default)]
    pub w_star: Option<PathBuf>,
    #[serde(default)]
    pub weights: Vec<PathBuf>,
    #[serde(default)]
    pub grid_resolution: usize,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub records: Vec<Value>,
    pub summary: Value,
    /// Whether a learner stage failed (the report is still complete).
    pub failed: bool,
    /// Not written to the report file, which must be reproducible.
    pub wall_time: Duration,
}

impl RunReport {
    pub fn status(&self) -> &str {
        self.summary.get("status").and_then(Value::as_str).unwrap_or("")
    }
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    io::read_json(path)
}

fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", REPORT_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Rounds every decimal in `value` to [`REPORT_DIGITS`] significant digits.
pub fn round_decimals(value: Value) -> Value {
    match value {
        Value::Number(n) if n.is_f64() => n
            .as_f64()
            .map(round_sig)
            .and_then(serde_json::Number::from_f64)
            .map_or(Value::Null, Value::Number),
        Value::Array(items) => Value::Array(items.into_iter().map(round_decimals).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_decimals(v))).collect()),
        other => other,
    }
}

fn record(kind: &str, value: Value) -> Value {
    let mut map = Map::new();
    map.insert("type".into(), Value::String(kind.into()));
    if let Value::Object(fields) = value {
        map.extend(fields);
    }
    round_decimals(Value::Object(map))
}

fn rows(w: &WeightMatrix) -> Vec<Vec<f64>> {
    w.clone().into()
}

fn matrix_rows(m: &ndarray::Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn iteration_record(r: &IterationRecord, round: Option<usize>) -> Value {
    let mut v = json!({
        "t": r.t,
        "w": rows(&r.w),
        "optimistic_value": r.optimistic_value,
        "mc_estimate": r.mc_estimate,
        "terminated": r.terminated,
        "constraint": r.constraint_added.as_ref().map(|c| json!({
            "z_hat": matrix_rows(&c.z_hat),
            "y_hat": c.y_hat,
            "tolerance": c.tolerance,
        })),
        "wstar_retained": r.wstar_retained,
        "volume_estimate": r.volume_estimate,
        "pool_size": r.pool_size,
    });
    if let Some(round) = round {
        v["round"] = json!(round);
    }
    record("iteration", v)
}

/// Hoeffding half-width for a mean of `n` returns in `[0, 1]` at confidence
/// `1 - δ`.
pub fn hoeffding_radius(n: usize, delta: f64) -> f64 {
    ((2.0 / delta).ln() / (2.0 * n as f64)).sqrt()
}

fn value_audit(target: &TabularMdp, policy: &Policy, v_hat: f64, n: usize, delta: f64) -> Result<Value> {
    let exact = evaluate_policy_exact(target, policy)?;
    let radius = hoeffding_radius(n, delta);
    Ok(json!({
        "v_hat": v_hat,
        "v_exact": exact,
        "n_eval": n,
        "radius": radius,
        "within_radius": (v_hat - exact).abs() <= radius,
    }))
}

fn optimal_value(mdp: &TabularMdp) -> f64 {
    backward_induction(mdp).0.initial_value(mdp.initial_dist())
}

/// Runs `manifest` with paths resolved against `base_dir`.
pub fn run_experiment(manifest: &RunManifest, base_dir: &Path) -> Result<RunReport> {
    let start = Instant::now();
    let resolve = |p: &Path| base_dir.join(p);
    let (records, mut summary, failed) = match &manifest.run {
        RunSpec::Pac(spec) => run_pac_spec(spec, manifest.seed, &resolve)?,
        RunSpec::Select(spec) => run_select_spec(spec, manifest.seed, &resolve)?,
        RunSpec::Generate(spec) => run_generate_spec(spec, manifest.seed, &resolve(&spec.out_dir))?,
        RunSpec::Diagnose(spec) => run_diagnose_spec(spec, &resolve)?,
    };
    summary.insert("command".into(), json!(manifest.run.command()));
    summary.insert("seed".into(), json!(manifest.seed));
    summary.insert(
        "manifest".into(),
        serde_json::to_value(manifest).map_err(|e| Error::param("manifest", e.to_string()))?,
    );
    Ok(RunReport {
        records,
        summary: record("summary", Value::Object(summary)),
        failed,
        wall_time: start.elapsed(),
    })
}

/// [`run_experiment`] inside a dedicated pool of `threads` workers (all
/// cores when `None`). Reports do not depend on the thread count.
pub fn run_experiment_with_threads(
    manifest: &RunManifest,
    base_dir: &Path,
    threads: Option<usize>,
) -> Result<RunReport> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::param("threads", e.to_string()))?;
    pool.install(|| run_experiment(manifest, base_dir))
}

type Stage = (Vec<Value>, Map<String, Value>, bool);

fn into_map(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => Map::new(),
    }
}

fn run_pac_spec(spec: &PacSpec, seed: u64, resolve: &dyn Fn(&Path) -> PathBuf) -> Result<Stage> {
    let target = io::read_mdp(&resolve(&spec.target))?;
    let ensemble = io::read_ensemble(&resolve(&spec.ensemble))?;
    let phi = io::read_feature_map(&resolve(&spec.features))?;
    let w_star = spec
        .w_star
        .as_ref()
        .map(|p| io::read_weights(&resolve(p)))
        .transpose()?;
    let (k, d, horizon) = (ensemble.len(), phi.dim(), target.horizon());
    let sizes = default_sample_sizes(d, k, horizon, spec.epsilon, spec.delta)?;
    let config = LearnerConfig {
        epsilon: spec.epsilon,
        delta: spec.delta,
        theta: spec.theta,
        n: spec.n.unwrap_or(sizes.n),
        n_eval: spec.n_eval.unwrap_or(sizes.n_eval),
        max_iterations: spec.max_iterations.unwrap_or(sizes.iterations + 1),
        oracle_samples: spec.oracle_samples,
        candidate_grid: if spec.grid_resolution > 0 {
            simplex_grid(k, d, spec.grid_resolution)
        } else {
            Vec::new()
        },
        master_seed: seed,
        known_w_star: w_star,
        volume_samples: spec.volume_samples,
    };
    let mut summary = into_map(json!({
        "v_star": optimal_value(&target),
        "n": config.n,
        "n_eval": config.n_eval,
        "max_iterations": config.max_iterations,
        "iteration_bound": sizes.iterations,
    }));
    match run_pac(&target, &ensemble, &phi, &config) {
        Ok(result) => {
            let records = result.records.iter().map(|r| iteration_record(r, None)).collect();
            summary.extend(into_map(json!({
                "status": "terminated",
                "iterations": result.records.len(),
                "explored_iterations": result.explored_iterations(),
                "trajectories_used": result.trajectories_used,
                "final_w": rows(&result.final_w),
                "value_audit": value_audit(&target, &result.policy, result.value_estimate(), config.n_eval, config.delta)?,
            })));
            Ok((records, summary, false))
        }
        Err(PacError::Invalid(e)) => Err(e),
        Err(err) => {
            let status = match err {
                PacError::IterationCap { .. } => "iteration-cap",
                _ => "empty-version-space",
            };
            let records = err.records().iter().map(|r| iteration_record(r, None)).collect();
            summary.extend(into_map(json!({
                "status": status,
                "error": err.to_string(),
                "iterations": err.records().len(),
                "trajectories_used": err.trajectories_used(),
            })));
            Ok((records, summary, true))
        }
    }
}

fn round_records(rounds: &[RoundRecord]) -> Vec<Value> {
    let mut out = Vec::new();
    for r in rounds {
        out.extend(r.iterations.iter().map(|it| iteration_record(it, Some(r.round))));
        out.push(record(
            "round",
            json!({
                "round": r.round,
                "index": r.index,
                "dim": r.dim,
                "iteration_cap": r.iteration_cap,
                "outcome": r.outcome,
                "value_estimate": r.value_estimate,
                "certified": r.certified,
                "trajectories_used": r.trajectories_used,
            }),
        ));
    }
    out
}

fn run_select_spec(spec: &SelectSpec, seed: u64, resolve: &dyn Fn(&Path) -> PathBuf) -> Result<Stage> {
    let target = io::read_mdp(&resolve(&spec.target))?;
    let ensemble = io::read_ensemble(&resolve(&spec.ensemble))?;
    let family = io::read_family(&resolve(&spec.family))?;
    let v_star = spec.v_star.unwrap_or_else(|| optimal_value(&target));
    let config = SelectionConfig {
        epsilon: spec.epsilon,
        delta: spec.delta,
        v_star,
        n: spec.n,
        n_eval: spec.n_eval,
        certify_trajectories: spec.certify_trajectories,
        oracle_samples: spec.oracle_samples,
        grid_resolution: spec.grid_resolution,
        max_grid_points: spec.max_grid_points.unwrap_or(2000),
        master_seed: seed,
    };
    let certify = config.certify_size(family.len());
    let mut summary = into_map(json!({
        "v_star": v_star,
        "v_star_source": if spec.v_star.is_some() { "manifest" } else { "exact" },
        "certify_trajectories": certify,
        "family_dims": family.dims(),
    }));
    match run_model_selection(&target, &ensemble, &family, &config) {
        Ok(result) => {
            let last = result.rounds.last().and_then(|r| r.value_estimate).unwrap_or(0.0);
            summary.extend(into_map(json!({
                "status": "certified",
                "chosen_index": result.chosen_index,
                "chosen_dim": family.partitions()[result.chosen_index].dim(),
                "rounds": result.rounds.len(),
                "trajectories_used": result.total_trajectories,
                "value_audit": value_audit(&target, &result.policy, last, certify, config.delta)?,
            })));
            Ok((round_records(&result.rounds), summary, false))
        }
        Err(SelectionError::Invalid(e)) => Err(e),
        Err(err @ SelectionError::Exhausted { .. }) => {
            let SelectionError::Exhausted {
                rounds,
                total_trajectories,
            } = &err
            else {
                unreachable!()
            };
            summary.extend(into_map(json!({
                "status": "exhausted",
                "error": err.to_string(),
                "rounds": rounds.len(),
                "trajectories_used": total_trajectories,
            })));
            Ok((round_records(rounds), summary, true))
        }
    }
}

fn run_generate_spec(spec: &GenerateSpec, seed: u64, out_dir: &Path) -> Result<Stage> {
    let mut written: Vec<(PathBuf, &str, Option<usize>)> = Vec::new();
    let write_mdp = |name: &str, mdp: &TabularMdp, written: &mut Vec<_>| -> Result<()> {
        let path = out_dir.join(name);
        io::write_mdp(&path, mdp)?;
        written.push((path, "mdp", Some(mdp.num_states())));
        Ok(())
    };
    let mut extra = Map::new();
    match &spec.instance {
        InstanceSpec::Tree { depth, leaf, epsilon } => {
            let tree = tree_base_models(*depth)?;
            for (i, path) in io::write_ensemble(&out_dir.join("ensemble.json"), tree.ensemble())?
                .into_iter()
                .enumerate()
            {
                let kind = if i < tree.models().len() { "mdp" } else { "ensemble" };
                written.push((path, kind, (kind == "mdp").then(|| tree.num_states())));
            }
            for path in io::write_family(&out_dir.join("family.json"), &nested_pair(*depth)?)? {
                written.push((path, "features", None));
            }
            written.last_mut().expect("family file").1 = "family";
            if let Some(leaf) = *leaf {
                let (target, phi, w) = match *epsilon {
                    None => (
                        rewarding_leaf_mdp(*depth, leaf)?,
                        leaf_partition(*depth, leaf)?,
                        WeightMatrix::identity(2),
                    ),
                    Some(eps) => (
                        biased_leaf_mdp(*depth, leaf, eps)?,
                        crate::hard::per_leaf_partition(*depth)?,
                        biased_leaf_weights(*depth, leaf, eps)?,
                    ),
                };
                write_mdp("target.json", &target, &mut written)?;
                write_features(out_dir, "features.json", &phi, &mut written)?;
                write_w(out_dir, &w, &mut written)?;
                let abstraction = &path_abstraction_family(*depth)?[leaf];
                write_features(out_dir, "abstraction.json", &abstraction.feature_map(2)?, &mut written)?;
                extra.insert("v_star".into(), json!(optimal_value(&target)));
            }
        }
        InstanceSpec::Random {
            num_states,
            num_actions,
            horizon,
            num_models,
            dim,
            max_reward_atoms,
        } => {
            if [
                *num_states,
                *num_actions,
                *horizon,
                *num_models,
                *dim,
                *max_reward_atoms,
            ]
            .contains(&0)
            {
                return Err(Error::param("instance", "random instance sizes must be positive"));
            }
            let stream = RngStream::from_seed(seed).derive("generate", 0);
            let mut rng = stream.rng(0);
            let shape = RandomMdpShape {
                num_states: *num_states,
                num_actions: *num_actions,
                horizon: *horizon,
                max_reward_atoms: *max_reward_atoms,
            };
            let first = random_mdp(shape, None, &mut rng);
            let p1 = first.initial_dist().to_vec();
            let mut models = vec![first];
            for _ in 1..*num_models {
                models.push(random_mdp(shape, Some(&p1), &mut rng));
            }
            let ensemble = ModelEnsemble::new(models)?;
            let cells: Vec<usize> = (0..*num_states).map(|_| rng.random_range(0..*dim)).collect();
            let phi = FeatureMap::state_partition(*num_actions, *dim, &cells)?;
            let w = WeightMatrix::new(uniform_base_draw(*num_models, *dim, &mut rng))?;
            let target = mix_model(&ensemble, &phi, &w)?;
            for (i, path) in io::write_ensemble(&out_dir.join("ensemble.json"), &ensemble)?
                .into_iter()
                .enumerate()
            {
                let kind = if i < *num_models { "mdp" } else { "ensemble" };
                written.push((path, kind, (kind == "mdp").then_some(*num_states)));
            }
            write_mdp("target.json", &target, &mut written)?;
            write_features(out_dir, "features.json", &phi, &mut written)?;
            write_w(out_dir, &w, &mut written)?;
            extra.insert("v_star".into(), json!(optimal_value(&target)));
        }
    }
    let records = written
        .iter()
        .map(|(path, kind, states)| {
            let name = path.strip_prefix(out_dir).unwrap_or(path);
            record("file", json!({"path": name, "content": kind, "num_states": states}))
        })
        .collect();
    let mut summary = into_map(json!({"status": "generated", "files": written.len()}));
    summary.extend(extra);
    Ok((records, summary, false))
}

fn write_features(
    out_dir: &Path,
    name: &str,
    phi: &FeatureMap,
    written: &mut Vec<(PathBuf, &str, Option<usize>)>,
) -> Result<()> {
    let path = out_dir.join(name);
    io::write_feature_map(&path, phi)?;
    written.push((path, "features", None));
    Ok(())
}

fn write_w(out_dir: &Path, w: &WeightMatrix, written: &mut Vec<(PathBuf, &str, Option<usize>)>) -> Result<()> {
    let path = out_dir.join("w_star.json");
    io::write_weights(&path, w)?;
    written.push((path, "weights", None));
    Ok(())
}

fn run_diagnose_spec(spec: &DiagnoseSpec, resolve: &dyn Fn(&Path) -> PathBuf) -> Result<Stage> {
    let target = io::read_mdp(&resolve(&spec.target))?;
    let ensemble = io::read_ensemble(&resolve(&spec.ensemble))?;
    let phi = io::read_feature_map(&resolve(&spec.features))?;
    let mut candidates = spec
        .weights
        .iter()
        .map(|p| io::read_weights(&resolve(p)))
        .collect::<Result<Vec<_>>>()?;
    if spec.grid_resolution > 0 {
        candidates.extend(simplex_grid(ensemble.len(), phi.dim(), spec.grid_resolution));
    }
    let reference = match &spec.w_star {
        Some(p) => {
            let w = io::read_weights(&resolve(p))?;
            (sup_misfit(&ensemble, &phi, &w, &target)?, w)
        }
        None => approx_error(&ensemble, &phi, &target, &candidates)?,
    };
    let (theta, w_ref) = reference;
    let horizon = target.horizon();
    let mut records = Vec::new();
    let mut worst_residual: f64 = 0.0;
    let mut bounds_hold = true;
    for (i, w) in candidates.iter().enumerate() {
        let gap = value_gap(&target, &ensemble, &phi, w)?;
        let steps = (0..horizon)
            .map(|h| per_step_error(&target, &ensemble, &phi, w, h))
            .collect::<Result<Vec<_>>>()?;
        let error = model_error(&target, &ensemble, &phi, w)?;
        let z = exact_z(&target, &ensemble, &phi, w)?;
        let linear = trace_inner(&(w.entries() - w_ref.entries()), &z);
        let bound = linear + horizon as f64 * theta;
        let residual = (gap - steps.iter().sum::<f64>()).abs();
        worst_residual = worst_residual.max(residual);
        bounds_hold &= error <= bound + 1e-8;
        records.push(record(
            "diagnostic",
            json!({
                "index": i,
                "w": rows(w),
                "misfit": sup_misfit(&ensemble, &phi, w, &target)?,
                "value_gap": gap,
                "per_step_errors": steps,
                "model_error": error,
                "linear_term": linear,
                "error_bound": bound,
                "decomposition_residual": residual,
            }),
        ));
    }
    let summary = into_map(json!({
        "status": "diagnosed",
        "candidates": candidates.len(),
        "theta_hat": theta,
        "reference_w": rows(&w_ref),
        "max_decomposition_residual": worst_residual,
        "error_bounds_hold": bounds_hold,
    }));
    Ok((records, summary, false))
}

/// Writes `records` then `summary` as JSON lines.
pub fn emit_report(records: &[Value], summary: &Value, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut out = Vec::new();
    for line in records.iter().chain(std::iter::once(summary)) {
        serde_json::to_writer(&mut out, line).map_err(|e| Error::param("report", e.to_string()))?;
        out.push(b'\n');
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(io_err)
}

/// Records and summary of a report file.
pub fn read_report(path: &Path) -> Result<(Vec<Value>, Value)> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    let mut lines = text
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).map_err(|e| Error::Parse {
                path: path.to_owned(),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    match lines.pop() {
        Some(summary) if summary["type"] == "summary" => Ok((lines, summary)),
        _ => Err(Error::Parse {
            path: path.to_owned(),
            message: "missing summary line".into(),
        }),
    }
}
