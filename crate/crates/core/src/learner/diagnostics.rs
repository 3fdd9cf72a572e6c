//! Exact (planning-based) quantities behind the learner's estimates, used for
//! telemetry and tests rather than by the learner itself.

use ndarray::Array2;
use rayon::prelude::*;

use super::sampler::uniform_base_draw;
use super::VersionSpace;
use crate::ensemble::{discriminator_vector, mix_model, FeatureMap, ModelEnsemble, WeightMatrix};
use crate::error::{Error, Result};
use crate::mdp::{backward_induction, evaluate_policy_exact, occupancy, TabularMdp};
use crate::rng::RngStream;

/// Population version of one exploration round under `π_W` in `target`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactMeasurement {
    /// `Z_W = E[Σ_h V̄_h(s_h, a_h) φ(s_h, a_h)ᵀ]`.
    pub z: Array2<f64>,
    /// `E[Σ_h r_h + V_{h+1}(s_{h+1})]` with `V` the optimal values of `M(W)`.
    pub alpha: f64,
}

pub fn exact_measurement(
    target: &TabularMdp,
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    w: &WeightMatrix,
) -> Result<ExactMeasurement> {
    ensemble.check_target(target)?;
    let (values, policy) = backward_induction(&mix_model(ensemble, phi, w)?);
    let occ = occupancy(target, &policy)?;
    let mut z = Array2::<f64>::zeros((ensemble.len(), phi.dim()));
    let mut alpha = 0.0;
    for h in 0..target.horizon() {
        let next = values.v_step(h + 1);
        for s in 0..target.num_states() {
            for a in 0..target.num_actions() {
                let mass = occ.get(h, s, a);
                if mass == 0.0 {
                    continue;
                }
                let vbar = discriminator_vector(ensemble, next, s, a)?;
                for (i, v) in vbar.iter().enumerate() {
                    for (j, f) in phi.features(s, a).iter().enumerate() {
                        z[(i, j)] += mass * v * f;
                    }
                }
                alpha += mass * target.backup(s, a, next);
            }
        }
    }
    Ok(ExactMeasurement { z, alpha })
}

/// `Z_W` alone.
pub fn exact_z(
    target: &TabularMdp,
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    w: &WeightMatrix,
) -> Result<Array2<f64>> {
    Ok(exact_measurement(target, ensemble, phi, w)?.z)
}

/// `E(W, h)`: expected one-step Bellman error of `M(W)`'s optimal values at
/// step `h` (0-based), along `π_W` in `target`.
pub fn per_step_error(
    target: &TabularMdp,
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    w: &WeightMatrix,
    h: usize,
) -> Result<f64> {
    if h >= target.horizon() {
        return Err(Error::param(
            "h",
            format!("step {h} is outside horizon {}", target.horizon()),
        ));
    }
    Ok(step_errors(target, ensemble, phi, w)?[h])
}

fn step_errors(target: &TabularMdp, ensemble: &ModelEnsemble, phi: &FeatureMap, w: &WeightMatrix) -> Result<Vec<f64>> {
    ensemble.check_target(target)?;
    let model = mix_model(ensemble, phi, w)?;
    let (values, policy) = backward_induction(&model);
    let occ = occupancy(target, &policy)?;
    Ok((0..target.horizon())
        .map(|h| {
            let next = values.v_step(h + 1);
            let mut err = 0.0;
            for s in 0..target.num_states() {
                let a = policy.action(h, s);
                let mass = occ.get(h, s, a);
                if mass > 0.0 {
                    err += mass * (model.backup(s, a, next) - target.backup(s, a, next));
                }
            }
            err
        })
        .collect())
}

/// `E(W) = Σ_h E(W, h)`.
pub fn model_error(target: &TabularMdp, ensemble: &ModelEnsemble, phi: &FeatureMap, w: &WeightMatrix) -> Result<f64> {
    Ok(step_errors(target, ensemble, phi, w)?.iter().sum())
}

/// `v_W - v^{π_W}`: predicted value in `M(W)` minus the true value of its
/// optimal policy in `target`.
pub fn value_gap(target: &TabularMdp, ensemble: &ModelEnsemble, phi: &FeatureMap, w: &WeightMatrix) -> Result<f64> {
    ensemble.check_target(target)?;
    let model = mix_model(ensemble, phi, w)?;
    let (values, policy) = backward_induction(&model);
    Ok(values.initial_value(model.initial_dist()) - evaluate_policy_exact(target, &policy)?)
}

/// Fraction of `n_samples` uniform draws from `W_0` that lie in `vs`. Draw
/// `i` uses `stream.rng(i)`, so a fixed stream gives nested estimates as
/// cuts are added.
pub fn mc_volume(vs: &VersionSpace, n_samples: usize, stream: &RngStream) -> Result<f64> {
    if n_samples == 0 {
        return Err(Error::param("n_samples", "must be at least 1"));
    }
    let inside = (0..n_samples)
        .into_par_iter()
        .map(|i| {
            let w = uniform_base_draw(vs.num_models(), vs.dim(), &mut stream.rng(i as u64));
            vs.contains_matrix(&w).map(usize::from)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(inside.iter().sum::<usize>() as f64 / n_samples as f64)
}
