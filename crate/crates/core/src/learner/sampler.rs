//! Draws from the version space: uniform draws from `W_0` (rejection) and
//! hit-and-run inside the polytope cut out by the linear constraints.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use super::VersionSpace;
use crate::ensemble::trace_inner;

/// Burn-in steps before hit-and-run samples are kept.
pub const HIT_AND_RUN_BURN_IN: usize = 64;

/// Uniform draw from `W_0`: each column uniform on the simplex.
pub fn uniform_base_draw<R: Rng + ?Sized>(num_models: usize, dim: usize, rng: &mut R) -> Array2<f64> {
    let mut m = Array2::zeros((num_models, dim));
    for mut col in m.columns_mut() {
        for x in col.iter_mut() {
            *x = Exp1.sample(rng);
        }
        let sum = col.sum();
        col.mapv_inplace(|x| x / sum);
    }
    m
}

/// Feasible step sizes `λ` with `w + λ·dir` inside the version space.
fn chord(vs: &VersionSpace, w: &Array2<f64>, dir: &Array2<f64>) -> (f64, f64) {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let mut clip = |a: f64, b: f64| {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        lo = lo.max(a);
        hi = hi.min(b);
    };
    for (x, d) in w.iter().zip(dir.iter()) {
        if d.abs() > 1e-15 {
            clip(-x / d, (1.0 - x) / d);
        }
    }
    for c in vs.constraints() {
        let g = trace_inner(dir, &c.z_hat);
        if g.abs() > 1e-15 {
            let at = trace_inner(w, &c.z_hat);
            clip((c.y_hat - c.tolerance - at) / g, (c.y_hat + c.tolerance - at) / g);
        }
    }
    // Rounding can push a boundary point marginally outside.
    (lo.min(0.0), hi.max(0.0))
}

fn project_columns(w: &mut Array2<f64>) {
    for mut col in w.columns_mut() {
        col.mapv_inplace(|x| x.clamp(0.0, 1.0));
        let sum = col.sum();
        if sum > 0.0 {
            col.mapv_inplace(|x| x / sum);
        }
    }
}

/// Hit-and-run chain started at `start` (which must lie in `vs`). Returns
/// `samples` points after [`HIT_AND_RUN_BURN_IN`] discarded steps.
pub fn hit_and_run<R: Rng + ?Sized>(
    vs: &VersionSpace,
    start: &Array2<f64>,
    samples: usize,
    rng: &mut R,
) -> Vec<Array2<f64>> {
    let (k, d) = start.dim();
    let mut current = start.clone();
    let mut out = Vec::with_capacity(samples);
    if k == 1 {
        // W_0 is a single point.
        out.resize(samples, current);
        return out;
    }
    for step in 0..HIT_AND_RUN_BURN_IN + samples {
        let mut dir = Array2::<f64>::zeros((k, d));
        for x in dir.iter_mut() {
            *x = StandardNormal.sample(rng);
        }
        for mut col in dir.columns_mut() {
            let mean = col.mean().unwrap_or(0.0);
            col.mapv_inplace(|x| x - mean);
        }
        let norm = dir.mapv(|x| x * x).sum().sqrt();
        if norm > 0.0 {
            dir.mapv_inplace(|x| x / norm);
            let (lo, hi) = chord(vs, &current, &dir);
            let lambda = lo + rng.random::<f64>() * (hi - lo);
            let mut next = &current + &(dir * lambda);
            project_columns(&mut next);
            if vs.contains_matrix(&next).unwrap_or(false) {
                current = next;
            }
        }
        if step >= HIT_AND_RUN_BURN_IN {
            out.push(current.clone());
        }
    }
    out
}
