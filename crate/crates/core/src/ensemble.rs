//! Base-model ensembles and their linear combination `M(W)`.
//!
//! At every pair the combined model uses the mixture coefficients
//! `W φ(s, a)`, a probability vector over the `K` base models, for both the
//! next-state distribution and the reward distribution.

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mdp::{MdpSpec, RewardDist, TabularMdp, PROB_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    /// `d = 1`, `φ ≡ 1`: one global convex combination.
    Constant,
    /// One-hot indicator of the pair's cell.
    Partition,
    /// Arbitrary point on the simplex per pair.
    Tabular,
}

/// Feature map `φ: S × A → Δ_{d-1}`, stored per pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FeatureFile", into = "FeatureFile")]
pub struct FeatureMap {
    num_states: usize,
    num_actions: usize,
    dim: usize,
    kind: FeatureKind,
    values: Vec<f64>,
    cells: Option<Vec<usize>>,
}

/// On-disk layout of a feature file.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FeatureFile {
    pub kind: FeatureKind,
    pub num_states: usize,
    pub num_actions: usize,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<Vec<Vec<f64>>>,
}

impl TryFrom<FeatureFile> for FeatureMap {
    type Error = Error;
    fn try_from(file: FeatureFile) -> Result<Self> {
        let missing = |field: &str| Error::InvalidFeatureMap(format!("{:?} feature file needs `{field}`", file.kind));
        match file.kind {
            FeatureKind::Constant => {
                if file.dim != 1 {
                    return Err(Error::InvalidFeatureMap("constant feature map must have dim 1".into()));
                }
                Ok(FeatureMap::constant(file.num_states, file.num_actions))
            }
            FeatureKind::Partition => {
                let cells = file.cells.clone().ok_or_else(|| missing("cells"))?;
                FeatureMap::partition(file.num_states, file.num_actions, file.dim, cells)
            }
            FeatureKind::Tabular => {
                let vectors = file.vectors.clone().ok_or_else(|| missing("vectors"))?;
                FeatureMap::tabular(file.num_states, file.num_actions, file.dim, vectors)
            }
        }
    }
}

impl From<FeatureMap> for FeatureFile {
    fn from(map: FeatureMap) -> Self {
        let vectors = match map.kind {
            FeatureKind::Tabular => Some(map.values.chunks(map.dim).map(<[f64]>::to_vec).collect()),
            _ => None,
        };
        FeatureFile {
            kind: map.kind,
            num_states: map.num_states,
            num_actions: map.num_actions,
            dim: map.dim,
            cells: map.cells,
            vectors,
        }
    }
}

impl FeatureMap {
    pub fn constant(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            dim: 1,
            kind: FeatureKind::Constant,
            values: vec![1.0; num_states * num_actions],
            cells: None,
        }
    }

    /// Partition with `cells[s * num_actions + a]` the cell of pair `(s, a)`.
    pub fn partition(num_states: usize, num_actions: usize, dim: usize, cells: Vec<usize>) -> Result<Self> {
        let pairs = num_states * num_actions;
        if dim == 0 {
            return Err(Error::InvalidFeatureMap("dimension must be positive".into()));
        }
        if cells.len() != pairs {
            return Err(Error::InvalidFeatureMap(format!(
                "expected {pairs} cell indices, got {}",
                cells.len()
            )));
        }
        if let Some(c) = cells.iter().find(|c| **c >= dim) {
            return Err(Error::InvalidFeatureMap(format!(
                "cell index {c} out of range for dim {dim}"
            )));
        }
        let mut values = vec![0.0; pairs * dim];
        for (pair, &c) in cells.iter().enumerate() {
            values[pair * dim + c] = 1.0;
        }
        Ok(Self {
            num_states,
            num_actions,
            dim,
            kind: FeatureKind::Partition,
            values,
            cells: Some(cells),
        })
    }

    /// Partition given by a cell per state, shared by all actions.
    pub fn state_partition(num_actions: usize, dim: usize, state_cells: &[usize]) -> Result<Self> {
        let cells = state_cells
            .iter()
            .flat_map(|c| std::iter::repeat_n(*c, num_actions))
            .collect();
        Self::partition(state_cells.len(), num_actions, dim, cells)
    }

    pub fn tabular(num_states: usize, num_actions: usize, dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let pairs = num_states * num_actions;
        if dim == 0 || vectors.len() != pairs {
            return Err(Error::InvalidFeatureMap(format!(
                "expected {pairs} feature vectors of positive dimension"
            )));
        }
        for (pair, v) in vectors.iter().enumerate() {
            if v.len() != dim {
                return Err(Error::InvalidFeatureMap(format!(
                    "feature vector for pair {pair} has length {}",
                    v.len()
                )));
            }
            let sum: f64 = v.iter().sum();
            if v.iter().any(|x| !x.is_finite() || *x < 0.0) || (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidFeatureMap(format!(
                    "feature vector for pair {pair} is not on the simplex"
                )));
            }
        }
        Ok(Self {
            num_states,
            num_actions,
            dim,
            kind: FeatureKind::Tabular,
            values: vectors.concat(),
            cells: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn features(&self, s: usize, a: usize) -> &[f64] {
        let pair = s * self.num_actions + a;
        &self.values[pair * self.dim..(pair + 1) * self.dim]
    }

    /// Cell of a pair for partition maps (the constant map has one cell).
    pub fn cell(&self, s: usize, a: usize) -> Option<usize> {
        match self.kind {
            FeatureKind::Constant => Some(0),
            FeatureKind::Partition => self.cells.as_ref().map(|c| c[s * self.num_actions + a]),
            FeatureKind::Tabular => None,
        }
    }

    /// Cell index per pair, for the constant and partition kinds.
    pub fn cells(&self) -> Option<Vec<usize>> {
        match self.kind {
            FeatureKind::Constant => Some(vec![0; self.num_states * self.num_actions]),
            FeatureKind::Partition => self.cells.clone(),
            FeatureKind::Tabular => None,
        }
    }

    fn check_mdp(&self, mdp: &TabularMdp) -> Result<()> {
        if self.num_states != mdp.num_states() || self.num_actions != mdp.num_actions() {
            return Err(Error::ShapeMismatch(format!(
                "feature map covers {}x{} pairs, MDP has {}x{}",
                self.num_states,
                self.num_actions,
                mdp.num_states(),
                mdp.num_actions()
            )));
        }
        Ok(())
    }
}

/// Column-stochastic `K × d` parameter matrix (a member of `W_0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct WeightMatrix(Array2<f64>);

impl TryFrom<Vec<Vec<f64>>> for WeightMatrix {
    type Error = Error;
    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        WeightMatrix::from_rows(rows)
    }
}

impl From<WeightMatrix> for Vec<Vec<f64>> {
    fn from(w: WeightMatrix) -> Self {
        w.0.rows().into_iter().map(|r| r.to_vec()).collect()
    }
}

/// Whether `m` lies in `W_0`: entries in `[0, 1]`, columns summing to 1.
pub fn in_base_set(m: &Array2<f64>) -> bool {
    m.nrows() > 0
        && m.ncols() > 0
        && m.iter().all(|x| (0.0..=1.0).contains(x))
        && m.columns().into_iter().all(|c| (c.sum() - 1.0).abs() <= PROB_TOL)
}

impl WeightMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidWeights("matrix must be non-empty".into()));
        }
        if let Some(x) = entries.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidWeights(format!("entry {x} outside [0, 1]")));
        }
        for (j, col) in entries.columns().into_iter().enumerate() {
            let sum = col.sum();
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(Error::InvalidWeights(format!("column {j} sums to {sum}")));
            }
        }
        Ok(Self(entries))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidWeights("rows have unequal lengths".into()));
        }
        let flat = rows.concat();
        let entries = Array2::from_shape_vec((k, d), flat).map_err(|e| Error::InvalidWeights(e.to_string()))?;
        Self::new(entries)
    }

    /// Matrix whose every column is the basis vector `e_k`.
    pub fn basis(k: usize, num_models: usize, dim: usize) -> Self {
        let mut m = Array2::zeros((num_models, dim));
        m.row_mut(k).fill(1.0);
        Self(m)
    }

    /// `K × K` identity: cell `j` follows base model `j`.
    pub fn identity(num_models: usize) -> Self {
        Self(Array2::eye(num_models))
    }

    /// Barycenter of `W_0`: every entry `1/K`.
    pub fn uniform(num_models: usize, dim: usize) -> Self {
        Self(Array2::from_elem((num_models, dim), 1.0 / num_models as f64))
    }

    /// Matrix with column `j` equal to `e_{assignment[j]}`.
    pub fn from_assignment(num_models: usize, assignment: &[usize]) -> Result<Self> {
        let mut m = Array2::zeros((num_models, assignment.len()));
        for (j, &k) in assignment.iter().enumerate() {
            if k >= num_models {
                return Err(Error::InvalidWeights(format!("model index {k} out of range")));
            }
            m[(k, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn num_models(&self) -> usize {
        self.0.nrows()
    }

    pub fn dim(&self) -> usize {
        self.0.ncols()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    /// Trace inner product `⟨W, Z⟩ = Tr(Wᵀ Z)`.
    pub fn inner(&self, z: &Array2<f64>) -> f64 {
        trace_inner(&self.0, z)
    }

    pub fn frobenius_distance(&self, other: &WeightMatrix) -> f64 {
        (&self.0 - &other.0).mapv(|x| x * x).sum().sqrt()
    }
}

pub fn trace_inner(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

/// All members of `W_0` whose entries are multiples of `1/resolution`, in
/// lexicographic order of their columns.
pub fn simplex_grid(num_models: usize, dim: usize, resolution: usize) -> Vec<WeightMatrix> {
    fn compositions(parts: usize, total: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for first in (0..=total).rev() {
            prefix.push(first);
            compositions(parts - 1, total - first, prefix, out);
            prefix.pop();
        }
    }
    let mut columns = Vec::new();
    compositions(num_models, resolution, &mut Vec::new(), &mut columns);
    let mut out = Vec::new();
    let mut idx = vec![0usize; dim];
    loop {
        let mut m = Array2::zeros((num_models, dim));
        for (j, &c) in idx.iter().enumerate() {
            for (k, &units) in columns[c].iter().enumerate() {
                m[(k, j)] = units as f64 / resolution as f64;
            }
        }
        out.push(WeightMatrix(m));
        // Odometer over column choices.
        let mut j = dim;
        loop {
            if j == 0 {
                return out;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < columns.len() {
                break;
            }
            idx[j] = 0;
        }
    }
}

/// The `K` known base models. All share states, actions, horizon and
/// initial distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelEnsemble {
    models: Vec<TabularMdp>,
}

impl ModelEnsemble {
    pub fn new(models: Vec<TabularMdp>) -> Result<Self> {
        let first = models
            .first()
            .ok_or_else(|| Error::InvalidEnsemble("ensemble needs at least one base model".into()))?;
        if let Some(k) = models.iter().position(|m| !m.same_shape(first)) {
            return Err(Error::InvalidEnsemble(format!(
                "base model {k} does not share states, actions, horizon and initial distribution with model 0"
            )));
        }
        Ok(Self { models })
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[TabularMdp] {
        &self.models
    }

    /// Shape reference (model 0).
    pub fn reference(&self) -> &TabularMdp {
        &self.models[0]
    }

    pub fn check_features(&self, phi: &FeatureMap) -> Result<()> {
        phi.check_mdp(self.reference())
    }

    pub fn check_target(&self, target: &TabularMdp) -> Result<()> {
        if !target.same_shape(self.reference()) {
            return Err(Error::ShapeMismatch(
                "target must share states, actions, horizon and initial distribution with the ensemble".into(),
            ));
        }
        Ok(())
    }

    fn check_weights(&self, phi: &FeatureMap, w: &WeightMatrix) -> Result<()> {
        self.check_features(phi)?;
        if w.num_models() != self.len() || w.dim() != phi.dim() {
            return Err(Error::ShapeMismatch(format!(
                "weight matrix is {}x{}, expected {}x{}",
                w.num_models(),
                w.dim(),
                self.len(),
                phi.dim()
            )));
        }
        Ok(())
    }
}

fn coefficients(w: &WeightMatrix, features: &[f64]) -> Vec<f64> {
    w.entries().dot(&ArrayView1::from(features)).to_vec()
}

/// `W φ(s, a)`: mixing weights over the base models at one pair.
pub fn mixture_coefficients(w: &WeightMatrix, phi: &FeatureMap, s: usize, a: usize) -> Result<Vec<f64>> {
    if w.dim() != phi.dim() {
        return Err(Error::ShapeMismatch(format!(
            "weight matrix has {} columns, feature map has dim {}",
            w.dim(),
            phi.dim()
        )));
    }
    if s >= phi.num_states() || a >= phi.num_actions() {
        return Err(Error::ShapeMismatch(format!("pair ({s}, {a}) outside the feature map")));
    }
    Ok(coefficients(w, phi.features(s, a)))
}

/// The combined model `M(W)`.
pub fn mix_model(ensemble: &ModelEnsemble, phi: &FeatureMap, w: &WeightMatrix) -> Result<TabularMdp> {
    ensemble.check_weights(phi, w)?;
    let reference = ensemble.reference();
    let (ns, na) = (reference.num_states(), reference.num_actions());
    let mut transitions = Vec::with_capacity(ns * na);
    let mut rewards = Vec::with_capacity(ns * na);
    for s in 0..ns {
        for a in 0..na {
            let c = coefficients(w, phi.features(s, a));
            let mut row = vec![0.0; ns];
            for (weight, model) in c.iter().zip(ensemble.models()) {
                if *weight > 0.0 {
                    for (acc, p) in row.iter_mut().zip(model.transition(s, a)) {
                        *acc += weight * p;
                    }
                }
            }
            transitions.push(row);
            rewards.push(RewardDist::mixture(
                c.iter().copied().zip(ensemble.models().iter().map(|m| m.reward(s, a))),
            ));
        }
    }
    TabularMdp::new(MdpSpec {
        num_states: ns,
        num_actions: na,
        horizon: reference.horizon(),
        initial_dist: reference.initial_dist().to_vec(),
        transitions,
        rewards,
        enforce_bounded_return: ensemble.models().iter().all(TabularMdp::enforces_bounded_return),
    })
}

/// `sup_{s,a} ||P1 - P2||_1 + ||R1 - R2||_1` between two same-shaped MDPs.
pub fn model_misfit(m1: &TabularMdp, m2: &TabularMdp) -> Result<f64> {
    if !m1.same_shape(m2) {
        return Err(Error::ShapeMismatch("misfit needs MDPs of the same shape".into()));
    }
    let mut worst: f64 = 0.0;
    for s in 0..m1.num_states() {
        for a in 0..m1.num_actions() {
            let transition: f64 = m1
                .transition(s, a)
                .iter()
                .zip(m2.transition(s, a))
                .map(|(p, q)| (p - q).abs())
                .sum();
            worst = worst.max(transition + m1.reward(s, a).l1_distance(m2.reward(s, a)));
        }
    }
    Ok(worst)
}

/// Worst-pair misfit between `target` and `M(W)`.
pub fn sup_misfit(ensemble: &ModelEnsemble, phi: &FeatureMap, w: &WeightMatrix, target: &TabularMdp) -> Result<f64> {
    ensemble.check_target(target)?;
    model_misfit(target, &mix_model(ensemble, phi, w)?)
}

/// Best candidate by [`sup_misfit`]; an upper bound on the approximation
/// error of the whole class. Ties keep the earliest candidate.
pub fn approx_error(
    ensemble: &ModelEnsemble,
    phi: &FeatureMap,
    target: &TabularMdp,
    candidates: &[WeightMatrix],
) -> Result<(f64, WeightMatrix)> {
    let mut best: Option<(f64, &WeightMatrix)> = None;
    for w in candidates {
        let misfit = sup_misfit(ensemble, phi, w, target)?;
        if best.is_none_or(|(b, _)| misfit < b) {
            best = Some((misfit, w));
        }
    }
    best.map(|(m, w)| (m, w.clone())).ok_or(Error::Empty("candidate list"))
}

/// Per-model expectation of `r + f(s')` at `(s, a)`.
pub fn discriminator_vector(ensemble: &ModelEnsemble, f: &[f64], s: usize, a: usize) -> Result<Vec<f64>> {
    let reference = ensemble.reference();
    if f.len() != reference.num_states() {
        return Err(Error::ShapeMismatch(format!(
            "discriminator has {} entries, expected {}",
            f.len(),
            reference.num_states()
        )));
    }
    if s >= reference.num_states() || a >= reference.num_actions() {
        return Err(Error::ShapeMismatch(format!("pair ({s}, {a}) outside the ensemble")));
    }
    Ok(ensemble.models().iter().map(|m| m.backup(s, a, f)).collect())
}
