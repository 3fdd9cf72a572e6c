//! Finite episodic MDPs: exact planning, policy evaluation, occupancy
//! measures and seeded simulation.
//!
//! Steps are 0-based throughout the API: step `h` in `0..horizon` is the
//! `h+1`-th decision of an episode, and value tables carry one extra
//! terminal row at `h = horizon` that is identically zero.
//!
//! Transitions are time-homogeneous; policies and value tables are not.
//! The reward `r_h` of a trajectory is drawn at the visited pair
//! `(s_h, a_h)` before the successor state is observed.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Tolerance for probability vectors summing to one.
pub const PROB_TOL: f64 = 1e-9;
/// Reward support values closer than this are merged.
pub const SUPPORT_MERGE_TOL: f64 = 1e-12;

fn check_prob_vector(p: &[f64], what: impl Fn() -> String) -> Result<()> {
    if p.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::InvalidMdp(format!(
            "{}: negative or non-finite probability",
            what()
        )));
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(Error::InvalidMdp(format!("{}: probabilities sum to {sum}", what())));
    }
    Ok(())
}

/// Inverse-CDF draw from a probability vector.
pub(crate) fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_positive = i;
            if u < acc {
                return i;
            }
        }
    }
    last_positive
}

/// Finite-support reward distribution over `[0, 1]`.
///
/// Stored canonically: support sorted ascending, values within
/// [`SUPPORT_MERGE_TOL`] merged, zero-probability atoms dropped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRewardDist")]
pub struct RewardDist {
    support: Vec<f64>,
    probs: Vec<f64>,
}

#[derive(Deserialize)]
struct RawRewardDist {
    support: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<RawRewardDist> for RewardDist {
    type Error = Error;
    fn try_from(raw: RawRewardDist) -> Result<Self> {
        RewardDist::new(raw.support, raw.probs)
    }
}

impl RewardDist {
    pub fn new(support: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if support.len() != probs.len() {
            return Err(Error::InvalidMdp(format!(
                "reward support has {} values but {} probabilities",
                support.len(),
                probs.len()
            )));
        }
        if support.is_empty() {
            return Err(Error::InvalidMdp("reward distribution has empty support".into()));
        }
        if let Some(v) = support.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidMdp(format!("reward value {v} outside [0, 1]")));
        }
        check_prob_vector(&probs, || "reward distribution".to_string())?;
        Ok(Self::canonical(support.into_iter().zip(probs)))
    }

    pub fn point(value: f64) -> Result<Self> {
        Self::new(vec![value], vec![1.0])
    }

    /// Reward 1 with probability `p`, else 0.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Self::new(vec![0.0, 1.0], vec![1.0 - p, p])
    }

    fn canonical(atoms: impl IntoIterator<Item = (f64, f64)>) -> Self {
        let mut atoms: Vec<(f64, f64)> = atoms.into_iter().filter(|(_, p)| *p > 0.0).collect();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut support: Vec<f64> = Vec::with_capacity(atoms.len());
        let mut probs: Vec<f64> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match support.last() {
                Some(&last) if (v - last).abs() <= SUPPORT_MERGE_TOL => {
                    *probs.last_mut().unwrap() += p;
                }
                _ => {
                    support.push(v);
                    probs.push(p);
                }
            }
        }
        Self { support, probs }
    }

    /// Convex combination of reward distributions. Zero weights are skipped.
    pub fn mixture<'a>(components: impl IntoIterator<Item = (f64, &'a RewardDist)>) -> Self {
        let atoms = components
            .into_iter()
            .filter(|(w, _)| *w > 0.0)
            .flat_map(|(w, d)| d.support.iter().zip(&d.probs).map(move |(&v, &p)| (v, w * p)))
            .collect::<Vec<_>>();
        Self::canonical(atoms)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn mean(&self) -> f64 {
        self.support.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    pub fn max_value(&self) -> f64 {
        self.support.last().copied().unwrap_or(0.0)
    }

    /// L1 distance between the two probability mass functions, taken over
    /// the union of supports.
    pub fn l1_distance(&self, other: &RewardDist) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < self.support.len() || j < other.support.len() {
            let a = self.support.get(i).copied();
            let b = other.support.get(j).copied();
            match (a, b) {
                (Some(x), Some(y)) if (x - y).abs() <= SUPPORT_MERGE_TOL => {
                    total += (self.probs[i] - other.probs[j]).abs();
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x < y => {
                    total += self.probs[i];
                    i += 1;
                }
                (Some(_), None) => {
                    total += self.probs[i];
                    i += 1;
                }
                _ => {
                    total += other.probs[j];
                    j += 1;
                }
            }
        }
        total
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.support[sample_index(&self.probs, rng)]
    }
}

/// Raw MDP description; also the on-disk layout of an MDP instance file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MdpSpec {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub initial_dist: Vec<f64>,
    /// One next-state distribution per pair, row-major by `(s, a)`.
    pub transitions: Vec<Vec<f64>>,
    /// One reward distribution per pair, row-major by `(s, a)`.
    pub rewards: Vec<RewardDist>,
    #[serde(default = "default_true")]
    pub enforce_bounded_return: bool,
}

fn default_true() -> bool {
    true
}

/// Validated finite episodic MDP. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MdpSpec", into = "MdpSpec")]
pub struct TabularMdp {
    spec: MdpSpec,
    mean_rewards: Vec<f64>,
}

impl TryFrom<MdpSpec> for TabularMdp {
    type Error = Error;
    fn try_from(spec: MdpSpec) -> Result<Self> {
        TabularMdp::new(spec)
    }
}

impl From<TabularMdp> for MdpSpec {
    fn from(mdp: TabularMdp) -> Self {
        mdp.spec
    }
}

impl TabularMdp {
    pub fn new(spec: MdpSpec) -> Result<Self> {
        let MdpSpec {
            num_states: ns,
            num_actions: na,
            horizon,
            ..
        } = spec;
        if ns == 0 || na == 0 || horizon == 0 {
            return Err(Error::InvalidMdp(format!(
                "num_states, num_actions and horizon must be positive (got {ns}, {na}, {horizon})"
            )));
        }
        if spec.initial_dist.len() != ns {
            return Err(Error::InvalidMdp(format!(
                "initial_dist has length {} but there are {ns} states",
                spec.initial_dist.len()
            )));
        }
        check_prob_vector(&spec.initial_dist, || "initial_dist".into())?;
        if spec.transitions.len() != ns * na || spec.rewards.len() != ns * na {
            return Err(Error::InvalidMdp(format!(
                "expected {} transition rows and reward distributions, got {} and {}",
                ns * na,
                spec.transitions.len(),
                spec.rewards.len()
            )));
        }
        for (pair, row) in spec.transitions.iter().enumerate() {
            if row.len() != ns {
                return Err(Error::InvalidMdp(format!(
                    "transition row for (s={}, a={}) has length {}",
                    pair / na,
                    pair % na,
                    row.len()
                )));
            }
            check_prob_vector(row, || format!("transition row (s={}, a={})", pair / na, pair % na))?;
        }
        let mean_rewards = spec.rewards.iter().map(RewardDist::mean).collect();
        let mdp = Self { spec, mean_rewards };
        if mdp.spec.enforce_bounded_return {
            let bound = mdp.return_upper_bound();
            if bound > 1.0 + PROB_TOL {
                return Err(Error::InvalidMdp(format!(
                    "bounded-return check failed: per-step maximum rewards over reachable states sum to {bound}"
                )));
            }
        }
        Ok(mdp)
    }

    pub fn num_states(&self) -> usize {
        self.spec.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.spec.num_actions
    }

    pub fn num_pairs(&self) -> usize {
        self.spec.num_states * self.spec.num_actions
    }

    pub fn horizon(&self) -> usize {
        self.spec.horizon
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.spec.initial_dist
    }

    pub fn pair_index(&self, s: usize, a: usize) -> usize {
        s * self.spec.num_actions + a
    }

    pub fn transition(&self, s: usize, a: usize) -> &[f64] {
        &self.spec.transitions[self.pair_index(s, a)]
    }

    pub fn reward(&self, s: usize, a: usize) -> &RewardDist {
        &self.spec.rewards[self.pair_index(s, a)]
    }

    pub fn mean_reward(&self, s: usize, a: usize) -> f64 {
        self.mean_rewards[self.pair_index(s, a)]
    }

    pub fn enforces_bounded_return(&self) -> bool {
        self.spec.enforce_bounded_return
    }

    pub fn spec(&self) -> &MdpSpec {
        &self.spec
    }

    /// Same states, actions, horizon and initial distribution.
    pub fn same_shape(&self, other: &TabularMdp) -> bool {
        self.spec.num_states == other.spec.num_states
            && self.spec.num_actions == other.spec.num_actions
            && self.spec.horizon == other.spec.horizon
            && self.spec.initial_dist == other.spec.initial_dist
    }

    /// States reachable at each step under some action sequence.
    pub fn reachable_states(&self) -> Vec<Vec<bool>> {
        let ns = self.num_states();
        let mut layers = Vec::with_capacity(self.horizon());
        let mut current: Vec<bool> = self.spec.initial_dist.iter().map(|p| *p > 0.0).collect();
        for _ in 0..self.horizon() {
            let mut next = vec![false; ns];
            for s in (0..ns).filter(|&s| current[s]) {
                for a in 0..self.num_actions() {
                    for (t, p) in self.transition(s, a).iter().enumerate() {
                        if *p > 0.0 {
                            next[t] = true;
                        }
                    }
                }
            }
            layers.push(std::mem::replace(&mut current, next));
        }
        layers
    }

    /// Sum over steps of the largest reward value attainable at a state
    /// reachable at that step. An upper bound on every episode's return.
    pub fn return_upper_bound(&self) -> f64 {
        self.reachable_states()
            .iter()
            .map(|layer| {
                layer
                    .iter()
                    .enumerate()
                    .filter(|(_, r)| **r)
                    .flat_map(|(s, _)| (0..self.num_actions()).map(move |a| self.reward(s, a).max_value()))
                    .fold(0.0, f64::max)
            })
            .sum()
    }

    fn check_policy(&self, policy: &Policy) -> Result<()> {
        if policy.horizon != self.horizon() || policy.num_states != self.num_states() {
            return Err(Error::ShapeMismatch(format!(
                "policy is defined for horizon {} and {} states, MDP has {} and {}",
                policy.horizon,
                policy.num_states,
                self.horizon(),
                self.num_states()
            )));
        }
        if let Some(a) = policy.actions.iter().find(|a| **a >= self.num_actions()) {
            return Err(Error::ShapeMismatch(format!(
                "policy uses action {a} but the MDP has {} actions",
                self.num_actions()
            )));
        }
        Ok(())
    }

    /// `E[r | s, a] + Σ_s' P(s'|s,a) f(s')`.
    pub fn backup(&self, s: usize, a: usize, next_values: &[f64]) -> f64 {
        self.mean_reward(s, a)
            + self
                .transition(s, a)
                .iter()
                .zip(next_values)
                .map(|(p, v)| p * v)
                .sum::<f64>()
    }
}

/// Deterministic non-stationary policy.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Policy {
    horizon: usize,
    num_states: usize,
    actions: Vec<usize>,
}

impl Policy {
    /// `actions[h * num_states + s]` is the action at step `h`, state `s`.
    pub fn new(horizon: usize, num_states: usize, actions: Vec<usize>) -> Result<Self> {
        if actions.len() != horizon * num_states {
            return Err(Error::InvalidPolicy(format!(
                "expected {} actions, got {}",
                horizon * num_states,
                actions.len()
            )));
        }
        Ok(Self {
            horizon,
            num_states,
            actions,
        })
    }

    pub fn constant(horizon: usize, num_states: usize, action: usize) -> Self {
        Self {
            horizon,
            num_states,
            actions: vec![action; horizon * num_states],
        }
    }

    pub fn action(&self, h: usize, s: usize) -> usize {
        self.actions[h * self.num_states + s]
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn actions(&self) -> &[usize] {
        &self.actions
    }
}

/// State values for steps `0..=H` and action values for steps `0..H`.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueTable {
    horizon: usize,
    num_states: usize,
    num_actions: usize,
    v: Vec<f64>,
    q: Vec<f64>,
}

impl ValueTable {
    fn zeros(horizon: usize, num_states: usize, num_actions: usize) -> Self {
        Self {
            horizon,
            num_states,
            num_actions,
            v: vec![0.0; (horizon + 1) * num_states],
            q: vec![0.0; horizon * num_states * num_actions],
        }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn v(&self, h: usize, s: usize) -> f64 {
        self.v[h * self.num_states + s]
    }

    /// State values at step `h` (`h == horizon` is the zero row).
    pub fn v_step(&self, h: usize) -> &[f64] {
        &self.v[h * self.num_states..(h + 1) * self.num_states]
    }

    pub fn q(&self, h: usize, s: usize, a: usize) -> f64 {
        self.q[(h * self.num_states + s) * self.num_actions + a]
    }

    /// `E_{s ~ P1}[V_0(s)]`.
    pub fn initial_value(&self, initial_dist: &[f64]) -> f64 {
        initial_dist.iter().zip(self.v_step(0)).map(|(p, v)| p * v).sum()
    }
}

/// Optimal values and a greedy policy. Ties go to the lowest action index.
pub fn backward_induction(mdp: &TabularMdp) -> (ValueTable, Policy) {
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut table = ValueTable::zeros(horizon, ns, na);
    let mut actions = vec![0; horizon * ns];
    for h in (0..horizon).rev() {
        let next: Vec<f64> = table.v_step(h + 1).to_vec();
        for s in 0..ns {
            let mut best = f64::NEG_INFINITY;
            let mut best_a = 0;
            for a in 0..na {
                let q = mdp.backup(s, a, &next);
                table.q[(h * ns + s) * na + a] = q;
                if q > best {
                    best = q;
                    best_a = a;
                }
            }
            table.v[h * ns + s] = best;
            actions[h * ns + s] = best_a;
        }
    }
    let policy = Policy {
        horizon,
        num_states: ns,
        actions,
    };
    (table, policy)
}

/// Value table of a fixed policy (`Q` holds every action's one-step lookahead).
pub fn evaluate_policy_table(mdp: &TabularMdp, policy: &Policy) -> Result<ValueTable> {
    mdp.check_policy(policy)?;
    let (ns, na, horizon) = (mdp.num_states(), mdp.num_actions(), mdp.horizon());
    let mut table = ValueTable::zeros(horizon, ns, na);
    for h in (0..horizon).rev() {
        let next: Vec<f64> = table.v_step(h + 1).to_vec();
        for s in 0..ns {
            for a in 0..na {
                table.q[(h * ns + s) * na + a] = mdp.backup(s, a, &next);
            }
            table.v[h * ns + s] = table.q[(h * ns + s) * na + policy.action(h, s)];
        }
    }
    Ok(table)
}

/// Exact expected return `v^π = E_{s ~ P1}[V^π_0(s)]`.
pub fn evaluate_policy_exact(mdp: &TabularMdp, policy: &Policy) -> Result<f64> {
    Ok(evaluate_policy_table(mdp, policy)?.initial_value(mdp.initial_dist()))
}

/// State-action visitation probabilities `d_h(s, a)` for each step.
#[derive(Clone, Debug, PartialEq)]
pub struct Occupancy {
    num_states: usize,
    num_actions: usize,
    probs: Vec<Vec<f64>>,
}

impl Occupancy {
    pub fn get(&self, h: usize, s: usize, a: usize) -> f64 {
        self.probs[h][s * self.num_actions + a]
    }

    /// Pair probabilities at step `h`, indexed `s * num_actions + a`.
    pub fn step(&self, h: usize) -> &[f64] {
        &self.probs[h]
    }

    pub fn horizon(&self) -> usize {
        self.probs.len()
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }
}

pub fn occupancy(mdp: &TabularMdp, policy: &Policy) -> Result<Occupancy> {
    mdp.check_policy(policy)?;
    let (ns, na) = (mdp.num_states(), mdp.num_actions());
    let mut state_dist = mdp.initial_dist().to_vec();
    let mut probs = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let mut step = vec![0.0; ns * na];
        let mut next = vec![0.0; ns];
        for s in 0..ns {
            let mass = state_dist[s];
            if mass == 0.0 {
                continue;
            }
            let a = policy.action(h, s);
            step[s * na + a] = mass;
            for (t, p) in mdp.transition(s, a).iter().enumerate() {
                next[t] += mass * p;
            }
        }
        probs.push(step);
        state_dist = next;
    }
    Ok(Occupancy {
        num_states: ns,
        num_actions: na,
        probs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub state: usize,
    pub action: usize,
    pub reward: f64,
}

/// One episode: `H` steps plus the state reached after the last action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<Step>,
    pub terminal_state: usize,
}

impl Trajectory {
    pub fn total_reward(&self) -> f64 {
        self.steps.iter().map(|s| s.reward).sum()
    }

    /// State observed after step `h` (`s_{h+1}` in 0-based step terms).
    pub fn next_state(&self, h: usize) -> usize {
        self.steps.get(h + 1).map_or(self.terminal_state, |s| s.state)
    }
}

pub fn rollout<R: Rng + ?Sized>(mdp: &TabularMdp, policy: &Policy, rng: &mut R) -> Result<Trajectory> {
    mdp.check_policy(policy)?;
    Ok(rollout_unchecked(mdp, policy, rng))
}

fn rollout_unchecked<R: Rng + ?Sized>(mdp: &TabularMdp, policy: &Policy, rng: &mut R) -> Trajectory {
    let mut state = sample_index(mdp.initial_dist(), rng);
    let mut steps = Vec::with_capacity(mdp.horizon());
    for h in 0..mdp.horizon() {
        let action = policy.action(h, state);
        let reward = mdp.reward(state, action).sample(rng);
        steps.push(Step { state, action, reward });
        state = sample_index(mdp.transition(state, action), rng);
    }
    Trajectory {
        steps,
        terminal_state: state,
    }
}

/// `n` rollouts; trajectory `i` draws from `stream.rng(i)`, so the batch is
/// identical for any thread count.
pub fn rollouts(mdp: &TabularMdp, policy: &Policy, n: usize, stream: &RngStream) -> Result<Vec<Trajectory>> {
    mdp.check_policy(policy)?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| rollout_unchecked(mdp, policy, &mut stream.rng(i as u64)))
        .collect())
}

/// Average return over `n_eval` rollouts, summed in trajectory order.
pub fn monte_carlo_value(mdp: &TabularMdp, policy: &Policy, n_eval: usize, stream: &RngStream) -> Result<f64> {
    if n_eval == 0 {
        return Err(Error::param("n_eval", "must be at least 1"));
    }
    mdp.check_policy(policy)?;
    let returns: Vec<f64> = (0..n_eval)
        .into_par_iter()
        .map(|i| rollout_unchecked(mdp, policy, &mut stream.rng(i as u64)).total_reward())
        .collect();
    Ok(returns.iter().sum::<f64>() / n_eval as f64)
}

/// Per-pair gaps between two same-shaped MDPs, as used by the simulation
/// lemma.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationGap {
    /// `max_{s,a} ||P1(.|s,a) - P2(.|s,a)||_1`.
    pub transition_l1: f64,
    /// `max_{s,a} |E_1[r|s,a] - E_2[r|s,a]|`.
    pub reward_per_step: f64,
    pub horizon: usize,
}

impl SimulationGap {
    pub fn measure(m1: &TabularMdp, m2: &TabularMdp) -> Result<Self> {
        if !m1.same_shape(m2) {
            return Err(Error::ShapeMismatch(
                "simulation gap needs MDPs of the same shape".into(),
            ));
        }
        let mut transition_l1: f64 = 0.0;
        let mut reward_per_step: f64 = 0.0;
        for s in 0..m1.num_states() {
            for a in 0..m1.num_actions() {
                let l1: f64 = m1
                    .transition(s, a)
                    .iter()
                    .zip(m2.transition(s, a))
                    .map(|(p, q)| (p - q).abs())
                    .sum();
                transition_l1 = transition_l1.max(l1);
                reward_per_step = reward_per_step.max((m1.mean_reward(s, a) - m2.mean_reward(s, a)).abs());
            }
        }
        Ok(Self {
            transition_l1,
            reward_per_step,
            horizon: m1.horizon(),
        })
    }

    /// Expected-reward gap accumulated over an episode, `H * reward_per_step`.
    pub fn reward_per_episode(&self) -> f64 {
        self.horizon as f64 * self.reward_per_step
    }

    /// `H * eps_p + eps_r` with `eps_r` the per-episode reward gap.
    pub fn value_bound(&self) -> f64 {
        self.horizon as f64 * self.transition_l1 + self.reward_per_episode()
    }
}

/// Shape and sparsity knobs for [`random_mdp`].
#[derive(Clone, Copy, Debug)]
pub struct RandomMdpShape {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    /// Maximum number of atoms per reward distribution.
    pub max_reward_atoms: usize,
}

fn random_simplex<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Vec<f64> {
    use rand_distr::{Distribution, Exp1};
    let raw: Vec<f64> = (0..len).map(|_| Exp1.sample(rng)).collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / sum).collect()
}

/// Random MDP with dense transitions and rewards scaled into `[0, 1/H]`
/// so that every episode return lies in `[0, 1]`.
pub fn random_mdp<R: Rng + ?Sized>(shape: RandomMdpShape, initial_dist: Option<&[f64]>, rng: &mut R) -> TabularMdp {
    let RandomMdpShape {
        num_states: ns,
        num_actions: na,
        horizon,
        max_reward_atoms,
    } = shape;
    let initial_dist = initial_dist.map_or_else(|| random_simplex(ns, rng), <[f64]>::to_vec);
    let scale = 1.0 / horizon as f64;
    let transitions = (0..ns * na).map(|_| random_simplex(ns, rng)).collect();
    let rewards = (0..ns * na)
        .map(|_| {
            let atoms = rng.random_range(1..=max_reward_atoms.max(1));
            let support: Vec<f64> = (0..atoms).map(|_| scale * rng.random::<f64>()).collect();
            RewardDist::new(support, random_simplex(atoms, rng)).expect("valid random reward")
        })
        .collect();
    TabularMdp::new(MdpSpec {
        num_states: ns,
        num_actions: na,
        horizon,
        initial_dist,
        transitions,
        rewards,
        enforce_bounded_return: true,
    })
    .expect("random MDP satisfies invariants")
}
