//! The counterexample-guided improvement loop: verify the learned strategy,
//! collect critical states and critical (observation, action) decisions,
//! locally improve each affected observation class with a max-min linear
//! program, resample trajectories from the critical states under the improved
//! strategy, retrain, and iterate.
//!
//! Values are always oriented so that larger is better: satisfaction
//! probabilities stay as they are for lower-bounded queries, are complemented
//! for upper-bounded ones, and expected costs are negated and normalized.
//! A state is critical when its oriented value falls below the oriented
//! criticality threshold.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use crate::fsc::{memory_update, product, project_fsc, Fsc, FscError, MemoryUpdateKind};
use crate::learner::{
    extract_memoryless, sample_trajectories_from, to_observation_sequences, train, LearnError,
    MdpPath, RecurrentPolicy, TrainConfig, TrajectoryDataset,
};
use crate::lp::{min_backup, solve_maxmin_game, LpError};
use crate::mc::{check, mdp_optimal, McError, ValueVector};
use crate::model::{underlying_mdp, Pomdp};
use crate::spec::{build_automaton, SpecAutomaton, SpecKind, Specification};
use crate::strategy::ObservationStrategy;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Error)]
pub enum RefineError {
    #[error(transparent)]
    Mc(#[from] McError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Fsc(#[from] FscError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("observation class `{0}` has no commonly enabled action")]
    EmptyClass(usize),
    #[error("uniform criticality needs a threshold specification")]
    NoThreshold,
}

// ---------------------------------------------------------------------------
// Value orientation
// ---------------------------------------------------------------------------

/// Divergent costs are capped at this multiple of the largest finite value.
const INF_CAP_FACTOR: f64 = 10.0;

/// Maps raw template values to a maximize-is-better scale shared by chain
/// values, MDP bounds and LP backups within one iteration.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Orientation {
    kind: SpecKind,
    maximizing: bool,
    /// Normalizer for reward-valued queries.
    scale: f64,
}

impl Orientation {
    fn new(spec: &Specification, raw: &[f64], raw_mdp: &[f64]) -> Orientation {
        let scale = match spec.kind {
            SpecKind::Probability => 1.0,
            SpecKind::ExpectedReward => raw
                .iter()
                .chain(raw_mdp)
                .copied()
                .filter(|v| v.is_finite())
                .fold(0.0f64, |acc, v| acc.max(v.abs()))
                .max(1e-9),
        };
        Orientation { kind: spec.kind, maximizing: spec.maximizing(), scale }
    }

    pub(crate) fn apply(&self, v: f64) -> f64 {
        match (self.kind, self.maximizing) {
            (SpecKind::Probability, true) => v,
            (SpecKind::Probability, false) => 1.0 - v,
            (SpecKind::ExpectedReward, false) => {
                -v.min(INF_CAP_FACTOR * self.scale) / self.scale
            }
            (SpecKind::ExpectedReward, true) => {
                v.min(INF_CAP_FACTOR * self.scale) / self.scale
            }
        }
    }

    /// Reward contribution of choosing action `a` in state `s`, on the
    /// oriented scale.
    fn reward_term(&self, m: &Pomdp, s: usize, a: usize) -> f64 {
        match (self.kind, self.maximizing) {
            (SpecKind::Probability, _) => 0.0,
            (SpecKind::ExpectedReward, false) => -m.reward(s, a) / self.scale,
            (SpecKind::ExpectedReward, true) => m.reward(s, a) / self.scale,
        }
    }

    fn threshold(&self, lambda: f64) -> f64 {
        match (self.kind, self.maximizing) {
            (SpecKind::Probability, true) => lambda,
            (SpecKind::Probability, false) => 1.0 - lambda,
            (SpecKind::ExpectedReward, false) => -lambda / self.scale,
            (SpecKind::ExpectedReward, true) => lambda / self.scale,
        }
    }

    /// Scales an oriented reference value toward "worse" by factor `theta`.
    fn relax(&self, oriented: f64, theta: f64) -> f64 {
        if oriented >= 0.0 {
            theta * oriented
        } else {
            oriented / theta
        }
    }
}

/// How the per-state criticality threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriticalityRule {
    /// The specification's own threshold, uniformly over states.
    Uniform,
    /// The optimal value of the underlying MDP at each state, relaxed by
    /// `theta`; states further than the relaxation from their own optimum are
    /// critical. The default for open (max/min) queries, which carry no
    /// threshold of their own.
    MdpScaled { theta: f64 },
}

pub const DEFAULT_MDP_SCALED_THETA: f64 = 0.85;

// ---------------------------------------------------------------------------
// Counterexamples
// ---------------------------------------------------------------------------

/// A critical decision: positive strategy mass on `action` under `obs` can
/// step into a critical state. The witness is a (chain state, chain
/// successor) pair proving it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriticalDecision {
    pub obs: usize,
    pub action: usize,
    pub witness: (usize, usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    /// Critical chain states with their oriented values, ascending by state.
    pub critical_states: Vec<(usize, f64)>,
    pub decisions: Vec<CriticalDecision>,
    /// Oriented per-state criticality threshold that produced the set.
    pub lambda_prime: Vec<f64>,
}

impl Counterexample {
    pub fn critical_set(&self) -> BTreeSet<usize> {
        self.critical_states.iter().map(|&(s, _)| s).collect()
    }
}

/// States whose oriented value falls below the oriented threshold.
pub fn critical_states(oriented: &[f64], lambda_prime: &[f64]) -> BTreeSet<usize> {
    oriented
        .iter()
        .zip(lambda_prime)
        .enumerate()
        .filter(|(_, (v, l))| *v < *l)
        .map(|(s, _)| s)
        .collect()
}

/// Chain-level view of a model composed with a specification automaton:
/// chain state `(s, q)` has index `s * nodes + q`.
struct ChainView<'a> {
    m: &'a Pomdp,
    aut: &'a SpecAutomaton,
}

impl<'a> ChainView<'a> {
    fn nodes(&self) -> usize {
        self.aut.nodes
    }

    fn chain_states(&self) -> usize {
        self.m.num_states * self.nodes()
    }

    fn model_state(&self, chain: usize) -> usize {
        chain / self.nodes()
    }

    /// Chain successors of taking `a` in chain state `i`, with probabilities.
    fn successors(&self, i: usize, a: usize) -> Option<Vec<(usize, f64)>> {
        let nodes = self.nodes();
        let (s, q) = (i / nodes, i % nodes);
        let row = self.m.row(s, a)?;
        let holds = |t: usize| move |ap: &str| self.m.has_label(t, ap);
        Some(
            row.iter()
                .map(|&(t, p)| (t * nodes + self.aut.step(q, &holds(t)), p))
                .collect(),
        )
    }

    /// Oriented one-step backup of action `a` from chain state `i`.
    fn backup(&self, i: usize, a: usize, oriented: &[f64], orient: &Orientation) -> f64 {
        let s = self.model_state(i);
        let mut acc = orient.reward_term(self.m, s, a);
        for (t, p) in self.successors(i, a).expect("backup on disabled action") {
            acc += p * oriented[t];
        }
        acc
    }
}

/// Collects every critical decision of a strategy: positive mass on an action
/// that can transition into a critical chain state, with one witness each.
pub fn critical_decisions(
    m: &Pomdp,
    spec: &Specification,
    sigma: &ObservationStrategy,
    critical: &BTreeSet<usize>,
) -> Vec<CriticalDecision> {
    let aut = build_automaton(spec);
    let view = ChainView { m, aut: &aut };
    let mut found: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    for i in 0..view.chain_states() {
        let s = view.model_state(i);
        let z = m.obs_of[s];
        let Some(dist) = sigma.row(z) else { continue };
        for (a, &pa) in dist.iter().enumerate() {
            if pa <= 0.0 || m.row(s, a).is_none() || found.contains_key(&(z, a)) {
                continue;
            }
            if let Some(succ) = view.successors(i, a) {
                if let Some(&(t, _)) = succ.iter().find(|&&(t, p)| p > 0.0 && critical.contains(&t))
                {
                    found.insert((z, a), (i, t));
                }
            }
        }
    }
    found
        .into_iter()
        .map(|((obs, action), witness)| CriticalDecision { obs, action, witness })
        .collect()
}

/// Locally improves one observation class: maximizes the worst oriented
/// one-step backup over the class's chain states, over distributions on the
/// commonly enabled actions. The incumbent row is feasible, so the optimum
/// never falls below it.
pub fn improve_lp(
    m: &Pomdp,
    spec: &Specification,
    sigma: &ObservationStrategy,
    values: &ValueVector,
    z: usize,
) -> Result<Vec<f64>, RefineError> {
    let aut = build_automaton(spec);
    let view = ChainView { m, aut: &aut };
    let orient = Orientation::new(spec, &values.values, &[]);
    let oriented: Vec<f64> = values.values.iter().map(|&v| orient.apply(v)).collect();

    // Actions playable at every member of the class.
    let mut common: Option<BTreeSet<usize>> = None;
    let mut members: Vec<usize> = Vec::new();
    for (s, &zs) in m.obs_of.iter().enumerate() {
        if zs != z {
            continue;
        }
        let enabled: BTreeSet<usize> = m.enabled_actions(s).collect();
        common = Some(match common {
            None => enabled,
            Some(prev) => prev.intersection(&enabled).copied().collect(),
        });
        for q in 0..view.nodes() {
            members.push(s * view.nodes() + q);
        }
    }
    let actions: Vec<usize> = common.unwrap_or_default().into_iter().collect();
    if actions.is_empty() {
        return Err(RefineError::EmptyClass(z));
    }

    let payoff: Vec<Vec<f64>> = members
        .iter()
        .map(|&i| actions.iter().map(|&a| view.backup(i, a, &oriented, &orient)).collect())
        .collect();
    let solution = solve_maxmin_game(&payoff)?;

    let mut dist = vec![0.0; m.num_actions()];
    for (col, &a) in actions.iter().enumerate() {
        dist[a] = solution.dist[col];
    }
    if let Some(old) = sigma.row(z) {
        let incumbent: Vec<f64> = actions.iter().map(|&a| old[a]).collect();
        let mass: f64 = incumbent.iter().sum();
        if (mass - 1.0).abs() < 1e-9 {
            debug_assert!(
                solution.value >= min_backup(&payoff, &incumbent) - 1e-9,
                "LP fell below the incumbent"
            );
        }
    }
    Ok(dist)
}

/// Samples new trajectories starting uniformly from the critical states,
/// following the locally improved observation strategy on the model's own
/// dynamics. Rows are restricted to each state's enabled actions and
/// renormalized; paths cut off at absorbing states.
pub fn resample_from_critical(
    m: &Pomdp,
    sigma: &ObservationStrategy,
    critical_model_states: &BTreeSet<usize>,
    count: usize,
    max_len: usize,
    seed: u64,
) -> TrajectoryDataset {
    let starts: Vec<usize> = critical_model_states.iter().copied().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = Vec::with_capacity(count);
    for _ in 0..count {
        let mut s = starts[rng.gen_range(0..starts.len())];
        let mut path = MdpPath { states: vec![s], actions: Vec::new() };
        for _ in 0..max_len {
            if m.is_absorbing(s) {
                break;
            }
            let enabled: Vec<usize> = m.enabled_actions(s).collect();
            let weights: Vec<f64> = match sigma.row(m.obs_of[s]) {
                Some(row) => {
                    let restricted: Vec<f64> = enabled.iter().map(|&a| row[a]).collect();
                    if restricted.iter().sum::<f64>() > 1e-12 {
                        restricted
                    } else {
                        vec![1.0; enabled.len()]
                    }
                }
                None => vec![1.0; enabled.len()],
            };
            let idx = WeightedIndex::new(&weights).expect("no enabled action");
            let a = enabled[idx.sample(&mut rng)];
            let row = m.row(s, a).unwrap();
            let t = if row.len() == 1 {
                row[0].0
            } else {
                let d = WeightedIndex::new(row.iter().map(|&(_, p)| p)).unwrap();
                row[d.sample(&mut rng)].0
            };
            path.actions.push(a);
            path.states.push(t);
            s = t;
        }
        paths.push(path);
    }
    to_observation_sequences(&paths, m, seed, max_len)
}

// ---------------------------------------------------------------------------
// The synthesis loop
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    /// Fixed iteration budget.
    pub max_iterations: usize,
    /// Stop as soon as the specification is satisfied (threshold queries) or
    /// the value matches the underlying-MDP bound (open queries).
    pub early_stop: bool,
    /// Stop when the absolute value change between iterations falls below
    /// this; zero disables the rule.
    pub eps_progress: f64,
    /// Criticality threshold rule; `None` picks Uniform for threshold
    /// queries and the MDP-scaled rule for open ones.
    pub criticality: Option<CriticalityRule>,
    pub train: TrainConfig,
    /// Initial trajectory count and length cap.
    pub sample_count: usize,
    pub sample_max_len: usize,
    /// Trajectories added per refinement round.
    pub resample_count: usize,
    pub seed: u64,
    /// Finite-memory mode: predefined update rule and node count.
    pub memory: Option<(MemoryUpdateKind, usize)>,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            max_iterations: 10,
            early_stop: false,
            eps_progress: 0.0,
            criticality: None,
            train: TrainConfig::default(),
            sample_count: 5000,
            sample_max_len: 0, // 0: four times the model's observation count? resolved by caller
            resample_count: 2000,
            seed: 7,
            memory: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct IterationLog {
    pub iteration: usize,
    pub value: f64,
    pub satisfied: Option<bool>,
    pub critical_states: usize,
    pub critical_decisions: usize,
    pub train_loss: f64,
    pub seconds: f64,
    /// The extracted strategy over the effective (possibly product) model.
    pub strategy: ObservationStrategy,
}

#[derive(Debug, Clone)]
pub enum SynthesizedStrategy {
    Memoryless(ObservationStrategy),
    Controller(Fsc),
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub log: Vec<IterationLog>,
    /// Index into `log` of the best verified iterate.
    pub best_iteration: usize,
    pub best: SynthesizedStrategy,
    /// Verdict of the best iterate for threshold queries.
    pub satisfied: Option<bool>,
    /// Optimal value of the underlying MDP at the initial state.
    pub mdp_bound: f64,
    /// The effective model the loop ran on (the memory product in FSC mode).
    pub effective_model: Pomdp,
}

fn iteration_seed(base: u64, iteration: usize, salt: u64) -> u64 {
    base.wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(iteration as u64)
        .wrapping_mul(6364136223846793005)
        .wrapping_add(salt)
}

/// Runs the full refinement loop and returns the best verified strategy
/// together with the per-iteration log.
pub fn synthesize(
    m: &Pomdp,
    spec: &Specification,
    cfg: &SynthesisConfig,
) -> Result<SynthesisResult, RefineError> {
    // Effective model: the memory product in finite-memory mode.
    let (m_eff, update) = match &cfg.memory {
        None => (m.clone(), None),
        Some((kind, k)) => {
            let upd = memory_update(kind, *k, m)?;
            (product(m, &upd), Some(upd))
        }
    };
    let aut = build_automaton(spec);
    let mdp = underlying_mdp(&m_eff);
    let sol = mdp_optimal(&mdp, spec)?;
    let mdp_bound = sol.value_at_initial();

    let max_len = if cfg.sample_max_len == 0 { 32 } else { cfg.sample_max_len };
    // Training data from the solved underlying MDP; paths live on the
    // automaton-composed space and project down to effective-model states.
    // Starts mirror how a run can actually begin: memory node 0 (a controller
    // always starts there) and the automaton node induced by the start state.
    let starts: Vec<usize> = (0..sol.model.num_states)
        .filter(|&i| {
            let (eff_s, q) = sol.state_map[i];
            let at_initial_node = match &update {
                Some(upd) => eff_s % upd.k == 0,
                None => true,
            };
            let holds = |ap: &str| m_eff.has_label(eff_s, ap);
            at_initial_node && q == aut.step(aut.initial, &holds)
        })
        .collect();
    let paths = sample_trajectories_from(
        &sol.model,
        &sol.strategy,
        &starts,
        cfg.sample_count,
        max_len,
        cfg.seed,
    );
    let projected: Vec<MdpPath> = paths
        .into_iter()
        .map(|p| MdpPath {
            states: p.states.iter().map(|&i| sol.state_map[i].0).collect(),
            actions: p.actions,
        })
        .collect();
    let mut dataset = to_observation_sequences(&projected, &m_eff, cfg.seed, max_len);

    let mut policy = RecurrentPolicy::new(
        m_eff.num_observations(),
        cfg.train.hidden,
        m_eff.num_actions(),
        cfg.seed,
    );

    let rule = cfg.criticality.unwrap_or(match spec.threshold() {
        Some(_) => CriticalityRule::Uniform,
        None => CriticalityRule::MdpScaled { theta: DEFAULT_MDP_SCALED_THETA },
    });

    let mut log: Vec<IterationLog> = Vec::new();
    for iteration in 1..=cfg.max_iterations {
        let t0 = Instant::now();
        let mut train_cfg = cfg.train.clone();
        train_cfg.seed = iteration_seed(cfg.seed, iteration, 0x7261696e);
        let report = train(&mut policy, &dataset, &train_cfg)?;
        let sigma = extract_memoryless(&policy, &m_eff)?;
        let result = check(&m_eff, &sigma, spec)?;

        // Criticality analysis on the verified chain.
        let orient = Orientation::new(spec, &result.values.values, &sol.values.values);
        let oriented: Vec<f64> =
            result.values.values.iter().map(|&v| orient.apply(v)).collect();
        let lambda_prime: Vec<f64> = match rule {
            CriticalityRule::Uniform => {
                let (_, bound) = spec.threshold().ok_or(RefineError::NoThreshold)?;
                vec![orient.threshold(bound); oriented.len()]
            }
            CriticalityRule::MdpScaled { theta } => sol
                .values
                .values
                .iter()
                .map(|&v| orient.relax(orient.apply(v), theta))
                .collect(),
        };
        let critical = critical_states(&oriented, &lambda_prime);
        let decisions = critical_decisions(&m_eff, spec, &sigma, &critical);

        log.push(IterationLog {
            iteration,
            value: result.value_at_initial,
            satisfied: result.satisfied,
            critical_states: critical.len(),
            critical_decisions: decisions.len(),
            train_loss: report.final_loss,
            seconds: t0.elapsed().as_secs_f64(),
            strategy: sigma.clone(),
        });

        let value = result.value_at_initial;
        if cfg.early_stop {
            let done = match result.satisfied {
                Some(v) => v,
                None if spec.maximizing() => value >= mdp_bound - 1e-9,
                None => value <= mdp_bound + 1e-9,
            };
            if done {
                break;
            }
        }
        if cfg.eps_progress > 0.0 && log.len() >= 2 {
            let prev = log[log.len() - 2].value;
            if (value - prev).abs() < cfg.eps_progress {
                break;
            }
        }
        if iteration == cfg.max_iterations {
            break;
        }
        if critical.is_empty() {
            continue;
        }

        // Local improvement, largest classes first. The max-min objective is
        // sound per class but blind to the initial state; a quick re-check
        // gates each replaced row so a worst-case-protective row cannot drag
        // the verified value down.
        let mut per_class: BTreeMap<usize, usize> = BTreeMap::new();
        for d in &decisions {
            *per_class.entry(d.obs).or_insert(0) += 1;
        }
        let mut classes: Vec<(usize, usize)> =
            per_class.into_iter().map(|(z, n)| (z, n)).collect();
        classes.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        let mut improved = sigma.clone();
        let mut improved_value = value;
        for &(z, _) in &classes {
            let dist = improve_lp(&m_eff, spec, &improved, &result.values, z)?;
            let mut candidate = improved.clone();
            candidate.set_row(z, dist);
            let v = check(&m_eff, &candidate, spec)?.value_at_initial;
            let keep = if spec.maximizing() {
                v >= improved_value - 1e-12
            } else {
                v <= improved_value + 1e-12
            };
            if keep {
                improved = candidate;
                improved_value = v;
            }
        }

        // Fresh data from the critical situations under the improved play.
        let critical_model: BTreeSet<usize> = critical
            .iter()
            .map(|&i| i / aut.nodes)
            .collect();
        let extra = resample_from_critical(
            &m_eff,
            &improved,
            &critical_model,
            cfg.resample_count,
            max_len,
            iteration_seed(cfg.seed, iteration, 0x7265f),
        );
        dataset.extend(extra);
    }

    // Best verified iterate, not the last one.
    let better = |a: f64, b: f64| if spec.maximizing() { a > b } else { a < b };
    let mut best_iteration = 0;
    for (i, entry) in log.iter().enumerate() {
        if better(entry.value, log[best_iteration].value) {
            best_iteration = i;
        }
    }
    let best_sigma = log[best_iteration].strategy.clone();
    let best = match &update {
        None => SynthesizedStrategy::Memoryless(best_sigma),
        Some(upd) => SynthesizedStrategy::Controller(project_fsc(&best_sigma, upd, m)?),
    };
    Ok(SynthesisResult {
        satisfied: log[best_iteration].satisfied,
        best_iteration,
        best,
        log,
        mdp_bound,
        effective_model: m_eff,
    })
}
