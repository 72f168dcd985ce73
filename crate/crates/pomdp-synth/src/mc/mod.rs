//! Exact verification: induced-chain construction, reachability and expected
//! total reward values, repeated reachability via bottom-SCC analysis, and
//! optimal solutions of the underlying MDP.

mod graph;
mod linsolve;
mod mdp;

pub use graph::{backward_reach, bottom_sccs, maximal_end_components, reverse, tarjan_sccs};
pub use mdp::{mdp_optimal, MdpSolution, MdpStrategy};

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Dtmc, Pomdp, Provenance};
use crate::spec::{Acceptance, SpecAutomaton, SpecKind, Specification, build_automaton};
use crate::strategy::ObservationStrategy;

#[derive(Debug, Error)]
pub enum McError {
    #[error("strategy puts probability {prob} on `{action}` which is disabled in state {state}")]
    DisabledAction { state: usize, action: String, prob: f64 },
    #[error("strategy has no row for observation `{obs}` (state {state})")]
    MissingRow { obs: String, state: usize },
    #[error("unknown atomic proposition `{0}`")]
    UnknownProposition(String),
    #[error("unsupported query: {0}")]
    Unsupported(String),
}

/// Per-state verified values. Probabilities stay in [0, 1] up to solver
/// tolerance; expected rewards use `f64::INFINITY` for divergent states.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueVector {
    pub values: Vec<f64>,
}

impl ValueVector {
    pub fn at(&self, s: usize) -> f64 {
        self.values[s]
    }

    pub fn has_infinite(&self) -> bool {
        self.values.iter().any(|v| v.is_infinite())
    }
}

#[derive(Debug, Clone)]
pub struct VerificationResult {
    /// Threshold verdict; `None` for pure max/min value queries.
    pub satisfied: Option<bool>,
    /// Value at the induced chain's initial state.
    pub value_at_initial: f64,
    /// Full value vector over the induced chain.
    pub values: ValueVector,
    pub dtmc_states: usize,
    pub dtmc_transitions: usize,
    pub wall: Duration,
}

/// Builds the chain induced by an observation-based strategy, composed with a
/// specification automaton. Chain state `(s, q)` has index `s * nodes + q`;
/// the automaton consumes the labels of each state as it is entered.
pub fn induced_dtmc(
    m: &Pomdp,
    sigma: &ObservationStrategy,
    aut: &SpecAutomaton,
) -> Result<Dtmc, McError> {
    let nodes = aut.nodes;
    let n = m.num_states * nodes;
    let holds = |s: usize| move |ap: &str| m.has_label(s, ap);

    let mut rows = Vec::with_capacity(n);
    let mut provenance = Vec::with_capacity(n);
    let mut rewards = vec![0.0; n];
    for s in 0..m.num_states {
        let z = m.obs_of[s];
        let dist = sigma.row(z).ok_or_else(|| McError::MissingRow {
            obs: m.observations[z].clone(),
            state: s,
        })?;
        let mut mixture: Vec<(usize, f64)> = Vec::new();
        for (a, &p) in dist.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            if m.row(s, a).is_none() {
                return Err(McError::DisabledAction {
                    state: s,
                    action: m.actions[a].clone(),
                    prob: p,
                });
            }
            mixture.push((a, p));
        }
        for q in 0..nodes {
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut reward = 0.0;
            for &(a, p) in &mixture {
                reward += p * m.reward(s, a);
                for &(t, pt) in m.row(s, a).unwrap() {
                    let q_next = aut.step(q, &holds(t));
                    let idx = t * nodes + q_next;
                    match row.iter_mut().find(|(u, _)| *u == idx) {
                        Some((_, acc)) => *acc += p * pt,
                        None => row.push((idx, p * pt)),
                    }
                }
            }
            row.sort_by_key(|&(t, _)| t);
            rows.push(row);
            rewards[s * nodes + q] = reward;
            provenance.push(Provenance { model_state: s, aut_node: q, mixture: mixture.clone() });
        }
    }

    let labels = m
        .labels
        .iter()
        .map(|(ap, set)| {
            let lifted: BTreeSet<usize> =
                set.iter().flat_map(|&s| (0..nodes).map(move |q| s * nodes + q)).collect();
            (ap.clone(), lifted)
        })
        .collect();
    let initial = {
        let q0 = aut.step(aut.initial, &holds(m.initial));
        m.initial * nodes + q0
    };
    Ok(Dtmc { rows, provenance, labels, rewards, initial })
}

fn chain_adjacency(d: &Dtmc) -> Vec<Vec<usize>> {
    d.rows
        .iter()
        .map(|row| row.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t).collect())
        .collect()
}

/// Probability of reaching `goal` while avoiding `avoid`, per state.
/// Exact 0/1 sets come from graph search; the remaining states solve
/// `p = P p` restricted to the uncertain set.
pub fn reach_prob(d: &Dtmc, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>) -> ValueVector {
    assert!(goal.is_disjoint(avoid), "goal and avoid sets must be disjoint");
    let n = d.num_states();
    let adj = chain_adjacency(d);
    let rev = reverse(&adj);

    let can_reach = backward_reach(&rev, goal, avoid);
    // States with value exactly zero: avoid states and states that cannot
    // reach the goal at all.
    let zero: Vec<bool> =
        (0..n).map(|s| avoid.contains(&s) || !can_reach[s]).collect();
    // States with value exactly one: cannot reach any zero-state without
    // first passing the goal.
    let zero_set: BTreeSet<usize> = (0..n).filter(|&s| zero[s]).collect();
    let reaches_zero = backward_reach(&rev, &zero_set, goal);
    let one: Vec<bool> = (0..n).map(|s| !zero[s] && !reaches_zero[s]).collect();

    let uncertain: Vec<usize> =
        (0..n).filter(|&s| !zero[s] && !one[s] && !goal.contains(&s)).collect();
    let index_of: std::collections::HashMap<usize, usize> =
        uncertain.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut m_rows = Vec::with_capacity(uncertain.len());
    let mut c = Vec::with_capacity(uncertain.len());
    for &s in &uncertain {
        let mut row = Vec::new();
        let mut constant = 0.0;
        for &(t, p) in &d.rows[s] {
            if let Some(&j) = index_of.get(&t) {
                row.push((j, p));
            } else if one[t] || goal.contains(&t) {
                constant += p;
            }
        }
        m_rows.push(row);
        c.push(constant);
    }
    let (x, _residual) = linsolve::solve_fixpoint(&m_rows, &c);

    let mut values = vec![0.0; n];
    for s in 0..n {
        if one[s] || goal.contains(&s) {
            values[s] = 1.0;
        }
    }
    for (i, &s) in uncertain.iter().enumerate() {
        values[s] = x[i].clamp(0.0, 1.0);
    }
    ValueVector { values }
}

/// Expected total reward accumulated until reaching `goal`. States that reach
/// `goal` with probability below one diverge and are flagged with infinity.
pub fn expected_total_reward(d: &Dtmc, goal: &BTreeSet<usize>) -> ValueVector {
    let n = d.num_states();
    let adj = chain_adjacency(d);
    let rev = reverse(&adj);

    // A bottom SCC disjoint from the goal traps the chain; any state that can
    // reach one before the goal has reach probability < 1.
    let mut doomed: BTreeSet<usize> = BTreeSet::new();
    for comp in bottom_sccs(&adj) {
        if comp.iter().all(|s| !goal.contains(s)) {
            doomed.extend(comp);
        }
    }
    let divergent = backward_reach(&rev, &doomed, goal);

    let uncertain: Vec<usize> =
        (0..n).filter(|&s| !divergent[s] && !goal.contains(&s)).collect();
    let index_of: std::collections::HashMap<usize, usize> =
        uncertain.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut m_rows = Vec::with_capacity(uncertain.len());
    let mut c = Vec::with_capacity(uncertain.len());
    for &s in &uncertain {
        let mut row = Vec::new();
        for &(t, p) in &d.rows[s] {
            if let Some(&j) = index_of.get(&t) {
                row.push((j, p));
            }
        }
        m_rows.push(row);
        c.push(d.rewards[s]);
    }
    let (x, _residual) = linsolve::solve_fixpoint(&m_rows, &c);

    let mut values = vec![0.0; n];
    for s in 0..n {
        if divergent[s] && !goal.contains(&s) {
            values[s] = f64::INFINITY;
        }
    }
    for (i, &s) in uncertain.iter().enumerate() {
        values[s] = x[i];
    }
    ValueVector { values }
}

/// Probability of visiting both recurrence sets infinitely often while
/// staying inside `safe`. A bottom SCC accepts iff it lies entirely in `safe`
/// and intersects both sets; the value is the probability of reaching an
/// accepting bottom SCC before leaving `safe`.
pub fn buchi_value(
    d: &Dtmc,
    rec1: &BTreeSet<usize>,
    rec2: &BTreeSet<usize>,
    safe: &BTreeSet<usize>,
) -> ValueVector {
    let n = d.num_states();
    let adj = chain_adjacency(d);
    let mut accepting: BTreeSet<usize> = BTreeSet::new();
    for comp in bottom_sccs(&adj) {
        let inside = comp.iter().all(|s| safe.contains(s));
        if inside
            && comp.iter().any(|s| rec1.contains(s))
            && comp.iter().any(|s| rec2.contains(s))
        {
            accepting.extend(comp);
        }
    }
    let unsafe_states: BTreeSet<usize> = (0..n).filter(|s| !safe.contains(s)).collect();
    if accepting.is_empty() {
        let values = (0..n).map(|_| 0.0).collect();
        return ValueVector { values };
    }
    reach_prob(d, &accepting, &unsafe_states)
}

/// Value vector of a specification template on an induced chain. The chain
/// must have been built with the matching automaton.
pub fn evaluate_template(d: &Dtmc, spec: &Specification) -> Result<ValueVector, McError> {
    let aut = build_automaton(spec);
    let need = |ap: &str| -> Result<BTreeSet<usize>, McError> {
        if d.labels.contains_key(ap) {
            Ok(d.label_set(ap))
        } else {
            Err(McError::UnknownProposition(ap.to_string()))
        }
    };
    match (&spec.kind, &aut.acceptance) {
        (SpecKind::Probability, Acceptance::Reach { goal, avoid }) => {
            let goal_set = need(goal)?;
            let avoid_set = match avoid {
                Some(x) => need(x)?.difference(&goal_set).copied().collect(),
                None => BTreeSet::new(),
            };
            Ok(reach_prob(d, &goal_set, &avoid_set))
        }
        (SpecKind::ExpectedReward, Acceptance::Reach { goal, avoid }) => {
            debug_assert!(avoid.is_none());
            Ok(expected_total_reward(d, &need(goal)?))
        }
        (kind, Acceptance::SeqReach { second, .. }) => {
            // Accepting: the automaton has flipped (node 1) and the state
            // carries the second landmark.
            let second_set = need(second)?;
            let accept: BTreeSet<usize> = (0..d.num_states())
                .filter(|&i| d.provenance[i].aut_node == 1 && second_set.contains(&i))
                .collect();
            match kind {
                SpecKind::Probability => Ok(reach_prob(d, &accept, &BTreeSet::new())),
                SpecKind::ExpectedReward => Ok(expected_total_reward(d, &accept)),
            }
        }
        (SpecKind::Probability, Acceptance::Recurrence { rec_a, rec_b, avoid }) => {
            let rec1 = need(rec_a)?;
            let rec2 = need(rec_b)?;
            let avoid_set = need(avoid)?;
            let safe: BTreeSet<usize> =
                (0..d.num_states()).filter(|s| !avoid_set.contains(s)).collect();
            Ok(buchi_value(d, &rec1, &rec2, &safe))
        }
        (SpecKind::ExpectedReward, Acceptance::Recurrence { .. }) => Err(McError::Unsupported(
            "expected reward over recurrence objectives".into(),
        )),
    }
}

/// Verifies a strategy against a specification on a POMDP: induces the chain,
/// computes the template's values, and compares against the threshold.
pub fn check(
    m: &Pomdp,
    sigma: &ObservationStrategy,
    spec: &Specification,
) -> Result<VerificationResult, McError> {
    let start = Instant::now();
    for ap in spec.template.propositions() {
        if !m.labels.contains_key(ap) {
            return Err(McError::UnknownProposition(ap.to_string()));
        }
    }
    let aut = build_automaton(spec);
    let d = induced_dtmc(m, sigma, &aut)?;
    let values = evaluate_template(&d, spec)?;
    let value_at_initial = values.at(d.initial);
    let satisfied = spec.threshold().map(|(cmp, bound)| cmp.holds(value_at_initial, bound));
    Ok(VerificationResult {
        satisfied,
        value_at_initial,
        dtmc_states: d.num_states(),
        dtmc_transitions: d.num_transitions(),
        values,
        wall: start.elapsed(),
    })
}

/// Verifies a finite-state controller by building the memory product and
/// evaluating the controller's action mapping as a memoryless strategy on it.
pub fn check_fsc(
    m: &Pomdp,
    fsc: &crate::fsc::Fsc,
    spec: &Specification,
) -> Result<VerificationResult, McError> {
    let prod = crate::fsc::product(m, &fsc.update);
    let sigma = fsc.as_product_strategy(m);
    check(&prod, &sigma, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;
    use crate::spec::parse_spec;
    use crate::strategy::StrategyMode;

    const TINY: &str = include_str!("../../fixtures/tiny_corridor.pomdp");
    const TINY_BAD: &str = include_str!("../../fixtures/tiny_corridor_bad.pomdp");

    fn deterministic(m: &Pomdp, action: usize) -> ObservationStrategy {
        let mut s = ObservationStrategy::new(
            StrategyMode::Memoryless,
            m.num_observations(),
            m.num_actions(),
        );
        for z in 0..m.num_observations() {
            let mut dist = vec![0.0; m.num_actions()];
            dist[action] = 1.0;
            s.set_row(z, dist);
        }
        s
    }

    fn chain(rows: Vec<Vec<(usize, f64)>>, rewards: Vec<f64>) -> Dtmc {
        let provenance = (0..rows.len())
            .map(|s| Provenance { model_state: s, aut_node: 0, mixture: vec![(0, 1.0)] })
            .collect();
        Dtmc { rows, provenance, labels: Default::default(), rewards, initial: 0 }
    }

    #[test]
    fn induced_rows_follow_the_chosen_action() {
        let m = parse_model(TINY).unwrap();
        let spec = parse_spec("Pmax [ F goal ]").unwrap();
        let aut = build_automaton(&spec);
        let right = deterministic(&m, 1);
        let d = induced_dtmc(&m, &right, &aut).unwrap();
        assert_eq!(d.rows[0], vec![(1, 1.0)]);
        assert_eq!(d.rows[1], vec![(2, 1.0)]);
        assert_eq!(d.rewards[0], 1.0);
    }

    #[test]
    fn induced_rows_mix_under_uniform_strategy() {
        let m = parse_model(TINY).unwrap();
        let aut = build_automaton(&parse_spec("Pmax [ F goal ]").unwrap());
        let uniform = ObservationStrategy::uniform(&m);
        let d = induced_dtmc(&m, &uniform, &aut).unwrap();
        // row(s0) = 0.5 left(s0 -> s0) + 0.5 right(s0 -> s1)
        assert_eq!(d.rows[0], vec![(0, 0.5), (1, 0.5)]);
        assert_eq!(d.rows[1], vec![(0, 0.5), (2, 0.5)]);
    }

    #[test]
    fn induced_dtmc_rejects_disabled_mass() {
        let mut m = parse_model(TINY).unwrap();
        m.trans[1][0] = None; // disable `left` in state 1
        let aut = build_automaton(&parse_spec("Pmax [ F goal ]").unwrap());
        let uniform = {
            let mut s = ObservationStrategy::new(StrategyMode::Memoryless, 2, 2);
            s.set_row(0, vec![0.5, 0.5]);
            s.set_row(1, vec![0.5, 0.5]);
            s
        };
        let err = induced_dtmc(&m, &uniform, &aut).unwrap_err();
        assert!(matches!(err, McError::DisabledAction { state: 1, .. }), "{err}");
    }

    #[test]
    fn reach_prob_half_split() {
        // s0 -> 0.5 s1, 0.5 bad; s1 -> goal.
        let d = chain(
            vec![vec![(1, 0.5), (2, 0.5)], vec![(3, 1.0)], vec![(2, 1.0)], vec![(3, 1.0)]],
            vec![0.0; 4],
        );
        let goal = BTreeSet::from([3]);
        let avoid = BTreeSet::from([2]);
        let v = reach_prob(&d, &goal, &avoid);
        assert!((v.at(0) - 0.5).abs() < 1e-10);
        assert_eq!(v.at(3), 1.0);
        assert_eq!(v.at(2), 0.0);
    }

    #[test]
    fn reach_prob_boundaries_are_exact() {
        let d = chain(vec![vec![(0, 1.0)], vec![(1, 1.0)]], vec![0.0; 2]);
        let v = reach_prob(&d, &BTreeSet::from([1]), &BTreeSet::new());
        assert_eq!(v.at(1), 1.0);
        assert_eq!(v.at(0), 0.0, "no path to goal is exactly zero");
    }

    #[test]
    fn expected_reward_immediate_step() {
        let d = chain(vec![vec![(1, 1.0)], vec![(1, 1.0)]], vec![1.0, 0.0]);
        let v = expected_total_reward(&d, &BTreeSet::from([1]));
        assert!((v.at(0) - 1.0).abs() < 1e-10);
        assert_eq!(v.at(1), 0.0);
    }

    #[test]
    fn expected_reward_geometric_loop() {
        // s0 loops on itself with 0.5, reaches goal with 0.5; unit reward.
        let d = chain(vec![vec![(0, 0.5), (1, 0.5)], vec![(1, 1.0)]], vec![1.0, 0.0]);
        let v = expected_total_reward(&d, &BTreeSet::from([1]));
        assert!((v.at(0) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn expected_reward_flags_divergence() {
        // 0.9 to goal, 0.1 to an absorbing trap: reach probability < 1.
        let d = chain(
            vec![vec![(1, 0.9), (2, 0.1)], vec![(1, 1.0)], vec![(2, 1.0)]],
            vec![1.0, 0.0, 0.0],
        );
        let v = expected_total_reward(&d, &BTreeSet::from([1]));
        assert!(v.at(0).is_infinite());
        assert!(v.has_infinite());
    }

    #[test]
    fn buchi_absorbing_state_with_both_labels() {
        let d = chain(vec![vec![(1, 1.0)], vec![(1, 1.0)]], vec![0.0; 2]);
        let both = BTreeSet::from([1]);
        let safe = BTreeSet::from([0, 1]);
        let v = buchi_value(&d, &both, &both, &safe);
        assert_eq!(v.at(0), 1.0);
        assert_eq!(v.at(1), 1.0);
    }

    #[test]
    fn buchi_alternating_two_cycle_accepts() {
        // 1 <-> 2 alternate A and B; 0 enters the cycle.
        let d = chain(
            vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(1, 1.0)]],
            vec![0.0; 3],
        );
        let rec1 = BTreeSet::from([1]);
        let rec2 = BTreeSet::from([2]);
        let safe = BTreeSet::from([0, 1, 2]);
        let v = buchi_value(&d, &rec1, &rec2, &safe);
        assert_eq!(v.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn buchi_unsafe_bscc_rejected() {
        // The cycle holds both labels but includes an unsafe state.
        let d = chain(
            vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(1, 1.0)]],
            vec![0.0; 3],
        );
        let rec1 = BTreeSet::from([1]);
        let rec2 = BTreeSet::from([2]);
        let safe = BTreeSet::from([0, 1]); // state 2 unsafe
        let v = buchi_value(&d, &rec1, &rec2, &safe);
        assert_eq!(v.values, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn check_always_right_reaches_goal_surely() {
        let m = parse_model(TINY).unwrap();
        let spec = parse_spec("Pmax [ true U goal ]").unwrap();
        let res = check(&m, &deterministic(&m, 1), &spec).unwrap();
        assert_eq!(res.value_at_initial, 1.0);
        assert_eq!(res.satisfied, None);
    }

    #[test]
    fn check_always_left_never_reaches_goal() {
        let m = parse_model(TINY).unwrap();
        let spec = parse_spec("Pmax [ true U goal ]").unwrap();
        let res = check(&m, &deterministic(&m, 0), &spec).unwrap();
        assert_eq!(res.value_at_initial, 0.0);
    }

    #[test]
    fn check_threshold_comparison_is_nonstrict() {
        let m = parse_model(TINY_BAD).unwrap();
        // Uniform strategy yields exactly 1/3 at the initial state.
        let uniform = ObservationStrategy::uniform(&m);
        let spec = parse_spec("P>=0.3333333333333333 [ true U goal ]").unwrap();
        let res = check(&m, &uniform, &spec).unwrap();
        assert!((res.value_at_initial - 1.0 / 3.0).abs() < 1e-9);
        let spec_le = parse_spec("P<=0.34 [ true U goal ]").unwrap();
        let res_le = check(&m, &uniform, &spec_le).unwrap();
        assert_eq!(res_le.satisfied, Some(true));
    }

    #[test]
    fn seq_reach_counts_simultaneous_landmarks() {
        // One state labeled both A and B: F (A & F B) holds immediately.
        let text = "pomdp both\nstates 2\nactions a\nobserve 0 -> z0\nobserve 1 -> z1\n\
                    trans 0 a : 1 -> 1\ntrans 1 a : 1 -> 1\nlabel A : 0\nlabel B : 0\ninit 0\n";
        let m = parse_model(text).unwrap();
        let spec = parse_spec("Pmax [ F (A & F B) ]").unwrap();
        let mut s = ObservationStrategy::new(StrategyMode::Memoryless, 2, 1);
        s.set_row(0, vec![1.0]);
        s.set_row(1, vec![1.0]);
        let res = check(&m, &s, &spec).unwrap();
        assert_eq!(res.value_at_initial, 1.0);
    }
}
