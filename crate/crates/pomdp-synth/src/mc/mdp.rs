//! Optimal values and strategies of the fully observable underlying MDP.
//! These provide the sampling strategy that seeds training, and value bounds
//! that no observation-based strategy can beat.

use std::collections::BTreeSet;

use super::graph::{maximal_end_components, prob0_max, prob0_min, prob1e};
use super::{McError, ValueVector};
use crate::model::Mdp;
use crate::spec::{Acceptance, SpecAutomaton, SpecKind, Specification, build_automaton};

const VI_TOL: f64 = 1e-11;
const VI_SWEEP_CAP: usize = 500_000;
const OPT_TOL: f64 = 1e-9;

/// Memoryless (possibly randomized) strategy over MDP states.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpStrategy {
    /// Dense action distribution per state.
    pub rows: Vec<Vec<f64>>,
}

impl MdpStrategy {
    pub fn deterministic(choices: &[usize], num_actions: usize) -> Self {
        let rows = choices
            .iter()
            .map(|&a| {
                let mut row = vec![0.0; num_actions];
                row[a] = 1.0;
                row
            })
            .collect();
        MdpStrategy { rows }
    }

    pub fn distribution(&self, s: usize) -> &[f64] {
        &self.rows[s]
    }
}

/// Result of solving an MDP against a specification. For templates that need
/// memory (sequenced reachability) the solution lives on the composition with
/// the specification automaton; `state_map` sends each solution state back to
/// the original state and automaton node.
#[derive(Debug, Clone)]
pub struct MdpSolution {
    pub values: ValueVector,
    pub strategy: MdpStrategy,
    /// The model the values and strategy are defined on.
    pub model: Mdp,
    /// Solution state -> (original state, automaton node).
    pub state_map: Vec<(usize, usize)>,
}

impl MdpSolution {
    pub fn value_at_initial(&self) -> f64 {
        self.values.at(self.model.initial)
    }
}

fn compose_with_automaton(m: &Mdp, aut: &SpecAutomaton) -> (Mdp, Vec<(usize, usize)>) {
    if aut.nodes == 1 {
        let map = (0..m.num_states).map(|s| (s, 0)).collect();
        return (m.clone(), map);
    }
    let nodes = aut.nodes;
    let holds = |s: usize| {
        move |ap: &str| m.labels.get(ap).map_or(false, |set| set.contains(&s))
    };
    let n = m.num_states * nodes;
    let mut trans = vec![vec![None; m.num_actions()]; n];
    let mut rewards = vec![vec![None; m.num_actions()]; n];
    for s in 0..m.num_states {
        for q in 0..nodes {
            let idx = s * nodes + q;
            for a in 0..m.num_actions() {
                let Some(row) = m.row(s, a) else { continue };
                let mut out: Vec<(usize, f64)> = Vec::new();
                for &(t, p) in row {
                    let tq = t * nodes + aut.step(q, &holds(t));
                    match out.iter_mut().find(|(u, _)| *u == tq) {
                        Some((_, acc)) => *acc += p,
                        None => out.push((tq, p)),
                    }
                }
                out.sort_by_key(|&(t, _)| t);
                trans[idx][a] = Some(out);
                rewards[idx][a] = m.rewards[s][a];
            }
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
    let initial = m.initial * nodes + aut.step(aut.initial, &holds(m.initial));
    let composed = Mdp {
        name: format!("{}@aut", m.name),
        num_states: n,
        actions: m.actions.clone(),
        trans,
        rewards,
        labels,
        initial,
    };
    let map = (0..m.num_states)
        .flat_map(|s| (0..nodes).map(move |q| (s, q)))
        .collect();
    (composed, map)
}

fn q_value(m: &Mdp, values: &[f64], s: usize, a: usize) -> f64 {
    let mut q = 0.0;
    for &(t, p) in m.row(s, a).unwrap() {
        if values[t].is_infinite() {
            return f64::INFINITY;
        }
        q += p * values[t];
    }
    q
}

/// Optimal reachability probabilities with fixed 0/1 boundary sets from graph
/// precomputation, then value iteration on the remaining states.
fn vi_reach(m: &Mdp, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>, maximize: bool) -> Vec<f64> {
    let n = m.num_states;
    let zero = if maximize { prob0_max(m, goal, avoid) } else { prob0_min(m, goal, avoid) };
    let one: Vec<bool> = if maximize {
        prob1e(m, goal, avoid)
            .into_iter()
            .enumerate()
            .map(|(s, v)| v && !zero[s])
            .collect()
    } else {
        (0..n).map(|s| goal.contains(&s)).collect()
    };
    let mut x = vec![0.0; n];
    for s in 0..n {
        if one[s] {
            x[s] = 1.0;
        }
    }
    let free: Vec<usize> = (0..n).filter(|&s| !zero[s] && !one[s]).collect();
    for _ in 0..VI_SWEEP_CAP {
        let mut delta: f64 = 0.0;
        for &s in &free {
            let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
            for a in m.enabled_actions(s) {
                let q = q_value(m, &x, s, a);
                best = if maximize { best.max(q) } else { best.min(q) };
            }
            delta = delta.max((best - x[s]).abs());
            x[s] = best;
        }
        if delta < VI_TOL {
            break;
        }
    }
    x
}

/// Optimal expected total reward to `goal`. For minimization, states without
/// an almost-sure route to the goal are infinite; positive step rewards make
/// greedy extraction proper.
fn vi_total_reward(m: &Mdp, goal: &BTreeSet<usize>, maximize: bool) -> Vec<f64> {
    let n = m.num_states;
    let mut x = vec![0.0; n];
    let finite: Vec<bool> = if maximize {
        vec![true; n]
    } else {
        prob1e(m, goal, &BTreeSet::new())
    };
    for s in 0..n {
        if !finite[s] && !goal.contains(&s) {
            x[s] = f64::INFINITY;
        }
    }
    let free: Vec<usize> =
        (0..n).filter(|&s| finite[s] && !goal.contains(&s)).collect();
    let mut converged = false;
    for _ in 0..VI_SWEEP_CAP {
        let mut delta: f64 = 0.0;
        for &s in &free {
            let mut best = if maximize { f64::NEG_INFINITY } else { f64::INFINITY };
            for a in m.enabled_actions(s) {
                let q = m.reward(s, a) + q_value(m, &x, s, a);
                if maximize {
                    if q > best {
                        best = q;
                    }
                } else if q < best {
                    best = q;
                }
            }
            if best.is_finite() {
                delta = delta.max((best - x[s]).abs());
                x[s] = best;
            }
        }
        if delta < VI_TOL {
            converged = true;
            break;
        }
        if maximize && x.iter().any(|v| *v > 1e12) {
            break;
        }
    }
    if maximize && !converged {
        // Reward keeps accumulating along some controllable cycle.
        for &s in &free {
            let growing = m.enabled_actions(s).any(|a| {
                m.reward(s, a) + q_value(m, &x, s, a) > x[s] + 1e-6
            });
            if growing || x[s] > 1e12 {
                x[s] = f64::INFINITY;
            }
        }
    }
    x
}

/// Deterministic greedy choices, lowest action index breaking ties.
fn greedy(m: &Mdp, values: &[f64], costs: bool, maximize: bool) -> Vec<usize> {
    (0..m.num_states)
        .map(|s| {
            let mut best_a = m.enabled_actions(s).next().expect("deadlocked state");
            let mut best = f64::NAN;
            for a in m.enabled_actions(s) {
                let base = if costs { m.reward(s, a) } else { 0.0 };
                let q = base + q_value(m, values, s, a);
                let better = if best.is_nan() {
                    true
                } else if maximize {
                    q > best + OPT_TOL
                } else {
                    q < best - OPT_TOL
                };
                if better {
                    best = q;
                    best_a = a;
                }
            }
            best_a
        })
        .collect()
}

/// For maximal reachability, greedy choices can stall on value-preserving
/// loops; assign actions outward from the goal instead, keeping only
/// value-optimal actions that make progress toward already-assigned states.
fn extract_max_reach_strategy(
    m: &Mdp,
    goal: &BTreeSet<usize>,
    values: &[f64],
) -> Vec<usize> {
    let n = m.num_states;
    let mut choice: Vec<usize> = (0..n)
        .map(|s| m.enabled_actions(s).next().expect("deadlocked state"))
        .collect();
    let mut assigned = vec![false; n];
    for &g in goal {
        assigned[g] = true;
    }
    loop {
        let mut added = Vec::new();
        for s in 0..n {
            if assigned[s] || values[s] <= 1e-12 {
                continue;
            }
            let pick = m.enabled_actions(s).find(|&a| {
                (q_value(m, values, s, a) - values[s]).abs() <= OPT_TOL
                    && m.row(s, a).unwrap().iter().any(|&(t, _)| assigned[t])
            });
            if let Some(a) = pick {
                choice[s] = a;
                added.push(s);
            }
        }
        if added.is_empty() {
            break;
        }
        for s in added {
            assigned[s] = true;
        }
    }
    choice
}

fn reach_solution(
    model: Mdp,
    state_map: Vec<(usize, usize)>,
    goal: BTreeSet<usize>,
    avoid: BTreeSet<usize>,
    maximize: bool,
) -> MdpSolution {
    let values = vi_reach(&model, &goal, &avoid, maximize);
    let choices = if maximize {
        extract_max_reach_strategy(&model, &goal, &values)
    } else {
        greedy(&model, &values, false, false)
    };
    let strategy = MdpStrategy::deterministic(&choices, model.num_actions());
    MdpSolution { values: ValueVector { values }, strategy, model, state_map }
}

fn reward_solution(
    model: Mdp,
    state_map: Vec<(usize, usize)>,
    goal: BTreeSet<usize>,
    maximize: bool,
) -> MdpSolution {
    let values = vi_total_reward(&model, &goal, maximize);
    let choices = greedy(&model, &values, true, maximize);
    let strategy = MdpStrategy::deterministic(&choices, model.num_actions());
    MdpSolution { values: ValueVector { values }, strategy, model, state_map }
}

fn buchi_solution(
    model: Mdp,
    state_map: Vec<(usize, usize)>,
    rec_a: BTreeSet<usize>,
    rec_b: BTreeSet<usize>,
    avoid: BTreeSet<usize>,
) -> MdpSolution {
    let n = model.num_states;
    let safe: Vec<bool> = (0..n).map(|s| !avoid.contains(&s)).collect();
    let mecs = maximal_end_components(&model, &safe);
    let mut target: BTreeSet<usize> = BTreeSet::new();
    let mut in_accepting: Vec<Option<usize>> = vec![None; n];
    for (i, mec) in mecs.iter().enumerate() {
        if mec.iter().any(|s| rec_a.contains(s)) && mec.iter().any(|s| rec_b.contains(s)) {
            target.extend(mec.iter().copied());
            for &s in mec {
                in_accepting[s] = Some(i);
            }
        }
    }
    let values = vi_reach(&model, &target, &avoid, true);
    let choices = extract_max_reach_strategy(&model, &target, &values);
    let mut strategy = MdpStrategy::deterministic(&choices, model.num_actions());
    // Inside an accepting end component, randomize uniformly over the actions
    // that stay inside: the induced chain then visits every component state
    // infinitely often, covering both recurrence sets.
    for (i, mec) in mecs.iter().enumerate() {
        let members: BTreeSet<usize> = mec.iter().copied().collect();
        for &s in mec {
            if in_accepting[s] != Some(i) {
                continue;
            }
            let internal: Vec<usize> = model
                .enabled_actions(s)
                .filter(|&a| model.row(s, a).unwrap().iter().all(|&(t, _)| members.contains(&t)))
                .collect();
            if !internal.is_empty() {
                let p = 1.0 / internal.len() as f64;
                let mut row = vec![0.0; model.num_actions()];
                for a in internal {
                    row[a] = p;
                }
                strategy.rows[s] = row;
            }
        }
    }
    MdpSolution { values: ValueVector { values }, strategy, model, state_map }
}

/// Solves the underlying MDP for a specification. The returned values bound
/// every observation-based strategy's value on the POMDP from above (for
/// maximizing queries) or below (for minimizing ones).
pub fn mdp_optimal(m: &Mdp, spec: &Specification) -> Result<MdpSolution, McError> {
    for ap in spec.template.propositions() {
        if !m.labels.contains_key(ap) {
            return Err(McError::UnknownProposition(ap.to_string()));
        }
    }
    let aut = build_automaton(spec);
    let (model, state_map) = compose_with_automaton(m, &aut);
    let label = |ap: &str| -> BTreeSet<usize> {
        model.labels.get(ap).cloned().unwrap_or_default()
    };
    let maximize = spec.maximizing();
    match (&spec.kind, aut.acceptance.clone()) {
        (SpecKind::Probability, Acceptance::Reach { goal, avoid }) => {
            let goal_set = label(&goal);
            let avoid_set: BTreeSet<usize> = match avoid {
                Some(x) => label(&x).difference(&goal_set).copied().collect(),
                None => BTreeSet::new(),
            };
            Ok(reach_solution(model, state_map, goal_set, avoid_set, maximize))
        }
        (SpecKind::ExpectedReward, Acceptance::Reach { goal, .. }) => {
            let goal_set = label(&goal);
            Ok(reward_solution(model, state_map, goal_set, maximize))
        }
        (kind, Acceptance::SeqReach { second, .. }) => {
            let second_set = label(&second);
            let accept: BTreeSet<usize> = (0..model.num_states)
                .filter(|&i| state_map[i].1 == 1 && second_set.contains(&i))
                .collect();
            match kind {
                SpecKind::Probability => {
                    Ok(reach_solution(model, state_map, accept, BTreeSet::new(), maximize))
                }
                SpecKind::ExpectedReward => Ok(reward_solution(model, state_map, accept, maximize)),
            }
        }
        (SpecKind::Probability, Acceptance::Recurrence { rec_a, rec_b, avoid }) => {
            if !maximize {
                return Err(McError::Unsupported(
                    "minimizing recurrence objectives on MDPs".into(),
                ));
            }
            let (ra, rb, av) = (label(&rec_a), label(&rec_b), label(&avoid));
            Ok(buchi_solution(model, state_map, ra, rb, av))
        }
        (SpecKind::ExpectedReward, Acceptance::Recurrence { .. }) => Err(McError::Unsupported(
            "expected reward over recurrence objectives".into(),
        )),
    }
}
