//! Finite-state controllers: predefined memory-update functions, the product
//! POMDP that bakes the memory update into the state space, and projection of
//! a memoryless product strategy back to a k-node controller.
//!
//! The product of a model with `|S|` states and a k-node update has exactly
//! `|S| * k` states. Product state `(s, n)` has index `s * k + n`; product
//! observation `(z, n)` has index `z * k + n` and name `<z>@<n>`, so the
//! memory node is observable to the controller.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{Pomdp, STOCHASTIC_TOL};
use crate::strategy::{ObservationStrategy, StrategyMode};

#[derive(Debug, Error)]
pub enum FscError {
    #[error("unknown memory update kind `{0}`")]
    UnknownKind(String),
    #[error("invalid memory update: {0}")]
    Invalid(String),
    #[error("strategy is missing a row for product observation `{0}`")]
    MissingEntry(String),
    #[error("fsc syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// How the memory node reacts to an (observation, action) step.
#[derive(Debug, Clone, PartialEq)]
pub enum MemoryUpdateKind {
    /// Advance the node on observations that can repeat across a transition
    /// (some edge connects two states sharing that observation). A bounded
    /// stand-in for history-based repetition detection: walking along a
    /// corridor of identical observations counts its depth.
    ObservationRepeat,
    /// Flip node 0 to 1 on the observation class that identifies the first
    /// landmark, and back on the second; the node tracks which landmark is
    /// currently sought.
    SpecDriven { first_ap: String, second_ap: String },
    /// An explicit transition table `table[n][z][a] = n'`.
    Explicit(Vec<Vec<Vec<usize>>>),
}

/// A realized memory update: a total table over nodes, observations and
/// actions.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryUpdate {
    pub k: usize,
    table: Vec<Vec<Vec<usize>>>,
}

impl MemoryUpdate {
    pub fn next(&self, n: usize, z: usize, a: usize) -> usize {
        self.table[n][z][a]
    }

    pub fn table(&self) -> &Vec<Vec<Vec<usize>>> {
        &self.table
    }
}

/// Observations that can occur on both ends of some transition; walking
/// through such a class can repeat it.
fn repeatable_observations(m: &Pomdp) -> BTreeSet<usize> {
    let mut set = BTreeSet::new();
    for s in 0..m.num_states {
        for a in m.enabled_actions(s) {
            for &(t, _) in m.row(s, a).unwrap() {
                if m.obs_of[s] == m.obs_of[t] {
                    set.insert(m.obs_of[s]);
                }
            }
        }
    }
    set
}

/// Observation classes whose states all carry the given label (and that are
/// nonempty): observing them certifies the proposition.
fn indicator_observations(m: &Pomdp, ap: &str) -> Result<BTreeSet<usize>, FscError> {
    let states = m
        .labels
        .get(ap)
        .ok_or_else(|| FscError::Invalid(format!("model has no proposition `{ap}`")))?;
    let classes = m.observation_classes();
    Ok((0..m.num_observations())
        .filter(|&z| !classes[z].is_empty() && classes[z].iter().all(|s| states.contains(s)))
        .collect())
}

/// Realizes a memory-update rule as a total table for the given model.
pub fn memory_update(
    kind: &MemoryUpdateKind,
    k: usize,
    m: &Pomdp,
) -> Result<MemoryUpdate, FscError> {
    if k == 0 {
        return Err(FscError::Invalid("node count must be at least 1".into()));
    }
    let nz = m.num_observations();
    let na = m.num_actions();
    let table = match kind {
        MemoryUpdateKind::ObservationRepeat => {
            let repeatable = repeatable_observations(m);
            (0..k)
                .map(|n| {
                    (0..nz)
                        .map(|z| {
                            let next = if repeatable.contains(&z) { (n + 1).min(k - 1) } else { n };
                            vec![next; na]
                        })
                        .collect()
                })
                .collect()
        }
        MemoryUpdateKind::SpecDriven { first_ap, second_ap } => {
            if k < 2 {
                return Err(FscError::Invalid("spec-driven updates need k >= 2".into()));
            }
            let first = indicator_observations(m, first_ap)?;
            let second = indicator_observations(m, second_ap)?;
            if first.is_empty() || second.is_empty() {
                return Err(FscError::Invalid(format!(
                    "no observation class certifies `{first_ap}` or `{second_ap}`"
                )));
            }
            (0..k)
                .map(|n| {
                    (0..nz)
                        .map(|z| {
                            let next = if n == 0 && first.contains(&z) {
                                1
                            } else if n == 1 && second.contains(&z) {
                                0
                            } else {
                                n
                            };
                            vec![next; na]
                        })
                        .collect()
                })
                .collect()
        }
        MemoryUpdateKind::Explicit(table) => {
            if table.len() != k {
                return Err(FscError::Invalid(format!(
                    "explicit table has {} nodes, expected {k}",
                    table.len()
                )));
            }
            for (n, per_obs) in table.iter().enumerate() {
                if per_obs.len() != nz {
                    return Err(FscError::Invalid(format!(
                        "node {n} covers {} observations, expected {nz}",
                        per_obs.len()
                    )));
                }
                for (z, per_act) in per_obs.iter().enumerate() {
                    if per_act.len() != na {
                        return Err(FscError::Invalid(format!(
                            "node {n}, observation {z} covers {} actions, expected {na}",
                            per_act.len()
                        )));
                    }
                    if let Some(bad) = per_act.iter().find(|&&t| t >= k) {
                        return Err(FscError::Invalid(format!("node index {bad} out of range")));
                    }
                }
            }
            table.clone()
        }
    };
    Ok(MemoryUpdate { k, table })
}

/// Index of the product observation `(z, n)`.
pub fn product_obs_id(z: usize, n: usize, k: usize) -> usize {
    z * k + n
}

/// Decodes a product observation index back to `(z, n)`.
pub fn split_obs_id(zp: usize, k: usize) -> (usize, usize) {
    (zp / k, zp % k)
}

/// Index of the product state `(s, n)`.
pub fn product_state_id(s: usize, n: usize, k: usize) -> usize {
    s * k + n
}

/// Builds the product POMDP whose states carry the memory node. The update
/// consumes the observation of the state being left together with the chosen
/// action; dynamics, rewards and labels lift unchanged.
pub fn product(m: &Pomdp, update: &MemoryUpdate) -> Pomdp {
    let k = update.k;
    let n_states = m.num_states * k;
    let mut observations = Vec::with_capacity(m.num_observations() * k);
    for z in 0..m.num_observations() {
        for n in 0..k {
            observations.push(format!("{}@{n}", m.observations[z]));
        }
    }
    let mut obs_of = vec![0usize; n_states];
    let mut trans = vec![vec![None; m.num_actions()]; n_states];
    let mut rewards = vec![vec![None; m.num_actions()]; n_states];
    for s in 0..m.num_states {
        let z = m.obs_of[s];
        for n in 0..k {
            let idx = product_state_id(s, n, k);
            obs_of[idx] = product_obs_id(z, n, k);
            for a in 0..m.num_actions() {
                let Some(row) = m.row(s, a) else { continue };
                let n_next = update.next(n, z, a);
                let lifted: Vec<(usize, f64)> =
                    row.iter().map(|&(t, p)| (product_state_id(t, n_next, k), p)).collect();
                trans[idx][a] = Some(lifted);
                rewards[idx][a] = m.rewards[s][a];
            }
        }
    }
    let labels: BTreeMap<String, BTreeSet<usize>> = m
        .labels
        .iter()
        .map(|(ap, set)| {
            let lifted =
                set.iter().flat_map(|&s| (0..k).map(move |n| product_state_id(s, n, k))).collect();
            (ap.clone(), lifted)
        })
        .collect();
    Pomdp {
        name: format!("{}_x{k}", m.name),
        num_states: n_states,
        actions: m.actions.clone(),
        observations,
        obs_of,
        trans,
        rewards,
        labels,
        initial: product_state_id(m.initial, 0, k),
    }
}

/// A k-node finite-state controller: action mapping `gamma[n][z]` and memory
/// update table.
#[derive(Debug, Clone, PartialEq)]
pub struct Fsc {
    pub k: usize,
    pub initial: usize,
    /// `gamma[n][z]` is a dense action distribution.
    pub gamma: Vec<Vec<Vec<f64>>>,
    pub update: MemoryUpdate,
}

impl Fsc {
    /// Action distribution at `(node, observation)`.
    pub fn action_distribution(&self, n: usize, z: usize) -> &[f64] {
        &self.gamma[n][z]
    }

    /// The controller as a memoryless strategy on the product model.
    pub fn as_product_strategy(&self, m: &Pomdp) -> ObservationStrategy {
        let k = self.k;
        let mut sigma = ObservationStrategy::new(
            StrategyMode::Product { k },
            m.num_observations() * k,
            self.gamma[0][0].len(),
        );
        for z in 0..m.num_observations() {
            for n in 0..k {
                sigma.set_row(product_obs_id(z, n, k), self.gamma[n][z].clone());
            }
        }
        sigma
    }
}

/// Projects a memoryless strategy on the product observation alphabet back
/// to a controller: `gamma(n, z) = sigma((z, n))`, with the given update.
/// Product observations that occur in the product model must have rows;
/// unrealized pairs fall back to uniform (they are never queried on-model).
pub fn project_fsc(
    sigma: &ObservationStrategy,
    update: &MemoryUpdate,
    m: &Pomdp,
) -> Result<Fsc, FscError> {
    let k = update.k;
    let num_actions = sigma.num_actions();
    let realized: BTreeSet<usize> = {
        let prod = product(m, update);
        prod.obs_of.iter().copied().collect()
    };
    let mut gamma = vec![vec![vec![1.0 / num_actions as f64; num_actions]; m.num_observations()]; k];
    for z in 0..m.num_observations() {
        for n in 0..k {
            let zp = product_obs_id(z, n, k);
            match sigma.row(zp) {
                Some(row) => gamma[n][z] = row.to_vec(),
                None if realized.contains(&zp) => {
                    return Err(FscError::MissingEntry(format!("{}@{n}", m.observations[z])));
                }
                None => {}
            }
        }
    }
    Ok(Fsc { k, initial: 0, gamma, update: update.clone() })
}

/// Serializes a controller with the base model's alphabets.
pub fn fsc_to_text(fsc: &Fsc, m: &Pomdp) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "fsc k={} init={}", fsc.k, fsc.initial).unwrap();
    for n in 0..fsc.k {
        for z in 0..m.num_observations() {
            let entries: Vec<String> = fsc.gamma[n][z]
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(a, &p)| format!("{}={}", m.actions[a], p))
                .collect();
            writeln!(out, "gamma {n} {} : {}", m.observations[z], entries.join(" ")).unwrap();
        }
    }
    for n in 0..fsc.k {
        for z in 0..m.num_observations() {
            for a in 0..m.num_actions() {
                let next = fsc.update.next(n, z, a);
                if next != n {
                    writeln!(out, "delta {n} {} {} -> {next}", m.observations[z], m.actions[a])
                        .unwrap();
                }
            }
        }
    }
    out
}

/// Parses a controller file; `delta` lines are sparse (unlisted combinations
/// keep the current node).
pub fn parse_fsc(text: &str, m: &Pomdp) -> Result<Fsc, FscError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) =
        lines.next().ok_or_else(|| FscError::Syntax { line: 1, msg: "empty fsc file".into() })?;
    let htoks: Vec<&str> = header.split_whitespace().collect();
    let (k, initial) = match htoks.as_slice() {
        ["fsc", kspec, ispec] => {
            let k = kspec
                .strip_prefix("k=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| FscError::Syntax { line: hline, msg: "bad k=<k>".into() })?;
            let init = ispec
                .strip_prefix("init=")
                .and_then(|v| v.parse::<usize>().ok())
                .ok_or_else(|| FscError::Syntax { line: hline, msg: "bad init=<n>".into() })?;
            (k, init)
        }
        _ => {
            return Err(FscError::Syntax {
                line: hline,
                msg: "expected `fsc k=<k> init=<n>`".into(),
            })
        }
    };
    if k == 0 || initial >= k {
        return Err(FscError::Invalid("bad node count or initial node".into()));
    }
    let find_obs = |name: &str, line: usize| -> Result<usize, FscError> {
        m.observations
            .iter()
            .position(|o| o == name)
            .ok_or_else(|| FscError::Syntax { line, msg: format!("unknown observation `{name}`") })
    };
    let find_action = |name: &str, line: usize| -> Result<usize, FscError> {
        m.actions
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| FscError::Syntax { line, msg: format!("unknown action `{name}`") })
    };
    let mut gamma =
        vec![vec![vec![0.0; m.num_actions()]; m.num_observations()]; k];
    let mut seen = vec![vec![false; m.num_observations()]; k];
    let mut table =
        vec![vec![(0..m.num_actions()).map(|_| 0).collect::<Vec<_>>(); m.num_observations()]; k];
    for (n, per_obs) in table.iter_mut().enumerate() {
        for per_act in per_obs.iter_mut() {
            per_act.fill(n);
        }
    }
    for (lno, line) in lines {
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.first().copied() {
            Some("gamma") => {
                if toks.len() < 5 || toks[3] != ":" {
                    return Err(FscError::Syntax {
                        line: lno,
                        msg: "expected `gamma <n> <obs> : a=p ...`".into(),
                    });
                }
                let n: usize = toks[1].parse().map_err(|_| FscError::Syntax {
                    line: lno,
                    msg: format!("bad node `{}`", toks[1]),
                })?;
                if n >= k {
                    return Err(FscError::Invalid(format!("node {n} out of range")));
                }
                let z = find_obs(toks[2], lno)?;
                for entry in &toks[4..] {
                    let (aname, p) = entry.split_once('=').ok_or_else(|| FscError::Syntax {
                        line: lno,
                        msg: format!("expected `action=prob`, found `{entry}`"),
                    })?;
                    let a = find_action(aname, lno)?;
                    let p: f64 = p.parse().map_err(|_| FscError::Syntax {
                        line: lno,
                        msg: format!("bad probability `{p}`"),
                    })?;
                    gamma[n][z][a] += p;
                }
                seen[n][z] = true;
            }
            Some("delta") => {
                if toks.len() != 6 || toks[4] != "->" {
                    return Err(FscError::Syntax {
                        line: lno,
                        msg: "expected `delta <n> <obs> <action> -> <n'>`".into(),
                    });
                }
                let n: usize = toks[1].parse().map_err(|_| FscError::Syntax {
                    line: lno,
                    msg: format!("bad node `{}`", toks[1]),
                })?;
                let z = find_obs(toks[2], lno)?;
                let a = find_action(toks[3], lno)?;
                let next: usize = toks[5].parse().map_err(|_| FscError::Syntax {
                    line: lno,
                    msg: format!("bad node `{}`", toks[5]),
                })?;
                if n >= k || next >= k {
                    return Err(FscError::Invalid(format!("node index out of range at line {lno}")));
                }
                table[n][z][a] = next;
            }
            _ => {
                return Err(FscError::Syntax {
                    line: lno,
                    msg: format!("expected `gamma` or `delta`, found `{}`", toks[0]),
                })
            }
        }
    }
    for n in 0..k {
        for z in 0..m.num_observations() {
            if !seen[n][z] {
                // Unlisted rows fall back to uniform over all actions.
                gamma[n][z].fill(1.0 / m.num_actions() as f64);
            } else {
                let sum: f64 = gamma[n][z].iter().sum();
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(FscError::Invalid(format!(
                        "gamma({n}, {}) sums to {sum}",
                        m.observations[z]
                    )));
                }
            }
        }
    }
    let update = memory_update(&MemoryUpdateKind::Explicit(table), k, m)?;
    Ok(Fsc { k, initial, gamma, update })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    const TINY: &str = include_str!("../fixtures/tiny_corridor.pomdp");

    #[test]
    fn single_node_update_is_constant() {
        let m = parse_model(TINY).unwrap();
        for kind in [
            MemoryUpdateKind::ObservationRepeat,
            MemoryUpdateKind::Explicit(vec![vec![vec![0; 2]; 2]]),
        ] {
            let upd = memory_update(&kind, 1, &m).unwrap();
            for z in 0..2 {
                for a in 0..2 {
                    assert_eq!(upd.next(0, z, a), 0);
                }
            }
        }
    }

    #[test]
    fn observation_repeat_advances_only_on_repeatable_classes() {
        // Three observations: z_loop can repeat (self transition), z_once and
        // z_sink cannot.
        let text = "pomdp r\nstates 3\nactions a\n\
                    observe 0 -> z_loop\nobserve 1 -> z_once\nobserve 2 -> z_sink\n\
                    trans 0 a : 0.5 -> 0, 0.5 -> 1\ntrans 1 a : 1 -> 2\ntrans 2 a : 1 -> 0\n\
                    init 0\n";
        let m = parse_model(text).unwrap();
        let upd = memory_update(&MemoryUpdateKind::ObservationRepeat, 2, &m).unwrap();
        for a in 0..1 {
            assert_eq!(upd.next(0, 0, a), 1, "repeatable class advances");
            assert_eq!(upd.next(1, 0, a), 1, "saturates at k-1");
            assert_eq!(upd.next(0, 1, a), 0, "non-repeatable class holds");
            assert_eq!(upd.next(0, 2, a), 0);
        }
    }

    #[test]
    fn spec_driven_flips_on_landmark_classes() {
        use crate::model::{generate_benchmark, Family, GridConfig};
        let m = generate_benchmark(&GridConfig::new(Family::Delivery, 3)).unwrap();
        let upd = memory_update(
            &MemoryUpdateKind::SpecDriven { first_ap: "A".into(), second_ap: "B".into() },
            2,
            &m,
        )
        .unwrap();
        let z_at_a = m.obs_of[*m.labels["A"].iter().next().unwrap()];
        let z_at_b = m.obs_of[*m.labels["B"].iter().next().unwrap()];
        for a in 0..m.num_actions() {
            assert_eq!(upd.next(0, z_at_a, a), 1);
            assert_eq!(upd.next(1, z_at_b, a), 0);
            assert_eq!(upd.next(0, z_at_b, a), 0, "wrong-phase landmark ignored");
        }
    }

    #[test]
    fn product_with_one_node_is_isomorphic() {
        let m = parse_model(TINY).unwrap();
        let upd = memory_update(&MemoryUpdateKind::ObservationRepeat, 1, &m).unwrap();
        let p = product(&m, &upd);
        assert_eq!(p.num_states, m.num_states);
        assert_eq!(p.trans, m.trans);
        assert_eq!(p.initial, m.initial);
    }

    #[test]
    fn product_counts_and_rows_match_hand_expansion() {
        let m = parse_model(TINY).unwrap();
        // Explicit update: advance 0 -> 1 when stepping with `right` (action
        // 1) under z_corridor (observation 0).
        let mut table = vec![vec![vec![0usize; 2]; 2]; 2];
        table[0][0][1] = 1;
        table[1][0][0] = 1;
        table[1][0][1] = 1;
        table[1][1][0] = 1;
        table[1][1][1] = 1;
        let upd = memory_update(&MemoryUpdateKind::Explicit(table), 2, &m).unwrap();
        let p = product(&m, &upd);
        assert_eq!(p.num_states, 6);
        // (s0, n0) --right--> (s1, n1): state 0*2+0=0 to 1*2+1=3.
        assert_eq!(p.row(0, 1).unwrap(), &[(3, 1.0)]);
        // (s0, n0) --left--> (s0, n0).
        assert_eq!(p.row(0, 0).unwrap(), &[(0, 1.0)]);
        // (s1, n1) --right--> (goal, n1): state 3 to 2*2+1=5.
        assert_eq!(p.row(3, 1).unwrap(), &[(5, 1.0)]);
        assert!(p.validate().is_empty());
        assert_eq!(p.labels["goal"], std::collections::BTreeSet::from([4, 5]));
    }

    #[test]
    fn projection_with_one_node_is_verbatim() {
        let m = parse_model(TINY).unwrap();
        let upd = memory_update(&MemoryUpdateKind::ObservationRepeat, 1, &m).unwrap();
        let mut sigma = ObservationStrategy::new(StrategyMode::Product { k: 1 }, 2, 2);
        sigma.set_row(0, vec![0.3, 0.7]);
        sigma.set_row(1, vec![1.0, 0.0]);
        let fsc = project_fsc(&sigma, &upd, &m).unwrap();
        assert_eq!(fsc.k, 1);
        assert_eq!(fsc.gamma[0][0], vec![0.3, 0.7]);
        assert_eq!(fsc.gamma[0][1], vec![1.0, 0.0]);
    }

    #[test]
    fn projection_requires_realized_rows() {
        let m = parse_model(TINY).unwrap();
        let upd = memory_update(&MemoryUpdateKind::ObservationRepeat, 2, &m).unwrap();
        let sigma = ObservationStrategy::new(StrategyMode::Product { k: 2 }, 4, 2);
        let err = project_fsc(&sigma, &upd, &m).unwrap_err();
        assert!(matches!(err, FscError::MissingEntry(_)), "{err}");
    }

    #[test]
    fn fsc_text_round_trip() {
        let m = parse_model(TINY).unwrap();
        let upd = memory_update(&MemoryUpdateKind::ObservationRepeat, 2, &m).unwrap();
        let mut sigma = ObservationStrategy::new(StrategyMode::Product { k: 2 }, 4, 2);
        for zp in 0..4 {
            sigma.set_row(zp, vec![0.25 * (zp + 1) as f64, 1.0 - 0.25 * (zp + 1) as f64]);
        }
        let fsc = project_fsc(&sigma, &upd, &m).unwrap();
        let text = fsc_to_text(&fsc, &m);
        let again = parse_fsc(&text, &m).unwrap();
        assert_eq!(fsc.k, again.k);
        assert_eq!(fsc.gamma, again.gamma);
        assert_eq!(fsc.update.table(), again.update.table());
    }
}
