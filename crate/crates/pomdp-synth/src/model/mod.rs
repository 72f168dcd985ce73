//! Explicit-state model types: POMDPs, their underlying MDPs, induced Markov
//! chains, plus the text model format and the benchmark generators.

mod bench;
mod parse;

pub use bench::{generate_benchmark, Family, GridConfig};
pub use parse::{model_to_text, parse_model};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use sha2::{Digest, Sha256};
use thiserror::Error;

/// Tolerance for "this row is a probability distribution".
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("row ({state}, {action}) sums to {sum}")]
    Stochasticity { state: usize, action: String, sum: f64 },
    #[error("dangling reference at line {line}: {msg}")]
    Dangling { line: usize, msg: String },
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("invalid benchmark config: {0}")]
    Config(String),
}

/// A sparse probability row: successor state and probability, probabilities
/// positive and summing to one.
pub type Row = Vec<(usize, f64)>;

/// Explicit-state POMDP. States and observations are dense indices; actions
/// come from a global alphabet with a per-state enabled subset (a state/action
/// pair is enabled iff it has a transition row).
#[derive(Debug, Clone, PartialEq)]
pub struct Pomdp {
    pub name: String,
    pub num_states: usize,
    /// Global action alphabet.
    pub actions: Vec<String>,
    /// Observation alphabet; `obs_of` indexes into it.
    pub observations: Vec<String>,
    /// Total observation map, one entry per state.
    pub obs_of: Vec<usize>,
    /// `trans[s][a]` is `Some(row)` iff action `a` is enabled in state `s`.
    pub trans: Vec<Vec<Option<Row>>>,
    /// Partial reward map; `None` means no declared reward (treated as 0).
    pub rewards: Vec<Vec<Option<f64>>>,
    /// Atomic proposition name -> set of states where it holds.
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    pub initial: usize,
}

/// The POMDP with its observation map dropped (full observability).
#[derive(Debug, Clone, PartialEq)]
pub struct Mdp {
    pub name: String,
    pub num_states: usize,
    pub actions: Vec<String>,
    pub trans: Vec<Vec<Option<Row>>>,
    pub rewards: Vec<Vec<Option<f64>>>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    pub initial: usize,
}

/// Per-state provenance of an induced chain: where the state came from and
/// which action mixture produced its row.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    /// State index in the source (possibly product) POMDP.
    pub model_state: usize,
    /// Node of the specification automaton composed into the chain.
    pub aut_node: usize,
    /// Action mixture applied at the source state: (action, probability).
    pub mixture: Vec<(usize, f64)>,
}

/// Discrete-time Markov chain induced by a model and a strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Dtmc {
    pub rows: Vec<Row>,
    pub provenance: Vec<Provenance>,
    pub labels: BTreeMap<String, BTreeSet<usize>>,
    /// Expected immediate reward per state under the mixing strategy.
    pub rewards: Vec<f64>,
    pub initial: usize,
}

/// One invariant violation found by [`Pomdp::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub message: String,
    pub state: Option<usize>,
    pub action: Option<usize>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl Pomdp {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_observations(&self) -> usize {
        self.observations.len()
    }

    pub fn row(&self, s: usize, a: usize) -> Option<&[(usize, f64)]> {
        self.trans[s][a].as_deref()
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a].unwrap_or(0.0)
    }

    pub fn enabled_actions(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.trans[s].iter().enumerate().filter_map(|(a, r)| r.as_ref().map(|_| a))
    }

    /// States sharing each observation: `classes()[z]` is sorted ascending.
    pub fn observation_classes(&self) -> Vec<Vec<usize>> {
        let mut classes = vec![Vec::new(); self.observations.len()];
        for (s, &z) in self.obs_of.iter().enumerate() {
            classes[z].push(s);
        }
        classes
    }

    /// Actions enabled somewhere in the observation class of `z`.
    pub fn class_enabled_actions(&self, z: usize) -> BTreeSet<usize> {
        let mut set = BTreeSet::new();
        for (s, &zs) in self.obs_of.iter().enumerate() {
            if zs == z {
                set.extend(self.enabled_actions(s));
            }
        }
        set
    }

    pub fn label_states(&self, ap: &str) -> Result<&BTreeSet<usize>, ModelError> {
        self.labels
            .get(ap)
            .ok_or_else(|| ModelError::Invalid(format!("unknown atomic proposition `{ap}`")))
    }

    pub fn has_label(&self, s: usize, ap: &str) -> bool {
        self.labels.get(ap).map_or(false, |set| set.contains(&s))
    }

    /// A state is absorbing if every enabled action self-loops with
    /// probability one.
    pub fn is_absorbing(&self, s: usize) -> bool {
        let mut any = false;
        for a in self.enabled_actions(s) {
            any = true;
            let row = self.row(s, a).unwrap();
            if !(row.len() == 1 && row[0].0 == s) {
                return false;
            }
        }
        any
    }

    /// Hash of the canonical text serialization, used in manifests and
    /// dataset metadata.
    pub fn hash_hex(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model_to_text(self).as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Checks every structural invariant, returning one diagnostic per
    /// violation. An empty list means the model is well-formed.
    pub fn validate(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.num_states == 0 {
            out.push(Diagnostic { message: "model has no states".into(), state: None, action: None });
            return out;
        }
        if self.obs_of.len() != self.num_states {
            out.push(Diagnostic {
                message: format!(
                    "observation map covers {} of {} states",
                    self.obs_of.len(),
                    self.num_states
                ),
                state: None,
                action: None,
            });
        }
        for (s, &z) in self.obs_of.iter().enumerate() {
            if z >= self.observations.len() {
                out.push(Diagnostic {
                    message: format!("state {s} has out-of-range observation {z}"),
                    state: Some(s),
                    action: None,
                });
            }
        }
        if self.initial >= self.num_states {
            out.push(Diagnostic {
                message: format!("initial state {} out of range", self.initial),
                state: None,
                action: None,
            });
        }
        for s in 0..self.num_states.min(self.trans.len()) {
            let mut enabled = 0;
            for (a, row) in self.trans[s].iter().enumerate() {
                let Some(row) = row else { continue };
                enabled += 1;
                let mut sum = 0.0;
                for &(t, p) in row {
                    if t >= self.num_states {
                        out.push(Diagnostic {
                            message: format!("row ({s}, {}) references state {t}", self.actions[a]),
                            state: Some(s),
                            action: Some(a),
                        });
                    }
                    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                        out.push(Diagnostic {
                            message: format!(
                                "row ({s}, {}) has probability {p} outside [0,1]",
                                self.actions[a]
                            ),
                            state: Some(s),
                            action: Some(a),
                        });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    out.push(Diagnostic {
                        message: format!("row ({s}, {}) sums to {sum}", self.actions[a]),
                        state: Some(s),
                        action: Some(a),
                    });
                }
                if let Some(r) = self.rewards[s][a] {
                    if !r.is_finite() {
                        out.push(Diagnostic {
                            message: format!("reward ({s}, {}) is not finite", self.actions[a]),
                            state: Some(s),
                            action: Some(a),
                        });
                    }
                }
            }
            if enabled == 0 {
                out.push(Diagnostic {
                    message: format!("deadlock: state {s} has no enabled action"),
                    state: Some(s),
                    action: None,
                });
            }
        }
        for (ap, set) in &self.labels {
            for &s in set {
                if s >= self.num_states {
                    out.push(Diagnostic {
                        message: format!("label `{ap}` references state {s}"),
                        state: Some(s),
                        action: None,
                    });
                }
            }
        }
        out
    }
}

impl Mdp {
    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn row(&self, s: usize, a: usize) -> Option<&[(usize, f64)]> {
        self.trans[s][a].as_deref()
    }

    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s][a].unwrap_or(0.0)
    }

    pub fn enabled_actions(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        self.trans[s].iter().enumerate().filter_map(|(a, r)| r.as_ref().map(|_| a))
    }

    pub fn label_states(&self, ap: &str) -> Result<&BTreeSet<usize>, ModelError> {
        self.labels
            .get(ap)
            .ok_or_else(|| ModelError::Invalid(format!("unknown atomic proposition `{ap}`")))
    }
}

/// Drops the observation map; dynamics, indices and labels are preserved.
pub fn underlying_mdp(m: &Pomdp) -> Mdp {
    Mdp {
        name: m.name.clone(),
        num_states: m.num_states,
        actions: m.actions.clone(),
        trans: m.trans.clone(),
        rewards: m.rewards.clone(),
        labels: m.labels.clone(),
        initial: m.initial,
    }
}

impl Dtmc {
    pub fn num_states(&self) -> usize {
        self.rows.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn label_set(&self, ap: &str) -> BTreeSet<usize> {
        self.labels.get(ap).cloned().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::parse_model;

    pub(crate) const TINY_CORRIDOR: &str = include_str!("../../fixtures/tiny_corridor.pomdp");
    pub(crate) const TINY_CORRIDOR_BAD: &str =
        include_str!("../../fixtures/tiny_corridor_bad.pomdp");

    #[test]
    fn tiny_corridor_is_valid() {
        let m = parse_model(TINY_CORRIDOR).unwrap();
        assert_eq!(m.num_states, 3);
        assert_eq!(m.num_observations(), 2);
        assert!(m.validate().is_empty());
    }

    #[test]
    fn underlying_mdp_preserves_dynamics() {
        let m = parse_model(TINY_CORRIDOR).unwrap();
        let mdp = underlying_mdp(&m);
        assert_eq!(mdp.num_states, m.num_states);
        assert_eq!(mdp.trans, m.trans);
        assert_eq!(mdp.initial, m.initial);
    }

    #[test]
    fn validate_flags_row_sum_off_by_tolerance() {
        let mut m = parse_model(TINY_CORRIDOR).unwrap();
        m.trans[0][0] = Some(vec![(0, 0.5000005), (1, 0.5000005)]);
        let diags = m.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("sums to"));
    }

    #[test]
    fn validate_flags_deadlock() {
        let mut m = parse_model(TINY_CORRIDOR).unwrap();
        m.trans[1] = vec![None, None];
        let diags = m.validate();
        assert_eq!(diags.len(), 1);
        assert!(diags[0].message.contains("deadlock"));
        assert_eq!(diags[0].state, Some(1));
    }

    #[test]
    fn absorbing_detection() {
        let m = parse_model(TINY_CORRIDOR_BAD).unwrap();
        let bad = m.label_states("bad").unwrap().iter().next().copied().unwrap();
        let goal = m.label_states("goal").unwrap().iter().next().copied().unwrap();
        assert!(m.is_absorbing(bad));
        assert!(m.is_absorbing(goal));
        assert!(!m.is_absorbing(0));
    }
}
