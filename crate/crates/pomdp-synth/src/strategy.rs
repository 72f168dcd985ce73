//! Observation-based strategies: a distribution over actions per observation
//! (memoryless) or per (observation, memory node) pair (product mode, where
//! the pair is flattened into the product model's observation alphabet).
//!
//! File format, one row per line after a version header:
//!
//! ```text
//! strategy v1 memoryless          # or: strategy v1 product k=<k>
//! z_corridor : left=0.5 right=0.5
//! o17 1 : north=0.25 south=0.75   # product rows carry the node index
//! ```

use crate::model::{Pomdp, STOCHASTIC_TOL};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("strategy syntax error at line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("strategy row for `{obs}` sums to {sum}")]
    NotDistribution { obs: String, sum: f64 },
    #[error("strategy assigns {prob} to `{action}` which is disabled in the class of `{obs}`")]
    DisabledAction { obs: String, action: String, prob: f64 },
    #[error("strategy has no row for observation `{obs}`")]
    MissingRow { obs: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrategyMode {
    Memoryless,
    /// Rows are indexed by the product observation alphabet of a k-node
    /// memory product; see [`crate::fsc::product_obs_id`].
    Product { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationStrategy {
    pub mode: StrategyMode,
    num_actions: usize,
    /// Dense action distribution per observation id; `None` for observation
    /// classes without states.
    rows: Vec<Option<Vec<f64>>>,
}

impl ObservationStrategy {
    pub fn new(mode: StrategyMode, num_obs: usize, num_actions: usize) -> Self {
        ObservationStrategy { mode, num_actions, rows: vec![None; num_obs] }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn num_observations(&self) -> usize {
        self.rows.len()
    }

    pub fn set_row(&mut self, z: usize, dist: Vec<f64>) {
        assert_eq!(dist.len(), self.num_actions);
        self.rows[z] = Some(dist);
    }

    pub fn row(&self, z: usize) -> Option<&[f64]> {
        self.rows.get(z).and_then(|r| r.as_deref())
    }

    pub fn rows_present(&self) -> impl Iterator<Item = (usize, &[f64])> + '_ {
        self.rows.iter().enumerate().filter_map(|(z, r)| r.as_deref().map(|r| (z, r)))
    }

    /// Uniform distribution over each observation class's enabled actions.
    pub fn uniform(m: &Pomdp) -> Self {
        let mut s = ObservationStrategy::new(
            StrategyMode::Memoryless,
            m.num_observations(),
            m.num_actions(),
        );
        for z in 0..m.num_observations() {
            let enabled = m.class_enabled_actions(z);
            if enabled.is_empty() {
                continue;
            }
            let p = 1.0 / enabled.len() as f64;
            let mut dist = vec![0.0; m.num_actions()];
            for a in enabled {
                dist[a] = p;
            }
            s.set_row(z, dist);
        }
        s
    }

    /// Checks the strategy against a model: every populated row must be a
    /// distribution supported on actions enabled somewhere in its class, and
    /// every observation that occurs in the model must have a row.
    pub fn validate_for(&self, m: &Pomdp) -> Result<(), StrategyError> {
        for (z, row) in self.rows_present() {
            let mut sum = 0.0;
            let enabled = m.class_enabled_actions(z);
            for (a, &p) in row.iter().enumerate() {
                sum += p;
                if p > 0.0 && !enabled.contains(&a) {
                    return Err(StrategyError::DisabledAction {
                        obs: m.observations[z].clone(),
                        action: m.actions[a].clone(),
                        prob: p,
                    });
                }
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(StrategyError::NotDistribution {
                    obs: m.observations[z].clone(),
                    sum,
                });
            }
        }
        for &z in &m.obs_of {
            if self.row(z).is_none() {
                return Err(StrategyError::MissingRow { obs: m.observations[z].clone() });
            }
        }
        Ok(())
    }

    /// Serializes with the model's observation/action names. Product-mode
    /// rows print the decoded (observation, node) pair.
    pub fn to_text(&self, m: &Pomdp) -> String {
        use std::fmt::Write;
        let mut out = String::new();
        match self.mode {
            StrategyMode::Memoryless => writeln!(out, "strategy v1 memoryless").unwrap(),
            StrategyMode::Product { k } => writeln!(out, "strategy v1 product k={k}").unwrap(),
        }
        for (z, row) in self.rows_present() {
            let entries: Vec<String> = row
                .iter()
                .enumerate()
                .filter(|&(_, &p)| p > 0.0)
                .map(|(a, &p)| format!("{}={}", m.actions[a], p))
                .collect();
            match self.mode {
                StrategyMode::Memoryless => {
                    writeln!(out, "{} : {}", m.observations[z], entries.join(" ")).unwrap();
                }
                StrategyMode::Product { k } => {
                    // Product observation names already encode the pair, but
                    // the file format keeps (base observation, node) explicit.
                    let (base, node) = (z / k, z % k);
                    let name = m
                        .observations
                        .get(z)
                        .cloned()
                        .unwrap_or_else(|| format!("{base}"));
                    let base_name = name.rsplit_once('@').map(|(b, _)| b.to_string()).unwrap_or(name);
                    writeln!(out, "{base_name} {node} : {}", entries.join(" ")).unwrap();
                }
            }
        }
        out
    }

    /// Parses a strategy file against the model it is meant for.
    pub fn from_text(text: &str, m: &Pomdp) -> Result<Self, StrategyError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hline, header) = lines
            .next()
            .ok_or_else(|| StrategyError::Syntax { line: 1, msg: "empty strategy file".into() })?;
        let htoks: Vec<&str> = header.split_whitespace().collect();
        let mode = match htoks.as_slice() {
            ["strategy", "v1", "memoryless"] => StrategyMode::Memoryless,
            ["strategy", "v1", "product", kspec] => {
                let k = kspec
                    .strip_prefix("k=")
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| StrategyError::Syntax {
                        line: hline,
                        msg: format!("bad product header `{kspec}`"),
                    })?;
                StrategyMode::Product { k }
            }
            _ => {
                return Err(StrategyError::Syntax {
                    line: hline,
                    msg: "expected `strategy v1 memoryless` or `strategy v1 product k=<k>`".into(),
                })
            }
        };
        let mut s = ObservationStrategy::new(mode, m.num_observations(), m.num_actions());
        let find_action = |name: &str, line: usize| -> Result<usize, StrategyError> {
            m.actions
                .iter()
                .position(|a| a == name)
                .ok_or_else(|| StrategyError::Syntax { line, msg: format!("unknown action `{name}`") })
        };
        for (lno, line) in lines {
            let (lhs, rhs) = line.split_once(':').ok_or_else(|| StrategyError::Syntax {
                line: lno,
                msg: "expected `<obs> [node] : a=p ...`".into(),
            })?;
            let lhs_toks: Vec<&str> = lhs.split_whitespace().collect();
            let z = match (mode, lhs_toks.as_slice()) {
                (StrategyMode::Memoryless, [obs]) => m
                    .observations
                    .iter()
                    .position(|o| o == obs)
                    .ok_or_else(|| StrategyError::Syntax {
                        line: lno,
                        msg: format!("unknown observation `{obs}`"),
                    })?,
                (StrategyMode::Product { k }, [obs, node]) => {
                    let n: usize = node.parse().map_err(|_| StrategyError::Syntax {
                        line: lno,
                        msg: format!("bad node index `{node}`"),
                    })?;
                    let name = format!("{obs}@{n}");
                    let base = m
                        .observations
                        .iter()
                        .position(|o| *o == name)
                        .ok_or_else(|| StrategyError::Syntax {
                            line: lno,
                            msg: format!("unknown product observation `{name}`"),
                        })?;
                    let _ = k;
                    base
                }
                _ => {
                    return Err(StrategyError::Syntax {
                        line: lno,
                        msg: "row head does not match the strategy mode".into(),
                    })
                }
            };
            let mut dist = vec![0.0; m.num_actions()];
            for entry in rhs.split_whitespace() {
                let (aname, p) = entry.split_once('=').ok_or_else(|| StrategyError::Syntax {
                    line: lno,
                    msg: format!("expected `action=prob`, found `{entry}`"),
                })?;
                let a = find_action(aname, lno)?;
                let p: f64 = p.parse().map_err(|_| StrategyError::Syntax {
                    line: lno,
                    msg: format!("bad probability `{p}`"),
                })?;
                dist[a] += p;
            }
            s.set_row(z, dist);
        }
        s.validate_for(m)?;
        Ok(s)
    }
}
