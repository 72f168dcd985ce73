//! Line-oriented text format for explicit POMDPs.
//!
//! ```text
//! pomdp <name>
//! states <N>
//! actions <name>+
//! observations <name>+          # optional; fixes the alphabet order
//! observe <state> -> <obs>
//! trans <state> <action> : <p> -> <state> [, <p> -> <state>]*
//! reward <state> <action> = <r>
//! label <ap> : <state>+
//! init <state>
//! ```
//!
//! `#` starts a comment. States are 0-based integers. Every state needs an
//! `observe` line; an action is enabled in a state iff it has a `trans` row.
//! If an `observations` section is present, every declared observation must be
//! referenced by some `observe` line.

use std::collections::BTreeMap;

use super::{ModelError, Pomdp, STOCHASTIC_TOL};

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> ModelError {
    ModelError::Syntax { line, col, msg: msg.into() }
}

struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    fn tokens(&self) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        let mut col = 0;
        for part in self.text.split_whitespace() {
            let at = self.text[col..].find(part).unwrap() + col;
            out.push((at + 1, part));
            col = at + part.len();
        }
        out
    }
}

/// Parses and validates a model document. The returned POMDP satisfies every
/// structural invariant ([`Pomdp::validate`] is empty on it).
pub fn parse_model(text: &str) -> Result<Pomdp, ModelError> {
    let lines: Vec<Line> = text
        .lines()
        .enumerate()
        .map(|(i, raw)| {
            let body = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            Line { no: i + 1, text: body }
        })
        .filter(|l| !l.text.trim().is_empty())
        .collect();

    let mut it = lines.iter();
    let header = it.next().ok_or_else(|| syntax(1, 1, "empty document, expected `pomdp <name>`"))?;
    let toks = header.tokens();
    if toks.len() != 2 || toks[0].1 != "pomdp" {
        return Err(syntax(header.no, toks.first().map_or(1, |t| t.0), "expected `pomdp <name>`"));
    }
    let name = toks[1].1.to_string();

    let mut num_states: Option<usize> = None;
    let mut actions: Vec<String> = Vec::new();
    let mut action_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut declared_obs: Option<Vec<String>> = None;
    let mut observations: Vec<String> = Vec::new();
    let mut obs_ids: BTreeMap<String, usize> = BTreeMap::new();
    let mut obs_of: Vec<Option<usize>> = Vec::new();
    let mut trans: Vec<Vec<Option<Vec<(usize, f64)>>>> = Vec::new();
    let mut rewards: Vec<Vec<Option<f64>>> = Vec::new();
    let mut labels: BTreeMap<String, std::collections::BTreeSet<usize>> = BTreeMap::new();
    let mut initial: Option<usize> = None;

    let parse_state = |tok: (usize, &str), line: usize, n: usize| -> Result<usize, ModelError> {
        let s: usize = tok
            .1
            .parse()
            .map_err(|_| syntax(line, tok.0, format!("expected state index, found `{}`", tok.1)))?;
        if s >= n {
            return Err(ModelError::Dangling {
                line,
                msg: format!("state {s} out of range (model has {n} states)"),
            });
        }
        Ok(s)
    };

    for line in it {
        let toks = line.tokens();
        let (kcol, keyword) = toks[0];
        let need_dims = |num_states: &Option<usize>| -> Result<usize, ModelError> {
            num_states.ok_or_else(|| {
                syntax(line.no, kcol, "`states` must be declared before this section")
            })
        };
        match keyword {
            "states" => {
                if toks.len() != 2 {
                    return Err(syntax(line.no, kcol, "expected `states <N>`"));
                }
                let n: usize = toks[1]
                    .1
                    .parse()
                    .map_err(|_| syntax(line.no, toks[1].0, "expected a state count"))?;
                num_states = Some(n);
                obs_of = vec![None; n];
            }
            "actions" => {
                if toks.len() < 2 {
                    return Err(syntax(line.no, kcol, "expected `actions <name>+`"));
                }
                for &(col, a) in &toks[1..] {
                    if action_ids.insert(a.to_string(), actions.len()).is_some() {
                        return Err(syntax(line.no, col, format!("duplicate action `{a}`")));
                    }
                    actions.push(a.to_string());
                }
                let n = need_dims(&num_states)?;
                for s in 0..n {
                    let _ = s;
                }
                trans = vec![vec![None; actions.len()]; n];
                rewards = vec![vec![None; actions.len()]; n];
            }
            "observations" => {
                if toks.len() < 2 {
                    return Err(syntax(line.no, kcol, "expected `observations <name>+`"));
                }
                let mut decl = Vec::new();
                for &(col, z) in &toks[1..] {
                    if obs_ids.insert(z.to_string(), decl.len()).is_some() {
                        return Err(syntax(line.no, col, format!("duplicate observation `{z}`")));
                    }
                    decl.push(z.to_string());
                }
                observations = decl.clone();
                declared_obs = Some(decl);
            }
            "observe" => {
                let n = need_dims(&num_states)?;
                if toks.len() != 4 || toks[2].1 != "->" {
                    return Err(syntax(line.no, kcol, "expected `observe <state> -> <obs>`"));
                }
                let s = parse_state(toks[1], line.no, n)?;
                let zname = toks[3].1;
                let z = match obs_ids.get(zname) {
                    Some(&z) => z,
                    None => {
                        if declared_obs.is_some() {
                            return Err(ModelError::Dangling {
                                line: line.no,
                                msg: format!("observation `{zname}` was not declared"),
                            });
                        }
                        let z = observations.len();
                        observations.push(zname.to_string());
                        obs_ids.insert(zname.to_string(), z);
                        z
                    }
                };
                if obs_of[s].is_some() {
                    return Err(syntax(line.no, toks[1].0, format!("state {s} observed twice")));
                }
                obs_of[s] = Some(z);
            }
            "trans" => {
                let n = need_dims(&num_states)?;
                if toks.len() < 4 || toks[3].1 != ":" {
                    return Err(syntax(
                        line.no,
                        kcol,
                        "expected `trans <state> <action> : <p> -> <state>, ...`",
                    ));
                }
                let s = parse_state(toks[1], line.no, n)?;
                let a = *action_ids.get(toks[2].1).ok_or_else(|| ModelError::Dangling {
                    line: line.no,
                    msg: format!("unknown action `{}`", toks[2].1),
                })?;
                // Re-split the remainder on commas to keep the row grammar simple.
                let after = line.text.splitn(2, ':').nth(1).unwrap_or("");
                let mut row: Vec<(usize, f64)> = Vec::new();
                let mut sum = 0.0;
                for entry in after.split(',') {
                    let parts: Vec<&str> = entry.split("->").map(str::trim).collect();
                    if parts.len() != 2 || parts[0].is_empty() || parts[1].is_empty() {
                        return Err(syntax(line.no, kcol, format!("malformed entry `{}`", entry.trim())));
                    }
                    let p: f64 = parts[0].parse().map_err(|_| {
                        syntax(line.no, kcol, format!("expected a probability, found `{}`", parts[0]))
                    })?;
                    let t: usize = parts[1].parse().map_err(|_| {
                        syntax(line.no, kcol, format!("expected a state index, found `{}`", parts[1]))
                    })?;
                    if t >= n {
                        return Err(ModelError::Dangling {
                            line: line.no,
                            msg: format!("state {t} out of range (model has {n} states)"),
                        });
                    }
                    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
                        return Err(syntax(line.no, kcol, format!("probability {p} outside [0,1]")));
                    }
                    sum += p;
                    match row.iter_mut().find(|(u, _)| *u == t) {
                        Some((_, q)) => *q += p,
                        None => row.push((t, p)),
                    }
                }
                if (sum - 1.0).abs() > STOCHASTIC_TOL {
                    return Err(ModelError::Stochasticity {
                        state: s,
                        action: actions[a].clone(),
                        sum,
                    });
                }
                if trans[s][a].is_some() {
                    return Err(syntax(line.no, kcol, format!("row ({s}, {}) declared twice", actions[a])));
                }
                row.sort_by_key(|&(t, _)| t);
                trans[s][a] = Some(row);
            }
            "reward" => {
                let n = need_dims(&num_states)?;
                if toks.len() != 5 || toks[3].1 != "=" {
                    return Err(syntax(line.no, kcol, "expected `reward <state> <action> = <r>`"));
                }
                let s = parse_state(toks[1], line.no, n)?;
                let a = *action_ids.get(toks[2].1).ok_or_else(|| ModelError::Dangling {
                    line: line.no,
                    msg: format!("unknown action `{}`", toks[2].1),
                })?;
                let r: f64 = toks[4]
                    .1
                    .parse()
                    .map_err(|_| syntax(line.no, toks[4].0, "expected a reward value"))?;
                if !r.is_finite() {
                    return Err(syntax(line.no, toks[4].0, "reward must be finite"));
                }
                rewards[s][a] = Some(r);
            }
            "label" => {
                let n = need_dims(&num_states)?;
                if toks.len() < 4 || toks[2].1 != ":" {
                    return Err(syntax(line.no, kcol, "expected `label <ap> : <state>+`"));
                }
                let ap = toks[1].1.to_string();
                let set = labels.entry(ap).or_default();
                for &tok in &toks[3..] {
                    set.insert(parse_state(tok, line.no, n)?);
                }
            }
            "init" => {
                let n = need_dims(&num_states)?;
                if toks.len() != 2 {
                    return Err(syntax(line.no, kcol, "expected `init <state>`"));
                }
                initial = Some(parse_state(toks[1], line.no, n)?);
            }
            other => {
                return Err(syntax(line.no, kcol, format!("unknown section `{other}`")));
            }
        }
    }

    let num_states = num_states.ok_or_else(|| syntax(1, 1, "missing `states` section"))?;
    if actions.is_empty() {
        return Err(syntax(1, 1, "missing `actions` section"));
    }
    let initial = initial.ok_or_else(|| syntax(1, 1, "missing `init` section"))?;
    let mut resolved_obs = Vec::with_capacity(num_states);
    for (s, z) in obs_of.iter().enumerate() {
        match z {
            Some(z) => resolved_obs.push(*z),
            None => {
                return Err(ModelError::Invalid(format!("state {s} has no `observe` line")));
            }
        }
    }
    if let Some(decl) = &declared_obs {
        for (z, zname) in decl.iter().enumerate() {
            if !resolved_obs.contains(&z) {
                return Err(ModelError::Invalid(format!(
                    "declared observation `{zname}` is never referenced"
                )));
            }
        }
    }

    let m = Pomdp {
        name,
        num_states,
        actions,
        observations,
        obs_of: resolved_obs,
        trans,
        rewards,
        labels,
        initial,
    };
    let diags = m.validate();
    if let Some(d) = diags.first() {
        return Err(ModelError::Invalid(d.message.clone()));
    }
    Ok(m)
}

/// Canonical serialization; parsing it back yields an index-identical model.
pub fn model_to_text(m: &Pomdp) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    writeln!(out, "# pomdp-model v1").unwrap();
    writeln!(out, "pomdp {}", m.name).unwrap();
    writeln!(out, "states {}", m.num_states).unwrap();
    writeln!(out, "actions {}", m.actions.join(" ")).unwrap();
    writeln!(out, "observations {}", m.observations.join(" ")).unwrap();
    for (s, &z) in m.obs_of.iter().enumerate() {
        writeln!(out, "observe {s} -> {}", m.observations[z]).unwrap();
    }
    for s in 0..m.num_states {
        for (a, row) in m.trans[s].iter().enumerate() {
            let Some(row) = row else { continue };
            let entries: Vec<String> =
                row.iter().map(|&(t, p)| format!("{p} -> {t}")).collect();
            writeln!(out, "trans {s} {} : {}", m.actions[a], entries.join(", ")).unwrap();
        }
    }
    for s in 0..m.num_states {
        for (a, r) in m.rewards[s].iter().enumerate() {
            if let Some(r) = r {
                writeln!(out, "reward {s} {} = {r}", m.actions[a]).unwrap();
            }
        }
    }
    for (ap, set) in &m.labels {
        let states: Vec<String> = set.iter().map(usize::to_string).collect();
        writeln!(out, "label {ap} : {}", states.join(" ")).unwrap();
    }
    writeln!(out, "init {}", m.initial).unwrap();
    out
}
