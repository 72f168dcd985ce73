//! Graph precomputation on chains and MDPs: strongly connected components,
//! qualitative reachability (exact 0/1 value sets), and maximal end
//! components.

use std::collections::BTreeSet;

use crate::model::Mdp;

/// Tarjan's algorithm, iterative to keep large chains off the call stack.
/// Components are returned in reverse topological order (successors first).
pub fn tarjan_sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0usize;

    // Explicit DFS frames: (node, next child position).
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < adj[v].len() {
                let w = adj[v][*child];
                *child += 1;
                if index[w] == usize::MAX {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Bottom SCCs: components with no edge leaving the component.
pub fn bottom_sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let comps = tarjan_sccs(adj);
    let mut comp_of = vec![usize::MAX; adj.len()];
    for (cid, comp) in comps.iter().enumerate() {
        for &v in comp {
            comp_of[v] = cid;
        }
    }
    comps
        .iter()
        .enumerate()
        .filter(|(cid, comp)| {
            comp.iter().all(|&v| adj[v].iter().all(|&w| comp_of[w] == *cid))
        })
        .map(|(_, comp)| comp.clone())
        .collect()
}

/// States that can reach `targets` without passing through `blocked`.
/// Targets count as reached even when also blocked.
pub fn backward_reach(
    rev: &[Vec<usize>],
    targets: &BTreeSet<usize>,
    blocked: &BTreeSet<usize>,
) -> Vec<bool> {
    let mut seen = vec![false; rev.len()];
    let mut queue: Vec<usize> = targets.iter().copied().collect();
    for &t in targets {
        seen[t] = true;
    }
    while let Some(v) = queue.pop() {
        for &u in &rev[v] {
            if !seen[u] && !blocked.contains(&u) && !targets.contains(&u) {
                seen[u] = true;
                queue.push(u);
            }
        }
    }
    for &t in targets {
        seen[t] = true;
    }
    seen
}

pub fn reverse(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut rev = vec![Vec::new(); adj.len()];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            rev[w].push(v);
        }
    }
    rev
}

/// Forward adjacency of an MDP under all enabled actions.
pub fn mdp_adjacency(m: &Mdp) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); m.num_states];
    for s in 0..m.num_states {
        let mut outs = BTreeSet::new();
        for a in m.enabled_actions(s) {
            for &(t, _) in m.row(s, a).unwrap() {
                outs.insert(t);
            }
        }
        adj[s] = outs.into_iter().collect();
    }
    adj
}

/// States where the maximal probability of `!avoid U goal` is zero: no path
/// reaches `goal` while skirting `avoid` under any resolution.
pub fn prob0_max(m: &Mdp, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>) -> Vec<bool> {
    let adj = mdp_adjacency(m);
    let rev = reverse(&adj);
    let reach = backward_reach(&rev, goal, avoid);
    let mut zero = vec![false; m.num_states];
    for s in 0..m.num_states {
        zero[s] = !reach[s] || (avoid.contains(&s) && !goal.contains(&s));
    }
    zero
}

/// States where the minimal probability of `!avoid U goal` is zero: some
/// strategy either hits `avoid` first or dodges `goal` forever.
pub fn prob0_min(m: &Mdp, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>) -> Vec<bool> {
    let mut in_w: Vec<bool> = (0..m.num_states).map(|s| !goal.contains(&s)).collect();
    loop {
        let mut changed = false;
        for s in 0..m.num_states {
            if !in_w[s] || (avoid.contains(&s) && !goal.contains(&s)) {
                continue;
            }
            let keep = m.enabled_actions(s).any(|a| {
                m.row(s, a).unwrap().iter().all(|&(t, _)| in_w[t])
            });
            if !keep {
                in_w[s] = false;
                changed = true;
            }
        }
        if !changed {
            return in_w;
        }
    }
}

/// States with a strategy reaching `goal` with probability one, while never
/// entering `avoid`. The classic two-nested fixpoint.
pub fn prob1e(m: &Mdp, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>) -> Vec<bool> {
    let n = m.num_states;
    let mut u: Vec<bool> = (0..n).map(|s| !avoid.contains(&s) || goal.contains(&s)).collect();
    loop {
        // Inner: backward closure toward goal using actions confined to u.
        let mut v = vec![false; n];
        for &g in goal {
            v[g] = true;
        }
        loop {
            let mut changed = false;
            for s in 0..n {
                if v[s] || !u[s] {
                    continue;
                }
                let ok = m.enabled_actions(s).any(|a| {
                    let row = m.row(s, a).unwrap();
                    row.iter().all(|&(t, _)| u[t]) && row.iter().any(|&(t, _)| v[t])
                });
                if ok {
                    v[s] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if v == u {
            return u;
        }
        u = v;
    }
}

/// Maximal end components of the sub-MDP on `allowed` states. Each component
/// is a set of states such that some action subset keeps all mass inside and
/// the induced graph is strongly connected (singletons need a self-loop).
pub fn maximal_end_components(m: &Mdp, allowed: &[bool]) -> Vec<Vec<usize>> {
    let mut result = Vec::new();
    let initial: Vec<usize> = (0..m.num_states).filter(|&s| allowed[s]).collect();
    let mut work: Vec<Vec<usize>> = vec![initial];

    while let Some(cand) = work.pop() {
        if cand.is_empty() {
            continue;
        }
        let member: BTreeSet<usize> = cand.iter().copied().collect();
        // Keep only states with an action whose support stays inside.
        let mut kept: Vec<usize> = Vec::new();
        for &s in &cand {
            let has_internal = m.enabled_actions(s).any(|a| {
                m.row(s, a).unwrap().iter().all(|&(t, _)| member.contains(&t))
            });
            if has_internal {
                kept.push(s);
            }
        }
        if kept.len() < cand.len() {
            work.push(kept);
            continue;
        }
        // All states retain an internal action; split by SCC of the internal
        // edge relation.
        let index_of: std::collections::BTreeMap<usize, usize> =
            kept.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut adj = vec![Vec::new(); kept.len()];
        for (i, &s) in kept.iter().enumerate() {
            let mut outs = BTreeSet::new();
            for a in m.enabled_actions(s) {
                let row = m.row(s, a).unwrap();
                if row.iter().all(|&(t, _)| member.contains(&t)) {
                    for &(t, _) in row {
                        outs.insert(index_of[&t]);
                    }
                }
            }
            adj[i] = outs.into_iter().collect();
        }
        let comps = tarjan_sccs(&adj);
        if comps.len() == 1 {
            let comp = &comps[0];
            // Stable: strongly connected and closed. Reject stray singletons
            // without a self-loop.
            if comp.len() > 1 || adj[comp[0]].contains(&comp[0]) {
                let mut states: Vec<usize> = comp.iter().map(|&i| kept[i]).collect();
                states.sort_unstable();
                result.push(states);
            }
        } else {
            for comp in comps {
                work.push(comp.into_iter().map(|i| kept[i]).collect());
            }
        }
    }
    result.sort();
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tarjan_finds_two_cycles() {
        // 0 <-> 1, 2 <-> 3, edge 1 -> 2.
        let adj = vec![vec![1], vec![0, 2], vec![3], vec![2]];
        let mut comps = tarjan_sccs(&adj);
        for c in &mut comps {
            c.sort_unstable();
        }
        comps.sort();
        assert_eq!(comps, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn bottom_scc_excludes_transient_cycle() {
        let adj = vec![vec![1], vec![0, 2], vec![3], vec![2]];
        let bsccs = bottom_sccs(&adj);
        assert_eq!(bsccs.len(), 1);
        let mut only = bsccs[0].clone();
        only.sort_unstable();
        assert_eq!(only, vec![2, 3]);
    }

    #[test]
    fn backward_reach_respects_blocked() {
        // 0 -> 1 -> 2 (target), 0 -> 2 via 1 only.
        let adj = vec![vec![1], vec![2], vec![]];
        let rev = reverse(&adj);
        let targets = BTreeSet::from([2]);
        let blocked = BTreeSet::from([1]);
        let reach = backward_reach(&rev, &targets, &BTreeSet::new());
        assert_eq!(reach, vec![true, true, true]);
        let reach = backward_reach(&rev, &targets, &blocked);
        assert_eq!(reach, vec![false, false, true]);
    }
}
