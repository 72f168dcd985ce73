//! Property tests for the structural invariants: serialization round-trips,
//! distribution normalization, value monotonicity, and the MDP upper bound.

use std::collections::BTreeSet;

use proptest::prelude::*;

use pomdp_synth::learner::{policy_forward, RecurrentPolicy};
use pomdp_synth::mc::{check, mdp_optimal, reach_prob};
use pomdp_synth::model::{
    generate_benchmark, model_to_text, parse_model, underlying_mdp, Dtmc, Family, GridConfig,
    Pomdp, Provenance,
};
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::{ObservationStrategy, StrategyMode};

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

fn arb_pomdp() -> impl Strategy<Value = Pomdp> {
    // Structure: 2..8 states, 1..3 actions, 1..3 observations; rows are
    // normalized over 1..3 successors.
    (2usize..8, 1usize..4, 1usize..4, any::<u64>()).prop_map(|(n, na, nz, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut text = format!("pomdp arb\nstates {n}\n");
        let actions: Vec<String> = (0..na).map(|a| format!("a{a}")).collect();
        text.push_str(&format!("actions {}\n", actions.join(" ")));
        for s in 0..n {
            text.push_str(&format!("observe {s} -> z{}\n", s % nz));
        }
        for s in 0..n {
            for a in 0..na {
                let succ = rng.gen_range(1..=3usize);
                let mut targets: Vec<usize> = Vec::new();
                let mut weights: Vec<f64> = Vec::new();
                for _ in 0..succ {
                    let t = rng.gen_range(0..n);
                    if !targets.contains(&t) {
                        targets.push(t);
                        weights.push(rng.gen_range(0.05..1.0));
                    }
                }
                let total: f64 = weights.iter().sum();
                let entries: Vec<String> = targets
                    .iter()
                    .zip(&weights)
                    .map(|(t, w)| format!("{} -> {t}", w / total))
                    .collect();
                text.push_str(&format!("trans {s} a{a} : {}\n", entries.join(", ")));
                if rng.gen_bool(0.4) {
                    text.push_str(&format!("reward {s} a{a} = {}\n", rng.gen_range(0.0..4.0)));
                }
            }
        }
        text.push_str(&format!("label goal : {}\n", n - 1));
        text.push_str("init 0\n");
        parse_model(&text).expect("generated document parses")
    })
}

fn arb_chain() -> impl Strategy<Value = Dtmc> {
    (2usize..40, any::<u64>()).prop_map(|(n, seed)| {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::with_capacity(n);
        for _ in 0..n {
            let succ = rng.gen_range(1..=3usize);
            let mut row: Vec<(usize, f64)> = Vec::new();
            let mut weights: Vec<f64> = Vec::new();
            for _ in 0..succ {
                let t = rng.gen_range(0..n);
                if !row.iter().any(|&(u, _)| u == t) {
                    row.push((t, 0.0));
                    weights.push(rng.gen_range(0.1..1.0));
                }
            }
            let total: f64 = weights.iter().sum();
            for (slot, w) in row.iter_mut().zip(&weights) {
                slot.1 = w / total;
            }
            row.sort_by_key(|&(t, _)| t);
            rows.push(row);
        }
        let provenance = (0..n)
            .map(|s| Provenance { model_state: s, aut_node: 0, mixture: vec![(0, 1.0)] })
            .collect();
        Dtmc { rows, provenance, labels: Default::default(), rewards: vec![0.0; n], initial: 0 }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Serialize-parse round trip is the identity on every field.
    #[test]
    fn model_round_trip(m in arb_pomdp()) {
        let again = parse_model(&model_to_text(&m)).unwrap();
        prop_assert_eq!(m, again);
    }

    /// Enlarging the goal set never decreases any reachability value.
    #[test]
    fn reach_prob_is_monotone_in_goal(d in arb_chain(), extra in any::<u64>()) {
        let n = d.num_states();
        let goal1: BTreeSet<usize> = BTreeSet::from([n - 1]);
        let mut goal2 = goal1.clone();
        goal2.insert((extra as usize) % n);
        let v1 = reach_prob(&d, &goal1, &BTreeSet::new());
        let v2 = reach_prob(&d, &goal2, &BTreeSet::new());
        for s in 0..n {
            prop_assert!(v2.at(s) >= v1.at(s) - 1e-9,
                "state {}: {} < {}", s, v2.at(s), v1.at(s));
        }
    }

    /// Every reachability value is a probability.
    #[test]
    fn reach_prob_stays_in_unit_interval(d in arb_chain(), pick in any::<u64>()) {
        let n = d.num_states();
        let goal = BTreeSet::from([(pick as usize) % n]);
        let avoid: BTreeSet<usize> = BTreeSet::from([n - 1]).difference(&goal).copied().collect();
        let v = reach_prob(&d, &goal, &avoid);
        for s in 0..n {
            prop_assert!((-1e-9..=1.0 + 1e-9).contains(&v.at(s)));
        }
    }

    /// Random strategies never beat the underlying MDP's optimum.
    #[test]
    fn mdp_bound_dominates_observation_strategies(m in arb_pomdp(), seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let spec = parse_spec("Pmax [ F goal ]").unwrap();
        let bound = mdp_optimal(&underlying_mdp(&m), &spec).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut sigma = ObservationStrategy::new(
            StrategyMode::Memoryless, m.num_observations(), m.num_actions());
        for z in 0..m.num_observations() {
            let enabled: Vec<usize> = m.class_enabled_actions(z).into_iter().collect();
            if enabled.is_empty() { continue; }
            let raw: Vec<f64> = enabled.iter().map(|_| rng.gen_range(0.01..1.0f64)).collect();
            let total: f64 = raw.iter().sum();
            let mut dist = vec![0.0; m.num_actions()];
            for (a, w) in enabled.iter().zip(&raw) {
                dist[*a] = w / total;
            }
            sigma.set_row(z, dist);
        }
        let value = check(&m, &sigma, &spec).unwrap().value_at_initial;
        prop_assert!(value <= bound.value_at_initial() + 1e-8,
            "strategy value {} beats bound {}", value, bound.value_at_initial());
    }
}

/// Softmax outputs over many random parameter draws always normalize.
#[test]
fn softmax_normalizes_over_many_draws() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let mut draws = 0usize;
    while draws < 100_000 {
        let policy = RecurrentPolicy::new(3, 4, 5, rng.gen());
        for z in 0..3 {
            let out = policy_forward(&policy, &[z]).unwrap();
            let sum: f64 = out.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9, "softmax sums to {sum}");
            draws += 1;
        }
    }
}

/// Identical sampling inputs give byte-identical datasets.
#[test]
fn dataset_bytes_are_seed_deterministic() {
    use pomdp_synth::learner::{sample_trajectories, to_observation_sequences};
    let m = generate_benchmark(&GridConfig::new(Family::Grid, 3)).unwrap();
    let spec = parse_spec("Emin [ F goal ]").unwrap();
    let sol = mdp_optimal(&underlying_mdp(&m), &spec).unwrap();
    let mk = || {
        let paths = sample_trajectories(&sol.model, &sol.strategy, 200, 8, 21);
        to_observation_sequences(&paths, &m, 21, 8).to_text(&m)
    };
    assert_eq!(mk(), mk());
}
