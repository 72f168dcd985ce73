//! Acceptance suite: one test per criterion, each printing a PASS line with
//! its measured numbers (run with `--nocapture` to see them). The desk-scale
//! synthesis criteria use fixed seeds and small training budgets; they check
//! trends and bounds, not exact reference values.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pomdp_synth::fsc::{memory_update, product, project_fsc, MemoryUpdateKind};
use pomdp_synth::learner::{gradient_check, RecurrentPolicy, TrainConfig, TrajSeq, TrajectoryDataset};
use pomdp_synth::mc::{self, check, check_fsc, mdp_optimal, reach_prob, ValueVector};
use pomdp_synth::model::{
    generate_benchmark, parse_model, underlying_mdp, Dtmc, Family, GridConfig, Pomdp, Provenance,
};
use pomdp_synth::refine::{improve_lp, synthesize, SynthesisConfig, SynthesizedStrategy};
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::{ObservationStrategy, StrategyMode};

const TINY: &str = include_str!("../fixtures/tiny_corridor.pomdp");

// ---------------------------------------------------------------------------
// 1. Generator metrics
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_generator_metrics() {
    let start = Instant::now();
    for c in [1usize, 2, 3, 4, 5, 6, 10] {
        let m = generate_benchmark(&GridConfig::new(Family::Maze, c)).unwrap();
        assert_eq!(m.num_states, 3 * c + 8, "Maze({c}) states");
        assert_eq!(m.num_observations(), 7, "Maze({c}) observations");
        assert_eq!(m.num_actions(), 4, "Maze({c}) actions");
    }
    for c in 2..=10usize {
        let m = generate_benchmark(&GridConfig::new(Family::Grid, c)).unwrap();
        assert_eq!(m.num_states, c * c, "Grid({c}) states");
        assert_eq!(m.num_observations(), 2, "Grid({c}) observations");
    }
    let rs44 = generate_benchmark(&GridConfig::new(Family::RockSample, 4)).unwrap();
    assert_eq!(
        (rs44.num_states, rs44.num_actions(), rs44.num_observations()),
        (257, 9, 2),
        "RockSample[4,4]"
    );
    let rs55 = generate_benchmark(&GridConfig::new(Family::RockSample, 5)).unwrap();
    assert_eq!(
        (rs55.num_states, rs55.num_actions(), rs55.num_observations()),
        (801, 10, 2),
        "RockSample[5,5]"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "generators took {elapsed:?}");
    println!("ACCEPTANCE 1 PASS: generator metrics exact, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 2. Model-checker oracle equivalence
// ---------------------------------------------------------------------------

fn random_chain(rng: &mut ChaCha8Rng) -> Dtmc {
    let n = rng.gen_range(5..=200);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let succ = rng.gen_range(1..=4usize);
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
}

/// Oracle: fixed-point iteration p <- P p with boundary overrides, 10^4 steps.
fn power_iteration_reach(d: &Dtmc, goal: &BTreeSet<usize>, avoid: &BTreeSet<usize>) -> Vec<f64> {
    let n = d.num_states();
    let mut p = vec![0.0; n];
    for &g in goal {
        p[g] = 1.0;
    }
    for _ in 0..10_000 {
        let mut next = vec![0.0; n];
        for s in 0..n {
            if goal.contains(&s) {
                next[s] = 1.0;
            } else if avoid.contains(&s) {
                next[s] = 0.0;
            } else {
                next[s] = d.rows[s].iter().map(|&(t, pr)| pr * p[t]).sum();
            }
        }
        p = next;
    }
    p
}

/// Oracle: Kosaraju SCCs, then keep components with no outgoing edges.
fn naive_bsccs(rows: &[Vec<(usize, f64)>]) -> Vec<Vec<usize>> {
    let n = rows.len();
    let adj: Vec<Vec<usize>> = rows
        .iter()
        .map(|r| r.iter().filter(|&&(_, p)| p > 0.0).map(|&(t, _)| t).collect())
        .collect();
    let mut rev = vec![Vec::new(); n];
    for (v, outs) in adj.iter().enumerate() {
        for &w in outs {
            rev[w].push(v);
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for root in 0..n {
        if seen[root] {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        seen[root] = true;
        while let Some(&mut (v, ref mut i)) = stack.last_mut() {
            if *i < adj[v].len() {
                let w = adj[v][*i];
                *i += 1;
                if !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                }
            } else {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut comp_of = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    for &root in order.iter().rev() {
        if comp_of[root] != usize::MAX {
            continue;
        }
        let cid = comps.len();
        let mut members = Vec::new();
        let mut stack = vec![root];
        comp_of[root] = cid;
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &rev[v] {
                if comp_of[w] == usize::MAX {
                    comp_of[w] = cid;
                    stack.push(w);
                }
            }
        }
        comps.push(members);
    }
    comps
        .iter()
        .enumerate()
        .filter(|(cid, comp)| comp.iter().all(|&v| adj[v].iter().all(|&w| comp_of[w] == *cid)))
        .map(|(_, comp)| {
            let mut c = comp.clone();
            c.sort_unstable();
            c
        })
        .collect()
}

#[test]
fn acceptance_02_model_checker_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x0adc);
    for case in 0..60 {
        let d = random_chain(&mut rng);
        let n = d.num_states();
        let seeded_goal = rng.gen_range(0..n);
        let goal: BTreeSet<usize> =
            (0..n).filter(|_| rng.gen_bool(0.08)).chain([seeded_goal]).collect();
        let avoid: BTreeSet<usize> =
            (0..n).filter(|s| !goal.contains(s) && rng.gen_bool(0.05)).collect();

        let ours = reach_prob(&d, &goal, &avoid);
        let oracle = power_iteration_reach(&d, &goal, &avoid);
        for s in 0..n {
            assert!(
                (ours.at(s) - oracle[s]).abs() < 1e-6,
                "case {case}: reach mismatch at {s}: {} vs {}",
                ours.at(s),
                oracle[s]
            );
        }

        // Recurrence: accept/reject classification against the naive oracle.
        let rec1: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
        let rec2: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.2)).collect();
        let safe: BTreeSet<usize> = (0..n).filter(|_| rng.gen_bool(0.9)).collect();
        let expected_accepting: BTreeSet<usize> = naive_bsccs(&d.rows)
            .into_iter()
            .filter(|comp| {
                comp.iter().all(|s| safe.contains(s))
                    && comp.iter().any(|s| rec1.contains(s))
                    && comp.iter().any(|s| rec2.contains(s))
            })
            .flatten()
            .collect();
        let values = mc::buchi_value(&d, &rec1, &rec2, &safe);
        // States in accepting components have value one; bottom states of
        // rejecting components have value zero.
        for comp in naive_bsccs(&d.rows) {
            for s in comp {
                if expected_accepting.contains(&s) {
                    assert!(
                        (values.at(s) - 1.0).abs() < 1e-9,
                        "case {case}: accepting state {s} valued {}",
                        values.at(s)
                    );
                } else {
                    assert!(
                        values.at(s).abs() < 1e-9,
                        "case {case}: rejecting bottom state {s} valued {}",
                        values.at(s)
                    );
                }
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30, "oracle comparison took {elapsed:?}");
    println!("ACCEPTANCE 2 PASS: 60 random chains match both oracles, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 3. Gradient correctness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_gradient_correctness() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for hidden in [4usize, 8] {
        for len in [3usize, 10] {
            for seed in 0..5u64 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(77).wrapping_add(len as u64));
                let batch: Vec<TrajSeq> = (0..3)
                    .map(|_| TrajSeq {
                        obs: (0..=len).map(|_| rng.gen_range(0..4)).collect(),
                        actions: (0..len).map(|_| rng.gen_range(0..3)).collect(),
                    })
                    .collect();
                let mut policy = RecurrentPolicy::new(4, hidden, 3, seed);
                let err = gradient_check(&mut policy, &batch).unwrap();
                assert!(err < 1e-4, "H={hidden} len={len} seed={seed}: error {err}");
                worst = worst.max(err);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "gradient checks took {elapsed:?}");
    println!("ACCEPTANCE 3 PASS: max relative gradient error {worst:.2e}, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 4. LP improvement soundness
// ---------------------------------------------------------------------------

/// A random small POMDP with one observation shared by a handful of states.
fn random_lp_model(rng: &mut ChaCha8Rng) -> Pomdp {
    let states = rng.gen_range(4..=9);
    let actions = rng.gen_range(2..=4);
    let shared = rng.gen_range(2..=states.min(4));
    let mut text = String::new();
    text.push_str("pomdp lp\n");
    text.push_str(&format!("states {states}\n"));
    let action_names: Vec<String> = (0..actions).map(|a| format!("a{a}")).collect();
    text.push_str(&format!("actions {}\n", action_names.join(" ")));
    for s in 0..states {
        let z = if s < shared { "zc".to_string() } else { format!("z{s}") };
        text.push_str(&format!("observe {s} -> {z}\n"));
    }
    for s in 0..states {
        for a in 0..actions {
            let succ = rng.gen_range(1..=3usize);
            let mut targets = Vec::new();
            let mut weights = Vec::new();
            for _ in 0..succ {
                let t = rng.gen_range(0..states);
                if !targets.contains(&t) {
                    targets.push(t);
                    weights.push(rng.gen_range(0.1..1.0f64));
                }
            }
            let total: f64 = weights.iter().sum();
            let entries: Vec<String> = targets
                .iter()
                .zip(&weights)
                .map(|(t, w)| format!("{} -> {t}", w / total))
                .collect();
            text.push_str(&format!("trans {s} a{a} : {}\n", entries.join(", ")));
        }
    }
    text.push_str(&format!("label goal : {}\n", states - 1));
    text.push_str("init 0\n");
    parse_model(&text).unwrap()
}

#[test]
fn acceptance_04_lp_improvement_soundness() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x1109);
    let spec = parse_spec("Pmax [ F goal ]").unwrap();
    for case in 0..1000 {
        let m = random_lp_model(&mut rng);
        let values = ValueVector {
            values: (0..m.num_states).map(|_| rng.gen_range(0.0..1.0)).collect(),
        };
        // Random incumbent supported on every state's enabled actions.
        let mut sigma = ObservationStrategy::new(
            StrategyMode::Memoryless,
            m.num_observations(),
            m.num_actions(),
        );
        for z in 0..m.num_observations() {
            let raw: Vec<f64> = (0..m.num_actions()).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            sigma.set_row(z, raw.into_iter().map(|w| w / total).collect());
        }
        let z = 0; // the shared class
        let improved = improve_lp(&m, &spec, &sigma, &values, z).unwrap();

        // Independent re-computation of the per-state one-step backups.
        let members: Vec<usize> =
            (0..m.num_states).filter(|&s| m.obs_of[s] == z).collect();
        let backup = |dist: &[f64]| -> f64 {
            members
                .iter()
                .map(|&s| {
                    (0..m.num_actions())
                        .map(|a| {
                            dist[a]
                                * m.row(s, a)
                                    .unwrap()
                                    .iter()
                                    .map(|&(t, p)| p * values.at(t))
                                    .sum::<f64>()
                        })
                        .sum::<f64>()
                })
                .fold(f64::INFINITY, f64::min)
        };
        let incumbent = sigma.row(z).unwrap().to_vec();
        assert!(
            backup(&improved) >= backup(&incumbent) - 1e-9,
            "case {case}: improved {} below incumbent {}",
            backup(&improved),
            backup(&incumbent)
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 60, "LP soundness took {elapsed:?}");
    println!("ACCEPTANCE 4 PASS: 1000 random LP improvements dominate their incumbents, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 5. Refinement trend on Navigation(6)
// ---------------------------------------------------------------------------

fn navigation_config(seed: u64) -> SynthesisConfig {
    SynthesisConfig {
        max_iterations: 10,
        sample_count: 1500,
        sample_max_len: 24,
        resample_count: 2000,
        train: TrainConfig { hidden: 32, epochs: 6, ..Default::default() },
        seed,
        ..Default::default()
    }
}

#[test]
fn acceptance_05_navigation6_refinement_trend() {
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 6)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();
    for seed in [1u64, 2, 3] {
        let start = Instant::now();
        let result = synthesize(&m, &spec, &navigation_config(seed)).unwrap();
        let first = &result.log[0];
        let best = &result.log[result.best_iteration];
        assert!(
            best.value - first.value >= 0.3,
            "seed {seed}: improvement {} -> {} below 0.3",
            first.value,
            best.value
        );
        assert!(
            (best.critical_states as f64) <= 0.7 * first.critical_states as f64,
            "seed {seed}: critical states {} -> {} not shrinking enough",
            first.critical_states,
            best.critical_states
        );
        let elapsed = start.elapsed();
        assert!(elapsed.as_secs() < 30 * 60, "seed {seed} took {elapsed:?}");
        println!(
            "ACCEPTANCE 5 PASS (seed {seed}): value {:.3} -> {:.3}, critical {} -> {}, {elapsed:?}",
            first.value, best.value, first.critical_states, best.critical_states
        );
    }
}

// ---------------------------------------------------------------------------
// 6. Navigation(3) memoryless value
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_navigation3_memoryless_value() {
    let start = Instant::now();
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 3)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();
    let bound = mdp_optimal(&underlying_mdp(&m), &spec).unwrap().value_at_initial();
    let mut best_over_seeds: f64 = 0.0;
    for seed in [1u64, 2, 3] {
        let cfg = SynthesisConfig {
            max_iterations: 6,
            sample_count: 800,
            sample_max_len: 12,
            resample_count: 800,
            train: TrainConfig { hidden: 32, epochs: 8, ..Default::default() },
            seed,
            ..Default::default()
        };
        let result = synthesize(&m, &spec, &cfg).unwrap();
        for entry in &result.log {
            assert!(
                entry.value <= bound + 1e-8,
                "seed {seed}: value {} exceeds the MDP bound {bound}",
                entry.value
            );
        }
        best_over_seeds = best_over_seeds.max(result.log[result.best_iteration].value);
    }
    assert!(
        best_over_seeds >= 0.60,
        "no seed reached 0.60 (best {best_over_seeds})"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 15 * 60, "navigation(3) took {elapsed:?}");
    println!(
        "ACCEPTANCE 6 PASS: best memoryless value {best_over_seeds:.3} (bound {bound:.3}), {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 7. Navigation(4): finite memory does not degrade
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_navigation4_fsc_effect() {
    let start = Instant::now();
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 4)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();
    let seeds = [1u64, 2];
    let mut best_memoryless: f64 = 0.0;
    let mut best_fsc: f64 = 0.0;
    for &seed in &seeds {
        let base = SynthesisConfig {
            max_iterations: 6,
            sample_count: 1200,
            sample_max_len: 16,
            resample_count: 1200,
            train: TrainConfig { hidden: 32, epochs: 8, ..Default::default() },
            seed,
            ..Default::default()
        };
        let flat = synthesize(&m, &spec, &base).unwrap();
        best_memoryless = best_memoryless.max(flat.log[flat.best_iteration].value);

        let with_memory = SynthesisConfig {
            memory: Some((MemoryUpdateKind::ObservationRepeat, 2)),
            ..base
        };
        let fsc_run = synthesize(&m, &spec, &with_memory).unwrap();
        assert_eq!(
            fsc_run.effective_model.num_states,
            2 * m.num_states,
            "memory product must have exactly twice the flat states"
        );
        best_fsc = best_fsc.max(fsc_run.log[fsc_run.best_iteration].value);
    }
    assert!(
        best_fsc >= best_memoryless - 0.02,
        "2-FSC best {best_fsc} degrades below memoryless best {best_memoryless}"
    );
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 30 * 60, "navigation(4) took {elapsed:?}");
    println!(
        "ACCEPTANCE 7 PASS: 2-FSC best {best_fsc:.3} vs memoryless best {best_memoryless:.3}, \
         product 2x states, {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 8. Maze(1) expected cost with a 2-node controller
// ---------------------------------------------------------------------------

#[test]
fn acceptance_08_maze1_fsc_cost() {
    let start = Instant::now();
    let m = generate_benchmark(&GridConfig::new(Family::Maze, 1)).unwrap();
    let spec = parse_spec("Emin [ F goal ]").unwrap();
    let mut best_cost = f64::INFINITY;
    for seed in [1u64, 2, 3] {
        let cfg = SynthesisConfig {
            max_iterations: 6,
            sample_count: 800,
            sample_max_len: 16,
            resample_count: 800,
            train: TrainConfig { hidden: 32, epochs: 15, ..Default::default() },
            seed,
            memory: Some((
                MemoryUpdateKind::SpecDriven {
                    first_ap: "entry".into(),
                    second_ap: "goal".into(),
                },
                2,
            )),
            ..Default::default()
        };
        let result = synthesize(&m, &spec, &cfg).unwrap();
        let best = &result.log[result.best_iteration];
        // Verified value equals an independent re-check of the controller.
        match &result.best {
            SynthesizedStrategy::Controller(fsc) => {
                let again = check_fsc(&m, fsc, &spec).unwrap();
                assert!(
                    (again.value_at_initial - best.value).abs() < 1e-12,
                    "re-check {} differs from logged {}",
                    again.value_at_initial,
                    best.value
                );
            }
            other => panic!("expected a controller, got {other:?}"),
        }
        best_cost = best_cost.min(best.value);
    }
    assert!(best_cost <= 5.5, "no seed reached cost 5.5 (best {best_cost})");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10 * 60, "maze(1) took {elapsed:?}");
    println!("ACCEPTANCE 8 PASS: best synthesized cost {best_cost:.3} <= 5.5, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 9. Value preservation of controller projection
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_projection_value_preservation() {
    let start = Instant::now();
    let m = parse_model(TINY).unwrap();
    let spec = parse_spec("Pmax [ F goal ]").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e3);
    let mut checked = 0usize;
    for k in [1usize, 2, 4] {
        let update = memory_update(&MemoryUpdateKind::ObservationRepeat, k, &m).unwrap();
        let prod = product(&m, &update);
        for _ in 0..34 {
            let mut sigma = ObservationStrategy::new(
                StrategyMode::Product { k },
                prod.num_observations(),
                prod.num_actions(),
            );
            for z in 0..prod.num_observations() {
                let raw: Vec<f64> =
                    (0..prod.num_actions()).map(|_| rng.gen_range(0.01..1.0)).collect();
                let total: f64 = raw.iter().sum();
                sigma.set_row(z, raw.into_iter().map(|w| w / total).collect());
            }
            let on_product = check(&prod, &sigma, &spec).unwrap().value_at_initial;
            let fsc = project_fsc(&sigma, &update, &m).unwrap();
            let via_projection = check_fsc(&m, &fsc, &spec).unwrap().value_at_initial;
            assert!(
                (on_product - via_projection).abs() < 1e-12,
                "k={k}: product {} vs projection {}",
                on_product,
                via_projection
            );
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 10, "projection checks took {elapsed:?}");
    println!("ACCEPTANCE 9 PASS: {checked} random controllers value-preserving, {elapsed:?}");
}

// ---------------------------------------------------------------------------
// 10. Entropy floor of the trainer
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10_entropy_floor() {
    let start = Instant::now();
    let ln4 = 4f64.ln();
    for seed in [11u64, 12, 13] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sequences: Vec<TrajSeq> = (0..400)
            .map(|_| TrajSeq {
                obs: vec![0, 1, 0, 1, 0, 1],
                actions: (0..5).map(|_| rng.gen_range(0..4)).collect(),
            })
            .collect();
        let data = TrajectoryDataset { sequences, meta: Default::default() };
        let mut policy = RecurrentPolicy::new(2, 16, 4, seed);
        let cfg = TrainConfig { hidden: 16, epochs: 40, seed, ..Default::default() };
        let report = pomdp_synth::learner::train(&mut policy, &data, &cfg).unwrap();
        assert!(
            (report.final_loss - ln4).abs() <= 0.05,
            "seed {seed}: loss {} strays from ln 4 = {ln4}",
            report.final_loss
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 5 * 60, "entropy floor took {elapsed:?}");
    println!("ACCEPTANCE 10 PASS: random-label training stays at the ln 4 floor, {elapsed:?}");
}
