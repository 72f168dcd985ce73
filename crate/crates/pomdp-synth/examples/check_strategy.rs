//! Fix a strategy, build the induced chain, and verify it exactly.
//!
//! ```bash
//! cargo run --example check_strategy
//! ```

use pomdp_synth::mc::check;
use pomdp_synth::model::parse_model;
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::{ObservationStrategy, StrategyMode};

const CORRIDOR: &str = include_str!("../fixtures/tiny_corridor_bad.pomdp");

fn main() {
    let model = parse_model(CORRIDOR).unwrap();
    let spec = parse_spec("Pmax [ true U goal ]").unwrap();

    // Walking right is certain to reach the goal; left falls into the trap.
    let mut right = ObservationStrategy::new(StrategyMode::Memoryless, 2, 2);
    right.set_row(0, vec![0.0, 1.0]);
    right.set_row(1, vec![0.0, 1.0]);
    let sure = check(&model, &right, &spec).unwrap();
    println!("always right: value {}", sure.value_at_initial);

    let uniform = ObservationStrategy::uniform(&model);
    let mixed = check(&model, &uniform, &spec).unwrap();
    println!("uniform:      value {} (exact 1/3)", mixed.value_at_initial);

    // Threshold queries produce a verdict instead of just a number.
    let threshold = parse_spec("P>=0.5 [ true U goal ]").unwrap();
    let verdict = check(&model, &uniform, &threshold).unwrap();
    println!(
        "P>=0.5 under uniform: satisfied = {:?} ({} chain states, {} transitions)",
        verdict.satisfied, verdict.dtmc_states, verdict.dtmc_transitions
    );

    // Expected cost until the goal, infinite when the trap is reachable.
    let cost = parse_spec("Emin [ F goal ]").unwrap();
    let expected = check(&model, &uniform, &cost).unwrap();
    println!("expected cost under uniform: {}", expected.value_at_initial);
}
