//! Parse a model document, inspect diagnostics, and round-trip it.
//!
//! ```bash
//! cargo run --example parse_and_validate
//! ```

use pomdp_synth::model::{model_to_text, parse_model};

const DOC: &str = "\
# A two-cell corridor with an observable goal.
pomdp corridor
states 3
actions left right
observations z_corridor z_goal
observe 0 -> z_corridor
observe 1 -> z_corridor
observe 2 -> z_goal
trans 0 left : 1 -> 0
trans 0 right : 1 -> 1
trans 1 left : 1 -> 0
trans 1 right : 1 -> 2
trans 2 left : 1 -> 2
trans 2 right : 1 -> 2
reward 0 right = 1
reward 1 right = 1
label goal : 2
init 0
";

fn main() {
    let model = parse_model(DOC).expect("the document is well-formed");
    println!(
        "parsed `{}`: {} states, {} actions, {} observations, initial {}",
        model.name,
        model.num_states,
        model.num_actions(),
        model.num_observations(),
        model.initial
    );
    for (ap, states) in &model.labels {
        println!("  label {ap}: {states:?}");
    }
    println!("  diagnostics: {:?}", model.validate());

    // Serialization is canonical: parsing it back gives an identical model.
    let round = parse_model(&model_to_text(&model)).unwrap();
    assert_eq!(model, round);
    println!("  round-trip: identical");

    // Malformed rows are rejected with coordinates.
    let broken = DOC.replace("trans 0 right : 1 -> 1", "trans 0 right : 0.5 -> 1, 0.4 -> 2");
    match parse_model(&broken) {
        Err(e) => println!("  broken document rejected: {e}"),
        Ok(_) => unreachable!("substochastic row must be rejected"),
    }
}
