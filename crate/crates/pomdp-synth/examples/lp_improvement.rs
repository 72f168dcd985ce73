//! The local repair step: a per-observation max-min linear program
//! redistributes action probabilities so the worst state of the class gets
//! the best one-step backup.
//!
//! ```bash
//! cargo run --example lp_improvement
//! ```

use pomdp_synth::lp::solve_maxmin_game;
use pomdp_synth::mc::ValueVector;
use pomdp_synth::model::parse_model;
use pomdp_synth::refine::improve_lp;
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::ObservationStrategy;

// Two states share the observation `z`; action a0 is good in state 0 and bad
// in state 1, action a1 the opposite.
const MODEL: &str = "\
pomdp hedge
states 4
actions a0 a1
observe 0 -> z
observe 1 -> z
observe 2 -> zgood
observe 3 -> zbad
trans 0 a0 : 0.9 -> 2, 0.1 -> 3
trans 0 a1 : 0.1 -> 2, 0.9 -> 3
trans 1 a0 : 0.1 -> 2, 0.9 -> 3
trans 1 a1 : 0.9 -> 2, 0.1 -> 3
trans 2 a0 : 1 -> 2
trans 2 a1 : 1 -> 2
trans 3 a0 : 1 -> 3
trans 3 a1 : 1 -> 3
label goal : 2
init 0
";

fn main() {
    // The bare matrix game: rows are states, columns are actions.
    let payoff = vec![vec![0.9, 0.1], vec![0.1, 0.9]];
    let game = solve_maxmin_game(&payoff).unwrap();
    println!("matrix game: mixture {:?}, value {}", game.dist, game.value);

    // The same game arising from a model: the class of `z` holds states with
    // opposing preferences, so the improved row hedges 50/50.
    let m = parse_model(MODEL).unwrap();
    let spec = parse_spec("Pmax [ F goal ]").unwrap();
    let sigma = ObservationStrategy::uniform(&m);
    let values = ValueVector { values: vec![0.0, 0.0, 1.0, 0.0] };
    let improved = improve_lp(&m, &spec, &sigma, &values, 0).unwrap();
    println!("improved row for z: a0={}, a1={}", improved[0], improved[1]);

    // Dominance collapses to a point mass.
    let dominant = vec![vec![0.9, 0.2], vec![0.8, 0.3]];
    let point = solve_maxmin_game(&dominant).unwrap();
    println!("dominant column: mixture {:?}, value {}", point.dist, point.value);
}
