//! Long-run objectives: patrol between two landmarks forever without
//! crashing. Verification classifies the bottom strongly connected components
//! of the induced chain; the underlying MDP is solved through its maximal end
//! components.
//!
//! ```bash
//! cargo run --example recurrence_patrol
//! ```

use pomdp_synth::mc::{check, mdp_optimal};
use pomdp_synth::model::{generate_benchmark, underlying_mdp, Family, GridConfig};
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::ObservationStrategy;

fn main() {
    let m = generate_benchmark(&GridConfig::new(Family::Slippery, 4)).unwrap();
    let spec = parse_spec("Pmax [ GF A & GF B & !F X ]").unwrap();
    println!("slippery(4): {} states, specification {spec}", m.num_states);

    let solution = mdp_optimal(&underlying_mdp(&m), &spec).unwrap();
    println!(
        "fully observable patrol value at the initial state: {}",
        solution.value_at_initial()
    );

    // A memoryless observation strategy cannot alternate targets; the uniform
    // baseline still sustains the patrol with some probability because random
    // dithering keeps visiting both landmarks when it survives the obstacles.
    let uniform = ObservationStrategy::uniform(&m);
    let result = check(&m, &uniform, &spec).unwrap();
    println!("uniform observation strategy:                       {}", result.value_at_initial);
    assert!(result.value_at_initial <= solution.value_at_initial() + 1e-8);
}
