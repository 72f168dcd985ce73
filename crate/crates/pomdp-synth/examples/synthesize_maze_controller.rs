//! Finite-memory synthesis for an expected-cost objective: the maze needs a
//! controller that remembers having passed the entrance, so the corridor
//! observation means "descend" afterwards and "climb out" before.
//!
//! ```bash
//! cargo run --release --example synthesize_maze_controller
//! ```

use pomdp_synth::fsc::MemoryUpdateKind;
use pomdp_synth::learner::TrainConfig;
use pomdp_synth::mc::check_fsc;
use pomdp_synth::model::{generate_benchmark, Family, GridConfig};
use pomdp_synth::refine::{synthesize, SynthesisConfig, SynthesizedStrategy};
use pomdp_synth::spec::parse_spec;

fn main() {
    let m = generate_benchmark(&GridConfig::new(Family::Maze, 1)).unwrap();
    let spec = parse_spec("Emin [ F goal ]").unwrap();
    println!("maze(1): {} states, {} observations", m.num_states, m.num_observations());

    let cfg = SynthesisConfig {
        max_iterations: 5,
        sample_count: 800,
        sample_max_len: 16,
        resample_count: 800,
        train: TrainConfig { epochs: 15, ..Default::default() },
        seed: 1,
        memory: Some((
            MemoryUpdateKind::SpecDriven { first_ap: "entry".into(), second_ap: "goal".into() },
            2,
        )),
        ..Default::default()
    };
    let result = synthesize(&m, &spec, &cfg).unwrap();
    for entry in &result.log {
        println!("iter {}: expected cost {:.3}", entry.iteration, entry.value);
    }

    match &result.best {
        SynthesizedStrategy::Controller(fsc) => {
            let verified = check_fsc(&m, fsc, &spec).unwrap();
            println!(
                "\nbest controller: k = {}, verified cost {:.3} (MDP bound {:.3})",
                fsc.k, verified.value_at_initial, result.mdp_bound
            );
        }
        SynthesizedStrategy::Memoryless(_) => unreachable!("memory mode returns a controller"),
    }
}
