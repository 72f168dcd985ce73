//! The full refinement loop on a navigation task: learn, verify, collect
//! counterexamples, repair, resample, retrain.
//!
//! ```bash
//! cargo run --release --example synthesize_navigation
//! ```

use pomdp_synth::learner::TrainConfig;
use pomdp_synth::model::{generate_benchmark, Family, GridConfig};
use pomdp_synth::refine::{synthesize, SynthesisConfig};
use pomdp_synth::spec::parse_spec;

fn main() {
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 4)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();
    println!("model: {} states, specification {spec}", m.num_states);

    let cfg = SynthesisConfig {
        max_iterations: 5,
        sample_count: 1000,
        sample_max_len: 16,
        resample_count: 1000,
        train: TrainConfig { epochs: 8, ..Default::default() },
        seed: 7,
        ..Default::default()
    };
    let result = synthesize(&m, &spec, &cfg).unwrap();

    println!("\n{:>4} {:>10} {:>10} {:>10} {:>10}", "iter", "value", "critical", "decisions", "loss");
    for entry in &result.log {
        println!(
            "{:>4} {:>10.4} {:>10} {:>10} {:>10.4}",
            entry.iteration, entry.value, entry.critical_states, entry.critical_decisions,
            entry.train_loss
        );
    }
    let best = &result.log[result.best_iteration];
    println!(
        "\nbest iterate: {} with value {:.4} (MDP bound {:.4})",
        best.iteration, best.value, result.mdp_bound
    );
}
