//! The learning half of the pipeline: sample observation-action sequences
//! from the solved underlying MDP, train the recurrent policy, extract a
//! concrete strategy and verify it.
//!
//! ```bash
//! cargo run --example train_and_extract
//! ```

use pomdp_synth::learner::{
    extract_memoryless, sample_trajectories, to_observation_sequences, train, RecurrentPolicy,
    TrainConfig,
};
use pomdp_synth::mc::{check, mdp_optimal};
use pomdp_synth::model::{generate_benchmark, underlying_mdp, Family, GridConfig};
use pomdp_synth::spec::parse_spec;

fn main() {
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 3)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();

    // Demonstrations come from the fully observable optimum.
    let solution = mdp_optimal(&underlying_mdp(&m), &spec).unwrap();
    let paths = sample_trajectories(&solution.model, &solution.strategy, 1000, 12, 7);
    let dataset = to_observation_sequences(&paths, &m, 7, 12);
    println!(
        "sampled {} sequences, {} labeled steps",
        dataset.sequences.len(),
        dataset.labeled_steps()
    );

    let mut policy = RecurrentPolicy::new(m.num_observations(), 32, m.num_actions(), 7);
    let cfg = TrainConfig { epochs: 10, ..Default::default() };
    let report = train(&mut policy, &dataset, &cfg).unwrap();
    println!(
        "cross-entropy {:.4} -> {:.4} over {} epochs",
        report.initial_loss,
        report.final_loss,
        report.epoch_losses.len()
    );

    let sigma = extract_memoryless(&policy, &m).unwrap();
    let result = check(&m, &sigma, &spec).unwrap();
    println!(
        "extracted strategy: value {:.4} (MDP bound {:.4})",
        result.value_at_initial,
        solution.value_at_initial()
    );
}
