//! Solve the fully observable underlying MDP: its optimal value bounds every
//! observation-based strategy from above.
//!
//! ```bash
//! cargo run --example mdp_bounds
//! ```

use pomdp_synth::mc::{check, mdp_optimal};
use pomdp_synth::model::{generate_benchmark, underlying_mdp, Family, GridConfig};
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::ObservationStrategy;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    let m = generate_benchmark(&GridConfig::new(Family::Navigation, 3)).unwrap();
    let spec = parse_spec("Pmax [ !X U A ]").unwrap();
    let solution = mdp_optimal(&underlying_mdp(&m), &spec).unwrap();
    println!(
        "navigation(3): MDP optimum at the initial state = {}",
        solution.value_at_initial()
    );

    // No observation-based strategy can beat the bound.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut best = 0.0f64;
    for _ in 0..20 {
        let mut sigma = ObservationStrategy::uniform(&m);
        for z in 0..m.num_observations() {
            if sigma.row(z).is_none() {
                continue;
            }
            let raw: Vec<f64> = (0..m.num_actions()).map(|_| rng.gen_range(0.01..1.0)).collect();
            let total: f64 = raw.iter().sum();
            sigma.set_row(z, raw.into_iter().map(|w| w / total).collect());
        }
        let value = check(&m, &sigma, &spec).unwrap().value_at_initial;
        assert!(value <= solution.value_at_initial() + 1e-8);
        best = best.max(value);
    }
    println!("best of 20 random observation strategies: {best:.4} (never above the bound)");

    let uniform_value = check(&m, &ObservationStrategy::uniform(&m), &spec)
        .unwrap()
        .value_at_initial;
    println!("uniform observation strategy:             {uniform_value:.4}");
}
