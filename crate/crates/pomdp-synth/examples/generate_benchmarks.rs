//! Generate one instance of every benchmark family and print its metrics.
//!
//! ```bash
//! cargo run --example generate_benchmarks
//! ```

use pomdp_synth::model::{generate_benchmark, Family, GridConfig};

fn main() {
    let instances = [
        (Family::Maze, 2),
        (Family::Grid, 4),
        (Family::RockSample, 4),
        (Family::Navigation, 4),
        (Family::Delivery, 5),
        (Family::Slippery, 4),
    ];
    println!("{:<16} {:>8} {:>8} {:>6} {:>8}", "model", "states", "actions", "obs", "labels");
    for (family, size) in instances {
        let m = generate_benchmark(&GridConfig::new(family, size)).unwrap();
        println!(
            "{:<16} {:>8} {:>8} {:>6} {:>8}",
            m.name,
            m.num_states,
            m.num_actions(),
            m.num_observations(),
            m.labels.len()
        );
        assert!(m.validate().is_empty());
    }

    // Closed-form state counts hold for whole families.
    for c in 1..=10 {
        let maze = generate_benchmark(&GridConfig::new(Family::Maze, c)).unwrap();
        assert_eq!(maze.num_states, 3 * c + 8);
    }
    println!("\nmaze family state counts follow 3c + 8 for c in 1..=10");
}
