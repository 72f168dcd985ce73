//! Validate the backpropagation-through-time gradients against central
//! finite differences.
//!
//! ```bash
//! cargo run --example gradient_check
//! ```

use pomdp_synth::learner::{gradient_check, RecurrentPolicy, TrajSeq};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() {
    for (hidden, len) in [(4usize, 3usize), (4, 10), (8, 3), (8, 10)] {
        let mut rng = ChaCha8Rng::seed_from_u64(42 + len as u64);
        let batch: Vec<TrajSeq> = (0..3)
            .map(|_| TrajSeq {
                obs: (0..=len).map(|_| rng.gen_range(0..4)).collect(),
                actions: (0..len).map(|_| rng.gen_range(0..3)).collect(),
            })
            .collect();
        let mut policy = RecurrentPolicy::new(4, hidden, 3, 1);
        let err = gradient_check(&mut policy, &batch).unwrap();
        println!("hidden {hidden:>2}, length {len:>2}: max relative error {err:.3e}");
        assert!(err < 1e-4);
    }
    println!("analytic gradients match finite differences");
}
