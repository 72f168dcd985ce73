//! Finite memory via products: predefine a memory update, build the product
//! POMDP, and project a memoryless product strategy back to a controller.
//! Both views induce the same chain, so their values agree exactly.
//!
//! ```bash
//! cargo run --example fsc_product_projection
//! ```

use pomdp_synth::fsc::{fsc_to_text, memory_update, product, project_fsc, MemoryUpdateKind};
use pomdp_synth::mc::{check, check_fsc};
use pomdp_synth::model::parse_model;
use pomdp_synth::spec::parse_spec;
use pomdp_synth::strategy::{ObservationStrategy, StrategyMode};

const CORRIDOR: &str = include_str!("../fixtures/tiny_corridor.pomdp");

fn main() {
    let m = parse_model(CORRIDOR).unwrap();
    let k = 2;
    let update = memory_update(&MemoryUpdateKind::ObservationRepeat, k, &m).unwrap();
    let prod = product(&m, &update);
    println!(
        "product: {} states = {} x {k}, observations {:?}",
        prod.num_states, m.num_states, prod.observations
    );

    // A product strategy that behaves differently per memory node.
    let mut sigma = ObservationStrategy::new(
        StrategyMode::Product { k },
        prod.num_observations(),
        prod.num_actions(),
    );
    for z in 0..prod.num_observations() {
        let (_, node) = (z / k, z % k);
        // Node 0 drifts left, node 1 commits right.
        let dist = if node == 0 { vec![0.6, 0.4] } else { vec![0.1, 0.9] };
        sigma.set_row(z, dist);
    }

    let spec = parse_spec("Emin [ F goal ]").unwrap();
    let on_product = check(&prod, &sigma, &spec).unwrap().value_at_initial;
    let controller = project_fsc(&sigma, &update, &m).unwrap();
    let via_controller = check_fsc(&m, &controller, &spec).unwrap().value_at_initial;
    println!("expected cost on the product:      {on_product}");
    println!("expected cost via the controller:  {via_controller}");
    assert!((on_product - via_controller).abs() < 1e-12);

    println!("\nserialized controller:\n{}", fsc_to_text(&controller, &m));
}
