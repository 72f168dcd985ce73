//! Strategy synthesis for partially observable Markov decision processes.
//!
//! The crate combines three ingredients:
//!
//! 1. a learned candidate strategy: a small recurrent network is trained on
//!    observation-action sequences sampled from an optimal strategy of the
//!    fully observable underlying MDP ([`learner`]);
//! 2. exact verification: the candidate is fixed, the induced Markov chain is
//!    built, and reachability / expected-reward / recurrence values are
//!    computed by graph analysis and linear solves ([`mc`]);
//! 3. counterexample-guided repair: states whose verified value falls short of
//!    a criticality threshold produce critical (observation, action) decisions;
//!    a per-observation max-min linear program locally improves the strategy,
//!    new trajectories are sampled from the critical states, and the network is
//!    retrained ([`refine`]).
//!
//! Finite memory is handled by predefining a memory-update function, building
//! the product POMDP whose states carry the memory node, and projecting a
//! memoryless strategy on the product back to a finite-state controller
//! ([`fsc`]).
//!
//! Start with the runnable programs under `examples/` — there is one per major
//! capability — or with the `pomdp-synth` binary, whose subcommands mirror the
//! pipeline stages (`bench`, `check`, `sample`, `train`, `extract`, `synth`).

pub mod cli;
pub mod fsc;
pub mod learner;
pub mod lp;
pub mod mc;
pub mod model;
pub mod refine;
pub mod spec;
pub mod strategy;

pub use model::{Dtmc, GridConfig, Mdp, Pomdp};
pub use spec::Specification;
pub use strategy::ObservationStrategy;
