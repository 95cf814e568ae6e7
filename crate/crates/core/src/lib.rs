//! Memetic LSHADE with scout-augmented mutation, a gated CMA-ES branch and
//! a multi-start bound-constrained quasi-Newton polish, together with a
//! composition-function benchmark generator, a seeded evaluation harness and
//! the mechanics of a gated automated-design loop.

// `!(a < b)` is how validation rejects NaN alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autoloop;
pub mod bounds;
pub mod crossover;
pub mod gnbg;
pub mod harness;
pub mod lshade;
pub mod mutation;
pub mod polish;

pub use bounds::Bounds;
pub use crossover::{BracketCrossover, CrossoverConfig};
pub use gnbg::{
    make_instance, DescriptorView, EvalCounter, EvalError, Evaluator, InstanceError, InstanceSpec, ProblemInstance,
};
pub use lshade::{run_ea, EAConfig, EAResult, EaError};
pub use mutation::ScoutMutation;

/// Random stream used for one run: the EA phase and then the polish phase.
pub type RunRng = rand_chacha::ChaCha8Rng;
