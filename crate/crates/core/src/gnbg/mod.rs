//! Composition benchmark functions with certified optima.
//!
//! A problem is the pointwise minimum over components, each a rotated,
//! transformed, anisotropic quadratic raised to a nonlinearity exponent.
//! Because every component is bounded below by its depth and attains it at
//! its own minimum, the deepest component certifies the global optimum.

mod eval;
mod generator;
mod instance;
mod io;
mod transform;

pub use eval::{EvalCounter, Evaluator};
pub use generator::{make_instance, random_rotation, InstanceSpec, ParamRange};
pub use instance::{
    component_value, orthogonality_defect, Component, ComponentMinima, DescriptorView, ProblemInstance,
    ORTHOGONALITY_TOL,
};
pub use io::{
    instance_from_json, instance_to_json, load_instance, save_instance, ComponentRecord, InstanceFile,
    FORMAT_VERSION,
};
pub use transform::{transform, TransformParams};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("invalid instance spec: {0}")]
    InvalidSpec(String),
    #[error("instance invariant violated: {0}")]
    Invariant(String),
    #[error("rotation is not orthogonal (max |RR^T - I| = {max_deviation:e})")]
    NotOrthogonal { max_deviation: f64 },
    #[error("malformed instance file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation budget exhausted ({used}/{cap})")]
    BudgetExhausted { used: u64, cap: u64 },
    #[error("point has non-finite coordinates")]
    NonFinite,
    #[error("point has dimension {got}, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
}
