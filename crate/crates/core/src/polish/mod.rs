//! Memetic polish: a short multi-start local search spent from whatever
//! budget the EA left.
//!
//! The compliant variant starts from the EA best, four perturbations of it
//! and three uniform restarts. The leaky variant additionally seeds one start
//! at each component minimum; it exists only to show how much such structural
//! knowledge is worth, and every record it touches is flagged non-compliant.

mod lbfgs;

pub use lbfgs::{local_minimize, LocalOptConfig, LocalResult, StopReason};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnbg::{ComponentMinima, Evaluator};
use crate::lshade::EAResult;
use crate::{Bounds, RunRng};

/// Perturbation radii as fractions of the box width.
pub const PERTURBATION_RADII: [f64; 4] = [0.02, 0.05, 0.10, 0.20];
pub const UNIFORM_RESTARTS: usize = 3;
/// Starts in a compliant plan.
pub const COMPLIANT_STARTS: usize = 1 + PERTURBATION_RADII.len() + UNIFORM_RESTARTS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolishVariant {
    CompliantB,
    LeakyA,
}

impl PolishVariant {
    pub fn is_compliant(self) -> bool {
        self == Self::CompliantB
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PolishError {
    #[error("compliant polish must not receive component metadata")]
    GateViolation,
    #[error("leaky polish needs the component minima")]
    MissingMetadata,
    #[error("invalid local optimizer configuration")]
    InvalidConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolishPlan {
    pub starts: Vec<Vec<f64>>,
    /// Equal share of the budget the plan was built for, rounded up.
    pub per_start_budget: u64,
    pub variant: PolishVariant,
}

/// Ordered start points. Leaky plans put the component minima first.
pub fn build_plan(
    ea_best: &[f64],
    bounds: Bounds,
    rng: &mut RunRng,
    variant: PolishVariant,
    metadata: Option<&ComponentMinima>,
) -> Result<Vec<Vec<f64>>, PolishError> {
    let mut starts = match (variant, metadata) {
        (PolishVariant::CompliantB, Some(_)) => return Err(PolishError::GateViolation),
        (PolishVariant::LeakyA, None) => return Err(PolishError::MissingMetadata),
        (PolishVariant::CompliantB, None) => Vec::with_capacity(COMPLIANT_STARTS),
        (PolishVariant::LeakyA, Some(minima)) => minima.0.clone(),
    };
    let mut best = ea_best.to_vec();
    bounds.clip_all(&mut best);
    starts.push(best);
    let w = bounds.width();
    for r in PERTURBATION_RADII {
        let half = r * w;
        let mut x: Vec<f64> = ea_best.iter().map(|&v| v + rng.random_range(-half..=half)).collect();
        bounds.clip_all(&mut x);
        starts.push(x);
    }
    for _ in 0..UNIFORM_RESTARTS {
        starts.push((0..ea_best.len()).map(|_| rng.random_range(bounds.lb..=bounds.ub)).collect());
    }
    Ok(starts)
}

/// [`build_plan`] with the budget split attached.
pub fn plan_with_budget(
    ea_best: &[f64],
    bounds: Bounds,
    budget: u64,
    rng: &mut RunRng,
    variant: PolishVariant,
    metadata: Option<&ComponentMinima>,
) -> Result<PolishPlan, PolishError> {
    let starts = build_plan(ea_best, bounds, rng, variant, metadata)?;
    Ok(PolishPlan {
        per_start_budget: budget.div_ceil(starts.len() as u64),
        starts,
        variant,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolishOutcome {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Evaluations charged during polish.
    pub evals: u64,
    pub starts_run: usize,
}

/// Spends the evaluator's remaining budget on the plan. Each start gets an
/// equal share of what is left, so anything an early start leaves unused
/// flows to the ones after it. The result is never worse than the EA best.
pub fn run_polish(
    eval: &mut Evaluator<'_>,
    ea: &EAResult,
    variant: PolishVariant,
    metadata: Option<&ComponentMinima>,
    cfg: &LocalOptConfig,
    rng: &mut RunRng,
) -> Result<PolishOutcome, PolishError> {
    if !cfg.is_valid() {
        return Err(PolishError::InvalidConfig);
    }
    let mut out = PolishOutcome {
        best_x: ea.best_x.clone(),
        best_f: ea.best_f,
        evals: 0,
        starts_run: 0,
    };
    if eval.remaining() == 0 {
        return Ok(out);
    }
    let bounds = eval.bounds();
    let plan = plan_with_budget(&ea.best_x, bounds, eval.remaining(), rng, variant, metadata)?;
    let total = plan.starts.len();
    for (k, x0) in plan.starts.iter().enumerate() {
        let left = eval.remaining();
        if left == 0 {
            break;
        }
        let share = left.div_ceil((total - k) as u64);
        let r = local_minimize(|x| eval.evaluate(x), x0, bounds, share, cfg);
        out.evals += r.evals;
        out.starts_run += 1;
        if r.f < out.best_f {
            out.best_f = r.f;
            out.best_x = r.x;
        }
    }
    Ok(out)
}
