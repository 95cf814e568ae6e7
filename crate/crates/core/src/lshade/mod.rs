//! LSHADE engine: success-history parameter adaptation, archive-assisted
//! selection and linear population-size reduction (LPSR), with mutation and
//! crossover supplied through traits.

mod engine;
mod memory;

pub use engine::{
    ea_generation, run_ea, run_ea_with, Crossover, EAResult, EAState, GenerationContext, GenerationFeedback,
    GenerationReport, Individual, Initializer, Mutation, Offspring, Role, TracePoint, UniformInit,
};
pub use memory::{cr_from_draw, f_from_draws, HistoryMemory, Success, F_FALLBACK, F_MAX_ATTEMPTS, PARAM_SCALE};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnbg::EvalError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EaError {
    #[error("invalid EA configuration: {0}")]
    InvalidConfig(String),
    #[error("budget share {budget_share} cannot cover an initial population of {n_init}")]
    InvalidBudget { budget_share: u64, n_init: usize },
    #[error("success improvement must be positive, got {0}")]
    NonPositiveImprovement(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl EaError {
    fn from_init(e: EvalError) -> Self {
        match e {
            EvalError::BudgetExhausted { used, .. } => Self::InvalidBudget {
                budget_share: used,
                n_init: 0,
            },
            other => Self::Eval(other),
        }
    }
}

/// Tunables of the EA phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EAConfig {
    pub n_init: usize,
    pub n_min: usize,
    pub h_mem: usize,
    pub p_min: f64,
    /// Archive capacity as a multiple of the current population size.
    pub archive_rate: f64,
    /// Generations without relative improvement above 1e-12 before the
    /// CMA branch restarts.
    pub stagnation_window: u32,
    pub scout_fraction: f64,
    pub cma_fraction: f64,
    pub f_memory_init: f64,
    pub cr_memory_init: f64,
}

impl Default for EAConfig {
    fn default() -> Self {
        Self {
            n_init: 180,
            n_min: 4,
            h_mem: 6,
            p_min: 0.11,
            archive_rate: 1.0,
            stagnation_window: 50,
            scout_fraction: 0.20,
            cma_fraction: 0.10,
            f_memory_init: 0.5,
            cr_memory_init: 0.5,
        }
    }
}

impl EAConfig {
    pub fn validate(&self) -> Result<(), EaError> {
        let bad = |m: &str| Err(EaError::InvalidConfig(m.to_string()));
        if self.n_min < 4 {
            return bad("n_min must be at least 4");
        }
        if self.n_init < self.n_min {
            return bad("n_init must be at least n_min");
        }
        if self.h_mem == 0 {
            return bad("h_mem must be positive");
        }
        if !(self.p_min > 0.0 && self.p_min <= 1.0) {
            return bad("p_min must lie in (0, 1]");
        }
        if !(self.archive_rate >= 0.0 && self.archive_rate.is_finite()) {
            return bad("archive_rate must be finite and nonnegative");
        }
        if self.stagnation_window == 0 {
            return bad("stagnation_window must be at least 1");
        }
        let frac = |v: f64| (0.0..=1.0).contains(&v);
        if !frac(self.scout_fraction) || !frac(self.cma_fraction) {
            return bad("fractions must lie in [0, 1]");
        }
        if !(self.scout_fraction + self.cma_fraction < 1.0) {
            return bad("scout_fraction + cma_fraction must be below 1");
        }
        if !(self.f_memory_init > 0.0 && self.f_memory_init <= 1.0) {
            return bad("f_memory_init must lie in (0, 1]");
        }
        if !frac(self.cr_memory_init) {
            return bad("cr_memory_init must lie in [0, 1]");
        }
        Ok(())
    }
}

/// Linear population-size schedule:
/// `round(n_init - (n_init - n_min) * used / cap)`, clamped to `[n_min, n_init]`.
pub fn lpsr_size(used: u64, cap: u64, n_init: usize, n_min: usize) -> usize {
    if cap == 0 {
        return n_min;
    }
    let frac = used as f64 / cap as f64;
    let size = (n_init as f64 - (n_init - n_min) as f64 * frac).round();
    (size.max(n_min as f64) as usize).clamp(n_min, n_init)
}
