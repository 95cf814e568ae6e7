use serde::{Deserialize, Serialize};

use super::{ExperimentLogEntry, LoopState, OperatorConfig};
use crate::gnbg::ProblemInstance;

/// History entries shown to a proposer.
pub const HISTORY_WINDOW: usize = 20;

/// Blackbox-visible description of one function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeDescriptor {
    pub function_id: u32,
    pub dim: usize,
    pub lb: f64,
    pub ub: f64,
    pub lambda: Vec<f64>,
    pub omega: Vec<[f64; 4]>,
    pub rotation_flag: u8,
}

impl LandscapeDescriptor {
    pub fn of(function_id: u32, inst: &ProblemInstance) -> Self {
        let v = inst.descriptor_view();
        Self {
            function_id,
            dim: v.dim,
            lb: v.lb,
            ub: v.ub,
            lambda: v.lambda_all,
            omega: v.omega_all,
            rotation_flag: v.rotation_flag,
        }
    }
}

/// Per-function results of one full benchmark, without labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionResult {
    pub function_id: u32,
    pub wins: usize,
    pub mean_gap: f64,
    pub std_gap: f64,
}

/// What a proposer gets to see. Built from descriptors and per-function
/// outcomes only: component positions, depths, widths and rotations never
/// enter, nor do failure labels or statistics pooled across functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationPayload {
    pub current_config: OperatorConfig,
    /// `function_id,wins,mean_gap,std_gap` for the best kept configuration.
    pub results_csv: String,
    pub history: Vec<ExperimentLogEntry>,
    pub landscapes: Vec<LandscapeDescriptor>,
}

pub fn results_csv(results: &[FunctionResult]) -> String {
    let mut out = String::from("function_id,wins,mean_gap,std_gap\n");
    for r in results {
        out.push_str(&format!("{},{},{:.16e},{:.16e}\n", r.function_id, r.wins, r.mean_gap, r.std_gap));
    }
    out
}

pub fn assemble_observation(state: &LoopState, landscapes: &[LandscapeDescriptor]) -> ObservationPayload {
    let skip = state.history.len().saturating_sub(HISTORY_WINDOW);
    ObservationPayload {
        current_config: state.best_config.clone(),
        results_csv: results_csv(&state.best_results),
        history: state.history[skip..].to_vec(),
        landscapes: landscapes.to_vec(),
    }
}
