//! Seeded benchmark harness: per-function budgets, the EA/polish split,
//! win counting, gap statistics, failure classification and report files.

mod classify;
mod report;

pub use classify::{aggregate_wins, classify_failure, ClassifierThresholds, FailureLabel};
pub use report::{
    read_summary_csv, runs_csv_string, summary_csv_string, write_report_json, write_reports, write_runs_csv,
    write_summary_csv, SummaryRow,
};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::crossover::CrossoverConfig;
use crate::gnbg::{load_instance, Evaluator, InstanceError, ProblemInstance};
use crate::lshade::{run_ea, EAConfig, EaError};
use crate::polish::{run_polish, LocalOptConfig, PolishError, PolishVariant};
use crate::RunRng;

/// Functions in the reference suite.
pub const FUNCTION_COUNT: u32 = 24;
/// Last function id that gets the smaller budget.
pub const SMALL_BUDGET_LAST_ID: u32 = 15;
pub const SMALL_BUDGET: u64 = 500_000;
pub const LARGE_BUDGET: u64 = 1_000_000;
pub const DEFAULT_EA_SHARE: f64 = 0.95;
pub const DEFAULT_WIN_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_SEEDS: std::ops::RangeInclusive<u64> = 0..=30;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("function id {0} is outside 1..={FUNCTION_COUNT}")]
    FunctionRange(u32),
    #[error("cannot load instance for f{id} from {path}: {source}")]
    MissingInstance {
        id: u32,
        path: PathBuf,
        #[source]
        source: InstanceError,
    },
    #[error("invalid suite configuration: {0}")]
    Config(String),
    #[error("budget {budget} leaves the EA fewer than {n_min} evaluations")]
    BudgetTooSmall { budget: u64, n_min: usize },
    #[error(transparent)]
    Ea(#[from] EaError),
    #[error(transparent)]
    Polish(#[from] PolishError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Evaluation budget per run: the smaller budget for the first fifteen
/// functions, the larger one after. An override applies to every id.
pub fn budget_for(function_id: u32, override_budget: Option<u64>) -> Result<u64, HarnessError> {
    if function_id == 0 {
        return Err(HarnessError::FunctionRange(function_id));
    }
    if let Some(b) = override_budget {
        return Ok(b);
    }
    match function_id {
        1..=SMALL_BUDGET_LAST_ID => Ok(SMALL_BUDGET),
        id if id <= FUNCTION_COUNT => Ok(LARGE_BUDGET),
        id => Err(HarnessError::FunctionRange(id)),
    }
}

/// Evaluations given to the EA phase: `floor(ea_share * budget)`.
pub fn ea_budget(budget: u64, ea_share: f64) -> u64 {
    (ea_share * budget as f64).floor() as u64
}

/// Everything that determines a run besides the instance and the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub budget: u64,
    pub ea_share: f64,
    pub win_threshold: f64,
    pub variant: PolishVariant,
    pub ea: EAConfig,
    pub crossover: CrossoverConfig,
    pub local: LocalOptConfig,
}

impl RunSettings {
    pub fn new(budget: u64) -> Self {
        Self {
            budget,
            ea_share: DEFAULT_EA_SHARE,
            win_threshold: DEFAULT_WIN_THRESHOLD,
            variant: PolishVariant::CompliantB,
            ea: EAConfig::default(),
            crossover: CrossoverConfig::default(),
            local: LocalOptConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function_id: u32,
    pub seed: u64,
    pub final_gap: f64,
    pub win: bool,
    pub evals_used: u64,
    /// Gap before polish.
    pub ea_gap: f64,
    pub wall_ms: u64,
    pub non_compliant: bool,
}

/// A run record plus phase-level counters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunDetail {
    pub record: RunRecord,
    pub ea_used: u64,
    pub polish_evals: u64,
    pub cma_trials: usize,
    pub best_x: Vec<f64>,
    pub best_f: f64,
}

/// One seeded run: EA on `floor(ea_share * budget)` evaluations, then polish
/// on everything left.
pub fn run_one(inst: &ProblemInstance, function_id: u32, seed: u64, settings: &RunSettings) -> Result<RunRecord, HarnessError> {
    run_one_detailed(inst, function_id, seed, settings).map(|d| d.record)
}

pub fn run_one_detailed(
    inst: &ProblemInstance,
    function_id: u32,
    seed: u64,
    settings: &RunSettings,
) -> Result<RunDetail, HarnessError> {
    let start = Instant::now();
    let share = ea_budget(settings.budget, settings.ea_share);
    let mut cfg = settings.ea.clone();
    if share < cfg.n_min as u64 {
        return Err(HarnessError::BudgetTooSmall {
            budget: settings.budget,
            n_min: cfg.n_min,
        });
    }
    // desk-scale budgets may not cover the full initial population
    cfg.n_init = cfg.n_init.min(share as usize);

    let mut eval = Evaluator::new(inst, settings.budget);
    let mut rng = RunRng::seed_from_u64(seed);
    let ea = run_ea(&mut eval, share, &cfg, &settings.crossover, &mut rng)?;
    let ea_gap = (ea.best_f - inst.optimum_value()).abs();

    let leaky = settings.variant == PolishVariant::LeakyA;
    let minima = leaky.then(|| inst.leak_component_minima());
    let polished = run_polish(&mut eval, &ea, settings.variant, minima.as_ref(), &settings.local, &mut rng)?;
    let final_gap = (polished.best_f - inst.optimum_value()).abs();

    Ok(RunDetail {
        record: RunRecord {
            function_id,
            seed,
            final_gap,
            win: final_gap < settings.win_threshold,
            evals_used: eval.used(),
            ea_gap,
            wall_ms: start.elapsed().as_millis() as u64,
            non_compliant: leaky,
        },
        ea_used: ea.used,
        polish_evals: polished.evals,
        cma_trials: ea.cma_trials(),
        best_x: polished.best_x,
        best_f: polished.best_f,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionReport {
    pub function_id: u32,
    pub runs: usize,
    pub wins: usize,
    pub mean_gap: f64,
    /// Population standard deviation of the final gaps.
    pub std_gap: f64,
    pub label: FailureLabel,
}

impl FunctionReport {
    /// Aggregates the records of one function.
    pub fn from_records(function_id: u32, records: &[RunRecord], thresholds: &ClassifierThresholds) -> Self {
        let gaps: Vec<f64> = records.iter().map(|r| r.final_gap).collect();
        let wins = records.iter().filter(|r| r.win).count();
        let (mean_gap, std_gap) = mean_std(&gaps);
        Self {
            function_id,
            runs: records.len(),
            wins,
            mean_gap,
            std_gap,
            label: classify_failure(wins, records.len(), mean_gap, std_gap, thresholds),
        }
    }
}

/// Mean and population standard deviation; zeros for an empty slice.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionEntry {
    pub id: u32,
    /// Relative paths resolve against the suite file's directory.
    pub instance_path: PathBuf,
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.collect()
}

fn default_ea_share() -> f64 {
    DEFAULT_EA_SHARE
}

fn default_win_threshold() -> f64 {
    DEFAULT_WIN_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub functions: Vec<FunctionEntry>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_override: Option<u64>,
    #[serde(default = "default_ea_share")]
    pub ea_share: f64,
    #[serde(default = "default_win_threshold")]
    pub win_threshold: f64,
    #[serde(default)]
    pub ea: EAConfig,
    #[serde(default)]
    pub classifier: ClassifierThresholds,
}

impl SuiteConfig {
    pub fn new(functions: Vec<FunctionEntry>) -> Self {
        Self {
            functions,
            seeds: default_seeds(),
            budget_override: None,
            ea_share: DEFAULT_EA_SHARE,
            win_threshold: DEFAULT_WIN_THRESHOLD,
            ea: EAConfig::default(),
            classifier: ClassifierThresholds::default(),
        }
    }

    /// Reads a suite file and makes its instance paths absolute.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for f in &mut cfg.functions {
            if f.instance_path.is_relative() {
                f.instance_path = base.join(&f.instance_path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: &str| Err(HarnessError::Config(m.to_string()));
        if self.functions.is_empty() {
            return bad("no functions");
        }
        if self.seeds.is_empty() {
            return bad("no seeds");
        }
        if !(self.ea_share > 0.0 && self.ea_share <= 1.0) {
            return bad("ea_share must lie in (0, 1]");
        }
        if !(self.win_threshold > 0.0) {
            return bad("win_threshold must be positive");
        }
        let mut ids: Vec<u32> = self.functions.iter().map(|f| f.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("duplicate function id");
        }
        self.ea.validate()?;
        Ok(())
    }

    pub fn settings_for(&self, function_id: u32, variant: PolishVariant) -> Result<RunSettings, HarnessError> {
        Ok(RunSettings {
            budget: budget_for(function_id, self.budget_override)?,
            ea_share: self.ea_share,
            win_threshold: self.win_threshold,
            variant,
            ea: self.ea.clone(),
            crossover: CrossoverConfig::default(),
            local: LocalOptConfig::default(),
        })
    }

    /// Loads every instance, failing on the first missing one.
    pub fn load_instances(&self) -> Result<Vec<(u32, ProblemInstance)>, HarnessError> {
        self.functions
            .iter()
            .map(|f| {
                load_instance(&f.instance_path)
                    .map(|inst| (f.id, inst))
                    .map_err(|source| HarnessError::MissingInstance {
                        id: f.id,
                        path: f.instance_path.clone(),
                        source,
                    })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub functions: Vec<FunctionReport>,
    pub runs: Vec<RunRecord>,
    pub total_wins: usize,
    pub total_runs: usize,
    pub variant: PolishVariant,
    pub non_compliant: bool,
    pub config: SuiteConfig,
    pub version: String,
}

impl SuiteReport {
    pub fn wins_for(&self, function_id: u32) -> Option<usize> {
        self.functions.iter().find(|f| f.function_id == function_id).map(|f| f.wins)
    }
}

/// Runs every seed of every function, in parallel when asked. Records come
/// back ordered by `(function_id, seed)` either way.
pub fn run_suite(cfg: &SuiteConfig, variant: PolishVariant, parallel: bool) -> Result<SuiteReport, HarnessError> {
    cfg.validate()?;
    let instances = cfg.load_instances()?;
    run_suite_on(cfg, &instances, variant, parallel)
}

/// [`run_suite`] on instances already in memory.
pub fn run_suite_on(
    cfg: &SuiteConfig,
    instances: &[(u32, ProblemInstance)],
    variant: PolishVariant,
    parallel: bool,
) -> Result<SuiteReport, HarnessError> {
    let mut jobs = Vec::new();
    for (id, inst) in instances {
        let settings = cfg.settings_for(*id, variant)?;
        for &seed in &cfg.seeds {
            jobs.push((*id, inst, seed, settings.clone()));
        }
    }
    let run = |(id, inst, seed, settings): &(u32, &ProblemInstance, u64, RunSettings)| run_one(inst, *id, *seed, settings);
    let results: Vec<Result<RunRecord, HarnessError>> = if parallel {
        jobs.par_iter().map(run).collect()
    } else {
        jobs.iter().map(run).collect()
    };
    let mut runs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    runs.sort_by_key(|r| (r.function_id, r.seed));

    let mut ids: Vec<u32> = instances.iter().map(|(id, _)| *id).collect();
    ids.sort_unstable();
    let functions: Vec<FunctionReport> = ids
        .iter()
        .map(|&id| {
            let recs: Vec<RunRecord> = runs.iter().filter(|r| r.function_id == id).cloned().collect();
            FunctionReport::from_records(id, &recs, &cfg.classifier)
        })
        .collect();
    Ok(SuiteReport {
        total_wins: aggregate_wins(functions.iter().map(|f| f.wins)),
        total_runs: runs.len(),
        functions,
        runs,
        variant,
        non_compliant: variant == PolishVariant::LeakyA,
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    })
}
