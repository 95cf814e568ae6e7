//! Mechanics of an automated design loop over the mutation operator's
//! parameters: show a gated observation to a proposer, validate and
//! smoke-test its reply, benchmark it, keep it only on a strict win-count
//! improvement, and log every outcome so the loop survives restarts.

mod config;
mod log;
mod observation;
mod proposer;

pub use config::{is_snake_case, parse_envelope, validate_proposal, OperatorConfig, ProposalEnvelope, OPERATOR_FIELDS};
pub use log::LoopLog;
pub use observation::{
    assemble_observation, results_csv, FunctionResult, LandscapeDescriptor, ObservationPayload, HISTORY_WINDOW,
};
pub use proposer::{ExternalProposer, Proposer, ProposerError, ScriptedProposer, DEFAULT_PROPOSER_TIMEOUT};

use std::fmt;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gnbg::ProblemInstance;
use crate::harness::{budget_for, run_one, run_suite_on, HarnessError, SuiteConfig, SuiteReport};
use crate::polish::PolishVariant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Keep,
    Discard,
    Crash,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Keep => "keep",
            Self::Discard => "discard",
            Self::Crash => "crash",
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "keep" => Ok(Self::Keep),
            "discard" => Ok(Self::Discard),
            "crash" => Ok(Self::Crash),
            other => Err(format!("unknown status {other:?}")),
        }
    }
}

/// One experiment; one line of `experiments.tsv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentLogEntry {
    pub tag: String,
    pub total_wins: usize,
    pub hard_wins: usize,
    pub status: Status,
    pub description: String,
}

/// Tag logged for replies that could not be parsed.
pub const UNPARSED_TAG: &str = "unparsed_proposal";

impl ExperimentLogEntry {
    fn single_line(s: &str) -> String {
        s.split(['\t', '\n', '\r']).filter(|p| !p.is_empty()).collect::<Vec<_>>().join(" ")
    }

    pub fn tsv_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}",
            Self::single_line(&self.tag),
            self.total_wins,
            self.hard_wins,
            self.status,
            Self::single_line(&self.description)
        )
    }

    pub fn parse_tsv_line(line: &str) -> Result<Self, String> {
        let cols: Vec<&str> = line.splitn(5, '\t').collect();
        if cols.len() != 5 {
            return Err(format!("expected 5 columns, got {}", cols.len()));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| format!("bad count {s:?}: {e}"));
        Ok(Self {
            tag: cols[0].to_string(),
            total_wins: int(cols[1])?,
            hard_wins: int(cols[2])?,
            status: cols[3].parse()?,
            description: cols[4].to_string(),
        })
    }
}

/// A configuration that was kept, in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeptConfig {
    pub tag: String,
    pub total_wins: usize,
    pub config: OperatorConfig,
}

/// Everything the loop carries between steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopState {
    /// Proposals consumed so far.
    pub iteration: u64,
    pub best_config: OperatorConfig,
    pub best_total_wins: usize,
    pub best_results: Vec<FunctionResult>,
    /// Functions that did not win every run under the baseline.
    pub hard_subset: Vec<u32>,
    pub history: Vec<ExperimentLogEntry>,
    pub lineage: Vec<KeptConfig>,
}

#[derive(Debug, Error)]
pub enum LoopError {
    #[error(transparent)]
    Proposer(#[from] ProposerError),
    #[error("baseline benchmark failed: {0}")]
    Baseline(String),
    #[error("loop log is inconsistent: {0}")]
    Log(String),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Reduced benchmark run before a full one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmokeSpec {
    /// Leading suite functions to use.
    pub functions: usize,
    pub seeds: Vec<u64>,
    /// Fraction of each function's budget.
    pub budget_fraction: f64,
}

impl Default for SmokeSpec {
    fn default() -> Self {
        Self {
            functions: 3,
            seeds: vec![0, 1],
            budget_fraction: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmokeOutcome {
    Pass,
    Fail(String),
}

/// The fixed part of a loop: suite, instances and smoke settings.
pub struct LoopContext {
    pub suite: SuiteConfig,
    pub instances: Vec<(u32, ProblemInstance)>,
    pub smoke: SmokeSpec,
    pub parallel: bool,
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

impl LoopContext {
    pub fn new(suite: SuiteConfig) -> Result<Self, LoopError> {
        suite.validate()?;
        let instances = suite.load_instances()?;
        Ok(Self::from_instances(suite, instances))
    }

    pub fn from_instances(suite: SuiteConfig, instances: Vec<(u32, ProblemInstance)>) -> Self {
        Self {
            suite,
            instances,
            smoke: SmokeSpec::default(),
            parallel: true,
        }
    }

    pub fn landscapes(&self) -> Vec<LandscapeDescriptor> {
        self.instances.iter().map(|(id, inst)| LandscapeDescriptor::of(*id, inst)).collect()
    }

    fn suite_for(&self, op: &OperatorConfig) -> SuiteConfig {
        SuiteConfig {
            ea: op.apply(&self.suite.ea),
            ..self.suite.clone()
        }
    }

    /// Full benchmark under `op`, compliant polish only. Panics are caught
    /// and reported as errors.
    pub fn benchmark(&self, op: &OperatorConfig) -> Result<SuiteReport, String> {
        let suite = self.suite_for(op);
        catch_unwind(AssertUnwindSafe(|| {
            run_suite_on(&suite, &self.instances, PolishVariant::CompliantB, self.parallel)
        }))
        .map_err(panic_message)?
        .map_err(|e| e.to_string())
    }

    /// Passes iff every reduced run finishes without error or panic and
    /// yields a finite gap.
    pub fn smoke_test(&self, op: &OperatorConfig) -> SmokeOutcome {
        let suite = self.suite_for(op);
        for (id, inst) in self.instances.iter().take(self.smoke.functions) {
            let full = match budget_for(*id, suite.budget_override) {
                Ok(b) => b,
                Err(e) => return SmokeOutcome::Fail(e.to_string()),
            };
            let budget = ((full as f64 * self.smoke.budget_fraction).round() as u64).max(1);
            let mut settings = match suite.settings_for(*id, PolishVariant::CompliantB) {
                Ok(s) => s,
                Err(e) => return SmokeOutcome::Fail(e.to_string()),
            };
            settings.budget = budget;
            for &seed in &self.smoke.seeds {
                match catch_unwind(AssertUnwindSafe(|| run_one(inst, *id, seed, &settings))) {
                    Err(p) => return SmokeOutcome::Fail(format!("f{id} seed {seed} panicked: {}", panic_message(p))),
                    Ok(Err(e)) => return SmokeOutcome::Fail(format!("f{id} seed {seed}: {e}")),
                    Ok(Ok(r)) if !r.final_gap.is_finite() => {
                        return SmokeOutcome::Fail(format!("f{id} seed {seed}: non-finite gap"))
                    }
                    Ok(Ok(_)) => {}
                }
            }
        }
        SmokeOutcome::Pass
    }

    fn hard_wins(&self, report: &SuiteReport, hard: &[u32]) -> usize {
        hard.iter().filter_map(|&id| report.wins_for(id)).sum()
    }
}

fn results_of(report: &SuiteReport) -> Vec<FunctionResult> {
    report
        .functions
        .iter()
        .map(|f| FunctionResult {
            function_id: f.function_id,
            wins: f.wins,
            mean_gap: f.mean_gap,
            std_gap: f.std_gap,
        })
        .collect()
}

impl LoopState {
    /// Benchmarks the suite's own configuration to set the bar and the hard
    /// subset.
    pub fn initialize(ctx: &LoopContext) -> Result<Self, LoopError> {
        let config = OperatorConfig::from_ea(&ctx.suite.ea);
        let report = ctx.benchmark(&config).map_err(LoopError::Baseline)?;
        Ok(Self {
            iteration: 0,
            best_total_wins: report.total_wins,
            hard_subset: report
                .functions
                .iter()
                .filter(|f| f.wins < f.runs)
                .map(|f| f.function_id)
                .collect(),
            best_results: results_of(&report),
            best_config: config,
            history: Vec::new(),
            lineage: Vec::new(),
        })
    }

    /// Kept total wins, in order; strictly increasing.
    pub fn kept_wins(&self) -> Vec<usize> {
        self.lineage.iter().map(|k| k.total_wins).collect()
    }
}

/// One experiment: observe, propose, validate, smoke-test, benchmark,
/// decide. Returns the next state and the logged entry; a proposer with
/// nothing to offer leaves the state untouched and returns an error.
pub fn loop_step(
    state: &LoopState,
    ctx: &LoopContext,
    proposer: &mut dyn Proposer,
) -> Result<(LoopState, ExperimentLogEntry), LoopError> {
    let observation = assemble_observation(state, &ctx.landscapes());
    let reply = match proposer.propose(&observation) {
        Err(ProposerError::Unavailable) => return Err(ProposerError::Unavailable.into()),
        other => other,
    };
    let mut next = state.clone();
    next.iteration += 1;
    let crash = |tag: &str, why: String| ExperimentLogEntry {
        tag: tag.to_string(),
        total_wins: 0,
        hard_wins: 0,
        status: Status::Crash,
        description: why,
    };
    let entry = match reply.map_err(|e| e.to_string()).and_then(|text| parse_envelope(&text)) {
        Err(why) => crash(UNPARSED_TAG, why),
        Ok(env) => evaluate_proposal(&mut next, ctx, &env).unwrap_or_else(|why| crash(&env.experiment_tag, why)),
    };
    next.history.push(entry.clone());
    Ok((next, entry))
}

fn evaluate_proposal(next: &mut LoopState, ctx: &LoopContext, env: &ProposalEnvelope) -> Result<ExperimentLogEntry, String> {
    validate_proposal(env).map_err(|errs| format!("invalid proposal: {}", errs.join("; ")))?;
    if let SmokeOutcome::Fail(why) = ctx.smoke_test(&env.config) {
        return Err(format!("smoke test failed: {why}"));
    }
    let report = ctx.benchmark(&env.config).map_err(|e| format!("benchmark failed: {e}"))?;
    let status = if report.total_wins > next.best_total_wins {
        Status::Keep
    } else {
        Status::Discard
    };
    if status == Status::Keep {
        next.best_total_wins = report.total_wins;
        next.best_config = env.config.clone();
        next.best_results = results_of(&report);
        next.lineage.push(KeptConfig {
            tag: env.experiment_tag.clone(),
            total_wins: report.total_wins,
            config: env.config.clone(),
        });
    }
    Ok(ExperimentLogEntry {
        tag: env.experiment_tag.clone(),
        total_wins: report.total_wins,
        hard_wins: ctx.hard_wins(&report, &next.hard_subset),
        status,
        description: env.strategy.clone(),
    })
}

/// Runs up to `max_iters` experiments, resuming from `log` when it holds a
/// state. Stops early when the proposer runs dry.
pub fn run_loop(
    ctx: &LoopContext,
    log: &LoopLog,
    proposer: &mut dyn Proposer,
    max_iters: usize,
) -> Result<LoopState, LoopError> {
    let mut state = match log.load_state()? {
        Some(s) => s,
        None => {
            let s = LoopState::initialize(ctx)?;
            log.save_state(&s)?;
            s
        }
    };
    log.reconcile(&state)?;
    for _ in 0..max_iters {
        match loop_step(&state, ctx, proposer) {
            Ok((next, _)) => {
                log.commit(&next)?;
                state = next;
            }
            Err(LoopError::Proposer(ProposerError::Unavailable)) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(state)
}
