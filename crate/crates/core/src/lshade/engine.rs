use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{lpsr_size, EAConfig, EaError, HistoryMemory, Success};
use crate::crossover::{BracketCrossover, CrossoverConfig};
use crate::gnbg::{DescriptorView, EvalError, Evaluator};
use crate::mutation::ScoutMutation;
use crate::{Bounds, RunRng};

/// Mutation role of an individual for one generation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Pbest,
    Scout,
    Cma,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub x: Vec<f64>,
    pub f: f64,
    pub role: Role,
}

/// Read-only view of the population handed to the mutation operator.
pub struct GenerationContext<'s> {
    pub population: &'s [Individual],
    pub archive: &'s [Vec<f64>],
    /// Population indices ordered best first (ties by index).
    pub ranked: &'s [usize],
    pub view: &'s DescriptorView,
    pub bounds: Bounds,
    pub p_min: f64,
    pub generation: u64,
    pub best_x: &'s [f64],
    pub best_f: f64,
}

/// An evaluated trial vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Offspring {
    pub index: usize,
    pub role: Role,
    pub x: Vec<f64>,
    pub f: f64,
}

/// End-of-generation information for operators that keep their own state.
pub struct GenerationFeedback<'s> {
    pub offspring: &'s [Offspring],
    pub best_x: &'s [f64],
    pub best_f: f64,
    pub improved: bool,
    /// Set when the stagnation counter reached the configured window.
    pub stagnated: bool,
    pub bounds: Bounds,
}

pub trait Mutation {
    /// Labels every individual for the coming generation.
    fn assign_roles(&mut self, ctx: &GenerationContext<'_>, rng: &mut RunRng) -> Vec<Role>;

    fn mutate(&mut self, i: usize, role: Role, ctx: &GenerationContext<'_>, f: f64, rng: &mut RunRng) -> Vec<f64>;

    fn observe(&mut self, _feedback: &GenerationFeedback<'_>) {}
}

pub trait Crossover {
    /// Returns the trial vector and the crossover rate actually applied.
    fn cross(
        &mut self,
        target: &[f64],
        mutant: &[f64],
        cr_raw: f64,
        generation: u64,
        competitive: bool,
        rng: &mut RunRng,
    ) -> (Vec<f64>, f64);
}

/// Produces the initial population.
pub trait Initializer {
    fn initialize(&self, n: usize, dim: usize, bounds: Bounds, rng: &mut RunRng) -> Vec<Vec<f64>>;
}

/// Independent uniform sampling in the box.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformInit;

impl Initializer for UniformInit {
    fn initialize(&self, n: usize, dim: usize, bounds: Bounds, rng: &mut RunRng) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..dim).map(|_| rng.random_range(bounds.lb..=bounds.ub)).collect())
            .collect()
    }
}

/// One line of the convergence trace, recorded after each generation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub used: u64,
    pub best_f: f64,
    /// Population size after the size reduction.
    pub population: usize,
    /// Population size while the generation ran.
    pub active: usize,
    pub pbest_trials: usize,
    pub scout_trials: usize,
    pub cma_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EAResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    /// Evaluations consumed by the EA phase.
    pub used: u64,
    pub trace: Vec<TracePoint>,
}

impl EAResult {
    /// `used,best_f` per generation.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("used,best_f\n");
        for p in &self.trace {
            out.push_str(&format!("{},{:.16e}\n", p.used, p.best_f));
        }
        out
    }

    pub fn cma_trials(&self) -> usize {
        self.trace.iter().map(|p| p.cma_trials).sum()
    }
}

#[derive(Debug, Clone)]
pub struct EAState {
    pub population: Vec<Individual>,
    pub archive: Vec<Vec<f64>>,
    pub memory: HistoryMemory,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub generation: u64,
    pub stagnation_count: u32,
    /// Evaluator count when the EA phase began.
    pub phase_start: u64,
    /// Evaluations allotted to the EA phase.
    pub budget_share: u64,
}

impl EAState {
    /// Evaluates an initial population. Fails if the budget cannot cover it.
    pub fn initialize(
        eval: &mut Evaluator<'_>,
        cfg: &EAConfig,
        init: &dyn Initializer,
        budget_share: u64,
        rng: &mut RunRng,
    ) -> Result<Self, EaError> {
        let phase_start = eval.used();
        let points = init.initialize(cfg.n_init, eval.dim(), eval.bounds(), rng);
        let mut population = Vec::with_capacity(points.len());
        for x in points {
            let f = eval.evaluate(&x).map_err(EaError::from_init)?;
            population.push(Individual { x, f, role: Role::Pbest });
        }
        let best = best_index(&population);
        Ok(Self {
            best_x: population[best].x.clone(),
            best_f: population[best].f,
            population,
            archive: Vec::new(),
            memory: HistoryMemory::new(cfg.h_mem, cfg.f_memory_init, cfg.cr_memory_init),
            generation: 0,
            stagnation_count: 0,
            phase_start,
            budget_share,
        })
    }

    fn ranked(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.population.len()).collect();
        idx.sort_by(|&a, &b| self.population[a].f.total_cmp(&self.population[b].f).then(a.cmp(&b)));
        idx
    }

    fn median_f(&self) -> f64 {
        let mut fs: Vec<f64> = self.population.iter().map(|p| p.f).collect();
        fs.sort_by(f64::total_cmp);
        let n = fs.len();
        if n % 2 == 1 {
            fs[n / 2]
        } else {
            0.5 * (fs[n / 2 - 1] + fs[n / 2])
        }
    }

    fn archive_capacity(&self, cfg: &EAConfig) -> usize {
        (cfg.archive_rate * self.population.len() as f64).round() as usize
    }

    fn push_archive(&mut self, x: Vec<f64>, cap: usize, rng: &mut RunRng) {
        if cap == 0 {
            return;
        }
        if self.archive.len() < cap {
            self.archive.push(x);
        } else {
            let slot = rng.random_range(0..self.archive.len());
            self.archive[slot] = x;
        }
    }
}

fn best_index(pop: &[Individual]) -> usize {
    let mut best = 0;
    for (i, ind) in pop.iter().enumerate().skip(1) {
        if ind.f < pop[best].f {
            best = i;
        }
    }
    best
}

/// Outcome of one generation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationReport {
    pub point: TracePoint,
    /// The evaluator ran dry before every individual produced a trial.
    pub exhausted: bool,
}

/// Runs one LSHADE generation: roles, mutation, crossover, bound repair,
/// evaluation, selection, archive and memory updates, then the linear
/// population-size reduction.
pub fn ea_generation<M: Mutation, C: Crossover>(
    state: &mut EAState,
    eval: &mut Evaluator<'_>,
    cfg: &EAConfig,
    mutation: &mut M,
    crossover: &mut C,
    rng: &mut RunRng,
) -> Result<GenerationReport, EaError> {
    let n = state.population.len();
    let bounds = eval.bounds();
    let view = eval.descriptor().clone();
    let ranked = state.ranked();
    let median = state.median_f();

    let mut offspring: Vec<Offspring> = Vec::with_capacity(n);
    let mut params: Vec<(f64, f64)> = Vec::with_capacity(n);
    let mut exhausted = false;
    {
        let ctx = GenerationContext {
            population: &state.population,
            archive: &state.archive,
            ranked: &ranked,
            view: &view,
            bounds,
            p_min: cfg.p_min,
            generation: state.generation,
            best_x: &state.best_x,
            best_f: state.best_f,
        };
        let roles = mutation.assign_roles(&ctx, rng);
        debug_assert_eq!(roles.len(), n);
        for (i, &role) in roles.iter().enumerate() {
            let f = state.memory.sample_f(rng);
            let cr_raw = state.memory.sample_cr(rng);
            let mutant = mutation.mutate(i, role, &ctx, f, rng);
            let parent = &state.population[i];
            let competitive = parent.f < median;
            let (mut trial, cr) = crossover.cross(&parent.x, &mutant, cr_raw, state.generation, competitive, rng);
            bounds.repair_midpoint(&mut trial, &parent.x);
            match eval.evaluate(&trial) {
                Ok(ft) => {
                    offspring.push(Offspring { index: i, role, x: trial, f: ft });
                    params.push((f, cr));
                }
                Err(EvalError::BudgetExhausted { .. }) => {
                    exhausted = true;
                    break;
                }
                Err(e) => return Err(EaError::Eval(e)),
            }
        }
    }

    let prev_best = state.best_f;
    let mut successes = Vec::new();
    let cap = state.archive_capacity(cfg);
    for (child, &(f, cr)) in offspring.iter().zip(&params) {
        let parent_f = state.population[child.index].f;
        if child.f <= parent_f {
            if child.f < parent_f {
                let old = std::mem::replace(&mut state.population[child.index].x, child.x.clone());
                state.push_archive(old, cap, rng);
                // the CMA branch does not use F, so it does not feed the memory
                if child.role != Role::Cma {
                    successes.push(Success { f, cr, delta: parent_f - child.f });
                }
            } else {
                state.population[child.index].x.clone_from(&child.x);
            }
            state.population[child.index].f = child.f;
            state.population[child.index].role = child.role;
        }
        if child.f < state.best_f {
            state.best_f = child.f;
            state.best_x.clone_from(&child.x);
        }
    }
    state.memory.update(&successes)?;

    let improvement = prev_best - state.best_f;
    let improved = improvement > 1e-12 * prev_best.abs();
    if improved {
        state.stagnation_count = 0;
    } else {
        state.stagnation_count += 1;
    }
    let stagnated = state.stagnation_count >= cfg.stagnation_window;
    mutation.observe(&GenerationFeedback {
        offspring: &offspring,
        best_x: &state.best_x,
        best_f: state.best_f,
        improved: state.best_f < prev_best,
        stagnated,
        bounds,
    });
    if stagnated {
        state.stagnation_count = 0;
    }

    let used = eval.used() - state.phase_start;
    let target = lpsr_size(used.min(state.budget_share), state.budget_share, cfg.n_init, cfg.n_min);
    if state.population.len() > target {
        state.population.sort_by(|a, b| a.f.total_cmp(&b.f));
        state.population.truncate(target);
    }
    let cap = state.archive_capacity(cfg);
    while state.archive.len() > cap {
        let slot = rng.random_range(0..state.archive.len());
        state.archive.swap_remove(slot);
    }
    state.generation += 1;

    let count = |r: Role| offspring.iter().filter(|o| o.role == r).count();
    Ok(GenerationReport {
        point: TracePoint {
            used,
            best_f: state.best_f,
            population: state.population.len(),
            active: n,
            pbest_trials: count(Role::Pbest),
            scout_trials: count(Role::Scout),
            cma_trials: count(Role::Cma),
        },
        exhausted,
    })
}

/// Runs the EA phase with the shipped operators until `budget_share`
/// evaluations are spent.
pub fn run_ea(
    eval: &mut Evaluator<'_>,
    budget_share: u64,
    cfg: &EAConfig,
    crossover: &CrossoverConfig,
    rng: &mut RunRng,
) -> Result<EAResult, EaError> {
    cfg.validate()?;
    let mut mutation = ScoutMutation::new(cfg);
    let mut crossover = BracketCrossover::new(*crossover);
    run_ea_with(eval, budget_share, cfg, &UniformInit, &mut mutation, &mut crossover, rng)
}

/// [`run_ea`] with caller-supplied operators.
pub fn run_ea_with<M: Mutation, C: Crossover>(
    eval: &mut Evaluator<'_>,
    budget_share: u64,
    cfg: &EAConfig,
    init: &dyn Initializer,
    mutation: &mut M,
    crossover: &mut C,
    rng: &mut RunRng,
) -> Result<EAResult, EaError> {
    cfg.validate()?;
    if budget_share < cfg.n_init as u64 {
        return Err(EaError::InvalidBudget {
            budget_share,
            n_init: cfg.n_init,
        });
    }
    let start = eval.used();
    let outer_limit = eval.limit();
    eval.set_limit(start.saturating_add(budget_share));
    if eval.remaining() < cfg.n_init as u64 {
        eval.set_limit(outer_limit);
        return Err(EaError::InvalidBudget {
            budget_share: eval.remaining(),
            n_init: cfg.n_init,
        });
    }

    let result = (|| {
        let mut state = EAState::initialize(eval, cfg, init, budget_share, rng)?;
        let mut trace = Vec::new();
        while eval.remaining() > 0 {
            let report = ea_generation(&mut state, eval, cfg, mutation, crossover, rng)?;
            trace.push(report.point);
            if report.exhausted {
                break;
            }
        }
        Ok(EAResult {
            best_x: state.best_x,
            best_f: state.best_f,
            used: eval.used() - start,
            trace,
        })
    })();
    eval.set_limit(outer_limit);
    result
}
