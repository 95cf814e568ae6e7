use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::gnbg::EvalError;
use crate::Bounds;

/// Sufficient-decrease constant of the Armijo test.
const ARMIJO_C1: f64 = 1e-4;
/// Halvings tried before a line search gives up.
const MAX_BACKTRACKS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalOptConfig {
    /// Curvature pairs kept by the limited-memory update.
    pub history_pairs: usize,
    /// Finite-difference step as a fraction of the box width.
    pub fd_step: f64,
    /// Stop once the projected gradient's max-norm falls to this value.
    pub grad_tol: f64,
    /// `None` leaves the budget as the only iteration limit.
    pub max_iters_per_start: Option<usize>,
}

impl Default for LocalOptConfig {
    fn default() -> Self {
        Self {
            history_pairs: 10,
            fd_step: 1e-8,
            grad_tol: 1e-12,
            max_iters_per_start: None,
        }
    }
}

impl LocalOptConfig {
    pub fn is_valid(&self) -> bool {
        self.history_pairs > 0
            && self.fd_step > 0.0
            && self.grad_tol > 0.0
            && self.max_iters_per_start.is_none_or(|m| m > 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    GradientTolerance,
    NoProgress,
    Budget,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalResult {
    /// Best point evaluated, including finite-difference probes.
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: u64,
    pub iterations: usize,
    pub stop: StopReason,
    /// Objective value at each accepted iterate, starting with `f(x0)`.
    pub accepted: Vec<f64>,
}

/// Counts calls and remembers the best point seen.
struct Probe<'f, F> {
    f: &'f mut F,
    max: u64,
    evals: u64,
    best_x: Vec<f64>,
    best_f: f64,
}

impl<F: FnMut(&[f64]) -> Result<f64, EvalError>> Probe<'_, F> {
    fn call(&mut self, x: &[f64]) -> Option<f64> {
        if self.evals >= self.max {
            return None;
        }
        match (self.f)(x) {
            Ok(v) => {
                self.evals += 1;
                if v < self.best_f {
                    self.best_f = v;
                    self.best_x.clear();
                    self.best_x.extend_from_slice(x);
                }
                Some(v)
            }
            Err(_) => {
                self.max = self.evals;
                None
            }
        }
    }

    fn left(&self) -> u64 {
        self.max - self.evals
    }
}

/// Projected limited-memory BFGS on a box with central finite-difference
/// gradients and backtracking Armijo line search. Every objective call,
/// probes included, counts against `max_evals`; the objective reporting an
/// error ends the search as if the budget ran out.
///
/// With `max_evals == 0` nothing is evaluated and `f` is infinite.
pub fn local_minimize<F>(mut objective: F, x0: &[f64], bounds: Bounds, max_evals: u64, cfg: &LocalOptConfig) -> LocalResult
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    let n = x0.len();
    let mut x: Vec<f64> = x0.iter().map(|&v| bounds.clip(v)).collect();
    let mut p = Probe {
        f: &mut objective,
        max: max_evals,
        evals: 0,
        best_x: x.clone(),
        best_f: f64::INFINITY,
    };
    let finish = |p: Probe<'_, F>, iterations, stop, accepted| LocalResult {
        x: p.best_x,
        f: p.best_f,
        evals: p.evals,
        iterations,
        stop,
        accepted,
    };
    let Some(mut fx) = p.call(&x) else {
        return finish(p, 0, StopReason::Budget, Vec::new());
    };
    let mut accepted = vec![fx];
    let h = cfg.fd_step * bounds.width();
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(cfg.history_pairs);
    let mut g = match gradient(&mut p, &x, h, bounds) {
        Some(g) => g,
        None => return finish(p, 0, StopReason::Budget, accepted),
    };
    let mut iterations = 0;
    loop {
        if cfg.max_iters_per_start.is_some_and(|m| iterations >= m) {
            return finish(p, iterations, StopReason::MaxIterations, accepted);
        }
        let pg = projected_gradient(&x, &g, bounds);
        if pg.iter().fold(0.0f64, |a, v| a.max(v.abs())) <= cfg.grad_tol {
            return finish(p, iterations, StopReason::GradientTolerance, accepted);
        }

        let mut d = two_loop(&g, &memory);
        restrict_direction(&mut d, &x, bounds);
        let mut slope = dot(&d, &g);
        if !(slope < 0.0) {
            memory.clear();
            d = pg.iter().map(|v| -v).collect();
            slope = dot(&d, &g);
        }
        // without curvature information the first step is capped at unit length
        let mut alpha = if memory.is_empty() {
            (1.0 / norm(&d)).min(1.0)
        } else {
            1.0
        };

        let mut step = None;
        for _ in 0..MAX_BACKTRACKS {
            let trial: Vec<f64> = (0..n).map(|j| bounds.clip(x[j] + alpha * d[j])).collect();
            let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
            if s.iter().all(|&v| v == 0.0) {
                break;
            }
            let Some(ft) = p.call(&trial) else {
                return finish(p, iterations, StopReason::Budget, accepted);
            };
            if ft <= fx + ARMIJO_C1 * dot(&g, &s).min(0.0) {
                step = Some((trial, s, ft));
                break;
            }
            alpha *= 0.5;
        }

        let Some((x_new, s, f_new)) = step else {
            if memory.is_empty() {
                return finish(p, iterations, StopReason::NoProgress, accepted);
            }
            memory.clear();
            continue;
        };
        let Some(g_new) = gradient(&mut p, &x_new, h, bounds) else {
            return finish(p, iterations, StopReason::Budget, accepted);
        };
        let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y) && sy.is_finite() {
            if memory.len() == cfg.history_pairs {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        let progressed = f_new < fx;
        x = x_new;
        fx = f_new;
        g = g_new;
        accepted.push(fx);
        iterations += 1;
        if !progressed && memory.is_empty() {
            return finish(p, iterations, StopReason::NoProgress, accepted);
        }
        if p.left() == 0 {
            return finish(p, iterations, StopReason::Budget, accepted);
        }
    }
}

/// Central differences with probes clipped to the box.
fn gradient<F>(p: &mut Probe<'_, F>, x: &[f64], h: f64, bounds: Bounds) -> Option<Vec<f64>>
where
    F: FnMut(&[f64]) -> Result<f64, EvalError>,
{
    if p.left() < 2 * x.len() as u64 {
        p.max = p.evals;
        return None;
    }
    let mut probe = x.to_vec();
    let mut g = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let hi = bounds.clip(x[j] + h);
        let lo = bounds.clip(x[j] - h);
        probe[j] = hi;
        let f_hi = p.call(&probe)?;
        probe[j] = lo;
        let f_lo = p.call(&probe)?;
        probe[j] = x[j];
        g.push((f_hi - f_lo) / (hi - lo));
    }
    Some(g)
}

/// Zeroes gradient components that would push through an active bound.
fn projected_gradient(x: &[f64], g: &[f64], bounds: Bounds) -> Vec<f64> {
    x.iter()
        .zip(g)
        .map(|(&xi, &gi)| {
            if (xi <= bounds.lb && gi > 0.0) || (xi >= bounds.ub && gi < 0.0) {
                0.0
            } else {
                gi
            }
        })
        .collect()
}

fn restrict_direction(d: &mut [f64], x: &[f64], bounds: Bounds) {
    for (di, &xi) in d.iter_mut().zip(x) {
        if (xi <= bounds.lb && *di < 0.0) || (xi >= bounds.ub && *di > 0.0) {
            *di = 0.0;
        }
    }
}

/// `-H g` by the two-loop recursion.
fn two_loop(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        axpy(&mut q, -a, y);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        axpy(&mut q, a - b, s);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
