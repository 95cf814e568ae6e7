use super::{DescriptorView, EvalError, ProblemInstance};
use crate::Bounds;

/// Per-run evaluation budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalCounter {
    used: u64,
    cap: u64,
}

impl EvalCounter {
    pub fn new(cap: u64) -> Self {
        Self { used: 0, cap }
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn cap(&self) -> u64 {
        self.cap
    }

    pub fn remaining(&self) -> u64 {
        self.cap - self.used
    }

    /// Consumes one evaluation, failing once the cap is reached.
    pub fn charge(&mut self) -> Result<(), EvalError> {
        if self.used >= self.cap {
            return Err(EvalError::BudgetExhausted {
                used: self.used,
                cap: self.cap,
            });
        }
        self.used += 1;
        Ok(())
    }
}

/// The optimizer's only handle on a problem: counted evaluations plus the
/// blackbox-visible descriptors. It deliberately offers no path back to the
/// underlying [`ProblemInstance`].
///
/// A soft `limit` (at most the cap) lets the driver stop one phase early
/// while keeping a single counter for the whole run.
#[derive(Debug)]
pub struct Evaluator<'a> {
    inst: &'a ProblemInstance,
    counter: EvalCounter,
    limit: u64,
    view: DescriptorView,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a ProblemInstance, cap: u64) -> Self {
        Self {
            inst,
            counter: EvalCounter::new(cap),
            limit: cap,
            view: inst.descriptor_view(),
        }
    }

    pub fn evaluate(&mut self, x: &[f64]) -> Result<f64, EvalError> {
        if self.counter.used() >= self.limit {
            return Err(EvalError::BudgetExhausted {
                used: self.counter.used(),
                cap: self.limit,
            });
        }
        self.inst.evaluate(x, &mut self.counter)
    }

    pub fn dim(&self) -> usize {
        self.view.dim
    }

    pub fn bounds(&self) -> Bounds {
        self.view.bounds()
    }

    pub fn descriptor(&self) -> &DescriptorView {
        &self.view
    }

    pub fn used(&self) -> u64 {
        self.counter.used()
    }

    pub fn cap(&self) -> u64 {
        self.counter.cap()
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// Sets the soft limit, clamped to `[used, cap]`.
    pub fn set_limit(&mut self, limit: u64) {
        self.limit = limit.clamp(self.counter.used(), self.counter.cap());
    }

    /// Evaluations left before the soft limit.
    pub fn remaining(&self) -> u64 {
        self.limit - self.counter.used()
    }
}
