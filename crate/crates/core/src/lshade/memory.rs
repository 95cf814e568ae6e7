use rand::Rng;
use rand_distr::{Cauchy, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::EaError;

/// Scale of the Cauchy draw for F and the normal draw for CR.
pub const PARAM_SCALE: f64 = 0.1;
/// Redraws allowed for a nonpositive F before falling back.
pub const F_MAX_ATTEMPTS: usize = 100;
/// F returned when every redraw was nonpositive.
pub const F_FALLBACK: f64 = 0.1;

/// A parameter pair that produced a strictly better trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Success {
    pub f: f64,
    pub cr: f64,
    /// Fitness improvement; must be positive.
    pub delta: f64,
}

/// Circular success-history memory for F and CR. `None` in `m_cr` is the
/// terminal marker: once set, that slot always yields CR = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryMemory {
    m_f: Vec<f64>,
    m_cr: Vec<Option<f64>>,
    k: usize,
}

impl HistoryMemory {
    pub fn new(h_mem: usize, f_init: f64, cr_init: f64) -> Self {
        assert!(h_mem > 0, "history memory needs at least one slot");
        Self {
            m_f: vec![f_init; h_mem],
            m_cr: vec![Some(cr_init); h_mem],
            k: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.m_f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m_f.is_empty()
    }

    pub fn m_f(&self) -> &[f64] {
        &self.m_f
    }

    pub fn m_cr(&self) -> &[Option<f64>] {
        &self.m_cr
    }

    pub fn write_index(&self) -> usize {
        self.k
    }

    /// Draws F from a Cauchy around a random slot's location.
    pub fn sample_f<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let r = rng.random_range(0..self.len());
        let loc = self.m_f[r];
        match Cauchy::new(loc, PARAM_SCALE) {
            Ok(dist) => f_from_draws(|| dist.sample(rng)),
            // only reachable with a non-finite location
            Err(_) => f64::NAN,
        }
    }

    /// Draws CR from a normal around a random slot's location.
    pub fn sample_cr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let r = rng.random_range(0..self.len());
        match self.m_cr[r] {
            None => 0.0,
            Some(loc) => match Normal::new(loc, PARAM_SCALE) {
                Ok(dist) => cr_from_draw(dist.sample(rng)),
                Err(_) => f64::NAN,
            },
        }
    }

    /// Writes the improvement-weighted Lehmer means of the successes into
    /// the current slot and advances it. An empty list leaves the memory
    /// untouched.
    pub fn update(&mut self, successes: &[Success]) -> Result<(), EaError> {
        if successes.is_empty() {
            return Ok(());
        }
        if let Some(s) = successes.iter().find(|s| !(s.delta > 0.0)) {
            return Err(EaError::NonPositiveImprovement(s.delta));
        }
        let total: f64 = successes.iter().map(|s| s.delta).sum();
        let lehmer = |value: fn(&Success) -> f64| {
            // fused accumulation rounds once per term
            let (num, den) = successes.iter().fold((0.0f64, 0.0f64), |(n, d), s| {
                let v = value(s);
                let wv = s.delta / total * v;
                (wv.mul_add(v, n), d + wv)
            });
            num / den
        };
        self.m_f[self.k] = lehmer(|s| s.f).min(1.0);
        let max_cr = successes.iter().fold(0.0f64, |a, s| a.max(s.cr));
        self.m_cr[self.k] = match self.m_cr[self.k] {
            Some(_) if max_cr > 0.0 => Some(lehmer(|s| s.cr).min(1.0)),
            _ => None,
        };
        self.k = (self.k + 1) % self.len();
        Ok(())
    }
}

/// Applies the F acceptance rule to a stream of raw draws: clip above at 1,
/// redraw nonpositive values, give up after [`F_MAX_ATTEMPTS`].
pub fn f_from_draws(mut draw: impl FnMut() -> f64) -> f64 {
    for _ in 0..F_MAX_ATTEMPTS {
        let v = draw();
        if v > 1.0 {
            return 1.0;
        }
        if !(v <= 0.0) {
            return v;
        }
    }
    F_FALLBACK
}

pub fn cr_from_draw(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}
