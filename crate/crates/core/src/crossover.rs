//! Bracket-adaptive binomial crossover.
//!
//! Every trial uses a crossover rate from one of two disjoint brackets (a
//! low one that mostly keeps the parent and a high one that mostly takes the
//! mutant). The probability of picking the high bracket oscillates with the
//! generation count and is shifted up for individuals better than the
//! population median. This operator is frozen: nothing in the design loop's
//! edit surface reaches it.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lshade::Crossover;
use crate::RunRng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
}

impl Bracket {
    /// Affine map of `[0, 1]` onto the bracket.
    #[inline]
    pub fn map(&self, t: f64) -> f64 {
        self.lo + t * (self.hi - self.lo)
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossoverConfig {
    pub low_bracket: Bracket,
    pub high_bracket: Bracket,
    pub oscillation_period: u32,
    pub oscillation_amplitude: f64,
    pub competitiveness_weight: f64,
}

impl Default for CrossoverConfig {
    fn default() -> Self {
        Self {
            low_bracket: Bracket { lo: 0.0, hi: 0.15 },
            high_bracket: Bracket { lo: 0.85, hi: 1.0 },
            oscillation_period: 50,
            oscillation_amplitude: 0.25,
            competitiveness_weight: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid crossover configuration: {0}")]
pub struct CrossoverConfigError(pub String);

impl CrossoverConfig {
    pub fn validate(&self) -> Result<(), CrossoverConfigError> {
        let (l, h) = (self.low_bracket, self.high_bracket);
        let unit = |b: Bracket| 0.0 <= b.lo && b.lo <= b.hi && b.hi <= 1.0;
        if !unit(l) || !unit(h) {
            return Err(CrossoverConfigError("brackets must be ordered subsets of [0, 1]".into()));
        }
        if !(l.hi < h.lo || h.hi < l.lo) {
            return Err(CrossoverConfigError("brackets must be disjoint".into()));
        }
        if self.oscillation_period == 0 {
            return Err(CrossoverConfigError("oscillation_period must be positive".into()));
        }
        if !(self.oscillation_amplitude >= 0.0
            && self.competitiveness_weight >= 0.0
            && self.oscillation_amplitude + self.competitiveness_weight <= 0.5)
        {
            return Err(CrossoverConfigError(
                "amplitude and weight must be nonnegative with sum at most 0.5".into(),
            ));
        }
        Ok(())
    }

    /// Probability of drawing from the high bracket.
    pub fn high_probability(&self, generation: u64, competitive: bool) -> f64 {
        let phase = 2.0 * PI * generation as f64 / f64::from(self.oscillation_period);
        let tilt = if competitive { 1.0 } else { -1.0 };
        (0.5 + self.oscillation_amplitude * phase.sin() + self.competitiveness_weight * tilt).clamp(0.0, 1.0)
    }
}

/// Maps a raw rate into the high bracket when `u < p_high`, else the low one.
pub fn bracket_cr_from_uniform(cr_raw: f64, p_high: f64, u: f64, cfg: &CrossoverConfig) -> f64 {
    let t = cr_raw.clamp(0.0, 1.0);
    if u < p_high {
        cfg.high_bracket.map(t)
    } else {
        cfg.low_bracket.map(t)
    }
}

pub fn bracket_cr<R: Rng + ?Sized>(
    cr_raw: f64,
    generation: u64,
    competitive: bool,
    cfg: &CrossoverConfig,
    rng: &mut R,
) -> f64 {
    let p = cfg.high_probability(generation, competitive);
    bracket_cr_from_uniform(cr_raw, p, rng.random::<f64>(), cfg)
}

/// Classic binomial crossover; coordinate `jrand` always comes from the mutant.
pub fn binomial_crossover<R: Rng + ?Sized>(target: &[f64], mutant: &[f64], cr: f64, rng: &mut R) -> Vec<f64> {
    assert_eq!(target.len(), mutant.len(), "crossover operands differ in length");
    let jrand = rng.random_range(0..target.len());
    target
        .iter()
        .zip(mutant)
        .enumerate()
        .map(|(j, (&t, &m))| if j == jrand || rng.random::<f64>() < cr { m } else { t })
        .collect()
}

/// The bracket scheme plugged into the engine.
#[derive(Debug, Clone, Copy)]
pub struct BracketCrossover {
    cfg: CrossoverConfig,
}

impl BracketCrossover {
    pub fn new(cfg: CrossoverConfig) -> Self {
        Self { cfg }
    }
}

impl Crossover for BracketCrossover {
    fn cross(
        &mut self,
        target: &[f64],
        mutant: &[f64],
        cr_raw: f64,
        generation: u64,
        competitive: bool,
        rng: &mut RunRng,
    ) -> (Vec<f64>, f64) {
        let cr = bracket_cr(cr_raw, generation, competitive, &self.cfg, rng);
        (binomial_crossover(target, mutant, cr, rng), cr)
    }
}
