use serde::{Deserialize, Serialize};

/// Scalar box bounds shared by every coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lb: f64,
    pub ub: f64,
}

impl Bounds {
    /// Returns `None` unless `lb < ub` and both are finite.
    pub fn new(lb: f64, ub: f64) -> Option<Self> {
        (lb.is_finite() && ub.is_finite() && lb < ub).then_some(Self { lb, ub })
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.ub - self.lb
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        v >= self.lb && v <= self.ub
    }

    pub fn contains_all(&self, x: &[f64]) -> bool {
        x.iter().all(|&v| self.contains(v))
    }

    #[inline]
    pub fn clip(&self, v: f64) -> f64 {
        v.clamp(self.lb, self.ub)
    }

    pub fn clip_all(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = self.clip(*v);
        }
    }

    /// Midpoint reflection: a coordinate outside the box is replaced by the
    /// midpoint between the violated bound and the matching `anchor` coordinate.
    /// `anchor` must lie inside the box.
    pub fn repair_midpoint(&self, x: &mut [f64], anchor: &[f64]) {
        debug_assert_eq!(x.len(), anchor.len());
        for (v, &a) in x.iter_mut().zip(anchor) {
            if *v < self.lb {
                *v = (self.lb + a) / 2.0;
            } else if *v > self.ub {
                *v = (self.ub + a) / 2.0;
            }
        }
    }
}
