use serde::{Deserialize, Serialize};

/// Coefficients of the sign-preserving log-sine modulation applied to each
/// rotated coordinate of a component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransformParams {
    /// Modulation strength for positive coordinates.
    pub mu_pos: f64,
    /// Modulation strength for negative coordinates.
    pub mu_neg: f64,
    /// Angular frequencies; the first pair acts on positive coordinates,
    /// the second pair on negative ones.
    pub omega: [f64; 4],
}

impl TransformParams {
    pub const IDENTITY: Self = Self {
        mu_pos: 0.0,
        mu_neg: 0.0,
        omega: [0.0; 4],
    };

    pub fn is_identity(&self) -> bool {
        self.mu_pos == 0.0 && self.mu_neg == 0.0
    }

    pub fn is_valid(&self) -> bool {
        self.mu_pos >= 0.0
            && self.mu_neg >= 0.0
            && self.mu_pos.is_finite()
            && self.mu_neg.is_finite()
            && self.omega.iter().all(|w| w.is_finite() && *w >= 0.0)
    }

    /// Scalar form of the transform.
    #[inline]
    pub fn apply_scalar(&self, y: f64) -> f64 {
        if y > 0.0 {
            if self.mu_pos == 0.0 {
                return y;
            }
            let l = y.ln();
            (l + self.mu_pos * ((self.omega[0] * l).sin() + (self.omega[1] * l).sin())).exp()
        } else if y < 0.0 {
            if self.mu_neg == 0.0 {
                return y;
            }
            let l = (-y).ln();
            -(l + self.mu_neg * ((self.omega[2] * l).sin() + (self.omega[3] * l).sin())).exp()
        } else {
            0.0
        }
    }

    /// Largest factor by which the transform can stretch a magnitude:
    /// `|T(y)| <= |y| * exp(2 * max(mu_pos, mu_neg))`.
    pub fn max_stretch(&self) -> f64 {
        (2.0 * self.mu_pos.max(self.mu_neg)).exp()
    }
}

impl Default for TransformParams {
    fn default() -> Self {
        Self::IDENTITY
    }
}

/// Applies the transform elementwise.
pub fn transform(y: &[f64], params: &TransformParams) -> Vec<f64> {
    y.iter().map(|&v| params.apply_scalar(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_when_mu_zero() {
        let p = TransformParams {
            mu_pos: 0.0,
            mu_neg: 0.0,
            omega: [3.0, 7.0, 11.0, 13.0],
        };
        let y = [-3.5, 0.0, 1e-300, 2.25, 1e10];
        assert_eq!(transform(&y, &p), y.to_vec());
    }

    #[test]
    fn zero_maps_to_zero() {
        let p = TransformParams {
            mu_pos: 0.4,
            mu_neg: 0.3,
            omega: [5.0; 4],
        };
        assert_eq!(transform(&[0.0, 0.0, 0.0], &p), vec![0.0; 3]);
    }

    #[test]
    fn log_of_one_kills_modulation() {
        let p = TransformParams {
            mu_pos: 0.2,
            mu_neg: 0.0,
            omega: [5.0; 4],
        };
        assert_eq!(p.apply_scalar(1.0), 1.0);
    }

    #[test]
    fn matches_high_precision_reference() {
        // References evaluated with 40-digit arithmetic:
        // exp(1 + 0.1 (sin 1 + sin 2)) and -exp(1 + 0.3 (sin 3 + sin 0.5)).
        let p = TransformParams {
            mu_pos: 0.1,
            mu_neg: 0.3,
            omega: [1.0, 2.0, 3.0, 0.5],
        };
        let pos = p.apply_scalar(std::f64::consts::E);
        let neg = p.apply_scalar(-std::f64::consts::E);
        assert!((pos - 3.238_391_776_069_040_8).abs() < 1e-14);
        assert!((neg + 3.274_495_017_273_272_7).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn preserves_sign_and_stretch_bound(
            y in -1e6f64..1e6,
            mu_pos in 0.0f64..1.0,
            mu_neg in 0.0f64..1.0,
            w in proptest::array::uniform4(0.0f64..60.0),
        ) {
            let p = TransformParams { mu_pos, mu_neg, omega: w };
            let t = p.apply_scalar(y);
            prop_assert_eq!(t.signum() == y.signum() || y == 0.0, true);
            prop_assert!(t.abs() <= y.abs() * p.max_stretch() * (1.0 + 1e-12));
        }
    }
}
