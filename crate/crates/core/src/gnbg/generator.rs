use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{Component, InstanceError, ProblemInstance, TransformParams};
use crate::Bounds;

/// Closed sampling interval; `lo == hi` pins the value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
}

impl ParamRange {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn fixed(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            rng.random_range(self.lo..=self.hi)
        }
    }

    fn is_ordered(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }
}

/// Recipe for a generated composition function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceSpec {
    pub dim: usize,
    pub components: usize,
    pub lb: f64,
    pub ub: f64,
    pub sigma: ParamRange,
    pub widths: ParamRange,
    pub lambda: ParamRange,
    pub mu: ParamRange,
    pub omega: ParamRange,
    pub rotation: bool,
    /// Minimum gap between the winning depth and every other depth.
    pub sigma_separation: f64,
    /// Fraction of the box width kept clear on each side when placing minima.
    pub margin: f64,
}

impl Default for InstanceSpec {
    fn default() -> Self {
        Self {
            dim: 30,
            components: 1,
            lb: -100.0,
            ub: 100.0,
            sigma: ParamRange::new(-100.0, 0.0),
            widths: ParamRange::new(1.0, 10.0),
            lambda: ParamRange::new(0.5, 1.0),
            mu: ParamRange::new(0.0, 0.2),
            omega: ParamRange::new(0.0, 50.0),
            rotation: false,
            sigma_separation: 1.0,
            margin: 0.05,
        }
    }
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<Bounds, InstanceError> {
        let bad = |msg: &str| Err(InstanceError::InvalidSpec(msg.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if self.components == 0 {
            return bad("component count must be at least 1");
        }
        let Some(bounds) = Bounds::new(self.lb, self.ub) else {
            return bad("lb must be strictly below ub");
        };
        for (name, r) in [
            ("sigma", self.sigma),
            ("widths", self.widths),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("omega", self.omega),
        ] {
            if !r.is_ordered() {
                return bad(&format!("{name} range must be finite with lo <= hi"));
            }
        }
        if self.widths.lo <= 0.0 || self.lambda.lo <= 0.0 {
            return bad("widths and lambda ranges must be positive");
        }
        if self.mu.lo < 0.0 || self.omega.lo < 0.0 {
            return bad("mu and omega ranges must be nonnegative");
        }
        if !(self.sigma_separation > 0.0) {
            return bad("sigma_separation must be positive");
        }
        if self.components > 1 && self.sigma.hi - self.sigma.lo < self.sigma_separation {
            return bad("sigma range narrower than sigma_separation");
        }
        if !(0.0..0.5).contains(&self.margin) {
            return bad("margin must lie in [0, 0.5)");
        }
        Ok(bounds)
    }
}

/// Haar-like random orthogonal matrix: QR of a standard-normal matrix with
/// the columns of Q sign-corrected so that R has a positive diagonal.
/// Returned row-major.
pub fn random_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let mut entries = Vec::with_capacity(dim * dim);
    for _ in 0..dim * dim {
        entries.push(rng.sample::<f64, _>(StandardNormal));
    }
    let a = DMatrix::from_row_slice(dim, dim, &entries);
    let qr = a.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            out.push(q[(i, j)]);
        }
    }
    out
}

/// Generates an instance deterministically from `(spec, seed)`.
///
/// One randomly chosen component takes the bottom of the depth range and all
/// others sit at least `sigma_separation` above it, which certifies a unique
/// global minimum at that component's position.
pub fn make_instance(spec: &InstanceSpec, seed: u64) -> Result<ProblemInstance, InstanceError> {
    let bounds = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = spec.components;
    let winner = rng.random_range(0..k);
    let inset = spec.margin * bounds.width();
    let (lo, hi) = (bounds.lb + inset, bounds.ub - inset);

    let mut components = Vec::with_capacity(k);
    for idx in 0..k {
        let m: Vec<f64> = (0..spec.dim)
            .map(|_| {
                let v: f64 = rng.random_range(lo..=hi);
                // keep strictly interior when the margin is zero
                v.clamp(bounds.lb.next_up(), bounds.ub.next_down())
            })
            .collect();
        let sigma = if idx == winner {
            spec.sigma.lo
        } else {
            ParamRange::new(spec.sigma.lo + spec.sigma_separation, spec.sigma.hi.max(spec.sigma.lo + spec.sigma_separation))
                .sample(&mut rng)
        };
        let widths: Vec<f64> = (0..spec.dim).map(|_| spec.widths.sample(&mut rng)).collect();
        let lambda = spec.lambda.sample(&mut rng);
        let transform = TransformParams {
            mu_pos: spec.mu.sample(&mut rng),
            mu_neg: spec.mu.sample(&mut rng),
            omega: [
                spec.omega.sample(&mut rng),
                spec.omega.sample(&mut rng),
                spec.omega.sample(&mut rng),
                spec.omega.sample(&mut rng),
            ],
        };
        let rotation = spec.rotation.then(|| random_rotation(spec.dim, &mut rng));
        components.push(Component::new(m, sigma, widths, rotation, lambda, transform)?);
    }
    ProblemInstance::from_components(bounds, components, seed)
}
