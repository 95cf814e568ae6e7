use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{EvalCounter, EvalError, InstanceError, TransformParams};
use crate::Bounds;

/// Elementwise tolerance for `R * R^T = I`.
pub const ORTHOGONALITY_TOL: f64 = 1e-10;

/// One basin of a composition function.
#[derive(Debug, Clone, PartialEq)]
pub struct Component {
    m: Vec<f64>,
    sigma: f64,
    widths: Vec<f64>,
    /// Row-major `dim x dim` rotation.
    rotation: Vec<f64>,
    rotated: bool,
    lambda: f64,
    transform: TransformParams,
}

impl Component {
    /// `rotation` is row-major; pass `None` for the identity.
    pub fn new(
        m: Vec<f64>,
        sigma: f64,
        widths: Vec<f64>,
        rotation: Option<Vec<f64>>,
        lambda: f64,
        transform: TransformParams,
    ) -> Result<Self, InstanceError> {
        let dim = m.len();
        if dim == 0 {
            return Err(InstanceError::Invariant("component has zero dimension".into()));
        }
        if widths.len() != dim {
            return Err(InstanceError::Invariant(format!(
                "widths has length {} but m has length {dim}",
                widths.len()
            )));
        }
        if !m.iter().all(|v| v.is_finite()) || !sigma.is_finite() {
            return Err(InstanceError::Invariant("non-finite m or sigma".into()));
        }
        if !widths.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(InstanceError::Invariant("widths must be positive".into()));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(InstanceError::Invariant("lambda must be positive".into()));
        }
        if !transform.is_valid() {
            return Err(InstanceError::Invariant(
                "mu and omega must be finite and nonnegative".into(),
            ));
        }
        let rotation = match rotation {
            Some(r) => {
                if r.len() != dim * dim {
                    return Err(InstanceError::Invariant(format!(
                        "rotation has {} entries, expected {}",
                        r.len(),
                        dim * dim
                    )));
                }
                let dev = orthogonality_defect(&r, dim);
                if !(dev <= ORTHOGONALITY_TOL) {
                    return Err(InstanceError::NotOrthogonal { max_deviation: dev });
                }
                r
            }
            None => identity(dim),
        };
        let rotated = rotation != identity(dim);
        Ok(Self {
            m,
            sigma,
            widths,
            rotation,
            rotated,
            lambda,
            transform,
        })
    }

    pub fn dim(&self) -> usize {
        self.m.len()
    }

    pub fn m(&self) -> &[f64] {
        &self.m
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    /// Row-major rotation entries.
    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn rotation_rows(&self) -> Vec<Vec<f64>> {
        self.rotation.chunks(self.dim()).map(<[f64]>::to_vec).collect()
    }

    pub fn is_rotated(&self) -> bool {
        self.rotated
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn transform(&self) -> &TransformParams {
        &self.transform
    }

    /// `sigma + (sum_i widths_i * z_i^2)^lambda` with `z = T(R (x - m))`.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let n = self.m.len();
        let mut acc = 0.0;
        if self.rotated {
            for i in 0..n {
                let row = &self.rotation[i * n..(i + 1) * n];
                let y: f64 = row
                    .iter()
                    .zip(x.iter().zip(&self.m))
                    .map(|(r, (xi, mi))| r * (xi - mi))
                    .sum();
                let z = self.transform.apply_scalar(y);
                acc += self.widths[i] * z * z;
            }
        } else {
            for ((xi, mi), w) in x.iter().zip(&self.m).zip(&self.widths) {
                let z = self.transform.apply_scalar(xi - mi);
                acc += w * z * z;
            }
        }
        if self.lambda == 1.0 {
            self.sigma + acc
        } else {
            self.sigma + acc.powf(self.lambda)
        }
    }
}

/// Free-function form of [`Component::value`].
pub fn component_value(x: &[f64], c: &Component) -> f64 {
    c.value(x)
}

pub(crate) fn identity(dim: usize) -> Vec<f64> {
    let mut r = vec![0.0; dim * dim];
    for i in 0..dim {
        r[i * dim + i] = 1.0;
    }
    r
}

/// Largest elementwise deviation of `R R^T` from the identity.
pub fn orthogonality_defect(r: &[f64], dim: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let dot: f64 = (0..dim).map(|k| r[i * dim + k] * r[j * dim + k]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            let dev = (dot - target).abs();
            if !(dev <= worst) {
                worst = dev;
            }
        }
    }
    worst
}

/// A composition function: the pointwise minimum over its components.
///
/// Immutable after construction. Reads of structural metadata (component
/// internals, optimum position) are counted so tests can prove a code path
/// never touched them.
#[derive(Debug)]
pub struct ProblemInstance {
    dim: usize,
    bounds: Bounds,
    components: Vec<Component>,
    optimum_value: f64,
    optimum_position: Vec<f64>,
    instance_seed: u64,
    structural_reads: AtomicU64,
}

impl ProblemInstance {
    /// Builds an instance and certifies its optimum from the component depths.
    pub fn from_components(
        bounds: Bounds,
        components: Vec<Component>,
        instance_seed: u64,
    ) -> Result<Self, InstanceError> {
        let first = components
            .first()
            .ok_or_else(|| InstanceError::Invariant("instance has no components".into()))?;
        let dim = first.dim();
        for (k, c) in components.iter().enumerate() {
            if c.dim() != dim {
                return Err(InstanceError::Invariant(format!(
                    "component {k} has dimension {}, expected {dim}",
                    c.dim()
                )));
            }
            if !c.m.iter().all(|&v| v > bounds.lb && v < bounds.ub) {
                return Err(InstanceError::Invariant(format!(
                    "component {k} minimum lies outside the open search box"
                )));
            }
        }
        // Lowest index wins ties.
        let mut best = 0;
        for (k, c) in components.iter().enumerate().skip(1) {
            if c.sigma < components[best].sigma {
                best = k;
            }
        }
        Ok(Self {
            dim,
            bounds,
            optimum_value: components[best].sigma,
            optimum_position: components[best].m.clone(),
            components,
            instance_seed,
            structural_reads: AtomicU64::new(0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn instance_seed(&self) -> u64 {
        self.instance_seed
    }

    pub fn optimum_value(&self) -> f64 {
        self.optimum_value
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Position of the certified global minimum. Counted as a structural read.
    pub fn optimum_position(&self) -> &[f64] {
        self.structural_reads.fetch_add(1, Ordering::Relaxed);
        &self.optimum_position
    }

    /// Full component list. Counted as a structural read.
    pub fn components(&self) -> &[Component] {
        self.structural_reads.fetch_add(1, Ordering::Relaxed);
        &self.components
    }

    /// Component minimum positions, the only metadata the leaky polish
    /// variant consumes. Counted as a structural read.
    pub fn leak_component_minima(&self) -> ComponentMinima {
        self.structural_reads.fetch_add(1, Ordering::Relaxed);
        ComponentMinima(self.components.iter().map(|c| c.m.clone()).collect())
    }

    /// Number of structural-metadata reads since construction.
    pub fn structural_reads(&self) -> u64 {
        self.structural_reads.load(Ordering::Relaxed)
    }

    /// Objective value without budget accounting.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for c in &self.components {
            let v = c.value(x);
            if v < best {
                best = v;
            }
        }
        best
    }

    /// Budgeted evaluation: charges exactly one evaluation to `counter`.
    pub fn evaluate(&self, x: &[f64], counter: &mut EvalCounter) -> Result<f64, EvalError> {
        if x.len() != self.dim {
            return Err(EvalError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        if !x.iter().all(|v| v.is_finite()) {
            return Err(EvalError::NonFinite);
        }
        counter.charge()?;
        Ok(self.value(x))
    }

    /// The blackbox-visible landscape descriptors.
    pub fn descriptor_view(&self) -> DescriptorView {
        DescriptorView {
            dim: self.dim,
            lb: self.bounds.lb,
            ub: self.bounds.ub,
            comp_num: self.components.len(),
            lambda_all: self.components.iter().map(|c| c.lambda).collect(),
            omega_all: self.components.iter().map(|c| c.transform.omega).collect(),
            rotation_flag: u8::from(self.components.iter().any(|c| c.rotated)),
        }
    }
}

impl Clone for ProblemInstance {
    fn clone(&self) -> Self {
        Self {
            dim: self.dim,
            bounds: self.bounds,
            components: self.components.clone(),
            optimum_value: self.optimum_value,
            optimum_position: self.optimum_position.clone(),
            instance_seed: self.instance_seed,
            structural_reads: AtomicU64::new(0),
        }
    }
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.bounds == other.bounds
            && self.components == other.components
            && self.optimum_value.to_bits() == other.optimum_value.to_bits()
            && self.optimum_position == other.optimum_position
            && self.instance_seed == other.instance_seed
    }
}

/// Descriptors a blackbox optimizer may see: bounds, basin nonlinearity,
/// transform frequencies and whether anything is rotated. Nothing here
/// locates a basin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorView {
    pub dim: usize,
    pub lb: f64,
    pub ub: f64,
    pub comp_num: usize,
    pub lambda_all: Vec<f64>,
    pub omega_all: Vec<[f64; 4]>,
    pub rotation_flag: u8,
}

impl DescriptorView {
    pub fn bounds(&self) -> Bounds {
        Bounds {
            lb: self.lb,
            ub: self.ub,
        }
    }

    pub fn max_lambda(&self) -> f64 {
        self.lambda_all.iter().fold(0.0, |a, &l| a.max(l.abs()))
    }
}

/// Component minimum positions handed to the leaky polish variant.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMinima(pub Vec<Vec<f64>>);
