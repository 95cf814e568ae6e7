use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::Bounds;

/// Initial step size as a fraction of the box width.
pub const RESET_STEP_FRACTION: f64 = 0.3;
/// Eigenvalues of C are lifted so that `min >= RECONDITION_RATIO * max`.
pub const RECONDITION_RATIO: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CmaError {
    #[error("CMA update needs at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("CMA update degenerate: {0}")]
    Degenerate(&'static str),
}

/// Covariance matrix adaptation state with rank-one and rank-mu updates and
/// cumulative step-size adaptation.
#[derive(Debug, Clone, PartialEq)]
pub struct CmaState {
    mean: DVector<f64>,
    step_size: f64,
    cov: DMatrix<f64>,
    /// Eigenvectors of `cov` (columns).
    basis: DMatrix<f64>,
    /// Square roots of the eigenvalues of `cov`.
    scales: DVector<f64>,
    p_sigma: DVector<f64>,
    p_c: DVector<f64>,
    iterations: u64,
}

impl CmaState {
    /// Fresh state centred on `anchor` with identity covariance.
    pub fn new(anchor: &[f64], bounds: Bounds) -> Self {
        let n = anchor.len();
        let mut mean = DVector::from_column_slice(anchor);
        for v in mean.iter_mut() {
            *v = bounds.clip(*v);
        }
        Self {
            mean,
            step_size: RESET_STEP_FRACTION * bounds.width(),
            cov: DMatrix::identity(n, n),
            basis: DMatrix::identity(n, n),
            scales: DVector::from_element(n, 1.0),
            p_sigma: DVector::zeros(n),
            p_c: DVector::zeros(n),
            iterations: 0,
        }
    }

    /// Restarts around `anchor`; all adaptation is discarded.
    pub fn reset(&mut self, anchor: &[f64], bounds: Bounds) {
        *self = Self::new(anchor, bounds);
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.as_slice()
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn covariance(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn iterations(&self) -> u64 {
        self.iterations
    }

    pub fn set_step_size(&mut self, step: f64) {
        self.step_size = step;
    }

    /// `mean + step * C^{1/2} z`, midpoint-reflected into the box using the
    /// mean as anchor.
    pub fn sample<R: Rng + ?Sized>(&self, bounds: Bounds, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        let z = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &self.basis * z.component_mul(&self.scales);
        let mut x: Vec<f64> = (0..n).map(|i| self.mean[i] + self.step_size * y[i]).collect();
        bounds.repair_midpoint(&mut x, self.mean.as_slice());
        x
    }

    /// Recombines the better half of `samples` and adapts paths, covariance
    /// and step size. Samples with equal objective values share the average
    /// of their rank weights.
    pub fn update(&mut self, samples: &[(Vec<f64>, f64)]) -> Result<(), CmaError> {
        let lambda = samples.len();
        if lambda < 2 {
            return Err(CmaError::TooFewSamples(lambda));
        }
        let n = self.dim();
        let nf = n as f64;
        let first = &samples[0].0;
        if samples.iter().all(|(x, _)| x == first) {
            return Err(CmaError::Degenerate("all samples identical"));
        }

        let mut order: Vec<usize> = (0..lambda).collect();
        order.sort_by(|&a, &b| samples[a].1.total_cmp(&samples[b].1).then(a.cmp(&b)));
        let weights = rank_weights(lambda, |r| samples[order[r]].1);
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let c_sigma = (mu_eff + 2.0) / (nf + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (nf + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / nf) / (nf + 4.0 + 2.0 * mu_eff / nf);
        let c_1 = 2.0 / ((nf + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1).min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((nf + 2.0).powi(2) + mu_eff));
        let chi_n = nf.sqrt() * (1.0 - 1.0 / (4.0 * nf) + 1.0 / (21.0 * nf * nf));

        let ys: Vec<DVector<f64>> = order
            .iter()
            .map(|&k| (DVector::from_column_slice(&samples[k].0) - &self.mean) / self.step_size)
            .collect();
        let mut y_w = DVector::zeros(n);
        for (w, y) in weights.iter().zip(&ys) {
            if *w != 0.0 {
                y_w += y * *w;
            }
        }
        self.mean += &y_w * self.step_size;

        let inv_sqrt = &self.basis * DMatrix::from_diagonal(&self.scales.map(|d| 1.0 / d)) * self.basis.transpose();
        self.p_sigma = &self.p_sigma * (1.0 - c_sigma) + inv_sqrt * &y_w * (c_sigma * (2.0 - c_sigma) * mu_eff).sqrt();
        let ps_norm = self.p_sigma.norm();
        let gen = (self.iterations + 1) as f64;
        let h_sigma = ps_norm / (1.0 - (1.0 - c_sigma).powf(2.0 * gen)).sqrt() < (1.4 + 2.0 / (nf + 1.0)) * chi_n;
        let h = if h_sigma { 1.0 } else { 0.0 };
        self.p_c = &self.p_c * (1.0 - c_c) + &y_w * (h * (c_c * (2.0 - c_c) * mu_eff).sqrt());
        let delta_h = (1.0 - h) * c_c * (2.0 - c_c);

        let mut rank_mu = DMatrix::zeros(n, n);
        for (w, y) in weights.iter().zip(&ys) {
            if *w != 0.0 {
                rank_mu += y * y.transpose() * *w;
            }
        }
        self.cov = &self.cov * (1.0 - c_1 - c_mu) + (&self.p_c * self.p_c.transpose() + &self.cov * delta_h) * c_1 + rank_mu * c_mu;
        self.step_size *= ((c_sigma / d_sigma) * (ps_norm / chi_n - 1.0)).exp();
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(CmaError::Degenerate("step size left (0, inf)"));
        }
        if !self.mean.iter().all(|v| v.is_finite()) {
            return Err(CmaError::Degenerate("non-finite mean"));
        }
        self.refresh_decomposition()?;
        self.iterations += 1;
        Ok(())
    }

    fn refresh_decomposition(&mut self) -> Result<(), CmaError> {
        let sym = (&self.cov + self.cov.transpose()) * 0.5;
        if !sym.iter().all(|v| v.is_finite()) {
            return Err(CmaError::Degenerate("non-finite covariance"));
        }
        let eig = SymmetricEigen::new(sym);
        let max = eig.eigenvalues.max();
        if !(max > 0.0) {
            return Err(CmaError::Degenerate("covariance collapsed"));
        }
        let min = eig.eigenvalues.min();
        let floor = RECONDITION_RATIO * max;
        let mut values = eig.eigenvalues.clone();
        if min < floor {
            let lift = floor - min;
            values.apply(|v| *v += lift);
        }
        let basis = eig.eigenvectors;
        self.cov = &basis * DMatrix::from_diagonal(&values) * basis.transpose();
        self.cov = (&self.cov + self.cov.transpose()) * 0.5;
        self.scales = values.map(f64::sqrt);
        self.basis = basis;
        Ok(())
    }
}

/// Log-rank recombination weights over the better half, normalised to one;
/// tied objective values share their weights equally.
fn rank_weights(lambda: usize, f_at_rank: impl Fn(usize) -> f64) -> Vec<f64> {
    let mu = (lambda / 2).max(1);
    let mut w: Vec<f64> = (0..lambda)
        .map(|r| {
            if r < mu {
                (mu as f64 + 0.5).ln() - ((r + 1) as f64).ln()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    let mut start = 0;
    while start < lambda {
        let mut end = start + 1;
        while end < lambda && f_at_rank(end) == f_at_rank(start) {
            end += 1;
        }
        if end - start > 1 {
            let avg = w[start..end].iter().sum::<f64>() / (end - start) as f64;
            w[start..end].iter_mut().for_each(|v| *v = avg);
        }
        start = end;
    }
    w
}
