//! Gaussian measurement model with a linear first integral.
//!
//! Measurements are `z = Σᵢ cᵢ vⁱ` with `c₁ ~ N(0, σ²)` along the invariant
//! direction `v¹` and `cᵢ ~ N(0, 1)` within `H = (v¹)^⊥`, so the signal
//! covariance is `Σ = σ² v¹(v¹)ᵀ + Σᵢ₌₂ vⁱ(vⁱ)ᵀ`. The surrogate starts as
//! `N(μ, σ̄² I)`; its adversarial reweighting by `ζ` along the current `θ`
//! stays Gaussian with covariance `Σ̃(θ)`.

use log::warn;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::vector::{ensure_normalized, normalize, NORMALIZED_TOL};
use crate::linalg::{complete_orthonormal_basis, Matrix};
use crate::random::GaussianRng;

/// Variance floor below which projected variances count as zero.
pub const VARIANCE_FLOOR: f64 = 1e-300;

/// Orthonormality tolerance for a user-supplied basis.
const BASIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct MeasurementModel {
    basis: Matrix,
    sigma2: f64,
}

impl MeasurementModel {
    /// Model with invariant direction `v1` (normalized) and noise variance
    /// `sigma2` along it; `v², …, vⁿ` are completed by Gram–Schmidt.
    pub fn new(v1: &[f64], sigma2: f64) -> Result<Self> {
        if v1.len() < 2 {
            return Err(invalid("v1", "dimension must be at least 2"));
        }
        ensure_normalized(v1, NORMALIZED_TOL)?;
        Self::with_basis(complete_orthonormal_basis(v1), sigma2)
    }

    /// Model on an explicit orthonormal basis; column 0 is `v¹`.
    pub fn with_basis(basis: Matrix, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(invalid("sigma2", format!("must be positive, got {sigma2}")));
        }
        let n = basis.dim();
        if n < 2 {
            return Err(invalid("basis", "dimension must be at least 2"));
        }
        let defect = basis
            .transpose()
            .matmul(&basis)
            .sub(&Matrix::identity(n))
            .max_abs();
        if defect > BASIS_TOL {
            return Err(invalid(
                "basis",
                format!("columns not orthonormal ({defect:e})"),
            ));
        }
        if sigma2 >= 1.0 {
            warn!("sigma2 = {sigma2} is outside the analysed regime 0 < sigma2 < 1");
        }
        Ok(Self { basis, sigma2 })
    }

    /// Axis-aligned model: `vⁱ = eⁱ`.
    pub fn axis_aligned(n: usize, sigma2: f64) -> Result<Self> {
        Self::with_basis(Matrix::identity(n), sigma2)
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn v1(&self) -> Vec<f64> {
        self.basis.column(0)
    }

    /// Basis vector `vᵏ` with 1-based `k`.
    pub fn v(&self, k: usize) -> Vec<f64> {
        self.basis.column(k - 1)
    }

    pub fn basis(&self) -> &Matrix {
        &self.basis
    }

    /// `0 < σ² < 1`
    pub fn in_signal_regime(&self) -> bool {
        self.sigma2 < 1.0
    }

    pub fn signal_covariance(&self) -> Matrix {
        self.weighted_projector(self.sigma2)
    }

    /// `Σ⁻¹ = σ⁻² v¹(v¹)ᵀ + Σᵢ₌₂ vⁱ(vⁱ)ᵀ`
    pub fn precision(&self) -> Matrix {
        self.weighted_projector(1.0 / self.sigma2)
    }

    fn weighted_projector(&self, first: f64) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n);
        for k in 0..n {
            let v = self.basis.column(k);
            let w = if k == 0 { first } else { 1.0 };
            m.add_scaled(w, &Matrix::outer(&v, &v));
        }
        m
    }

    /// Membership in `H` up to `|(v¹)ᵀθ| ≤ tol`.
    pub fn in_h(&self, theta: &[f64], tol: f64) -> bool {
        crate::linalg::vector::dot(&self.v1(), theta).abs() <= tol
    }
}

pub fn signal_covariance(model: &MeasurementModel) -> Matrix {
    model.signal_covariance()
}

/// Draws `count` measurements; identical seeds give bit-identical samples.
pub fn sample_measurements(
    model: &MeasurementModel,
    count: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if count == 0 {
        return Err(invalid("count", "at least one sample is required"));
    }
    let n = model.dim();
    let sigma = model.sigma2.sqrt();
    let columns: Vec<Vec<f64>> = (0..n).map(|k| model.basis.column(k)).collect();
    let mut rng = GaussianRng::new(seed);
    Ok((0..count)
        .map(|_| {
            let mut z = vec![0.0; n];
            for (k, v) in columns.iter().enumerate() {
                let c = if k == 0 {
                    sigma * rng.standard_normal()
                } else {
                    rng.standard_normal()
                };
                z.iter_mut().zip(v).for_each(|(zi, vi)| *zi += c * vi);
            }
            z
        })
        .collect())
}

/// Isotropic surrogate `N(μ, σ̄² I)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurrogateModel {
    pub sigma_bar2: f64,
    pub mean: Vec<f64>,
}

impl SurrogateModel {
    pub fn centered(n: usize, sigma_bar2: f64) -> Result<Self> {
        Self::with_mean(vec![0.0; n], sigma_bar2)
    }

    pub fn with_mean(mean: Vec<f64>, sigma_bar2: f64) -> Result<Self> {
        if !(sigma_bar2 > 0.0) || !sigma_bar2.is_finite() {
            return Err(invalid(
                "sigma_bar2",
                format!("must be positive, got {sigma_bar2}"),
            ));
        }
        if sigma_bar2 >= 1.0 {
            warn!("sigma_bar2 = {sigma_bar2} is outside the analysed regime sigma_bar < 1");
        }
        Ok(Self { sigma_bar2, mean })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> Matrix {
        Matrix::scaled_identity(self.dim(), self.sigma_bar2)
    }
}

/// `Σ`, `Σ̄` and the adversarial `Σ̃(θ)` built from them.
#[derive(Debug, Clone)]
pub struct CovarianceTriple {
    pub sigma: Matrix,
    pub sigma_bar: Matrix,
    pub sigma_tilde: Matrix,
    pub theta: Vec<f64>,
    /// `θᵀΣθ`
    pub s: f64,
    /// `θᵀΣ̄θ`
    pub s_bar: f64,
}

impl CovarianceTriple {
    pub fn new(sigma: Matrix, sigma_bar: Matrix, theta: &[f64]) -> Result<Self> {
        let sigma_tilde = tilde_sigma(theta, &sigma, &sigma_bar)?;
        Ok(Self {
            s: projected_variance(theta, &sigma),
            s_bar: projected_variance(theta, &sigma_bar),
            sigma,
            sigma_bar,
            sigma_tilde,
            theta: theta.to_vec(),
        })
    }

    pub fn from_models(
        model: &MeasurementModel,
        surrogate: &SurrogateModel,
        theta: &[f64],
    ) -> Result<Self> {
        Self::new(model.signal_covariance(), surrogate.covariance(), theta)
    }
}

/// `θᵀ M θ`
pub fn projected_variance(theta: &[f64], m: &Matrix) -> f64 {
    m.quadratic_form(theta)
}

/// `ln ζ(x) = ½ ln(s̄/s) − ½ x² (1/s − 1/s̄)`
pub fn ln_zeta(x: f64, s: f64, s_bar: f64) -> Result<f64> {
    for value in [s, s_bar] {
        if !(value > VARIANCE_FLOOR) {
            return Err(Error::DegenerateVariance { value });
        }
    }
    Ok(0.5 * (s_bar / s).ln() - 0.5 * x * x * (1.0 / s - 1.0 / s_bar))
}

/// Weighting that maps the projected surrogate density `N(0, s̄)` onto the
/// projected data density `N(0, s)`: `ζ(x) = √(s̄/s) · exp(−x²(1/s − 1/s̄)/2)`.
pub fn zeta(x: f64, s: f64, s_bar: f64) -> Result<f64> {
    ln_zeta(x, s, s_bar).map(f64::exp)
}

/// Adversarial surrogate covariance
/// `Σ̃(θ) = Σ̄ − (1/s̄ − s/s̄²) Σ̄θθᵀΣ̄` with `s = θᵀΣθ`, `s̄ = θᵀΣ̄θ`.
///
/// The correction is always applied to the initial `Σ̄`.
pub fn tilde_sigma(theta: &[f64], sigma: &Matrix, sigma_bar: &Matrix) -> Result<Matrix> {
    sigma.check_dim(theta.len())?;
    sigma_bar.check_dim(theta.len())?;
    ensure_normalized(theta, BASIS_TOL)?;
    let s = projected_variance(theta, sigma);
    let s_bar = projected_variance(theta, sigma_bar);
    if !(s_bar > VARIANCE_FLOOR) {
        return Err(Error::DegenerateVariance { value: s_bar });
    }
    let coef = 1.0 / s_bar - s / (s_bar * s_bar);
    let u = sigma_bar.mul_vec(theta);
    let mut out = sigma_bar.clone();
    out.add_scaled(-coef, &Matrix::outer(&u, &u));
    Ok(out.symmetrized())
}

/// Isotropic special case `σ̄² I − (σ̄² − θᵀΣθ) θθᵀ`.
pub fn tilde_sigma_isotropic(theta: &[f64], sigma: &Matrix, sigma_bar2: f64) -> Result<Matrix> {
    sigma.check_dim(theta.len())?;
    ensure_normalized(theta, BASIS_TOL)?;
    let s = projected_variance(theta, sigma);
    let mut out = Matrix::scaled_identity(theta.len(), sigma_bar2);
    out.add_scaled(-(sigma_bar2 - s), &Matrix::outer(theta, theta));
    Ok(out)
}

/// Normalized `θ` with `θ ∝ v¹ + ε vᵏ` (1-based `k ≥ 2`).
pub fn perturbed_direction(model: &MeasurementModel, epsilon: f64, k: usize) -> Result<Vec<f64>> {
    if k < 2 || k > model.dim() {
        return Err(invalid(
            "k",
            format!("must lie in 2..={}, got {k}", model.dim()),
        ));
    }
    let raw = crate::linalg::vector::axpy(&model.v1(), epsilon, &model.v(k));
    normalize(&raw)
}
