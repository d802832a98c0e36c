//! The surrogate iteration as a self-consistent-field scheme.
//!
//! Each step rebuilds the adversarial covariance `Σ̃(θⁱ⁻¹)` and takes `θⁱ` as
//! the minimizer of the generalized Rayleigh quotient
//! `θᵀΣθ / θᵀΣ̃(θⁱ⁻¹)θ`, i.e. the dominant eigenvector of `Σ⁻¹Σ̃(θⁱ⁻¹)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gaussmodel::{projected_variance, tilde_sigma, VARIANCE_FLOOR};
use crate::linalg::vector::{normalize, sign_invariant_distance};
use crate::linalg::{cholesky, dominant_pencil_eigvec, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct IrasConfig {
    pub theta0: Vec<f64>,
    pub sigma_bar2: f64,
    pub max_iters: usize,
    pub conv_tol: f64,
    pub record_ratios: bool,
}

impl IrasConfig {
    pub const DEFAULT_MAX_ITERS: usize = 100;
    pub const DEFAULT_CONV_TOL: f64 = 1e-9;

    /// Normalizes `theta0`; iteration cap and tolerance take their defaults.
    pub fn new(theta0: &[f64], sigma_bar2: f64) -> Result<Self> {
        Ok(Self {
            theta0: normalize(theta0)?,
            sigma_bar2,
            max_iters: Self::DEFAULT_MAX_ITERS,
            conv_tol: Self::DEFAULT_CONV_TOL,
            record_ratios: true,
        })
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn conv_tol(mut self, conv_tol: f64) -> Self {
        self.conv_tol = conv_tol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(invalid("max_iters", "must be at least 1"));
        }
        if !(self.conv_tol > 0.0) {
            return Err(invalid("conv_tol", "must be positive"));
        }
        if !(self.sigma_bar2 > 0.0) || !self.sigma_bar2.is_finite() {
            return Err(invalid("sigma_bar2", "must be positive"));
        }
        crate::linalg::vector::ensure_normalized(&self.theta0, 1e-10)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IrasStatus {
    Converged,
    MaxIters,
    /// A step hit a repeated dominant eigenvalue, so the next iterate is undefined.
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrasTrace {
    /// `θ⁰, …, θᴷ`, each unit norm.
    pub thetas: Vec<Vec<f64>>,
    /// `ratios[i-1] = θⁱᵀΣθⁱ / θⁱᵀΣ̃(θⁱ⁻¹)θⁱ`; empty unless ratios are recorded.
    pub ratios: Vec<f64>,
    /// Dominant eigenvalue of `Σ⁻¹Σ̃(θⁱ⁻¹)` per accepted step.
    pub lambdas: Vec<f64>,
    pub status: IrasStatus,
    pub iterations: usize,
}

impl IrasTrace {
    pub fn last(&self) -> &[f64] {
        self.thetas.last().expect("trace holds theta0")
    }
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub theta: Vec<f64>,
    pub lambda_max: f64,
    pub gap: f64,
    pub degenerate: bool,
}

/// `θᵀ Σ_data θ / θᵀ Σ̃ θ`
pub fn rayleigh_ratio(theta: &[f64], sigma_data: &Matrix, sigma_tilde: &Matrix) -> Result<f64> {
    sigma_data.check_dim(theta.len())?;
    sigma_tilde.check_dim(theta.len())?;
    let den = projected_variance(theta, sigma_tilde);
    if den.abs() <= VARIANCE_FLOOR {
        return Err(Error::DegenerateVariance { value: den });
    }
    Ok(projected_variance(theta, sigma_data) / den)
}

pub fn iras_step(
    theta_prev: &[f64],
    sigma_data: &Matrix,
    sigma_bar: &Matrix,
) -> Result<StepOutcome> {
    let tilde = tilde_sigma(theta_prev, sigma_data, sigma_bar)?;
    let dominant = dominant_pencil_eigvec(sigma_data, &tilde)?;
    Ok(StepOutcome {
        theta: dominant.vector,
        lambda_max: dominant.value,
        gap: dominant.gap,
        degenerate: dominant.degenerate,
    })
}

/// Iterates [`iras_step`] until successive iterates agree up to sign.
pub fn run_iras(sigma_data: &Matrix, sigma_bar: &Matrix, config: &IrasConfig) -> Result<IrasTrace> {
    config.validate()?;
    sigma_data.check_dim(config.theta0.len())?;
    let mut trace = IrasTrace {
        thetas: vec![config.theta0.clone()],
        ratios: Vec::new(),
        lambdas: Vec::new(),
        status: IrasStatus::MaxIters,
        iterations: 0,
    };
    for _ in 0..config.max_iters {
        let prev = trace.last().to_vec();
        let step = iras_step(&prev, sigma_data, sigma_bar)?;
        if step.degenerate {
            trace.status = IrasStatus::Degenerate;
            break;
        }
        if config.record_ratios {
            let tilde = tilde_sigma(&prev, sigma_data, sigma_bar)?;
            trace
                .ratios
                .push(rayleigh_ratio(&step.theta, sigma_data, &tilde)?);
        }
        trace.lambdas.push(step.lambda_max);
        let moved = sign_invariant_distance(&step.theta, &prev);
        trace.thetas.push(step.theta);
        trace.iterations += 1;
        if moved < config.conv_tol {
            trace.status = IrasStatus::Converged;
            break;
        }
    }
    Ok(trace)
}

/// Sample mean and unbiased sample covariance.
#[derive(Debug, Clone)]
pub struct EmpiricalCovariance {
    pub mean: Vec<f64>,
    pub covariance: Matrix,
    pub count: usize,
}

pub fn empirical_covariance(samples: &[Vec<f64>]) -> Result<EmpiricalCovariance> {
    let count = samples.len();
    let n = samples.first().map_or(0, Vec::len);
    if n == 0 {
        return Err(invalid("samples", "no data"));
    }
    if count <= n {
        return Err(Error::InsufficientData {
            samples: count,
            dim: n,
        });
    }
    if let Some(bad) = samples.iter().find(|z| z.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let mut mean = vec![0.0; n];
    for z in samples {
        mean.iter_mut().zip(z).for_each(|(m, x)| *m += x);
    }
    mean.iter_mut().for_each(|m| *m /= count as f64);

    let mut covariance = Matrix::zeros(n);
    let mut centered = vec![0.0; n];
    for z in samples {
        centered
            .iter_mut()
            .zip(z.iter().zip(&mean))
            .for_each(|(c, (x, m))| *c = x - m);
        for i in 0..n {
            for j in i..n {
                covariance[(i, j)] += centered[i] * centered[j];
            }
        }
    }
    let denom = (count - 1) as f64;
    for i in 0..n {
        for j in i..n {
            let v = covariance[(i, j)] / denom;
            covariance[(i, j)] = v;
            covariance[(j, i)] = v;
        }
    }
    cholesky(&covariance).map_err(|_| Error::SingularCovariance)?;
    Ok(EmpiricalCovariance {
        mean,
        covariance,
        count,
    })
}

/// Runs the iteration on centered data with `Σ_data = S` and `Σ̄ = σ̄² I`.
pub fn run_iras_empirical(samples: &[Vec<f64>], config: &IrasConfig) -> Result<IrasTrace> {
    let cov = empirical_covariance(samples)?;
    let sigma_bar = Matrix::scaled_identity(cov.mean.len(), config.sigma_bar2);
    run_iras(&cov.covariance, &sigma_bar, config)
}
