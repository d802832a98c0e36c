//! Closed-form spectrum of `Σ⁻¹Σ̃(θ)` and the convergence conditions it implies.
//!
//! For isotropic `Σ̄ = σ̄² I`, `Σ̃(θ)` acts as `s(θ)` on `θ` and as `σ̄²` on
//! `θ^⊥`. At `θ = v¹` the spectrum is `{1, σ̄², …, σ̄²}`, so `v¹` is a fixed
//! point exactly when `σ̄ < 1`. Starting in `H` with `σ² < σ̄² < 1` a single
//! step lands on `v¹`. For `θ⁰ ∝ v¹ + ε vᵏ` the two non-trivial eigenvalues
//! solve `a₁λ² + a₂λ + a₃ = 0`, and the dominant eigenvector expands as
//! `v¹ + r ε vᵏ + o(ε)` with `r = (σ̄² − σ²)/(σ̄² − 1)`.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::gaussmodel::{
    perturbed_direction, projected_variance, tilde_sigma_isotropic, MeasurementModel,
};
use crate::linalg::vector::{axpy, dot, line_angle, norm, scale, sub};
use crate::linalg::{complete_orthonormal_basis, pencil_eig, spd_inverse, Matrix};
use crate::scf::{run_iras, IrasConfig, IrasStatus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionReport {
    pub sigma2: f64,
    pub sigma_bar2: f64,
    /// `σ² < σ̄² < 1`: one-step convergence from `H`.
    pub cond_a: bool,
    /// `2σ̄² < 1 + σ²`: together with `cond_a`, local convergence.
    pub cond_b: bool,
    /// `σ̄ < 1`: `v¹` is a fixed point.
    pub equilibrium: bool,
    /// Contraction factor `(σ̄² − σ²)/(σ̄² − 1)`; NaN when `σ̄² = 1`.
    pub r: f64,
    pub r_defined: bool,
}

pub fn check_conditions(sigma2: f64, sigma_bar2: f64) -> ConditionReport {
    let r_defined = sigma_bar2 != 1.0;
    ConditionReport {
        sigma2,
        sigma_bar2,
        cond_a: sigma2 < sigma_bar2 && sigma_bar2 < 1.0,
        cond_b: 2.0 * sigma_bar2 < 1.0 + sigma2,
        equilibrium: sigma_bar2 < 1.0,
        r: if r_defined {
            (sigma_bar2 - sigma2) / (sigma_bar2 - 1.0)
        } else {
            f64::NAN
        },
        r_defined,
    }
}

/// `Σ⁻¹ Σ̃`
pub fn assembled_operator(sigma: &Matrix, sigma_tilde: &Matrix) -> Result<Matrix> {
    Ok(spd_inverse(sigma)?.matmul(sigma_tilde))
}

/// Residuals of `Σ⁻¹Σ̃(θ)θ = s(θ)Σ⁻¹θ` and `Σ⁻¹Σ̃(θ)θ⊥ = σ̄²Σ⁻¹θ⊥`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ActionResiduals {
    pub along_theta: f64,
    /// Worst case over an orthonormal completion of `θ`.
    pub orthogonal: f64,
}

pub fn lemma2_action(theta: &[f64], sigma: &Matrix, sigma_bar2: f64) -> Result<ActionResiduals> {
    let tilde = tilde_sigma_isotropic(theta, sigma, sigma_bar2)?;
    let precision = spd_inverse(sigma)?;
    let op = precision.matmul(&tilde);
    let s = projected_variance(theta, sigma);

    let along_theta = norm(&sub(
        &op.mul_vec(theta),
        &scale(&precision.mul_vec(theta), s),
    ));
    let completion = complete_orthonormal_basis(theta);
    let orthogonal = (1..theta.len())
        .map(|j| {
            let perp = completion.column(j);
            norm(&sub(
                &op.mul_vec(&perp),
                &scale(&precision.mul_vec(&perp), sigma_bar2),
            ))
        })
        .fold(0.0, f64::max);
    Ok(ActionResiduals {
        along_theta,
        orthogonal,
    })
}

/// Spectrum of `Σ⁻¹Σ̃(v¹)`, analytic and numerical.
#[derive(Debug, Clone, Serialize)]
pub struct EquilibriumSpectrum {
    /// `{1, σ̄², …, σ̄²}` sorted descending.
    pub analytic: Vec<f64>,
    pub numerical: Vec<f64>,
    pub max_deviation: f64,
    /// `max|M_ij − M_ji|` of the assembled operator.
    pub asymmetry: f64,
    /// `max|Vᵀ M V − diag(1, σ̄², …)|`
    pub conjugation_defect: f64,
    /// `1` is a simple dominant eigenvalue.
    pub equilibrium: bool,
}

pub fn equilibrium_spectrum(
    model: &MeasurementModel,
    sigma_bar2: f64,
) -> Result<EquilibriumSpectrum> {
    let n = model.dim();
    let v1 = model.v1();
    let sigma = model.signal_covariance();
    let tilde = tilde_sigma_isotropic(&v1, &sigma, sigma_bar2)?;
    let op = model.precision().matmul(&tilde);

    let mut diag = vec![sigma_bar2; n];
    diag[0] = 1.0;
    let conjugation_defect = op
        .congruence(model.basis())
        .sub(&Matrix::from_diag(&diag))
        .max_abs();

    let mut analytic = diag;
    analytic.sort_by(|a, b| b.total_cmp(a));
    let numerical = pencil_eig(&sigma, &tilde)?.eigenvalues;
    let max_deviation = analytic
        .iter()
        .zip(&numerical)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(EquilibriumSpectrum {
        analytic,
        numerical,
        max_deviation,
        asymmetry: op.max_asymmetry(),
        conjugation_defect,
        equilibrium: sigma_bar2 < 1.0,
    })
}

/// Closed-form spectrum of `Σ⁻¹Σ̃(θ⁰)` for `θ⁰ ∝ v¹ + ε vᵏ`.
///
/// Vectors are in basis coordinates: index 0 is along `v¹`, index `k−1`
/// along `vᵏ`.
#[derive(Debug, Clone, Serialize)]
pub struct PerturbedSpectrum {
    pub epsilon: f64,
    pub k: usize,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// Discriminant `a₂² − 4a₁a₃`.
    pub delta: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// `σ̄²`, with multiplicity `n − 2`.
    pub lambda_rest: f64,
    pub rest_multiplicity: usize,
    pub c_of_lambda1: f64,
    /// `ε = 0`: `c(λ)` is `0/0` and `w` is its limit `v¹`.
    pub c_limit: bool,
    /// Eigenvector of `λ₁`, unit norm, oriented with a non-negative `v¹` component.
    pub w: Vec<f64>,
}

impl PerturbedSpectrum {
    /// `w` in ambient coordinates for the given model basis.
    pub fn ambient_w(&self, model: &MeasurementModel) -> Vec<f64> {
        model.basis().mul_vec(&self.w)
    }

    /// `{λ₁, λ₂, σ̄² × (n−2)}` sorted descending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut all = vec![self.lambda1, self.lambda2];
        all.extend(std::iter::repeat_n(
            self.lambda_rest,
            self.rest_multiplicity,
        ));
        all.sort_by(|a, b| b.total_cmp(a));
        all
    }
}

pub fn perturbed_spectrum(
    epsilon: f64,
    sigma2: f64,
    sigma_bar2: f64,
    n: usize,
) -> Result<PerturbedSpectrum> {
    perturbed_spectrum_along(epsilon, sigma2, sigma_bar2, n, 2)
}

/// As [`perturbed_spectrum`], perturbing along `vᵏ` for any `2 ≤ k ≤ n`.
pub fn perturbed_spectrum_along(
    epsilon: f64,
    sigma2: f64,
    sigma_bar2: f64,
    n: usize,
    k: usize,
) -> Result<PerturbedSpectrum> {
    if n < 2 {
        return Err(invalid("n", "dimension must be at least 2"));
    }
    if k < 2 || k > n {
        return Err(invalid("k", format!("must lie in 2..={n}, got {k}")));
    }
    if !(sigma2 > 0.0) || !(sigma_bar2 > 0.0) {
        return Err(invalid("sigma2", "variances must be positive"));
    }
    let e2 = epsilon * epsilon;
    let one_e2 = 1.0 + e2;
    let p = sigma2 + e2;
    let ratio = sigma_bar2 / sigma2;

    let a1 = one_e2 * one_e2;
    let a2 = -p * (e2 + 1.0 / sigma2 + one_e2 * ratio);
    let a3 = p * one_e2 * ratio;
    let delta = a2 * a2 - 4.0 * a1 * a3;
    if delta < 0.0 {
        return Err(Error::NegativeDiscriminant { delta });
    }
    // Cancellation-free roots: q = −(a₂ + sign(a₂)√Δ)/2, roots q/a₁ and a₃/q.
    let q = -0.5 * (a2 + a2.signum() * delta.sqrt());
    let (r1, r2) = (q / a1, a3 / q);
    let (lambda1, lambda2) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };

    let mut w = vec![0.0; n];
    let (c_of_lambda1, c_limit) = if epsilon == 0.0 {
        w[0] = 1.0;
        (0.0, true)
    } else {
        let c = (p / sigma2 - lambda1 * one_e2) / (epsilon * one_e2 * (lambda1 - ratio));
        let (x, y) = (1.0 + epsilon * c, epsilon - c);
        let r = x.hypot(y);
        let sign = if x < 0.0 { -1.0 } else { 1.0 };
        w[0] = sign * x / r;
        w[k - 1] = sign * y / r;
        (c, false)
    };
    Ok(PerturbedSpectrum {
        epsilon,
        k,
        a1,
        a2,
        a3,
        delta,
        lambda1,
        lambda2,
        lambda_rest: sigma_bar2,
        rest_multiplicity: n - 2,
        c_of_lambda1,
        c_limit,
        w,
    })
}

/// Numerical spectrum of `Σ⁻¹Σ̃(θ⁰)` for `θ⁰ ∝ v¹ + ε vᵏ`, for cross-checks.
pub fn numerical_perturbed_spectrum(
    model: &MeasurementModel,
    sigma_bar2: f64,
    epsilon: f64,
    k: usize,
) -> Result<crate::linalg::PencilSpectrum> {
    let theta0 = perturbed_direction(model, epsilon, k)?;
    let sigma = model.signal_covariance();
    let tilde = tilde_sigma_isotropic(&theta0, &sigma, sigma_bar2)?;
    pencil_eig(&sigma, &tilde)
}

#[derive(Debug, Clone, Serialize)]
pub struct PredictedPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Eigenpairs of `Σ⁻¹Σ̃(θ⁰)` for `θ⁰ ∈ H`:
/// `(σ̄²/σ², v¹), (1, θ⁰), (σ̄², wᵏ)`, with `wᵏ` spanning `H ∩ (θ⁰)^⊥`.
/// Under `σ² < σ̄² < 1` the first pair is dominant.
pub fn one_step_prediction_from_h(
    theta0: &[f64],
    model: &MeasurementModel,
    sigma_bar2: f64,
) -> Result<Vec<PredictedPair>> {
    let projection = dot(&model.v1(), theta0);
    if projection.abs() > 1e-12 {
        return Err(Error::NotInH { projection });
    }
    let sigma2 = model.sigma2();
    if !(sigma2 < sigma_bar2 && sigma_bar2 < 1.0) {
        return Err(Error::ConditionsViolated(format!(
            "need sigma2 < sigma_bar2 < 1, got sigma2 = {sigma2}, sigma_bar2 = {sigma_bar2}"
        )));
    }
    let n = model.dim();
    let theta0 = crate::linalg::vector::normalize(theta0)?;
    let mut pairs = vec![
        PredictedPair {
            value: sigma_bar2 / sigma2,
            vector: model.v1(),
        },
        PredictedPair {
            value: 1.0,
            vector: theta0.clone(),
        },
    ];
    // Coordinates of θ⁰ along v², …, vⁿ, completed to a basis of ℝⁿ⁻¹.
    let d: Vec<f64> = (2..=n).map(|i| dot(&model.v(i), &theta0)).collect();
    let completion = complete_orthonormal_basis(&d);
    for j in 1..(n - 1) {
        let p = completion.column(j);
        let mut w = vec![0.0; n];
        for (i, pi) in p.iter().enumerate() {
            w = axpy(&w, *pi, &model.v(i + 2));
        }
        pairs.push(PredictedPair {
            value: sigma_bar2,
            vector: w,
        });
    }
    Ok(pairs)
}

/// Largest `ε ∈ [0, upper]` (to bisection resolution) from which the
/// iteration started at `∝ v¹ + ε vᵏ` still converges to `v¹`.
///
/// Empirical: bisection over 20 halvings, assuming the converging set is an
/// interval containing 0.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EtaEstimate {
    pub eta: f64,
    pub upper: f64,
    pub bisection_steps: usize,
}

pub fn empirical_eta(
    model: &MeasurementModel,
    sigma_bar2: f64,
    k: usize,
    upper: f64,
) -> Result<EtaEstimate> {
    const STEPS: usize = 20;
    let sigma = model.signal_covariance();
    let sigma_bar = Matrix::scaled_identity(model.dim(), sigma_bar2);
    let v1 = model.v1();
    let converges = |eps: f64| -> Result<bool> {
        let theta0 = perturbed_direction(model, eps, k)?;
        let trace = run_iras(&sigma, &sigma_bar, &IrasConfig::new(&theta0, sigma_bar2)?)?;
        Ok(trace.status == IrasStatus::Converged && line_angle(trace.last(), &v1) < 1e-8)
    };
    if converges(upper)? {
        return Ok(EtaEstimate {
            eta: upper,
            upper,
            bisection_steps: 0,
        });
    }
    let (mut lo, mut hi) = (0.0, upper);
    for _ in 0..STEPS {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(EtaEstimate {
        eta: lo,
        upper,
        bisection_steps: STEPS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::vector::{normalize, sign_invariant_distance, unit};
    use crate::random::GaussianRng;

    #[test]
    fn conditions_at_reference_point() {
        let c = check_conditions(0.01, 0.04);
        assert!(c.cond_a && c.cond_b && c.equilibrium && c.r_defined);
        assert!((c.r + 0.03125).abs() < 1e-15);
        assert!(!check_conditions(0.04, 0.04).cond_a);
        let low_noise = check_conditions(1e-5, 2e-5);
        assert!(low_noise.cond_a && low_noise.cond_b && low_noise.equilibrium);
        let boundary = check_conditions(0.01, 1.0);
        assert!(!boundary.equilibrium && !boundary.r_defined && boundary.r.is_nan());
    }

    #[test]
    fn contraction_below_one_inside_region() {
        let mut rng = GaussianRng::new(4);
        for _ in 0..1000 {
            let s2 = rng.uniform_in(0.0, 1.0);
            let sb2 = rng.uniform_in(0.0, 1.5);
            let c = check_conditions(s2, sb2);
            if c.cond_a && c.cond_b {
                assert!(c.r.abs() < 1.0);
            }
        }
    }

    #[test]
    fn action_on_theta_and_complement() {
        let model =
            MeasurementModel::new(&normalize(&[0.5, -1.0, 0.25, 2.0]).unwrap(), 0.09).unwrap();
        let theta = normalize(&[0.3, 0.1, -0.7, 0.4]).unwrap();
        let res = lemma2_action(&theta, &model.signal_covariance(), 0.25).unwrap();
        assert!(res.along_theta < 1e-10 && res.orthogonal < 1e-10, "{res:?}");
    }

    #[test]
    fn complement_inside_h_is_an_eigenvector() {
        let model = MeasurementModel::axis_aligned(4, 0.09).unwrap();
        let sigma = model.signal_covariance();
        let theta = normalize(&[0.6, 0.8, 0.0, 0.0]).unwrap();
        let perp = normalize(&[0.0, 0.0, 1.0, -1.0]).unwrap();
        let op = assembled_operator(
            &sigma,
            &tilde_sigma_isotropic(&theta, &sigma, 0.25).unwrap(),
        )
        .unwrap();
        assert!(norm(&sub(&op.mul_vec(&perp), &scale(&perp, 0.25))) < 1e-15);
    }

    #[test]
    fn action_at_invariant_direction_is_identity() {
        let model = MeasurementModel::axis_aligned(3, 0.04).unwrap();
        let sigma = model.signal_covariance();
        let v1 = model.v1();
        let op =
            assembled_operator(&sigma, &tilde_sigma_isotropic(&v1, &sigma, 0.3).unwrap()).unwrap();
        assert!(norm(&sub(&op.mul_vec(&v1), &v1)) < 1e-15);
    }

    #[test]
    fn equilibrium_spectrum_values() {
        let model = MeasurementModel::new(&normalize(&[1.0, 2.0, 2.0]).unwrap(), 0.01).unwrap();
        let eq = equilibrium_spectrum(&model, 0.04).unwrap();
        assert_eq!(eq.analytic, vec![1.0, 0.04, 0.04]);
        assert!(eq.max_deviation < 1e-10);
        assert!(eq.asymmetry < 1e-10 && eq.conjugation_defect < 1e-10);
        assert!(eq.equilibrium);

        let boundary = equilibrium_spectrum(&model, 1.0).unwrap();
        assert!(boundary.numerical.iter().all(|l| (l - 1.0).abs() < 1e-12));
        assert!(!boundary.equilibrium);
    }

    #[test]
    fn unperturbed_closed_form() {
        let p = perturbed_spectrum(0.0, 0.01, 0.04, 3).unwrap();
        assert!((p.a2 + 1.04).abs() < 1e-14);
        assert!((p.delta - 0.96f64.powi(2)).abs() < 1e-12);
        assert!((p.lambda1 - 1.0).abs() < 1e-14);
        assert!((p.lambda2 - 0.04).abs() < 1e-14);
        assert!(p.c_limit);
        assert_eq!(p.w, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn closed_form_matches_eigensolver() {
        let model = MeasurementModel::axis_aligned(3, 0.01).unwrap();
        let p = perturbed_spectrum(0.1, 0.01, 0.04, 3).unwrap();
        let num = numerical_perturbed_spectrum(&model, 0.04, 0.1, 2).unwrap();
        for (a, b) in p.eigenvalues().iter().zip(&num.eigenvalues) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(sign_invariant_distance(&p.w, &num.eigenvectors[0]) < 1e-10);
    }

    #[test]
    fn closed_form_along_third_axis() {
        let v1 = normalize(&[1.0, 1.0, 0.0, -1.0]).unwrap();
        let model = MeasurementModel::new(&v1, 0.04).unwrap();
        let p = perturbed_spectrum_along(-0.2, 0.04, 0.3, 4, 3).unwrap();
        assert_eq!(p.w[1], 0.0);
        assert_eq!(p.w[3], 0.0);
        let num = numerical_perturbed_spectrum(&model, 0.3, -0.2, 3).unwrap();
        for (a, b) in p.eigenvalues().iter().zip(&num.eigenvalues) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
        assert!(sign_invariant_distance(&p.ambient_w(&model), &num.eigenvectors[0]) < 1e-10);
    }

    #[test]
    fn vieta_consistency() {
        for &(eps, s2, sb2) in &[(0.1, 0.01, 0.04), (0.25, 0.3, 0.5), (-0.05, 1e-5, 2e-5)] {
            let p = perturbed_spectrum(eps, s2, sb2, 5).unwrap();
            let prod = p.a3 / p.a1;
            let sum = -p.a2 / p.a1;
            assert!((p.lambda1 * p.lambda2 - prod).abs() <= 1e-12 * prod.abs().max(1.0));
            assert!((p.lambda1 + p.lambda2 - sum).abs() <= 1e-12 * sum.abs().max(1.0));
        }
    }

    #[test]
    fn first_order_expansion() {
        let r = check_conditions(0.01, 0.04).r;
        let errs: Vec<f64> = [1e-2, 1e-3, 1e-4]
            .iter()
            .map(|&eps| {
                let p = perturbed_spectrum(eps, 0.01, 0.04, 3).unwrap();
                (p.w[1] / eps - r).abs()
            })
            .collect();
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
        let slope = (errs[0].ln() - errs[2].ln()) / (1e-2f64.ln() - 1e-4f64.ln());
        assert!(slope >= 1.0, "{slope}");
    }

    #[test]
    fn perturbed_spectrum_arguments() {
        assert!(perturbed_spectrum(0.1, 0.01, 0.04, 1).is_err());
        assert!(perturbed_spectrum_along(0.1, 0.01, 0.04, 3, 4).is_err());
        assert!(perturbed_spectrum_along(0.1, 0.01, 0.04, 3, 1).is_err());
    }

    #[test]
    fn prediction_from_h() {
        let model = MeasurementModel::axis_aligned(3, 0.01).unwrap();
        let pairs = one_step_prediction_from_h(&unit(3, 1), &model, 0.04).unwrap();
        assert!((pairs[0].value - 4.0).abs() < 1e-12);
        assert_eq!(pairs[0].vector, model.v1());
        let diag = normalize(&[0.0, 1.0, 1.0]).unwrap();
        let pairs = one_step_prediction_from_h(&diag, &model, 0.04).unwrap();
        assert!((pairs[0].value - 4.0).abs() < 1e-12);
        assert_eq!(pairs.len(), 3);
        // Each predicted pair is a true eigenpair.
        let sigma = model.signal_covariance();
        let op = assembled_operator(&sigma, &tilde_sigma_isotropic(&diag, &sigma, 0.04).unwrap())
            .unwrap();
        for pair in &pairs {
            let r = sub(&op.mul_vec(&pair.vector), &scale(&pair.vector, pair.value));
            assert!(norm(&r) < 1e-12);
        }
    }

    #[test]
    fn prediction_guards() {
        let model = MeasurementModel::axis_aligned(3, 0.01).unwrap();
        assert!(matches!(
            one_step_prediction_from_h(&unit(3, 1), &model, 0.005),
            Err(Error::ConditionsViolated(_))
        ));
        assert!(matches!(
            one_step_prediction_from_h(&normalize(&[0.1, 1.0, 0.0]).unwrap(), &model, 0.04),
            Err(Error::NotInH { .. })
        ));
    }

    #[test]
    fn eta_search_is_positive_inside_region() {
        let model = MeasurementModel::axis_aligned(3, 0.01).unwrap();
        let est = empirical_eta(&model, 0.04, 2, 100.0).unwrap();
        assert!(est.eta > 0.1, "{est:?}");
    }
}
