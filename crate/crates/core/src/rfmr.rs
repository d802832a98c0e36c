//! Ribosome flow model on a ring.
//!
//! `ẋᵢ = λᵢ₋₁xᵢ₋₁(1 − xᵢ) − λᵢxᵢ(1 − xᵢ₊₁)` with indices modulo `n`. The flux
//! out of site `i` is the flux into site `i+1`, so `1ᵀx` is a first integral.

use log::warn;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::random::GaussianRng;

/// Bound used to detect integrator blow-up.
pub const CUBE_SLACK: f64 = 1e-6;
/// Target `h · max λ` for the internal RK4 step.
pub const STEP_RATE_PRODUCT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RfmrSystem {
    rates: Vec<f64>,
}

impl RfmrSystem {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.len() < 2 {
            return Err(invalid("rates", "need at least two sites"));
        }
        if let Some(bad) = rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(invalid(
                "rates",
                format!("rates must be finite and non-negative, got {bad}"),
            ));
        }
        if rates.contains(&0.0) {
            warn!("zero transition rate: outside the strictly positive rate regime");
        }
        Ok(Self { rates })
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn max_rate(&self) -> f64 {
        self.rates.iter().copied().fold(0.0, f64::max)
    }

    /// Internal RK4 substeps per sampling interval so that `h · max λ ≤ 0.1`.
    pub fn substeps(&self, dt: f64) -> usize {
        ((dt * self.max_rate() / STEP_RATE_PRODUCT).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub dt: f64,
    /// `x(0), x(Δt), …, x(steps·Δt)`
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.states.len()).map(move |k| k as f64 * self.dt)
    }

    /// `max_k |1ᵀx(kΔt) − 1ᵀx(0)|`
    pub fn conservation_drift(&self) -> f64 {
        let total = |x: &Vec<f64>| x.iter().sum::<f64>();
        let h0 = total(&self.states[0]);
        self.states
            .iter()
            .map(|x| (total(x) - h0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest distance of any stored component outside `[0, 1]`.
    pub fn cube_excursion(&self) -> f64 {
        self.states
            .iter()
            .flatten()
            .map(|&v| (-v).max(v - 1.0).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds x(0)")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoisyDataset {
    /// `z¹, …, z^N`; `z^k = x(kΔt) + η^k`.
    pub samples: Vec<Vec<f64>>,
    pub sigma2: f64,
    pub seed: u64,
}

pub fn rfmr_derivative(x: &[f64], system: &RfmrSystem) -> Result<Vec<f64>> {
    if x.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            found: x.len(),
        });
    }
    Ok(derivative(x, &system.rates))
}

fn derivative(x: &[f64], rates: &[f64]) -> Vec<f64> {
    let n = x.len();
    // flux[i]: from site i to site i+1
    let flux: Vec<f64> = (0..n)
        .map(|i| rates[i] * x[i] * (1.0 - x[(i + 1) % n]))
        .collect();
    (0..n).map(|i| flux[(i + n - 1) % n] - flux[i]).collect()
}

fn rk4_step(x: &[f64], rates: &[f64], h: f64) -> Vec<f64> {
    let shifted =
        |k: &[f64], c: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + c * b).collect() };
    let k1 = derivative(x, rates);
    let k2 = derivative(&shifted(&k1, h / 2.0), rates);
    let k3 = derivative(&shifted(&k2, h / 2.0), rates);
    let k4 = derivative(&shifted(&k3, h), rates);
    (0..x.len())
        .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Classical RK4 sampled every `dt`, with the internal step chosen by
/// [`RfmrSystem::substeps`].
pub fn integrate_rk4(system: &RfmrSystem, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    let m = if dt > 0.0 { system.substeps(dt) } else { 1 };
    integrate_rk4_substeps(system, x0, dt, steps, m)
}

/// RK4 with exactly `substeps` internal steps per sampling interval.
pub fn integrate_rk4_substeps(
    system: &RfmrSystem,
    x0: &[f64],
    dt: f64,
    steps: usize,
    substeps: usize,
) -> Result<Trajectory> {
    if x0.len() != system.n() {
        return Err(Error::DimensionMismatch {
            expected: system.n(),
            found: x0.len(),
        });
    }
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", format!("must be positive, got {dt}")));
    }
    if steps == 0 {
        return Err(invalid("steps", "must be at least 1"));
    }
    if substeps == 0 {
        return Err(invalid("substeps", "must be at least 1"));
    }
    if let Some(v) = x0.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(invalid(
            "x0",
            format!("components must lie in [0, 1], got {v}"),
        ));
    }
    let h = dt / substeps as f64;
    let mut states = Vec::with_capacity(steps + 1);
    states.push(x0.to_vec());
    let mut x = x0.to_vec();
    for step in 1..=steps {
        for _ in 0..substeps {
            x = rk4_step(&x, &system.rates, h);
        }
        if let Some((site, &value)) = x
            .iter()
            .enumerate()
            .find(|(_, v)| !(-CUBE_SLACK..=1.0 + CUBE_SLACK).contains(*v))
        {
            return Err(Error::StateOutOfRange { step, site, value });
        }
        states.push(x.clone());
    }
    Ok(Trajectory { dt, states })
}

/// Measurement noise on `x(Δt), …, x(NΔt)`; the initial state is not observed.
pub fn add_noise(traj: &Trajectory, sigma2: f64, seed: u64) -> Result<NoisyDataset> {
    if !(sigma2 >= 0.0) || !sigma2.is_finite() {
        return Err(invalid(
            "sigma2",
            format!("must be non-negative, got {sigma2}"),
        ));
    }
    let sd = sigma2.sqrt();
    let mut rng = GaussianRng::new(seed);
    let samples = traj.states[1..]
        .iter()
        .map(|x| {
            if sigma2 == 0.0 {
                x.clone()
            } else {
                x.iter()
                    .map(|&xi| xi + sd * rng.standard_normal())
                    .collect()
            }
        })
        .collect();
    Ok(NoisyDataset {
        samples,
        sigma2,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn experiment_system() -> (RfmrSystem, Vec<f64>) {
        (
            RfmrSystem::new(vec![2.0, 5.0, 5.0, 0.0, 1.0]).unwrap(),
            vec![0.71, 0.9, 0.28, 0.8, 0.76],
        )
    }

    #[test]
    fn uniform_state_is_steady() {
        let sys = RfmrSystem::new(vec![1.5; 4]).unwrap();
        assert!(rfmr_derivative(&[0.3; 4], &sys)
            .unwrap()
            .iter()
            .all(|d| d.abs() < 1e-16));
    }

    #[test]
    fn two_site_hand_evaluation() {
        let sys = RfmrSystem::new(vec![1.0, 1.0]).unwrap();
        assert_eq!(rfmr_derivative(&[1.0, 0.0], &sys).unwrap(), vec![-1.0, 1.0]);
    }

    #[test]
    fn derivative_sums_to_zero() {
        let (sys, x0) = experiment_system();
        let d = rfmr_derivative(&x0, &sys).unwrap();
        assert!(d.iter().sum::<f64>().abs() <= 1e-14);
    }

    #[test]
    fn dimension_and_parameter_checks() {
        let (sys, _) = experiment_system();
        assert!(rfmr_derivative(&[0.5; 3], &sys).is_err());
        assert!(RfmrSystem::new(vec![1.0]).is_err());
        assert!(RfmrSystem::new(vec![1.0, -0.5]).is_err());
        let x0 = [0.5; 5];
        assert!(matches!(
            integrate_rk4(&sys, &x0, 0.001, 0),
            Err(Error::InvalidParameter { name: "steps", .. })
        ));
        assert!(integrate_rk4(&sys, &x0, 0.0, 10).is_err());
        assert!(integrate_rk4(&sys, &[1.2, 0.0, 0.0, 0.0, 0.0], 0.001, 10).is_err());
    }

    #[test]
    fn frozen_dynamics() {
        let sys = RfmrSystem::new(vec![0.0; 3]).unwrap();
        let traj = integrate_rk4(&sys, &[0.1, 0.5, 0.9], 0.1, 50).unwrap();
        assert!(traj.states.iter().all(|x| x == &vec![0.1, 0.5, 0.9]));
    }

    #[test]
    fn substep_rule() {
        let (sys, _) = experiment_system();
        assert_eq!(sys.substeps(0.001), 1);
        assert_eq!(sys.substeps(0.1), 5);
        assert_eq!(RfmrSystem::new(vec![0.0, 0.0]).unwrap().substeps(1.0), 1);
    }

    #[test]
    fn experiment_setup_conserves_density() {
        let (sys, x0) = experiment_system();
        let traj = integrate_rk4(&sys, &x0, 0.001, 2000).unwrap();
        assert_eq!(traj.states.len(), 2001);
        assert!(
            traj.conservation_drift() <= 1e-10,
            "{}",
            traj.conservation_drift()
        );
        assert!(traj.cube_excursion() <= 1e-9);
    }

    #[test]
    fn rotation_equivariance() {
        let (sys, x0) = experiment_system();
        let mut rates = sys.rates().to_vec();
        rates.rotate_right(1);
        let mut y0 = x0.clone();
        y0.rotate_right(1);
        let a = integrate_rk4(&sys, &x0, 0.01, 100).unwrap();
        let b = integrate_rk4(&RfmrSystem::new(rates).unwrap(), &y0, 0.01, 100).unwrap();
        for (xa, xb) in a.states.iter().zip(&b.states) {
            let mut shifted = xa.clone();
            shifted.rotate_right(1);
            for (u, v) in shifted.iter().zip(xb) {
                assert!((u - v).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let (sys, x0) = experiment_system();
        let (dt, t_steps) = (0.05, 20);
        let end = |m: usize| {
            integrate_rk4_substeps(&sys, &x0, dt, t_steps, m)
                .unwrap()
                .final_state()
                .to_vec()
        };
        let reference = end(8);
        let dist = |a: &[f64]| {
            a.iter()
                .zip(&reference)
                .map(|(u, v)| (u - v).powi(2))
                .sum::<f64>()
                .sqrt()
        };
        let ratio = dist(&end(1)) / dist(&end(2));
        assert!((8.0..=32.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn noise_properties() {
        let (sys, x0) = experiment_system();
        let traj = integrate_rk4(&sys, &x0, 0.001, 2000).unwrap();
        let clean = add_noise(&traj, 0.0, 1).unwrap();
        assert_eq!(clean.samples.len(), 2000);
        assert_eq!(clean.samples[..], traj.states[1..]);

        let noisy = add_noise(&traj, 1e-5, 9).unwrap();
        assert_eq!(noisy, add_noise(&traj, 1e-5, 9).unwrap());
        for j in 0..5 {
            let resid: Vec<f64> = noisy
                .samples
                .iter()
                .zip(&traj.states[1..])
                .map(|(z, x)| z[j] - x[j])
                .collect();
            let mean = resid.iter().sum::<f64>() / resid.len() as f64;
            let var =
                resid.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (resid.len() - 1) as f64;
            assert!((var / 1e-5 - 1.0).abs() < 0.1, "site {j}: {var}");
        }
        assert!(add_noise(&traj, -1.0, 0).is_err());
    }
}
