//! Learning linear first integrals from noisy data with the iterative
//! adversarial surrogate (IRAS) scheme under Gaussian noise.
//!
//! The crate covers the measurement and surrogate models, the
//! self-consistent-field iteration on `Σ⁻¹Σ̃(θ)`, its closed-form spectrum, and
//! a ribosome-flow-on-a-ring simulator that produces test data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussmodel;
pub mod linalg;
pub mod quadrature;
pub mod random;
pub mod rfmr;
pub mod scf;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use gaussmodel::{MeasurementModel, SurrogateModel};
pub use linalg::Matrix;
pub use random::GaussianRng;
pub use rfmr::{add_noise, integrate_rk4, NoisyDataset, RfmrSystem, Trajectory};
pub use scf::{iras_step, run_iras, run_iras_empirical, IrasConfig, IrasStatus, IrasTrace};
pub use spectral::{check_conditions, perturbed_spectrum, ConditionReport, PerturbedSpectrum};
