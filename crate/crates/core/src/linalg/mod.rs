//! Dense real linear algebra for the small symmetric problems that arise in
//! the surrogate iteration: a cyclic Jacobi eigensolver, Cholesky
//! factorization, orthonormal basis completion and the Cholesky reduction of
//! a symmetric-definite pencil.

mod basis;
mod cholesky;
mod eigen;
mod matrix;
mod pencil;
pub mod vector;

pub use basis::complete_orthonormal_basis;
pub use cholesky::{cholesky, cholesky_with, solve_lower, solve_lower_transpose, spd_inverse};
pub use eigen::{sym_eig, sym_eig_with, EigenDecomposition};
pub use matrix::Matrix;
pub use pencil::{
    dominant_pencil_eigvec, dominant_pencil_eigvec_with, pencil_eig, pencil_eig_with, DominantPair,
    PencilSpectrum,
};

/// Numerical thresholds shared by the kernels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed `max|a_ij − a_ji|` relative to `max|a_ij|`.
    pub symmetry: f64,
    /// Jacobi stops once the off-diagonal Frobenius norm is below this times `‖A‖_F`.
    pub offdiag: f64,
    pub max_sweeps: usize,
    /// Cholesky pivots must exceed this times `trace(A)/n`.
    pub pivot: f64,
    /// Relative `λ₁ − λ₂` below which the dominant eigenvalue counts as repeated.
    pub degenerate_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-10,
            offdiag: 1e-12,
            max_sweeps: 100,
            pivot: 1e-14,
            degenerate_gap: 1e-12,
        }
    }
}
