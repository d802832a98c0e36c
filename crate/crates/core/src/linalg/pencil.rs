use super::cholesky::{cholesky_with, solve_lower, solve_lower_transpose};
use super::eigen::sym_eig_with;
use super::matrix::Matrix;
use super::vector::{fix_sign, normalize};
use super::Tolerances;
use crate::error::Result;

/// Spectrum of `A⁻¹B` for SPD `A` and symmetric `B`.
#[derive(Debug, Clone)]
pub struct PencilSpectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unit-norm, sign-fixed eigenvectors of `A⁻¹B` (not `A`-orthonormal).
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Dominant eigenpair of `A⁻¹B`.
#[derive(Debug, Clone)]
pub struct DominantPair {
    pub value: f64,
    pub vector: Vec<f64>,
    /// `λ₁ − λ₂`
    pub gap: f64,
    /// Set when `gap ≤ tol.degenerate_gap · |λ₁|`; the vector is then an
    /// arbitrary member of the dominant eigenspace.
    pub degenerate: bool,
}

pub fn pencil_eig(a: &Matrix, b: &Matrix) -> Result<PencilSpectrum> {
    pencil_eig_with(a, b, &Tolerances::default())
}

/// Reduces `B w = λ A w` to the standard symmetric problem
/// `L⁻¹ B L⁻ᵀ u = λ u` with `A = L Lᵀ`, then maps back by `w ∝ L⁻ᵀ u`.
pub fn pencil_eig_with(a: &Matrix, b: &Matrix, tol: &Tolerances) -> Result<PencilSpectrum> {
    a.check_dim(b.dim())?;
    let n = a.dim();
    let l = cholesky_with(a, tol)?;

    // X = L⁻¹ B, then C = L⁻¹ Xᵀ = L⁻¹ B L⁻ᵀ.
    let x_cols: Vec<Vec<f64>> = (0..n).map(|j| solve_lower(&l, &b.column(j))).collect();
    let x = Matrix::from_columns(&x_cols);
    let c_cols: Vec<Vec<f64>> = (0..n).map(|j| solve_lower(&l, x.row(j))).collect();
    let c = Matrix::from_columns(&c_cols).symmetrized();

    let eig = sym_eig_with(&c, tol)?;
    let eigenvectors = eig
        .eigenvectors
        .iter()
        .map(|u| {
            let mut w = normalize(&solve_lower_transpose(&l, u))?;
            fix_sign(&mut w);
            Ok(w)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PencilSpectrum {
        eigenvalues: eig.eigenvalues,
        eigenvectors,
    })
}

pub fn dominant_pencil_eigvec(a: &Matrix, b: &Matrix) -> Result<DominantPair> {
    dominant_pencil_eigvec_with(a, b, &Tolerances::default())
}

pub fn dominant_pencil_eigvec_with(
    a: &Matrix,
    b: &Matrix,
    tol: &Tolerances,
) -> Result<DominantPair> {
    let spectrum = pencil_eig_with(a, b, tol)?;
    let value = spectrum.eigenvalues[0];
    let gap = spectrum
        .eigenvalues
        .get(1)
        .map_or(f64::INFINITY, |l2| value - l2);
    let degenerate = gap <= tol.degenerate_gap * value.abs();
    let vector = spectrum.eigenvectors.into_iter().next().expect("n >= 1");
    Ok(DominantPair {
        value,
        vector,
        gap,
        degenerate,
    })
}
