use super::matrix::Matrix;
use super::Tolerances;
use crate::error::{Error, Result};

pub fn cholesky(a: &Matrix) -> Result<Matrix> {
    cholesky_with(a, &Tolerances::default())
}

/// Lower-triangular `L` with `A = L Lᵀ`.
///
/// A pivot at or below `tol.pivot · trace(A)/n` is treated as a loss of
/// positive definiteness.
pub fn cholesky_with(a: &Matrix, tol: &Tolerances) -> Result<Matrix> {
    let n = a.dim();
    let asym = a.max_asymmetry();
    if asym > tol.symmetry * a.max_abs() {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let floor = tol.pivot * a.trace() / n as f64;
    let mut l = Matrix::zeros(n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > floor) || floor <= 0.0 {
            return Err(Error::NotPositiveDefinite { index: j, pivot: d });
        }
        let ljj = d.sqrt();
        l[(j, j)] = ljj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / ljj;
        }
    }
    Ok(l)
}

/// Solves `L x = b` for lower-triangular `L`.
pub fn solve_lower(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = b.to_vec();
    for i in 0..n {
        let mut s = x[i];
        for k in 0..i {
            s -= l[(i, k)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// Solves `Lᵀ x = b` for lower-triangular `L`.
pub fn solve_lower_transpose(l: &Matrix, b: &[f64]) -> Vec<f64> {
    let n = l.dim();
    let mut x = b.to_vec();
    for i in (0..n).rev() {
        let mut s = x[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s / l[(i, i)];
    }
    x
}

/// `A⁻¹ = L⁻ᵀ L⁻¹` for SPD `A`.
pub fn spd_inverse(a: &Matrix) -> Result<Matrix> {
    let l = cholesky(a)?;
    let n = a.dim();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| solve_lower_transpose(&l, &solve_lower(&l, &super::vector::unit(n, j))))
        .collect();
    Ok(Matrix::from_columns(&cols).symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        assert_eq!(cholesky(&Matrix::identity(4)).unwrap(), Matrix::identity(4));
    }

    #[test]
    fn diagonal_square_roots() {
        let l = cholesky(&Matrix::from_diag(&[4.0, 9.0])).unwrap();
        assert_eq!(l, Matrix::from_diag(&[2.0, 3.0]));
    }

    #[test]
    fn reconstructs_dense_spd() {
        let a = Matrix::from_rows(&[[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        for i in 0..3 {
            for j in (i + 1)..3 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
        let err = l.matmul(&l.transpose()).sub(&a).frobenius_norm();
        assert!(err <= 1e-10 * a.frobenius_norm());
    }

    #[test]
    fn rejects_indefinite_and_singular() {
        let indefinite = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0]]);
        assert!(matches!(
            cholesky(&indefinite),
            Err(Error::NotPositiveDefinite { index: 1, .. })
        ));
        let singular = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        assert!(cholesky(&singular).is_err());
        assert!(cholesky(&Matrix::zeros(2)).is_err());
    }

    #[test]
    fn inverse_of_spd() {
        let a = Matrix::from_rows(&[[4.0, 2.0, 0.4], [2.0, 5.0, 1.0], [0.4, 1.0, 3.0]]);
        let inv = spd_inverse(&a).unwrap();
        assert!(a.matmul(&inv).sub(&Matrix::identity(3)).max_abs() < 1e-14);
    }

    #[test]
    fn triangular_solves() {
        let a = Matrix::from_rows(&[[4.0, 2.0], [2.0, 3.0]]);
        let l = cholesky(&a).unwrap();
        let b = [1.0, 2.0];
        let y = solve_lower(&l, &b);
        let x = solve_lower_transpose(&l, &y);
        let back = a.mul_vec(&x);
        assert!((back[0] - 1.0).abs() < 1e-14 && (back[1] - 2.0).abs() < 1e-14);
    }
}
