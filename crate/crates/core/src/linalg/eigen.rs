use super::matrix::Matrix;
use super::vector::fix_sign;
use super::Tolerances;
use crate::error::{Error, Result};

/// Eigenpairs of a symmetric matrix, sorted by descending eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Unit eigenvectors in the same order as `eigenvalues`, each sign-fixed
    /// so its largest-magnitude entry is positive.
    pub eigenvectors: Vec<Vec<f64>>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `V Λ Vᵀ`
    pub fn reconstruct(&self) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            m.add_scaled(*lambda, &Matrix::outer(v, v));
        }
        m
    }
}

pub fn sym_eig(a: &Matrix) -> Result<EigenDecomposition> {
    sym_eig_with(a, &Tolerances::default())
}

/// Cyclic Jacobi eigensolver for dense symmetric matrices.
///
/// Sweeps over every `(p, q)` pair with `p < q`, annihilating `a_pq` by a
/// plane rotation, until the off-diagonal Frobenius norm drops to
/// `tol.offdiag · ‖A‖_F`.
pub fn sym_eig_with(a: &Matrix, tol: &Tolerances) -> Result<EigenDecomposition> {
    let n = a.dim();
    let asym = a.max_asymmetry();
    if asym > tol.symmetry * a.max_abs() {
        return Err(Error::NotSymmetric {
            max_asymmetry: asym,
        });
    }
    let mut m = a.symmetrized();
    let mut v = Matrix::identity(n);
    let threshold = tol.offdiag * a.frobenius_norm();

    let mut sweeps = 0;
    loop {
        if off_diagonal_norm(&m) <= threshold {
            break;
        }
        if sweeps == tol.max_sweeps {
            return Err(Error::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n.saturating_sub(1) {
            for q in (p + 1)..n {
                rotate(&mut m, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let eigenvalues = order.iter().map(|&i| m[(i, i)]).collect();
    let eigenvectors = order
        .iter()
        .map(|&i| {
            let mut col = v.column(i);
            fix_sign(&mut col);
            col
        })
        .collect();
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
        sweeps,
    })
}

fn off_diagonal_norm(m: &Matrix) -> f64 {
    let n = m.dim();
    let mut sum = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            sum += m[(i, j)] * m[(i, j)];
        }
    }
    (2.0 * sum).sqrt()
}

fn rotate(m: &mut Matrix, v: &mut Matrix, p: usize, q: usize) {
    let apq = m[(p, q)];
    if apq == 0.0 {
        return;
    }
    let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
    let t = if theta.is_finite() {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    } else {
        0.0
    };
    if t == 0.0 {
        return;
    }
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = m.dim();
    for k in 0..n {
        let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..n {
        let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..n {
        let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}
