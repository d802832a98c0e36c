use super::matrix::Matrix;
use super::vector::{argmax_abs, dot, norm, unit};

/// Orthonormal basis whose first column is `v1`.
///
/// Gram–Schmidt (two passes) over the standard basis, skipping the standard
/// vector along which `v1` has its largest component.
pub fn complete_orthonormal_basis(v1: &[f64]) -> Matrix {
    let n = v1.len();
    let skip = argmax_abs(v1);
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(n);
    columns.push(v1.to_vec());
    for i in (0..n).filter(|&i| i != skip) {
        let mut e = unit(n, i);
        for _ in 0..2 {
            for q in &columns {
                let c = dot(q, &e) / dot(q, q);
                e.iter_mut().zip(q).for_each(|(x, qi)| *x -= c * qi);
            }
        }
        let r = norm(&e);
        e.iter_mut().for_each(|x| *x /= r);
        columns.push(e);
    }
    Matrix::from_columns(&columns)
}
