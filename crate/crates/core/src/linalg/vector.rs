//! Small helpers on `&[f64]` vectors.

use crate::error::{Error, Result};

/// Tolerance on `|‖x‖₂ − 1|` for a vector to count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-12;

pub fn dot(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

pub fn scale(x: &[f64], s: f64) -> Vec<f64> {
    x.iter().map(|v| v * s).collect()
}

pub fn sub(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a - b).collect()
}

pub fn add(x: &[f64], y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + b).collect()
}

/// `x + alpha · y`
pub fn axpy(x: &[f64], alpha: f64, y: &[f64]) -> Vec<f64> {
    x.iter().zip(y).map(|(a, b)| a + alpha * b).collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn normalize(x: &[f64]) -> Result<Vec<f64>> {
    let r = norm(x);
    if r == 0.0 || !r.is_finite() {
        return Err(Error::NotNormalized { norm: r });
    }
    Ok(scale(x, 1.0 / r))
}

pub fn is_normalized(x: &[f64]) -> bool {
    (norm(x) - 1.0).abs() <= NORMALIZED_TOL
}

pub fn ensure_normalized(x: &[f64], tol: f64) -> Result<()> {
    let r = norm(x);
    if (r - 1.0).abs() <= tol {
        Ok(())
    } else {
        Err(Error::NotNormalized { norm: r })
    }
}

/// Index of the entry with the largest magnitude, lowest index on ties.
pub fn argmax_abs(x: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in x.iter().enumerate() {
        if v.abs() > x[best].abs() {
            best = i;
        }
    }
    best
}

/// Flips `x` so that its largest-magnitude entry is positive.
pub fn fix_sign(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    if x[argmax_abs(x)] < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
}

pub fn sign_fixed(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    fix_sign(&mut y);
    y
}

/// `min(‖x − y‖, ‖x + y‖)`
pub fn sign_invariant_distance(x: &[f64], y: &[f64]) -> f64 {
    norm(&sub(x, y)).min(norm(&add(x, y)))
}

/// Angle between the lines spanned by `x` and `y`, in `[0, π/2]`.
///
/// Uses `2·atan2(‖x̂ − ŷ‖, ‖x̂ + ŷ‖)`, which stays accurate for tiny angles
/// where `acos` loses half the digits.
pub fn line_angle(x: &[f64], y: &[f64]) -> f64 {
    let (nx, ny) = (norm(x), norm(y));
    let a = scale(x, 1.0 / nx);
    let mut b = scale(y, 1.0 / ny);
    if dot(&a, &b) < 0.0 {
        b.iter_mut().for_each(|v| *v = -*v);
    }
    2.0 * norm(&sub(&a, &b)).atan2(norm(&add(&a, &b)))
}
