//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 60;

/// `∫ₐᵇ f(x) dx` to roughly `tol` absolute error.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    // Seed with a few panels so a narrow peak at an interior point is not missed.
    const PANELS: usize = 16;
    let h = (b - a) / PANELS as f64;
    (0..PANELS)
        .map(|k| {
            let lo = a + k as f64 * h;
            let hi = lo + h;
            let (flo, fhi) = (f(lo), f(hi));
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let whole = simpson(lo, hi, flo, fmid, fhi);
            refine(
                &f,
                lo,
                hi,
                flo,
                fmid,
                fhi,
                whole,
                tol / PANELS as f64,
                MAX_DEPTH,
            )
        })
        .sum()
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    // NaN or roundoff-level corrections cannot be refined further.
    if depth == 0
        || !delta.is_finite()
        || delta.abs() <= 15.0 * tol
        || delta.abs() <= f64::EPSILON * (left + right).abs()
    {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_gaussian() {
        let cubic = adaptive_simpson(|x| x * x * x - x, 0.0, 2.0, 1e-12);
        assert!((cubic - 2.0).abs() < 1e-12);
        let norm = (2.0 * std::f64::consts::PI).sqrt();
        let g = adaptive_simpson(|x| (-0.5 * x * x).exp() / norm, -12.0, 12.0, 1e-12);
        assert!((g - 1.0).abs() < 1e-10);
    }

    #[test]
    fn narrow_peak() {
        let s: f64 = 1e-6;
        let norm = (2.0 * std::f64::consts::PI * s).sqrt();
        let g = adaptive_simpson(|x| (-0.5 * x * x / s).exp() / norm, -1.0, 1.0, 1e-12);
        assert!((g - 1.0).abs() < 1e-9, "{g}");
    }
}
