//! Adaptive Simpson quadrature used for moment and coefficient integrals.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QuadError {
    #[error("adaptive quadrature failed to reach the requested tolerance")]
    NonConvergence,
}

const MAX_DEPTH: u32 = 48;

/// Integrate `f` over [a, b] to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    recurse(&f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

/// Integrate `f` over [a, b] after an even pre-split into `panels` pieces.
///
/// A lone top-level Simpson estimate accepts spuriously when a symmetry of
/// the integrand makes the first refinement agree with the whole estimate
/// (periodic integrands over a full period do exactly that); a partition
/// finer than any such symmetry removes the failure mode.
pub fn panelled_adaptive_simpson<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    panels: usize,
    tol: f64,
) -> Result<f64, QuadError> {
    debug_assert!(panels > 0);
    let width = (b - a) / panels as f64;
    let per_panel = tol / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + width * i as f64;
        let hi = if i + 1 == panels { b } else { a + width * (i + 1) as f64 };
        total += adaptive_simpson(&f, lo, hi, per_panel)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn recurse<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64, QuadError> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(QuadError::NonConvergence);
    }
    let lv = recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?;
    let rv = recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?;
    Ok(lv + rv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn integrates_polynomials_exactly() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 0.0).abs() < 1e-12);
    }

    #[test]
    fn integrates_trig() {
        let v = adaptive_simpson(|x| (3.0 * x).cos().powi(2), 0.0, 2.0 * PI, 1e-12).unwrap();
        assert!((v - PI).abs() < 1e-10);
    }

    #[test]
    fn integrates_gaussian_mass() {
        let sigma = 0.7;
        let pdf = move |x: f64| (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
        let v = adaptive_simpson(pdf, -10.0 * sigma, 10.0 * sigma, 1e-12).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }
}
