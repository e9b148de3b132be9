//! Adaptive Simpson quadrature.

use crate::error::{GeomError, Result};

pub const DEFAULT_ABS_TOL: f64 = 1e-10;
pub const MAX_DEPTH: u32 = 60;

/// `∫_a^b f` to absolute tolerance `tol`, splitting the tolerance evenly
/// between halves and applying the Richardson correction on acceptance.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return adaptive_simpson(f, b, a, tol).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = simpson(a, b, fa, fm, fb);
    let segment = Segment {
        a,
        b,
        fa,
        fm,
        fb,
        whole,
    };
    let v = refine(&f, segment, tol, 0)?;
    if !v.is_finite() {
        return Err(GeomError::NonFiniteSample { point: vec![a, b] });
    }
    Ok(v)
}

#[derive(Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

fn refine(f: &impl Fn(f64) -> f64, s: Segment, tol: f64, depth: u32) -> Result<f64> {
    let m = 0.5 * (s.a + s.b);
    let lm = 0.5 * (s.a + m);
    let rm = 0.5 * (m + s.b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(s.a, m, s.fa, flm, s.fm);
    let right = simpson(m, s.b, s.fm, frm, s.fb);
    let delta = left + right - s.whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= MAX_DEPTH || !delta.is_finite() {
        return Err(GeomError::QuadratureFailure {
            a: s.a,
            b: s.b,
            max_depth: MAX_DEPTH,
        });
    }
    let l = Segment {
        a: s.a,
        b: m,
        fa: s.fa,
        fm: flm,
        fb: s.fm,
        whole: left,
    };
    let r = Segment {
        a: m,
        b: s.b,
        fa: s.fm,
        fm: frm,
        fb: s.fb,
        whole: right,
    };
    Ok(refine(f, l, 0.5 * tol, depth + 1)? + refine(f, r, 0.5 * tol, depth + 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_up_to_cubic_are_exact() {
        let v = adaptive_simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 1e-12).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        assert_eq!(adaptive_simpson(|x| x, 1.0, 1.0, 1e-10).unwrap(), 0.0);
        let v = adaptive_simpson(|x| x, 1.0, 0.0, 1e-10).unwrap();
        assert!((v + 0.5).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrand_meets_tolerance() {
        let v = adaptive_simpson(f64::exp, 0.0, 3.0, 1e-10).unwrap();
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-10);
        let v = adaptive_simpson(|s| s / (1.0 + s * s).powi(2), 0.0, 5.0, 1e-10).unwrap();
        assert!((v - 25.0 / 52.0).abs() < 1e-10);
    }

    #[test]
    fn pole_at_endpoint_fails() {
        let r = adaptive_simpson(|x| 1.0 / x, 0.0, 1.0, 1e-10);
        assert!(matches!(
            r,
            Err(GeomError::QuadratureFailure { max_depth: 60, .. })
        ));
    }
}
