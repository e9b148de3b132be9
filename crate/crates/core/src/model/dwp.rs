//! Doubly-warped products `dt² ⊕ ρ(t)²(σ(t)² ĝ_ξ ⊕ ĝ_ξ⊥)` over the round
//! Sasaki sphere, realized on punctured `C^n`.
//!
//! The chart uses the holomorphic radius `s = |x|` rather than `t`: with
//! `dt/ds = ρσ/s` the metric reads
//! `(ρσ/s)² (e_r e_rᵀ + e_ξ e_ξᵀ) + (ρ/s)² (Id − e_r e_rᵀ − e_ξ e_ξᵀ)`
//! with `e_r = x/s`, `e_ξ = J₀x/s`, so the standard structure `J₀` is
//! orthogonal and the space is Kähler exactly when `σ = ρ′`. The anchor is
//! `s(1) = 1`.

use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::check::Check;
use crate::diff::DiffScheme;
use crate::error::{GeomError, Result};
use crate::field::{standard_j, ComplexStructureField, MetricField, Point, ScalarField};
use crate::profile::WarpProfile;
use crate::tensor::sectional_curvature;

use super::{ClosedForms, ModelSpace, SampleRegion};

/// Largest chart dimension `n` (so `2n <= 6`).
pub const MAX_N: usize = 3;
/// Admissible window in the geodesic parameter `t`.
pub const ADMISSIBLE_T: (f64, f64) = (0.1, 10.0);
const NUMERIC_PANELS: usize = 512;
const HORIZONTAL_TOL: f64 = 1e-8;

/// The map between `t` and the chart radius `s`.
#[derive(Debug, Clone)]
pub enum RadialChart {
    /// `s = t`
    Linear,
    /// `s = tanh t / tanh 1`
    Sinh,
    /// `s = tan t / tan 1`
    Sin,
    /// `ρ = cosh`, `σ = 1`: `log s = gd(t) − gd(1)`
    CoshUnit,
    /// `log s = ∫_1^t dτ / (ρσ)` by composite Simpson, inverted by safeguarded Newton.
    Numeric(WarpProfile),
}

fn gd(t: f64) -> f64 {
    t.sinh().atan()
}

impl RadialChart {
    pub fn for_profile(p: &WarpProfile) -> Self {
        let sigma = p.sigma_fn().map(|s| s.name());
        match (p.rho().name(), sigma) {
            ("rho_linear", None | Some("sigma_one")) => RadialChart::Linear,
            ("rho_sinh", None) => RadialChart::Sinh,
            ("rho_sin", None) => RadialChart::Sin,
            ("rho_cosh", Some("sigma_one")) => RadialChart::CoshUnit,
            _ => RadialChart::Numeric(p.clone()),
        }
    }

    /// Same chart with the closed form replaced by quadrature.
    pub fn numeric(p: &WarpProfile) -> Self {
        RadialChart::Numeric(p.clone())
    }

    fn out_of_range(&self, s: f64) -> GeomError {
        GeomError::ProfileDomain {
            profile: format!("{self:?}"),
            at: s,
        }
    }

    pub fn s_of_t(&self, t: f64) -> Result<f64> {
        let s = match self {
            RadialChart::Linear => t,
            RadialChart::Sinh => t.tanh() / 1f64.tanh(),
            RadialChart::Sin => t.tan() / 1f64.tan(),
            RadialChart::CoshUnit => (gd(t) - gd(1.0)).exp(),
            RadialChart::Numeric(p) => log_s(p, t)?.exp(),
        };
        if s.is_finite() && s > 0.0 {
            Ok(s)
        } else {
            Err(self.out_of_range(t))
        }
    }

    pub fn t_of_s(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(self.out_of_range(s));
        }
        let t = match self {
            RadialChart::Linear => s,
            RadialChart::Sinh => (s * 1f64.tanh()).atanh(),
            RadialChart::Sin => (s * 1f64.tan()).atan(),
            RadialChart::CoshUnit => {
                let y = s.ln() + gd(1.0);
                if !(y > 0.0 && y < FRAC_PI_2) {
                    return Err(self.out_of_range(s));
                }
                y.tan().asinh()
            }
            RadialChart::Numeric(p) => invert_log_s(p, s.ln())?,
        };
        if t.is_finite() && t > 0.0 {
            Ok(t)
        } else {
            Err(self.out_of_range(s))
        }
    }
}

fn rho_sigma(p: &WarpProfile, t: f64) -> Result<f64> {
    Ok(p.rho().value(t)? * p.sigma(t, 0)?)
}

/// `∫_1^t dτ/(ρσ)` on a fixed panel count, so the result is smooth in `t`.
fn log_s(p: &WarpProfile, t: f64) -> Result<f64> {
    let n = NUMERIC_PANELS;
    let h = (t - 1.0) / n as f64;
    let f = |x: f64| rho_sigma(p, x).map(|v| 1.0 / v);
    let mut acc = f(1.0)? + f(t)?;
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(1.0 + h * i as f64)?;
    }
    Ok(acc * h / 3.0)
}

fn invert_log_s(p: &WarpProfile, target: f64) -> Result<f64> {
    let (dlo, dhi) = p.rho().domain();
    let fail = || GeomError::ProfileDomain {
        profile: p.name(),
        at: target.exp(),
    };
    let mut lo = 1.0;
    let mut hi = 1.0;
    while log_s(p, lo)? > target {
        lo *= 0.5;
        if lo <= dlo || lo < 1e-8 {
            return Err(fail());
        }
    }
    while log_s(p, hi)? < target {
        hi = if dhi.is_finite() {
            0.5 * (hi + dhi)
        } else {
            2.0 * hi
        };
        if hi >= dhi || hi > 1e3 {
            return Err(fail());
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..100 {
        let g = log_s(p, t)? - target;
        if g.abs() < 1e-15 {
            break;
        }
        if g > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let newton = t - g * rho_sigma(p, t)?;
        t = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo < 1e-15 * hi {
            break;
        }
    }
    Ok(t)
}

/// Data carried by a doubly-warped space for curvature checks.
#[derive(Debug, Clone)]
pub struct WarpData {
    pub profile: WarpProfile,
    pub chart: RadialChart,
    pub n: usize,
}

impl WarpData {
    /// The geodesic parameter `t` at `p`.
    pub fn t_at(&self, p: &Point) -> Result<f64> {
        self.chart.t_of_s(p.norm())
    }
}

/// `t`, `ρ`, `σ` and the chart-rate derivatives at radius `s`.
struct RadialJet {
    rho: [f64; 3],
    /// `dt/ds`
    t_s: f64,
    /// `d²t/ds²`
    t_ss: f64,
}

fn radial_jet(w: &WarpData, s: f64) -> Result<RadialJet> {
    let t = w.chart.t_of_s(s)?;
    let r = w.profile.rho();
    let rho = [r.value(t)?, r.derivative(t, 1)?, r.derivative(t, 2)?];
    let sigma = [w.profile.sigma(t, 0)?, w.profile.sigma(t, 1)?];
    let rs = rho[0] * sigma[0];
    let rs_t = rho[1] * sigma[0] + rho[0] * sigma[1];
    let t_s = rs / s;
    let t_ss = rs_t * t_s / s - rs / (s * s);
    Ok(RadialJet { rho, t_s, t_ss })
}

fn nan_matrix(d: usize) -> DMatrix<f64> {
    DMatrix::from_element(d, d, f64::NAN)
}

fn warp_metric(w: &WarpData, x: &DVector<f64>, j0: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let d = x.len();
    let s = x.norm();
    let t = w.chart.t_of_s(s)?;
    let rho = w.profile.rho().value(t)?;
    let sigma = w.profile.sigma(t, 0)?;
    let a = (rho * sigma / s).powi(2);
    let b = (rho / s).powi(2);
    let er = x / s;
    let exi = j0 * x / s;
    let mut g = DMatrix::identity(d, d) * b;
    g += (&er * er.transpose() + &exi * exi.transpose()) * (a - b);
    Ok((&g + g.transpose()) * 0.5)
}

/// Options for [`dwp_punctured_space`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DwpOptions {
    /// Sampling window in `t`.
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for DwpOptions {
    fn default() -> Self {
        Self {
            t_min: 0.1,
            t_max: 2.0,
        }
    }
}

/// Doubly-warped product on punctured `C^n`, with `u = ρ(t)²`.
pub fn dwp_punctured_space(profile: WarpProfile, n: usize, opts: DwpOptions) -> Result<ModelSpace> {
    if n == 0 || n > MAX_N {
        return Err(GeomError::NotApplicable {
            space: format!("dwp[{}]", profile.name()),
            reason: format!("n must be in 1..={MAX_N}, got {n}"),
        });
    }
    let (dlo, dhi) = profile.rho().domain();
    let adm_lo = ADMISSIBLE_T.0.max(dlo);
    let adm_hi = ADMISSIBLE_T.1.min(dhi);
    if !(opts.t_min >= adm_lo && opts.t_max <= adm_hi && opts.t_min < opts.t_max) {
        return Err(GeomError::ProfileDomain {
            profile: profile.name(),
            at: if opts.t_min < adm_lo {
                opts.t_min
            } else {
                opts.t_max
            },
        });
    }
    let d = 2 * n;
    let name = format!("dwp[{}]", profile.name());
    let kahler = profile.is_kahler();
    let differenced = profile.differenced();
    let chart = RadialChart::for_profile(&profile);
    let data = WarpData { profile, chart, n };
    let s_min = data.chart.s_of_t(opts.t_min)?;
    let s_max = data.chart.s_of_t(opts.t_max)?;

    let j0 = standard_j(d);
    let metric = {
        let w = data.clone();
        MetricField::new(d, move |p| {
            warp_metric(&w, p.coords(), &j0).unwrap_or_else(|_| nan_matrix(d))
        })
    };
    let j = ComplexStructureField::standard(d)?;

    let u = {
        let (wv, wg, wh) = (data.clone(), data.clone(), data.clone());
        ScalarField::new(
            move |p| match wv.t_at(p).and_then(|t| wv.profile.rho().value(t)) {
                Ok(r) => r * r,
                Err(_) => f64::NAN,
            },
        )
        .with_gradient(move |p| {
            let s = p.norm();
            match radial_jet(&wg, s) {
                Ok(jet) => p.coords() * (2.0 * jet.rho[0] * jet.rho[1] * jet.t_s / s),
                Err(_) => DVector::from_element(d, f64::NAN),
            }
        })
        .with_hessian(move |p| {
            let s = p.norm();
            let jet = match radial_jet(&wh, s) {
                Ok(j) => j,
                Err(_) => return nan_matrix(d),
            };
            let u_t = 2.0 * jet.rho[0] * jet.rho[1];
            let u_tt = 2.0 * jet.rho[1] * jet.rho[1] + 2.0 * jet.rho[0] * jet.rho[2];
            let f1 = u_t * jet.t_s;
            let f2 = u_tt * jet.t_s * jet.t_s + u_t * jet.t_ss;
            let x = p.coords();
            let xx = x * x.transpose();
            &xx * (f2 / (s * s)) + (DMatrix::identity(d, d) / s - &xx / (s * s * s)) * f1
        })
    };

    let admissible = {
        let w = data.clone();
        move |p: &Point| match w.t_at(p) {
            Ok(t) => t >= adm_lo && t <= adm_hi,
            Err(_) => false,
        }
    };
    let region = SampleRegion::new(vec![-s_max; d], vec![s_max; d], move |p| {
        let s = p.norm();
        s >= s_min && s <= s_max
    });

    let mut space = ModelSpace::new(name, metric, j, u, admissible, region)?
        .with_exclusion(vec![0.0; d], 0.0)
        .with_differenced_profiles(differenced);

    if kahler {
        let at = |w: &WarpData, f: fn(&WarpData, f64) -> Result<f64>| -> super::PointFn {
            let w = w.clone();
            Arc::new(move |p: &Point| f(&w, w.t_at(p)?))
        };
        let cf = ClosedForms {
            radius: at(&data, |_, t| Ok(t)),
            lambda: at(&data, |w, t| {
                let r = w.profile.rho();
                let (a, b, c) = (r.value(t)?, r.derivative(t, 1)?, r.derivative(t, 2)?);
                Ok(2.0 * b * b + 2.0 * a * c)
            }),
            mu: at(&data, |w, t| {
                let b = w.profile.rho().derivative(t, 1)?;
                Ok(2.0 * b * b)
            }),
            u: at(&data, |w, t| {
                let a = w.profile.rho().value(t)?;
                Ok(a * a)
            }),
        };
        let mut checks = vec![
            Check::AcsSquare,
            Check::AcsOrthogonal,
            Check::DOmega,
            Check::NablaJ,
            Check::GradEigen,
            Check::JgradEigen,
            Check::JInvariance,
            Check::LambdaGap,
            Check::MuGap,
            Check::HessianModel,
            Check::Identity2umu,
            Check::Killing,
        ];
        if n >= 2 {
            checks.insert(6, Check::MuSpread);
            checks.push(Check::CurvatureRelation);
        }
        space = space
            .with_closed_forms(cf)
            .with_identity_offset(0.0)
            .with_checks(&checks);
    } else {
        let mut checks = vec![
            Check::AcsSquare,
            Check::AcsOrthogonal,
            Check::DOmega,
            Check::NablaJ,
            Check::GradEigen,
            Check::JgradEigen,
            Check::JInvariance,
            Check::Killing,
        ];
        if n >= 2 {
            checks.insert(6, Check::MuSpread);
        }
        space = space.with_checks(&checks);
    }
    space.with_warp(data).validated()
}

/// Euclidean projection of `v` onto the complement of `span(x, J₀x)`, plus the
/// size of what was removed relative to `|v|`.
fn horizontal_part(x: &DVector<f64>, v: &DVector<f64>, j0: &DMatrix<f64>) -> (DVector<f64>, f64) {
    let er = x / x.norm();
    let exi = j0 * &er;
    let a = v.dot(&er);
    let b = v.dot(&exi);
    let h = v - &er * a - &exi * b;
    let rel = (a * a + b * b).sqrt() / v.norm().max(f64::MIN_POSITIVE);
    (h, rel)
}

/// Horizontal Euclidean-orthonormal vectors at `p`: `Z`, `J₀Z` and, when
/// `n >= 3`, a `Z′` orthogonal to both (spanning a totally real plane with `Z`).
pub fn horizontal_frame(p: &Point) -> Result<(DVector<f64>, DVector<f64>, Option<DVector<f64>>)> {
    let d = p.dim();
    if d < 4 || d % 2 != 0 {
        return Err(GeomError::NotApplicable {
            space: "dwp".into(),
            reason: format!("horizontal planes need real dimension >= 4, got {d}"),
        });
    }
    let j0 = standard_j(d);
    let x = p.coords();
    let axis = |k: usize| DVector::from_fn(d, |i, _| if i == k { 1.0 } else { 0.0 });
    let mut best: Option<DVector<f64>> = None;
    for k in 0..d {
        let (h, _) = horizontal_part(x, &axis(k), &j0);
        if best.as_ref().map_or(true, |b| h.norm() > b.norm()) {
            best = Some(h);
        }
    }
    let z = best.expect("d >= 4");
    let z = &z / z.norm();
    let jz = &j0 * &z;
    let mut z2: Option<DVector<f64>> = None;
    if d >= 6 {
        for k in 0..d {
            let (mut h, _) = horizontal_part(x, &axis(k), &j0);
            h -= &z * h.dot(&z) + &jz * h.dot(&jz);
            if z2.as_ref().map_or(true, |b| h.norm() > b.norm()) {
                z2 = Some(h);
            }
        }
    }
    let z2 = z2.map(|v| &v / v.norm());
    Ok((z, jz, z2))
}

/// `|K(Z, Z′) − (1 − 3(ρ′² − 1) ĝ(JZ, Z′)² − ρ′²)/ρ²|` for horizontal `Z, Z′` on
/// a Kähler doubly-warped space over the unit round sphere.
pub fn curvature_relation_residual(
    space: &ModelSpace,
    p: &Point,
    z: &DVector<f64>,
    z2: &DVector<f64>,
    scheme: &DiffScheme,
) -> Result<f64> {
    let w = space.warp().ok_or_else(|| GeomError::NotApplicable {
        space: space.name().to_string(),
        reason: "not a doubly-warped product".into(),
    })?;
    if !w.profile.is_kahler() || w.n < 2 {
        return Err(GeomError::NotApplicable {
            space: space.name().to_string(),
            reason: "needs sigma = rho' and n >= 2".into(),
        });
    }
    space.require_admissible(p)?;
    let d = p.dim();
    for v in [z, z2] {
        if v.len() != d {
            return Err(GeomError::DimensionMismatch {
                expected: d,
                found: v.len(),
            });
        }
    }
    let j0 = standard_j(d);
    let x = p.coords();
    for v in [z, z2] {
        let (_, rel) = horizontal_part(x, v, &j0);
        if !(rel <= HORIZONTAL_TOL) {
            return Err(GeomError::NotHorizontal { residual: rel });
        }
    }
    let nz = z.norm();
    if nz == 0.0 {
        return Err(GeomError::DegeneratePlane { area_sq: 0.0 });
    }
    let a = z / nz;
    let b = z2 - &a * z2.dot(&a);
    let nb = b.norm();
    if !(nb * nb >= 1e-12 * z2.norm_squared().max(f64::MIN_POSITIVE)) {
        return Err(GeomError::DegeneratePlane { area_sq: nb * nb });
    }
    let b = b / nb;
    let c = (&j0 * &a).dot(&b);
    let k = sectional_curvature(space.metric(), p, &a, &b, scheme)?;
    let t = w.t_at(p)?;
    let rho = w.profile.rho().value(t)?;
    let rho1 = w.profile.rho().derivative(t, 1)?;
    let expected = (1.0 - 3.0 * (rho1 * rho1 - 1.0) * c * c - rho1 * rho1) / (rho * rho);
    Ok((k - expected).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profile::warp_function;
    use crate::tensor::hessian_endomorphism;

    fn profile(name: &str) -> WarpProfile {
        WarpProfile::new(warp_function(name).unwrap())
    }

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    #[test]
    fn closed_form_charts_invert() {
        for (name, sig) in [
            ("rho_linear", "sigma_derivative"),
            ("rho_sinh", "sigma_derivative"),
            ("rho_sin", "sigma_derivative"),
            ("rho_cosh", "sigma_one"),
        ] {
            let p = WarpProfile::from_names(name, sig).unwrap();
            let c = RadialChart::for_profile(&p);
            assert!(!matches!(c, RadialChart::Numeric(_)));
            for t in [0.2, 0.7, 1.0, 1.4] {
                let s = c.s_of_t(t).unwrap();
                assert!((c.t_of_s(s).unwrap() - t).abs() < 1e-12, "{name} at {t}");
            }
            assert!((c.s_of_t(1.0).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn numeric_chart_matches_closed_form() {
        let p = profile("rho_sinh");
        let exact = RadialChart::Sinh;
        let numeric = RadialChart::numeric(&p);
        for t in [0.3, 1.0, 1.7] {
            let s = exact.s_of_t(t).unwrap();
            assert!((numeric.s_of_t(t).unwrap() - s).abs() < 1e-9);
            assert!((numeric.t_of_s(s).unwrap() - t).abs() < 1e-9);
        }
    }

    #[test]
    fn linear_profile_is_flat() {
        let space = dwp_punctured_space(profile("rho_linear"), 2, DwpOptions::default()).unwrap();
        let p = pt(&[0.3, -0.4, 0.5, 0.2]);
        assert!((space.metric().eval(&p) - DMatrix::identity(4, 4)).amax() < 1e-12);
        let h =
            hessian_endomorphism(space.metric(), space.u(), &p, &DiffScheme::default()).unwrap();
        assert!((h - DMatrix::identity(4, 4) * 2.0).amax() < 1e-8);
    }

    #[test]
    fn sinh_coefficient_at_unit_parameter() {
        let space = dwp_punctured_space(profile("rho_sinh"), 2, DwpOptions::default()).unwrap();
        // s = 1 corresponds to t = 1; e_xi = J0 e_0 = e_1
        let p = pt(&[1.0, 0.0, 0.0, 0.0]);
        let g = space.metric().eval(&p);
        let expect = (1f64.sinh() * 1f64.cosh()).powi(2);
        assert!((g[(1, 1)] - expect).abs() < 1e-12);
        assert!((expect - 3.2885).abs() < 1e-4);
        assert!((g[(2, 2)] - 1f64.sinh().powi(2)).abs() < 1e-12);
    }

    #[test]
    fn analytic_u_derivatives_match_differences() {
        let space = dwp_punctured_space(profile("rho_sinh"), 2, DwpOptions::default()).unwrap();
        let p = pt(&[0.4, -0.3, 0.2, 0.5]);
        let s = DiffScheme::default();
        let fd = s.differences_only();
        let a = crate::diff::coordinate_gradient(space.u(), &p, &s).unwrap();
        let b = crate::diff::coordinate_gradient(space.u(), &p, &fd).unwrap();
        assert!((&a - &b).amax() < 1e-8 * a.amax());
        let a = crate::diff::coordinate_hessian(space.u(), &p, &s).unwrap();
        let b = crate::diff::coordinate_hessian(space.u(), &p, &fd).unwrap();
        assert!((&a - &b).amax() < 1e-6 * a.amax());
    }

    #[test]
    fn out_of_range_parameters_rejected() {
        let r = dwp_punctured_space(
            profile("rho_sin"),
            2,
            DwpOptions {
                t_min: 0.1,
                t_max: 2.0,
            },
        );
        assert!(matches!(r, Err(GeomError::ProfileDomain { .. })));
        assert!(dwp_punctured_space(profile("rho_sinh"), 4, DwpOptions::default()).is_err());
    }

    #[test]
    fn flat_curvature_relation_is_trivial() {
        let space = dwp_punctured_space(profile("rho_linear"), 2, DwpOptions::default()).unwrap();
        let p = pt(&[0.5, 0.3, -0.2, 0.4]);
        let (z, jz, _) = horizontal_frame(&p).unwrap();
        let r = curvature_relation_residual(&space, &p, &z, &jz, &DiffScheme::default()).unwrap();
        assert!(r < 1e-6);
        let e0 = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(
            curvature_relation_residual(&space, &p, &e0, &jz, &DiffScheme::default()),
            Err(GeomError::NotHorizontal { .. })
        ));
    }
}
