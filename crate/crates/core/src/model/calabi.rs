//! Calabi metrics `h₁ π*ω_FS + h₂ dr ∧ d^c r` on the total space of a line
//! bundle over the affine chart of `CP¹`, and the flat-bundle product.
//!
//! Chart coordinates are `(w, z) = (x₀ + i x₁, x₂ + i x₃)`, the Hermitian
//! weight is `(1 + |w|²)^k` and `r = |z| (1 + |w|²)^{k/2}`. The curvature of the
//! weight is taken as `−i∂∂̄ log h`, which makes the weight `(1+|w|²)^k`
//! curved by `l = −k` times `ω_FS = i∂∂̄ log(1+|w|²)`; with that sign the
//! closedness condition of the ansatz is `h₁′ + l r h₂ = 0`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::check::Check;
use crate::diff::DiffScheme;
use crate::error::{GeomError, Result};
use crate::field::{
    standard_j, ComplexStructureField, MetricField, Point, ScalarField, TwoFormField,
};
use crate::kahler::chern_curvature_residual;
use crate::profile::{calabi_function, CalabiProfile, RadialFn};

use super::{block_norm, ClosedForms, ModelSpace, PointFn, SampleRegion};

/// `l = CALIBRATED_CHERN_SIGN · k` for the weight `(1 + |w|²)^k`.
pub const CALIBRATED_CHERN_SIGN: f64 = -1.0;
/// Largest Chern residual accepted at construction.
pub const CHERN_TOL: f64 = 1e-4;
/// Admissible base radius.
pub const BASE_RADIUS: f64 = 5.0;
const CHERN_PROBES: [[f64; 2]; 5] = [[0.0, 0.0], [0.5, -0.3], [-1.2, 0.7], [2.0, 1.0], [0.1, 3.0]];

/// `ω_FS = i∂∂̄ log(1 + |w|²) = 2/(1+|w|²)² dx₀ ∧ dx₁` on the base chart.
pub fn fubini_study_form() -> TwoFormField {
    TwoFormField::new(2, |p| {
        let q = 1.0 + p[0] * p[0] + p[1] * p[1];
        let c = 2.0 / (q * q);
        DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0])
    })
}

/// Sampling and admissibility window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalabiOptions {
    pub r_min: f64,
    /// Sampling bound on `|w|`.
    pub w_max: f64,
}

impl Default for CalabiOptions {
    fn default() -> Self {
        Self {
            r_min: 0.1,
            w_max: 1.5,
        }
    }
}

/// `r`, its coordinate differential and Hessian on the line-bundle chart.
struct RadiusJet {
    r: f64,
    dr: DVector<f64>,
    ddr: DMatrix<f64>,
}

fn radius_jet(x: &DVector<f64>, k: f64) -> RadiusJet {
    let q = 1.0 + x[0] * x[0] + x[1] * x[1];
    let z2 = x[2] * x[2] + x[3] * x[3];
    let r = (z2 * q.powf(k)).sqrt();
    // L = log r² = log|z|² + k log q
    let mut dl = DVector::zeros(4);
    let mut ddl = DMatrix::zeros(4, 4);
    for i in 0..2 {
        dl[i] = 2.0 * k * x[i] / q;
        dl[i + 2] = 2.0 * x[i + 2] / z2;
        for j in 0..2 {
            let delta = if i == j { 1.0 } else { 0.0 };
            ddl[(i, j)] = k * (2.0 * delta / q - 4.0 * x[i] * x[j] / (q * q));
            ddl[(i + 2, j + 2)] = 2.0 * delta / z2 - 4.0 * x[i + 2] * x[j + 2] / (z2 * z2);
        }
    }
    let dr = &dl * (0.5 * r);
    let ddr = &ddl * (0.5 * r) + &dl * dl.transpose() * (0.25 * r);
    RadiusJet { r, dr, ddr }
}

fn calabi_metric(
    profile: &CalabiProfile,
    k: f64,
    x: &DVector<f64>,
    j0: &DMatrix<f64>,
) -> DMatrix<f64> {
    let jet = radius_jet(x, k);
    let q = 1.0 + x[0] * x[0] + x[1] * x[1];
    let h1 = profile.h1().raw(jet.r, 0);
    let h2 = profile.h2().raw(jet.r, 0);
    let dcr = -(j0.transpose() * &jet.dr);
    let mut g = (&jet.dr * jet.dr.transpose() + &dcr * dcr.transpose()) * h2;
    let base = h1 * 2.0 / (q * q);
    g[(0, 0)] += base;
    g[(1, 1)] += base;
    (&g + g.transpose()) * 0.5
}

fn radius_of(k: f64) -> PointFn {
    Arc::new(move |p: &Point| Ok(radius_jet(p.coords(), k).r))
}

fn closed_forms(profile: &CalabiProfile, radius: PointFn) -> ClosedForms {
    let (a, b, c) = (profile.clone(), profile.clone(), profile.clone());
    let (ra, rb, rc) = (radius.clone(), radius.clone(), radius.clone());
    ClosedForms {
        radius,
        lambda: Arc::new(move |p: &Point| Ok(a.lambda_mu(ra(p)?)?.0)),
        mu: Arc::new(move |p: &Point| Ok(b.lambda_mu(rb(p)?)?.1)),
        u: Arc::new(move |p: &Point| c.u(rc(p)?)),
    }
}

/// Calabi metric on the chart `C × (C ∖ {0})` of the line bundle with weight
/// `(1 + |w|²)^k`, `J = J₀` and `u(r) = ∫_0^r s h₂(s) ds`.
pub fn calabi_line_bundle_chart(
    profile: CalabiProfile,
    k: i32,
    opts: CalabiOptions,
) -> Result<ModelSpace> {
    let kf = k as f64;
    let name = format!("calabi[{},k={k}]", profile.name());
    let weight = ScalarField::new(move |p| (1.0 + p[0] * p[0] + p[1] * p[1]).powf(kf));
    let omega_fs = fubini_study_form();
    let scheme = DiffScheme::default();
    for probe in CHERN_PROBES {
        let p = Point::new(probe.to_vec())?;
        let residual = chern_curvature_residual(&weight, profile.l(), &omega_fs, &p, &scheme)?;
        if !(residual <= CHERN_TOL) {
            return Err(GeomError::ConventionMismatch {
                l: profile.l(),
                residual,
            });
        }
    }
    let r_max = profile.r_max();
    if !(opts.r_min > 0.0 && opts.r_min < r_max && opts.w_max > 0.0 && opts.w_max <= BASE_RADIUS) {
        return Err(GeomError::ProfileDomain {
            profile: profile.name(),
            at: opts.r_min,
        });
    }

    let j0 = standard_j(4);
    let metric = {
        let p = profile.clone();
        MetricField::new(4, move |x| calabi_metric(&p, kf, x.coords(), &j0))
    };
    let j = ComplexStructureField::standard(4)?;
    let u = {
        let (pv, pg, ph) = (profile.clone(), profile.clone(), profile.clone());
        ScalarField::new(move |x| pv.u(radius_jet(x.coords(), kf).r).unwrap_or(f64::NAN))
            .with_gradient(move |x| {
                let jet = radius_jet(x.coords(), kf);
                &jet.dr * pg.u_prime(jet.r)
            })
            .with_hessian(move |x| {
                let jet = radius_jet(x.coords(), kf);
                &jet.dr * jet.dr.transpose() * ph.u_second(jet.r) + &jet.ddr * ph.u_prime(jet.r)
            })
    };
    let r_min = opts.r_min;
    let admissible = move |p: &Point| {
        let z = block_norm(p, 2, 2);
        let r = radius_jet(p.coords(), kf).r;
        block_norm(p, 0, 2) <= BASE_RADIUS && z > 0.0 && r >= r_min && r <= r_max
    };
    let w_max = opts.w_max;
    let region = SampleRegion::new(
        vec![-w_max, -w_max, -r_max, -r_max],
        vec![w_max, w_max, r_max, r_max],
        move |p| block_norm(p, 0, 2) <= w_max,
    );

    let l = profile.l();
    let differenced = profile.differenced();
    let mut checks = vec![
        Check::AcsSquare,
        Check::AcsOrthogonal,
        Check::DOmega,
        Check::NablaJ,
        Check::GradEigen,
        Check::JgradEigen,
        Check::MuSpread,
        Check::JInvariance,
        Check::LambdaGap,
        Check::MuGap,
        Check::HessianModel,
    ];
    let mut space = ModelSpace::new(name, metric, j, u, admissible, region)?
        .with_closed_forms(closed_forms(&profile, radius_of(kf)))
        .with_differenced_profiles(differenced);
    if l != 0.0 {
        // 2(u + c)μ = |grad u|² holds for the potential −h₁/l = u − h₁(0)/l.
        space = space.with_identity_offset(-profile.h1().raw(0.0, 0) / l);
        checks.push(Check::Identity2umu);
    }
    checks.push(Check::Killing);
    space.with_checks(&checks).validated()
}

/// `h₂(r)(dr² + (d^c r)²) ⊕ flat` on `(C ∖ {0}) × C^{n−1}` with `r = |z₁|`.
pub fn flat_calabi_product(h2: RadialFn, n: usize, r_min: f64, r_max: f64) -> Result<ModelSpace> {
    if n == 0 || n > 3 {
        return Err(GeomError::NotApplicable {
            space: format!("calabi_flat[{}]", h2.name()),
            reason: format!("n must be in 1..=3, got {n}"),
        });
    }
    let h1 = calabi_function("h1_one").expect("registry entry");
    let profile = CalabiProfile::new(h1, h2, 0.0, r_max)?;
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(GeomError::ProfileDomain {
            profile: profile.name(),
            at: r_min,
        });
    }
    let d = 2 * n;
    let name = format!("calabi_flat[{},n={n}]", profile.h2().name());
    let metric = {
        let p = profile.clone();
        MetricField::new(d, move |x| {
            let r = block_norm(x, 0, 2);
            let mut g = DMatrix::identity(d, d);
            let h = p.h2().raw(r, 0);
            g[(0, 0)] = h;
            g[(1, 1)] = h;
            g
        })
    };
    let j = ComplexStructureField::standard(d)?;
    let u = {
        let (pv, pg, ph) = (profile.clone(), profile.clone(), profile.clone());
        ScalarField::new(move |x| pv.u(block_norm(x, 0, 2)).unwrap_or(f64::NAN))
            .with_gradient(move |x| {
                let r = block_norm(x, 0, 2);
                let mut g = DVector::zeros(d);
                let c = pg.u_prime(r) / r;
                g[0] = c * x[0];
                g[1] = c * x[1];
                g
            })
            .with_hessian(move |x| {
                let r = block_norm(x, 0, 2);
                let (u1, u2) = (ph.u_prime(r), ph.u_second(r));
                let mut h = DMatrix::zeros(d, d);
                for a in 0..2 {
                    for b in 0..2 {
                        let delta = if a == b { 1.0 } else { 0.0 };
                        let xx = x[a] * x[b] / (r * r);
                        h[(a, b)] = u2 * xx + u1 * (delta - xx) / r;
                    }
                }
                h
            })
    };
    let admissible = move |p: &Point| {
        let r = block_norm(p, 0, 2);
        r >= r_min && r <= r_max
    };
    let mut lo = vec![-1.0; d];
    let mut hi = vec![1.0; d];
    for i in 0..2 {
        lo[i] = -r_max;
        hi[i] = r_max;
    }
    let region = SampleRegion::new(lo, hi, |_| true);
    let radius: PointFn = Arc::new(|p: &Point| Ok(block_norm(p, 0, 2)));
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
        Check::Killing,
    ];
    if d >= 4 {
        checks.insert(6, Check::MuSpread);
    }
    ModelSpace::new(name, metric, j, u, admissible, region)?
        .with_closed_forms(closed_forms(&profile, radius))
        .with_differenced_profiles(profile.differenced())
        .with_checks(&checks)
        .validated()
}
