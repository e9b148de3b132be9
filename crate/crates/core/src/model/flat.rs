//! Flat `C^n` with `u = |z|²`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::check::{Check, Tolerances};
use crate::error::{GeomError, Result};
use crate::field::{ComplexStructureField, MetricField, Point, ScalarField};

use super::{ClosedForms, ModelSpace, SampleRegion};

/// Euclidean `R^{2n}` with the standard structure and `u = |x|²`, sampled on
/// the shell `r_min <= |x| <= r_max`. Both eigenvalues equal 2.
pub fn flat_cn(n: usize, r_min: f64, r_max: f64) -> Result<ModelSpace> {
    if n == 0 || n > 3 {
        return Err(GeomError::NotApplicable {
            space: "flat_cn".into(),
            reason: format!("n must be in 1..=3, got {n}"),
        });
    }
    if !(r_min > 0.0 && r_min < r_max) {
        return Err(GeomError::ProfileDomain {
            profile: "flat_cn".into(),
            at: r_min,
        });
    }
    let d = 2 * n;
    let metric = MetricField::new(d, move |_| DMatrix::identity(d, d));
    let j = ComplexStructureField::standard(d)?;
    let u = ScalarField::new(|p| p.coords().norm_squared())
        .with_gradient(|p| p.coords() * 2.0)
        .with_hessian(move |_| DMatrix::identity(d, d) * 2.0);
    let two = Arc::new(|_: &Point| Ok(2.0));
    let cf = ClosedForms {
        radius: Arc::new(|p: &Point| Ok(p.norm())),
        lambda: two.clone(),
        mu: two,
        u: Arc::new(|p: &Point| Ok(p.coords().norm_squared())),
    };
    let region = SampleRegion::new(vec![-r_max; d], vec![r_max; d], move |p| {
        let s = p.norm();
        s >= r_min && s <= r_max
    });
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
    if d >= 4 {
        checks.insert(6, Check::MuSpread);
    }
    ModelSpace::new("flat_cn", metric, j, u, |p: &Point| p.norm() > 0.0, region)?
        .with_closed_forms(cf)
        .with_identity_offset(0.0)
        .with_tolerances(Tolerances::new().with(Check::HessianModel, 1e-6))
        .with_checks(&checks)
        .validated()
}
