//! The round sphere in a stereographic chart, with the height function.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::check::Check;
use crate::error::{GeomError, Result};
use crate::field::{ComplexStructureField, MetricField, Point, ScalarField};

use super::{ClosedForms, ModelSpace, SampleRegion};

/// Sampling box half-width.
pub const SPHERE_BOX: f64 = 2.0;

fn height(p: &Point) -> f64 {
    let s = p[0] * p[0] + p[1] * p[1];
    (s - 1.0) / (s + 1.0)
}

/// `4/(1+|x|²)² Id` on `R²` with `u = (|x|² − 1)/(|x|² + 1)`, which satisfies
/// `∇²u = −u g`. `u` is given by values only, so every derivative of it is
/// differenced.
pub fn obata_sphere(n: usize) -> Result<ModelSpace> {
    if n != 2 {
        return Err(GeomError::NotApplicable {
            space: "obata_sphere".into(),
            reason: format!("only the 2-sphere chart is built, got n = {n}"),
        });
    }
    let metric = MetricField::new(2, |p| {
        let s = p[0] * p[0] + p[1] * p[1];
        DMatrix::identity(2, 2) * (4.0 / ((1.0 + s) * (1.0 + s)))
    });
    let j = ComplexStructureField::standard(2)?;
    let u = ScalarField::new(height);
    let region = SampleRegion::new(vec![-SPHERE_BOX; 2], vec![SPHERE_BOX; 2], |_| true);
    let lambda = Arc::new(|p: &Point| Ok(-height(p)));
    let cf = ClosedForms {
        radius: Arc::new(|p: &Point| Ok(p.norm())),
        lambda: lambda.clone(),
        mu: lambda,
        u: Arc::new(|p: &Point| Ok(height(p))),
    };
    ModelSpace::new(
        "obata_sphere",
        metric,
        j,
        u,
        |p: &Point| p.norm() <= 10.0,
        region,
    )?
    .with_closed_forms(cf)
    .with_checks(&[
        Check::AcsSquare,
        Check::AcsOrthogonal,
        Check::DOmega,
        Check::NablaJ,
        Check::GradEigen,
        Check::JgradEigen,
        Check::JInvariance,
        Check::LambdaGap,
        Check::HessianModel,
        Check::Killing,
        Check::ObataResidual,
    ])
    .validated()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diff::DiffScheme;
    use crate::tensor::hessian_form;

    #[test]
    fn pole_and_equator() {
        let space = obata_sphere(2).unwrap();
        let s = DiffScheme::default();
        let pole = Point::new(vec![0.0, 0.0]).unwrap();
        assert_eq!(space.u().eval(&pole), -1.0);
        let h = hessian_form(space.metric(), space.u(), &pole, &s).unwrap();
        assert!((h - space.metric().eval(&pole)).amax() < 1e-6);
        let eq = Point::new(vec![0.6, 0.8]).unwrap();
        assert!(space.u().eval(&eq).abs() < 1e-15);
        let h = hessian_form(space.metric(), space.u(), &eq, &s).unwrap();
        assert!(h.amax() < 1e-6);
        assert!(obata_sphere(3).is_err());
    }
}
