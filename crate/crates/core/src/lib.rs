//! Numerical verification of local identities on explicit Kähler metrics:
//! doubly-warped products over the round Sasaki sphere, Calabi metrics on
//! line-bundle charts and the round sphere, checked at seeded chart points.

pub mod check;
pub mod diff;
pub mod error;
pub mod field;
pub mod kahler;
pub mod linalg;
pub mod model;
pub mod profile;
pub mod quadrature;
pub mod rng;
pub mod scenario;
pub mod tensor;
pub mod verify;

pub use check::{Check, Tolerances};
pub use diff::{partial_derivative, DiffScheme};
pub use error::{GeomError, Result};
pub use field::{
    ComplexStructureField, EndomorphismField, MetricField, Point, ScalarField, TwoFormField,
    VectorField,
};
pub use kahler::{
    acs_residuals, chern_curvature_residual, d_c_oneform, d_two_form_residual,
    j_invariance_residual, kahler_form, nabla_j_residual,
};
pub use model::{
    calabi_line_bundle_chart, curvature_relation_residual, dwp_punctured_space,
    flat_calabi_product, flat_cn, obata_sphere, ModelSpace,
};
pub use profile::{
    lambda_mu_closed, oddness_check, u_from_profile, CalabiProfile, RadialFn, WarpProfile,
};
pub use rng::SplitMix64;
pub use scenario::{
    emit_report, parse_config, parse_report, run, ConfigError, Format, Report, ScenarioConfig,
    Verdict,
};
pub use tensor::{
    christoffel, covariant_derivative_endomorphism, gradient, hessian_endomorphism, hessian_form,
    lie_derivative_metric, riemann_curvature, second_fundamental_form, sectional_curvature,
};
pub use verify::{
    compare_closed_forms, eigenstructure_at_point, mu_u_gradient_identity, verify_scenario,
    EigenStructureReport, ScenarioVerdict, VerifyPlan,
};

/// Toolkit version recorded in reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
