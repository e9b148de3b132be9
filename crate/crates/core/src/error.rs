use thiserror::Error;

/// Errors raised by the geometric operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("non-finite sample at point {point:?}")]
    NonFiniteSample { point: Vec<f64> },

    #[error("metric is singular or ill-conditioned at {point:?} (condition number {condition:e})")]
    SingularMetric { point: Vec<f64>, condition: f64 },

    #[error("degenerate plane: |v|^2|w|^2 - g(v,w)^2 = {area_sq:e}")]
    DegeneratePlane { area_sq: f64 },

    #[error("critical point: |grad u| = {grad_norm:e} at {point:?}")]
    CriticalPoint { point: Vec<f64>, grad_norm: f64 },

    #[error("vectors are not tangent to the level set (residual {residual:e})")]
    NotTangent { residual: f64 },

    #[error("vectors are not horizontal (residual {residual:e})")]
    NotHorizontal { residual: f64 },

    #[error("complex structure requires an even dimension, got {dim}")]
    OddDimension { dim: usize },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("metric and complex structure are incompatible (residual {residual:e})")]
    IncompatiblePair { residual: f64 },

    #[error("Hermitian weight is not positive ({value}) at {point:?}")]
    NonPositiveWeight { point: Vec<f64>, value: f64 },

    #[error("profile `{profile}` evaluated outside its domain at {at}")]
    ProfileDomain { profile: String, at: f64 },

    #[error("profile `{profile}` violates its invariant: {reason}")]
    ProfileInvariant { profile: String, reason: String },

    #[error("adaptive quadrature exceeded {max_depth} refinement levels on [{a}, {b}]")]
    QuadratureFailure { a: f64, b: f64, max_depth: u32 },

    #[error("Chern curvature does not match l * omega (residual {residual:e}, l = {l})")]
    ConventionMismatch { l: f64, residual: f64 },

    #[error("model space `{space}` carries no closed forms")]
    NoClosedForms { space: String },

    #[error("point {point:?} is outside the admissible region of `{space}`")]
    Inadmissible { space: String, point: Vec<f64> },

    #[error("invalid difference scheme: {reason}")]
    InvalidScheme { reason: String },

    #[error("invalid point: {reason}")]
    InvalidPoint { reason: String },

    #[error("operation not applicable to `{space}`: {reason}")]
    NotApplicable { space: String, reason: String },

    #[error("sampler for `{space}` found no admissible point after {attempts} attempts")]
    SamplingExhausted { space: String, attempts: usize },
}

pub type Result<T, E = GeomError> = std::result::Result<T, E>;
