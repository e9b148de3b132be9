//! Names of the per-point checks and the tolerance policy applied to them.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// One residual evaluated at every sampled point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    /// `‖J² + Id‖_F`
    AcsSquare,
    /// `‖JᵀgJ − g‖_F`
    AcsOrthogonal,
    /// Cyclic sum of `dω`.
    DOmega,
    /// `max_i ‖∇_i J‖_F`
    NablaJ,
    /// `grad u` is an eigenvector of the Hessian endomorphism.
    GradEigen,
    /// `J grad u` is an eigenvector with the same eigenvalue.
    JgradEigen,
    /// Spread of the eigenvalues on the complement of `span(grad u, J grad u)`.
    MuSpread,
    /// Commutator of the Hessian endomorphism with `J`.
    JInvariance,
    /// `|λ − λ_cf|`
    LambdaGap,
    /// `|μ − μ_cf|`
    MuGap,
    /// Hessian in an adapted orthonormal frame against `diag(λ_cf, λ_cf, μ_cf, …)`.
    HessianModel,
    /// `|2uμ − |grad u|²| / max(1, |grad u|²)`
    #[serde(rename = "identity_2umu")]
    Identity2umu,
    /// `‖L_{J grad u} g‖_F / max(1, ‖g‖_F)`
    Killing,
    /// Horizontal sectional curvature of a warped space against the warp formula.
    CurvatureRelation,
    /// `‖∇²u + u g‖_F`
    ObataResidual,
}

impl Check {
    pub const ALL: [Check; 15] = [
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
        Check::Identity2umu,
        Check::Killing,
        Check::CurvatureRelation,
        Check::ObataResidual,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::AcsSquare => "acs_square",
            Check::AcsOrthogonal => "acs_orthogonal",
            Check::DOmega => "d_omega",
            Check::NablaJ => "nabla_j",
            Check::GradEigen => "grad_eigen",
            Check::JgradEigen => "jgrad_eigen",
            Check::MuSpread => "mu_spread",
            Check::JInvariance => "j_invariance",
            Check::LambdaGap => "lambda_gap",
            Check::MuGap => "mu_gap",
            Check::HessianModel => "hessian_model",
            Check::Identity2umu => "identity_2umu",
            Check::Killing => "killing",
            Check::CurvatureRelation => "curvature_relation",
            Check::ObataResidual => "obata_residual",
        }
    }

    pub fn default_tolerance(self) -> f64 {
        match self {
            Check::AcsSquare | Check::AcsOrthogonal => 1e-10,
            Check::DOmega => 1e-5,
            Check::NablaJ => 1e-4,
            Check::GradEigen | Check::JgradEigen | Check::MuSpread | Check::JInvariance => 1e-5,
            Check::LambdaGap | Check::MuGap | Check::HessianModel => 1e-4,
            Check::Identity2umu | Check::Killing => 1e-5,
            Check::CurvatureRelation => 1e-3,
            Check::ObataResidual => 1e-5,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownCheck(pub String);

impl fmt::Display for UnknownCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown check `{}`", self.0)
    }
}

impl std::error::Error for UnknownCheck {}

impl FromStr for Check {
    type Err = UnknownCheck;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Check::ALL
            .iter()
            .copied()
            .find(|c| c.name() == s)
            .ok_or_else(|| UnknownCheck(s.to_string()))
    }
}

/// Acceptance threshold per check: built-in defaults, then per-space
/// defaults, then scenario overrides, then a global widening factor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tolerances {
    overrides: BTreeMap<Check, f64>,
    scale: Option<f64>,
}

impl Tolerances {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, check: Check, tol: f64) -> &mut Self {
        self.overrides.insert(check, tol);
        self
    }

    pub fn with(mut self, check: Check, tol: f64) -> Self {
        self.set(check, tol);
        self
    }

    /// Multiplies every threshold; used when profile derivatives are differenced.
    pub fn widened(mut self, factor: f64) -> Self {
        self.scale = Some(self.scale.unwrap_or(1.0) * factor);
        self
    }

    /// Entries from `other` win.
    pub fn merged(mut self, other: &Tolerances) -> Self {
        for (c, t) in &other.overrides {
            self.overrides.insert(*c, *t);
        }
        if let Some(s) = other.scale {
            self.scale = Some(self.scale.unwrap_or(1.0) * s);
        }
        self
    }

    pub fn get(&self, check: Check) -> f64 {
        let base = self
            .overrides
            .get(&check)
            .copied()
            .unwrap_or_else(|| check.default_tolerance());
        base * self.scale.unwrap_or(1.0)
    }

    pub fn overrides(&self) -> &BTreeMap<Check, f64> {
        &self.overrides
    }
}
