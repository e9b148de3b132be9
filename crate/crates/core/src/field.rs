//! Chart points and the field evaluators the tensor routines consume.
//!
//! Every field is a shareable closure over [`Point`]; evaluators must be pure
//! so that the same point always yields bit-identical output.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// A point in a chart of dimension `d >= 2` with finite coordinates.
#[derive(Clone, PartialEq)]
pub struct Point {
    coords: DVector<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(GeomError::InvalidPoint {
                reason: format!("chart dimension must be at least 2, got {}", coords.len()),
            });
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(GeomError::InvalidPoint {
                reason: format!("non-finite coordinate in {coords:?}"),
            });
        }
        Ok(Self {
            coords: DVector::from_vec(coords),
        })
    }

    /// Builds a point without validation; used for finite-difference offsets of
    /// an already valid point.
    pub(crate) fn from_vector(coords: DVector<f64>) -> Self {
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.iter().copied().collect()
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// `p + h * e_axis`
    pub fn offset(&self, axis: usize, h: f64) -> Self {
        let mut c = self.coords.clone();
        c[axis] += h;
        Self { coords: c }
    }

    /// `p + h_i * e_i + h_j * e_j`
    pub fn offset2(&self, i: usize, hi: f64, j: usize, hj: f64) -> Self {
        let mut c = self.coords.clone();
        c[i] += hi;
        c[j] += hj;
        Self { coords: c }
    }

    pub fn slice(&self, start: usize, len: usize) -> DVector<f64> {
        self.coords.rows(start, len).into_owned()
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.coords.iter()).finish()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.coords[i]
    }
}

type ScalarFn = dyn Fn(&Point) -> f64 + Send + Sync;
type VectorFn = dyn Fn(&Point) -> DVector<f64> + Send + Sync;
type MatrixFn = dyn Fn(&Point) -> DMatrix<f64> + Send + Sync;

/// A real function on a chart, optionally with analytic first and second
/// coordinate derivatives.
#[derive(Clone)]
pub struct ScalarField {
    value: Arc<ScalarFn>,
    gradient: Option<Arc<VectorFn>>,
    hessian: Option<Arc<MatrixFn>>,
}

impl ScalarField {
    pub fn new(value: impl Fn(&Point) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    /// Attaches the coordinate differential `(∂_i u)_i`.
    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&Point) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Arc::new(gradient));
        self
    }

    /// Attaches the coordinate second derivatives `(∂_i ∂_j u)_{ij}`.
    pub fn with_hessian(
        mut self,
        hessian: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hessian = Some(Arc::new(hessian));
        self
    }

    /// Drops analytic derivatives so every consumer falls back to differences.
    pub fn values_only(&self) -> Self {
        Self {
            value: self.value.clone(),
            gradient: None,
            hessian: None,
        }
    }

    pub fn eval(&self, p: &Point) -> f64 {
        (self.value)(p)
    }

    pub fn analytic_gradient(&self, p: &Point) -> Option<DVector<f64>> {
        self.gradient.as_ref().map(|g| g(p))
    }

    pub fn analytic_hessian(&self, p: &Point) -> Option<DMatrix<f64>> {
        self.hessian.as_ref().map(|h| h(p))
    }

    pub fn has_gradient(&self) -> bool {
        self.gradient.is_some()
    }

    /// `a * u + b`, carrying analytic derivatives along.
    pub fn affine(&self, a: f64, b: f64) -> Self {
        let value = self.value.clone();
        let mut out = Self::new(move |p| a * value(p) + b);
        if let Some(g) = self.gradient.clone() {
            out = out.with_gradient(move |p| g(p) * a);
        }
        if let Some(h) = self.hessian.clone() {
            out = out.with_hessian(move |p| h(p) * a);
        }
        out
    }
}

macro_rules! matrix_field {
    ($(#[$doc:meta])* $name:ident) => {
        $(#[$doc])*
        #[derive(Clone)]
        pub struct $name {
            dim: usize,
            eval: Arc<MatrixFn>,
        }

        impl $name {
            pub fn new(dim: usize, eval: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
                Self { dim, eval: Arc::new(eval) }
            }

            pub fn dim(&self) -> usize {
                self.dim
            }

            pub fn eval(&self, p: &Point) -> DMatrix<f64> {
                (self.eval)(p)
            }
        }
    };
}

matrix_field!(
    /// Riemannian metric `g_{ij}` in chart coordinates.
    MetricField
);
matrix_field!(
    /// Almost-complex structure `J^i_j`; column `j` is `J e_j`.
    ComplexStructureField
);
matrix_field!(
    /// A (1,1)-tensor field `A^i_j`.
    EndomorphismField
);

impl MetricField {
    /// `c^2 g`
    pub fn scaled(&self, c: f64) -> Self {
        let inner = self.eval.clone();
        Self::new(self.dim, move |p| inner(p) * (c * c))
    }
}

impl ComplexStructureField {
    /// The standard structure on `R^{2n}` pairing axes `(2k, 2k+1)` with
    /// `J e_{2k} = e_{2k+1}`.
    pub fn standard(dim: usize) -> Result<Self> {
        if dim % 2 != 0 {
            return Err(GeomError::OddDimension { dim });
        }
        let j = standard_j(dim);
        Ok(Self::new(dim, move |_| j.clone()))
    }

    pub fn as_endomorphism(&self) -> EndomorphismField {
        let inner = self.eval.clone();
        EndomorphismField::new(self.dim, move |p| inner(p))
    }
}

/// Constant matrix of the standard complex structure on `R^dim`.
pub fn standard_j(dim: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(dim, dim);
    for k in 0..dim / 2 {
        j[(2 * k + 1, 2 * k)] = 1.0;
        j[(2 * k, 2 * k + 1)] = -1.0;
    }
    j
}

/// An antisymmetric two-form `ω_{ij}`; evaluation antisymmetrizes.
#[derive(Clone)]
pub struct TwoFormField {
    dim: usize,
    eval: Arc<MatrixFn>,
}

impl TwoFormField {
    pub fn new(dim: usize, eval: impl Fn(&Point) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &Point) -> DMatrix<f64> {
        let a = (self.eval)(p);
        (&a - a.transpose()) * 0.5
    }
}

/// A vector field `X^i`.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    eval: Arc<VectorFn>,
}

impl VectorField {
    pub fn new(dim: usize, eval: impl Fn(&Point) -> DVector<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, p: &Point) -> DVector<f64> {
        (self.eval)(p)
    }
}
