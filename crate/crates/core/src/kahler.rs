//! Almost-complex structures, Kähler forms and the residuals certifying the
//! Kähler condition.
//!
//! Conventions: `ω(X, Y) = g(JX, Y)`, so `ω = Jᵀ g` as a matrix, and
//! `d^c f = −df ∘ J`. With these, `i∂∂̄f = ½ dd^c f` and on flat `R²` with the
//! standard structure `ω = dx ∧ dy`.

use nalgebra::{DMatrix, DVector};

use crate::diff::{coordinate_gradient, coordinate_hessian, partials, DiffScheme};
use crate::error::{GeomError, Result};
use crate::field::{ComplexStructureField, MetricField, Point, ScalarField, TwoFormField};
use crate::tensor::covariant_derivatives_endomorphism;

/// Largest `‖ω(·, J·) − g‖_F / max(1, ‖g‖_F)` accepted by [`kahler_form`].
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

fn check_pair(j: &ComplexStructureField, g: &MetricField, p: &Point) -> Result<()> {
    if j.dim() % 2 != 0 {
        return Err(GeomError::OddDimension { dim: j.dim() });
    }
    for found in [g.dim(), p.dim()] {
        if found != j.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: j.dim(),
                found,
            });
        }
    }
    Ok(())
}

/// `(‖J² + Id‖_F, ‖JᵀgJ − g‖_F)`
pub fn acs_residuals(j: &ComplexStructureField, g: &MetricField, p: &Point) -> Result<(f64, f64)> {
    check_pair(j, g, p)?;
    let jp = j.eval(p);
    let gp = g.eval(p);
    Ok(acs_residuals_at(&jp, &gp))
}

pub(crate) fn acs_residuals_at(jp: &DMatrix<f64>, gp: &DMatrix<f64>) -> (f64, f64) {
    let d = jp.nrows();
    let square = (jp * jp + DMatrix::identity(d, d)).norm();
    let orth = (jp.transpose() * gp * jp - gp).norm();
    (square, orth)
}

/// `ω = Jᵀ g`, antisymmetrized, after checking `ω(·, J·) = g`.
pub fn kahler_form(g: &MetricField, j: &ComplexStructureField, p: &Point) -> Result<DMatrix<f64>> {
    check_pair(j, g, p)?;
    let gp = g.eval(p);
    let jp = j.eval(p);
    let omega = omega_from(&gp, &jp);
    let residual = (&omega * &jp - &gp).norm() / gp.norm().max(1.0);
    if !(residual <= RECONSTRUCTION_TOL) {
        return Err(GeomError::IncompatiblePair { residual });
    }
    Ok(omega)
}

fn omega_from(gp: &DMatrix<f64>, jp: &DMatrix<f64>) -> DMatrix<f64> {
    let a = jp.transpose() * gp;
    (&a - a.transpose()) * 0.5
}

/// The Kähler form as a field, without the reconstruction check (so that it
/// can be differenced near points where the pair is only approximately
/// compatible).
pub fn kahler_form_field(g: &MetricField, j: &ComplexStructureField) -> TwoFormField {
    let g = g.clone();
    let j = j.clone();
    TwoFormField::new(g.dim(), move |p| omega_from(&g.eval(p), &j.eval(p)))
}

/// `max_{i<j<k} |∂_i ω_{jk} + ∂_j ω_{ki} + ∂_k ω_{ij}|`
pub fn d_two_form_residual(omega: &TwoFormField, p: &Point, scheme: &DiffScheme) -> Result<f64> {
    let d = p.dim();
    let dw = partials(|q: &Point| omega.eval(q), p, scheme)?;
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            for k in (j + 1)..d {
                let cyc = dw[i][(j, k)] + dw[j][(k, i)] + dw[k][(i, j)];
                worst = worst.max(cyc.abs());
            }
        }
    }
    Ok(worst)
}

/// `max_i ‖∇_i J‖_F`
pub fn nabla_j_residual(
    g: &MetricField,
    j: &ComplexStructureField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<f64> {
    check_pair(j, g, p)?;
    let derivs = covariant_derivatives_endomorphism(g, &j.as_endomorphism(), p, scheme)?;
    Ok(derivs.iter().map(|m| m.norm()).fold(0.0, f64::max))
}

/// `‖HJ − JH‖_F / max(1, ‖H‖_F)`
pub fn j_invariance_residual(h: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<f64> {
    if j.nrows() % 2 != 0 {
        return Err(GeomError::OddDimension { dim: j.nrows() });
    }
    for found in [h.nrows(), h.ncols(), j.ncols()] {
        if found != j.nrows() {
            return Err(GeomError::DimensionMismatch {
                expected: j.nrows(),
                found,
            });
        }
    }
    Ok((h * j - j * h).norm() / h.norm().max(1.0))
}

/// `(d^c r)_i = −(∂_j r) J^j_i`
pub fn d_c_oneform(
    r: &ScalarField,
    j: &ComplexStructureField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DVector<f64>> {
    let dr = coordinate_gradient(r, p, scheme)?;
    let jp = j.eval(p);
    Ok(-(jp.transpose() * dr))
}

/// Real components of `i∂∂̄f` from the coordinate Hessian of `f` and a constant
/// complex structure: `½(−HJ + (HJ)ᵀ)`.
pub fn i_ddbar(hess: &DMatrix<f64>, j: &DMatrix<f64>) -> DMatrix<f64> {
    let hj = hess * j;
    (hj.transpose() - hj) * 0.5
}

/// Curvature form `−i∂∂̄ log h` of the Hermitian weight `h` on a base chart
/// with its standard complex structure.
pub fn chern_curvature_form(
    weight: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DMatrix<f64>> {
    let w = weight.eval(p);
    if !(w > 0.0) {
        return Err(GeomError::NonPositiveWeight {
            point: p.to_vec(),
            value: w,
        });
    }
    let inner = weight.clone();
    let log_h = ScalarField::new(move |q| inner.eval(q).ln());
    let hess = coordinate_hessian(&log_h, p, scheme)?;
    let j = ComplexStructureField::standard(p.dim())?.eval(p);
    Ok(-i_ddbar(&hess, &j))
}

/// `‖ρ − l ω_base‖_F` where `ρ = −i∂∂̄ log h` is the curvature of the weight.
pub fn chern_curvature_residual(
    weight: &ScalarField,
    l: f64,
    omega_base: &TwoFormField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<f64> {
    let rho = chern_curvature_form(weight, p, scheme)?;
    Ok((rho - omega_base.eval(p) * l).norm())
}
