//! Central finite differences with Richardson extrapolation.
//!
//! All stencils here have truncation error expansions in even powers of the
//! step, so each halving level eliminates one more `h^{2m}` term.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::field::{Point, ScalarField};

pub const MIN_STEP: f64 = 1e-7;
pub const MAX_STEP: f64 = 1e-2;
pub const MAX_RICHARDSON_LEVELS: u32 = 4;

/// Finite-difference configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffScheme {
    step: f64,
    richardson_levels: u32,
    prefer_analytic: bool,
}

impl Default for DiffScheme {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson_levels: 2,
            prefer_analytic: true,
        }
    }
}

impl DiffScheme {
    pub fn new(step: f64, richardson_levels: u32) -> Result<Self> {
        if !(MIN_STEP..=MAX_STEP).contains(&step) {
            return Err(GeomError::InvalidScheme {
                reason: format!("step {step} outside [{MIN_STEP}, {MAX_STEP}]"),
            });
        }
        if !(1..=MAX_RICHARDSON_LEVELS).contains(&richardson_levels) {
            return Err(GeomError::InvalidScheme {
                reason: format!(
                    "richardson_levels {richardson_levels} outside [1, {MAX_RICHARDSON_LEVELS}]"
                ),
            });
        }
        Ok(Self {
            step,
            richardson_levels,
            prefer_analytic: true,
        })
    }

    /// Ignore analytic derivative evaluators and difference everything.
    pub fn differences_only(mut self) -> Self {
        self.prefer_analytic = false;
        self
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn richardson_levels(&self) -> u32 {
        self.richardson_levels
    }

    pub fn prefer_analytic(&self) -> bool {
        self.prefer_analytic
    }

    /// Same scheme with the step multiplied by `factor`. Higher-order value
    /// stencils divide by `h^k`, so they need a coarser step to keep roundoff
    /// below the truncation error.
    pub(crate) fn coarsened(&self, factor: f64) -> Self {
        Self {
            step: self.step * factor,
            ..*self
        }
    }
}

/// Step multiplier for second differences of values.
pub const SECOND_ORDER_COARSENING: f64 = 10.0;
/// Step multiplier for third differences of values.
pub const THIRD_ORDER_COARSENING: f64 = 30.0;

/// Values that can be combined linearly by a difference stencil.
pub trait Sample: Clone {
    /// `self += a * other`
    fn axpy(&mut self, a: f64, other: &Self);
    fn scale(&mut self, a: f64);
    fn all_finite(&self) -> bool;
}

impl Sample for f64 {
    fn axpy(&mut self, a: f64, other: &Self) {
        *self += a * other;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn all_finite(&self) -> bool {
        self.is_finite()
    }
}

impl Sample for DVector<f64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        DVector::axpy(self, a, other, 1.0);
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

impl Sample for DMatrix<f64> {
    fn axpy(&mut self, a: f64, other: &Self) {
        *self += other * a;
    }
    fn scale(&mut self, a: f64) {
        *self *= a;
    }
    fn all_finite(&self) -> bool {
        self.iter().all(|x| x.is_finite())
    }
}

/// Evaluates `stencil` at `h, h/2, …, h/2^L` and extrapolates the even-power
/// error series away.
pub fn richardson<T, F>(scheme: &DiffScheme, mut stencil: F) -> T
where
    T: Sample,
    F: FnMut(f64) -> T,
{
    try_richardson(scheme, |h| Ok::<T, GeomError>(stencil(h))).expect("infallible stencil")
}

/// [`richardson`] for stencils whose evaluations can fail.
pub fn try_richardson<T, E, F>(scheme: &DiffScheme, mut stencil: F) -> Result<T, E>
where
    T: Sample,
    F: FnMut(f64) -> Result<T, E>,
{
    let levels = scheme.richardson_levels as usize;
    let mut table: Vec<T> = Vec::with_capacity(levels + 1);
    for j in 0..=levels {
        table.push(stencil(scheme.step / (1u64 << j) as f64)?);
    }
    for m in 1..=levels {
        let factor = 4f64.powi(m as i32);
        for j in (m..=levels).rev() {
            let coarse = table[j - 1].clone();
            let fine = &mut table[j];
            fine.scale(factor);
            fine.axpy(-1.0, &coarse);
            fine.scale(1.0 / (factor - 1.0));
        }
    }
    Ok(table.pop().expect("non-empty table"))
}

fn checked<T: Sample>(value: T, p: &Point) -> Result<T> {
    if value.all_finite() {
        Ok(value)
    } else {
        Err(GeomError::NonFiniteSample { point: p.to_vec() })
    }
}

/// Derivative of a sampled field along one axis: `∂_i F(p)`.
pub fn directional<T, F>(f: F, p: &Point, axis: usize, scheme: &DiffScheme) -> Result<T>
where
    T: Sample,
    F: Fn(&Point) -> T,
{
    try_directional(|q: &Point| Ok(f(q)), p, axis, scheme)
}

/// [`directional`] for fallible fields; the first evaluation error wins.
pub fn try_directional<T, F>(f: F, p: &Point, axis: usize, scheme: &DiffScheme) -> Result<T>
where
    T: Sample,
    F: Fn(&Point) -> Result<T>,
{
    let value = try_richardson(scheme, |h| {
        let hi = p.offset(axis, h);
        let lo = p.offset(axis, -h);
        let plus = f(&hi)?;
        let minus = f(&lo)?;
        if !plus.all_finite() {
            return Err(GeomError::NonFiniteSample { point: hi.to_vec() });
        }
        if !minus.all_finite() {
            return Err(GeomError::NonFiniteSample { point: lo.to_vec() });
        }
        let mut d = plus;
        d.axpy(-1.0, &minus);
        d.scale(0.5 / h);
        Ok(d)
    })?;
    checked(value, p)
}

/// All first partials `[∂_0 F, …, ∂_{d-1} F]`.
pub fn partials<T, F>(f: F, p: &Point, scheme: &DiffScheme) -> Result<Vec<T>>
where
    T: Sample,
    F: Fn(&Point) -> T,
{
    (0..p.dim())
        .map(|i| directional(&f, p, i, scheme))
        .collect()
}

/// [`partials`] for fallible fields.
pub fn try_partials<T, F>(f: F, p: &Point, scheme: &DiffScheme) -> Result<Vec<T>>
where
    T: Sample,
    F: Fn(&Point) -> Result<T>,
{
    (0..p.dim())
        .map(|i| try_directional(&f, p, i, scheme))
        .collect()
}

/// `∂_i f(p)` for a scalar field, using only its values.
pub fn partial_derivative(
    f: &ScalarField,
    p: &Point,
    axis: usize,
    scheme: &DiffScheme,
) -> Result<f64> {
    check_axis(p, axis)?;
    directional(|q: &Point| f.eval(q), p, axis, scheme)
}

/// `∂_i ∂_j f(p)` from values; the pure second difference on the diagonal and
/// the four-point cross stencil off it.
pub fn second_partial(
    f: &ScalarField,
    p: &Point,
    i: usize,
    j: usize,
    scheme: &DiffScheme,
) -> Result<f64> {
    check_axis(p, i)?;
    check_axis(p, j)?;
    let f0 = f.eval(p);
    let v = richardson(&scheme.coarsened(SECOND_ORDER_COARSENING), |h| {
        if i == j {
            (f.eval(&p.offset(i, h)) - 2.0 * f0 + f.eval(&p.offset(i, -h))) / (h * h)
        } else {
            (f.eval(&p.offset2(i, h, j, h))
                - f.eval(&p.offset2(i, h, j, -h))
                - f.eval(&p.offset2(i, -h, j, h))
                + f.eval(&p.offset2(i, -h, j, -h)))
                / (4.0 * h * h)
        }
    });
    checked(v, p)
}

/// `∂_i^3 f(p)` from values.
pub fn third_partial(f: &ScalarField, p: &Point, i: usize, scheme: &DiffScheme) -> Result<f64> {
    check_axis(p, i)?;
    let v = richardson(&scheme.coarsened(THIRD_ORDER_COARSENING), |h| {
        (f.eval(&p.offset(i, 2.0 * h)) - 2.0 * f.eval(&p.offset(i, h))
            + 2.0 * f.eval(&p.offset(i, -h))
            - f.eval(&p.offset(i, -2.0 * h)))
            / (2.0 * h * h * h)
    });
    checked(v, p)
}

/// Coordinate differential of `f`: analytic when available and allowed.
pub fn coordinate_gradient(
    f: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DVector<f64>> {
    if scheme.prefer_analytic {
        if let Some(g) = f.analytic_gradient(p) {
            return checked(g, p);
        }
    }
    let d = p.dim();
    let mut g = DVector::zeros(d);
    for i in 0..d {
        g[i] = partial_derivative(f, p, i, scheme)?;
    }
    Ok(g)
}

/// Coordinate second derivatives of `f`, symmetrized. Prefers an analytic
/// Hessian, then differences of an analytic gradient, then second differences.
pub fn coordinate_hessian(f: &ScalarField, p: &Point, scheme: &DiffScheme) -> Result<DMatrix<f64>> {
    let d = p.dim();
    if scheme.prefer_analytic {
        if let Some(h) = f.analytic_hessian(p) {
            let h = checked(h, p)?;
            return Ok((&h + h.transpose()) * 0.5);
        }
        if f.has_gradient() {
            let cols = partials(
                |q: &Point| f.analytic_gradient(q).expect("gradient present"),
                p,
                scheme,
            )?;
            let mut h = DMatrix::zeros(d, d);
            for (j, col) in cols.iter().enumerate() {
                h.set_column(j, col);
            }
            return Ok((&h + h.transpose()) * 0.5);
        }
    }
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let v = second_partial(f, p, i, j, scheme)?;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    Ok(h)
}

fn check_axis(p: &Point, axis: usize) -> Result<()> {
    if axis >= p.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: p.dim(),
            found: axis,
        });
    }
    Ok(())
}

/// Weights of the centered stencil on nodes `-m..=m` approximating the
/// `order`-th derivative, from Fornberg's recursion.
pub fn central_weights(order: usize, half_width: usize) -> Vec<f64> {
    let nodes: Vec<f64> = (-(half_width as i64)..=half_width as i64)
        .map(|k| k as f64)
        .collect();
    fornberg(0.0, &nodes, order)
}

fn fornberg(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    // c[k][j]: weight of node j for derivative k
    let mut c = vec![vec![0.0; n]; order + 1];
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c.swap_remove(order)
}

/// `f^{(order)}(x)` by an 8th-order centered stencil with fixed step.
pub fn high_order_derivative(f: impl Fn(f64) -> f64, x: f64, order: usize, step: f64) -> f64 {
    // An accuracy-8 centered stencil for derivative `order` needs
    // 2 * floor((order + 1) / 2) - 1 + 8 nodes.
    let half_width = (order + 1) / 2 + 3;
    let w = central_weights(order, half_width);
    let m = half_width as i64;
    let sum: f64 = (-m..=m)
        .zip(w.iter())
        .map(|(k, wk)| wk * f(x + k as f64 * step))
        .sum();
    sum / step.powi(order as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn pt(v: &[f64]) -> Point {
        Point::new(v.to_vec()).unwrap()
    }

    #[test]
    fn scheme_bounds() {
        assert!(DiffScheme::new(1e-8, 2).is_err());
        assert!(DiffScheme::new(0.1, 2).is_err());
        assert!(DiffScheme::new(1e-4, 0).is_err());
        assert!(DiffScheme::new(1e-4, 5).is_err());
        assert!(DiffScheme::new(1e-3, 4).is_ok());
    }

    #[test]
    fn square_is_exact() {
        let f = ScalarField::new(|p| p[0] * p[0]);
        let d = partial_derivative(&f, &pt(&[3.0, 0.0]), 0, &DiffScheme::default()).unwrap();
        assert!((d - 6.0).abs() < 1e-10);
    }

    #[test]
    fn constant_has_zero_derivative() {
        let f = ScalarField::new(|_| 7.5);
        for i in 0..3 {
            let d =
                partial_derivative(&f, &pt(&[0.3, -1.0, 2.0]), i, &DiffScheme::default()).unwrap();
            assert_eq!(d, 0.0);
        }
    }

    #[test]
    fn sine_at_quarter_period() {
        let f = ScalarField::new(|p| p[1].sin());
        let scheme = DiffScheme::new(1e-4, 2).unwrap();
        let d = partial_derivative(&f, &pt(&[0.0, FRAC_PI_2]), 1, &scheme).unwrap();
        // analytic: cos(pi/2)
        assert!((d - FRAC_PI_2.cos()).abs() < 1e-10);
    }

    #[test]
    fn richardson_improves_on_plain_central_difference() {
        let f = ScalarField::new(|p| p[0].exp());
        let p = pt(&[0.7, 0.0]);
        let exact = 0.7f64.exp();
        let coarse = DiffScheme::new(1e-2, 1).unwrap();
        let fine = DiffScheme::new(1e-2, 3).unwrap();
        let e1 = (partial_derivative(&f, &p, 0, &coarse).unwrap() - exact).abs();
        let e3 = (partial_derivative(&f, &p, 0, &fine).unwrap() - exact).abs();
        assert!(e3 < e1);
        assert!(e3 < 1e-12);
    }

    #[test]
    fn second_and_third_partials() {
        let f = ScalarField::new(|p| p[0].sin() * p[1].exp());
        let p = pt(&[0.4, -0.2]);
        let s = DiffScheme::default();
        let fxy = second_partial(&f, &p, 0, 1, &s).unwrap();
        assert!((fxy - 0.4f64.cos() * (-0.2f64).exp()).abs() < 1e-7);
        let fxx = second_partial(&f, &p, 0, 0, &s).unwrap();
        assert!((fxx + 0.4f64.sin() * (-0.2f64).exp()).abs() < 1e-7);
        let s3 = DiffScheme::new(1e-2, 2).unwrap();
        let fxxx = third_partial(&f, &p, 0, &s3).unwrap();
        assert!((fxxx + 0.4f64.cos() * (-0.2f64).exp()).abs() < 1e-7);
    }

    #[test]
    fn non_finite_is_reported_with_point() {
        let f = ScalarField::new(|p| if p[0] > 1.0 { f64::NAN } else { p[0] });
        let err = partial_derivative(&f, &pt(&[1.0, 0.0]), 0, &DiffScheme::default()).unwrap_err();
        assert!(matches!(err, GeomError::NonFiniteSample { .. }));
    }

    #[test]
    fn fornberg_reproduces_known_stencils() {
        let w = central_weights(2, 1);
        assert!(
            (w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14
        );
        let w = central_weights(2, 4);
        let known = [-1.0 / 560.0, 8.0 / 315.0, -0.2, 1.6, -205.0 / 72.0];
        for (a, b) in w.iter().zip(known.iter()) {
            assert!((a - b).abs() < 1e-13, "{a} vs {b}");
        }
    }

    #[test]
    fn high_order_stencils_are_exact_on_polynomials() {
        let f = |t: f64| t + t * t + 0.5 * t.powi(4);
        assert!((high_order_derivative(f, 0.0, 2, 1e-2) - 2.0).abs() < 1e-8);
        assert!((high_order_derivative(f, 0.0, 4, 1e-2) - 12.0).abs() < 1e-5);
    }
}
