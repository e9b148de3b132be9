//! Levi-Civita connection, Hessians and curvature in a single chart.

use nalgebra::{DMatrix, DVector};

use crate::diff::{coordinate_gradient, coordinate_hessian, partials, try_partials, DiffScheme};
use crate::error::{GeomError, Result};
use crate::field::{EndomorphismField, MetricField, Point, ScalarField, VectorField};
use crate::linalg::{inner, metric_inverse};

/// Below this `|v|^2 |w|^2 - g(v,w)^2` a plane is rejected.
pub const DEGENERATE_PLANE: f64 = 1e-12;
/// Below this `|grad u|` the level set is not a hypersurface.
pub const CRITICAL_GRADIENT: f64 = 1e-10;
/// Relative tolerance for `g(X, grad u) = 0`.
pub const TANGENCY_TOL: f64 = 1e-8;

/// Christoffel symbols `Γ^k_{ij}`, stored `k`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_{ij}`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        let d = self.dim;
        self.data[(k * d + i) * d + j] = v;
    }

    /// The matrix `(Γ_i)^k_l = Γ^k_{il}`, i.e. `∇_{e_i}` acting on components.
    pub fn along(&self, i: usize) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |k, l| self.get(k, i, l))
    }

    /// Flat copy of all components.
    pub fn as_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.data)
    }
}

/// Riemann tensor `R^l_{ijk}`, stored `l`-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `R^l_{ijk}`
    pub fn get(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let d = self.dim;
        self.data[((l * d + i) * d + j) * d + k]
    }

    /// `R(v, w) x` with `R(e_i, e_j) e_k = R^l_{ijk} e_l`.
    pub fn apply(&self, v: &DVector<f64>, w: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        let mut out = DVector::zeros(d);
        for l in 0..d {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    let vw = v[i] * w[j];
                    if vw == 0.0 {
                        continue;
                    }
                    for k in 0..d {
                        acc += vw * x[k] * self.get(l, i, j, k);
                    }
                }
            }
            out[l] = acc;
        }
        out
    }

    /// Largest entry in absolute value.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `Γ^k_{ij} = ½ g^{kl}(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})`, symmetric in `(i, j)`
/// by construction.
pub fn christoffel(g: &MetricField, p: &Point, scheme: &DiffScheme) -> Result<Christoffel> {
    let gp = g.eval(p);
    let ginv = metric_inverse(&gp, p)?;
    let dg = partials(|q: &Point| g.eval(q), p, scheme)?;
    Ok(christoffel_from_parts(&ginv, &dg))
}

fn christoffel_from_parts(ginv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Christoffel {
    let d = ginv.nrows();
    // first kind: Γ_{l,ij} = ½(∂_i g_{jl} + ∂_j g_{il} − ∂_l g_{ij})
    let mut first = vec![0.0; d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in i..d {
                let v = 0.5 * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                first[(l * d + i) * d + j] = v;
                first[(l * d + j) * d + i] = v;
            }
        }
    }
    let mut out = Christoffel::zeros(d);
    for k in 0..d {
        for i in 0..d {
            for j in i..d {
                let v: f64 = (0..d)
                    .map(|l| ginv[(k, l)] * first[(l * d + i) * d + j])
                    .sum();
                out.set(k, i, j, v);
                out.set(k, j, i, v);
            }
        }
    }
    out
}

/// Metric gradient of a function.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    /// Coordinate differential `∂_i u`.
    pub differential: DVector<f64>,
    /// `(grad u)^k = g^{kl} ∂_l u`
    pub vector: DVector<f64>,
    /// `|grad u|_g^2`
    pub norm_sq: f64,
}

pub fn gradient(
    g: &MetricField,
    u: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<Gradient> {
    let gp = g.eval(p);
    let ginv = metric_inverse(&gp, p)?;
    let du = coordinate_gradient(u, p, scheme)?;
    Ok(gradient_from_parts(&ginv, du))
}

fn gradient_from_parts(ginv: &DMatrix<f64>, du: DVector<f64>) -> Gradient {
    let vector = ginv * &du;
    let norm_sq = du.dot(&vector);
    Gradient {
        differential: du,
        vector,
        norm_sq,
    }
}

/// `(∇²u)_{ij} = ∂_i ∂_j u − Γ^k_{ij} ∂_k u`
pub fn hessian_form(
    g: &MetricField,
    u: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DMatrix<f64>> {
    let gamma = christoffel(g, p, scheme)?;
    let du = coordinate_gradient(u, p, scheme)?;
    let ddu = coordinate_hessian(u, p, scheme)?;
    Ok(hessian_from_parts(&gamma, &du, &ddu))
}

fn hessian_from_parts(gamma: &Christoffel, du: &DVector<f64>, ddu: &DMatrix<f64>) -> DMatrix<f64> {
    let d = du.len();
    let mut h = DMatrix::zeros(d, d);
    for i in 0..d {
        for j in i..d {
            let corr: f64 = (0..d).map(|k| gamma.get(k, i, j) * du[k]).sum();
            let v = 0.5 * (ddu[(i, j)] + ddu[(j, i)]) - corr;
            h[(i, j)] = v;
            h[(j, i)] = v;
        }
    }
    h
}

/// Everything needed for the eigen-analysis of `u` at one point, computed
/// with a single metric inversion.
#[derive(Debug, Clone)]
pub struct SecondOrderData {
    pub metric: DMatrix<f64>,
    pub metric_inverse: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub gradient: Gradient,
    pub hessian_form: DMatrix<f64>,
    /// `g^{-1} ∇²u`
    pub hessian_endomorphism: DMatrix<f64>,
}

pub fn second_order_data(
    g: &MetricField,
    u: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<SecondOrderData> {
    let gp = g.eval(p);
    let ginv = metric_inverse(&gp, p)?;
    let dg = partials(|q: &Point| g.eval(q), p, scheme)?;
    let gamma = christoffel_from_parts(&ginv, &dg);
    let du = coordinate_gradient(u, p, scheme)?;
    let ddu = coordinate_hessian(u, p, scheme)?;
    let hess = hessian_from_parts(&gamma, &du, &ddu);
    let endo = &ginv * &hess;
    Ok(SecondOrderData {
        metric: gp,
        metric_inverse: ginv.clone(),
        christoffel: gamma,
        gradient: gradient_from_parts(&ginv, du),
        hessian_form: hess,
        hessian_endomorphism: endo,
    })
}

/// `H = g^{-1} ∇²u`
pub fn hessian_endomorphism(
    g: &MetricField,
    u: &ScalarField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DMatrix<f64>> {
    Ok(second_order_data(g, u, p, scheme)?.hessian_endomorphism)
}

/// `‖gH − Hᵀg‖_F`, zero iff `H` is `g`-self-adjoint.
pub fn self_adjoint_residual(g: &DMatrix<f64>, h: &DMatrix<f64>) -> f64 {
    (g * h - h.transpose() * g).norm()
}

/// `R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}`,
/// with the connection itself differenced a second time.
pub fn riemann_curvature(g: &MetricField, p: &Point, scheme: &DiffScheme) -> Result<Riemann> {
    let gamma = christoffel(g, p, scheme)?;
    let dgamma = try_partials(
        |q: &Point| christoffel(g, q, scheme).map(|c| c.as_vector()),
        p,
        scheme,
    )?;
    let d = p.dim();
    let idx = |l: usize, i: usize, j: usize| (l * d + i) * d + j;
    let mut data = vec![0.0; d * d * d * d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    let mut v = dgamma[i][idx(l, j, k)] - dgamma[j][idx(l, i, k)];
                    for m in 0..d {
                        v += gamma.get(l, i, m) * gamma.get(m, j, k)
                            - gamma.get(l, j, m) * gamma.get(m, i, k);
                    }
                    data[((l * d + i) * d + j) * d + k] = v;
                }
            }
        }
    }
    Ok(Riemann { dim: d, data })
}

/// `K(v, w) = g(R(v,w)w, v) / (|v|²|w|² − g(v,w)²)`; the round sphere gives +1.
pub fn sectional_curvature(
    g: &MetricField,
    p: &Point,
    v: &DVector<f64>,
    w: &DVector<f64>,
    scheme: &DiffScheme,
) -> Result<f64> {
    check_len(p, v)?;
    check_len(p, w)?;
    let gp = g.eval(p);
    plane_area_sq(&gp, v, w)?;
    let riem = riemann_curvature(g, p, scheme)?;
    sectional_from_riemann(&riem, &gp, v, w)
}

/// Sectional curvature from an already computed Riemann tensor.
pub fn sectional_from_riemann(
    riem: &Riemann,
    gp: &DMatrix<f64>,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    let area = plane_area_sq(gp, v, w)?;
    let rvw_w = riem.apply(v, w, w);
    Ok(inner(gp, &rvw_w, v) / area)
}

fn plane_area_sq(gp: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> Result<f64> {
    let vv = inner(gp, v, v);
    let ww = inner(gp, w, w);
    let vw = inner(gp, v, w);
    let area_sq = vv * ww - vw * vw;
    if !(area_sq >= DEGENERATE_PLANE) {
        return Err(GeomError::DegeneratePlane { area_sq });
    }
    Ok(area_sq)
}

fn check_len(p: &Point, v: &DVector<f64>) -> Result<()> {
    if v.len() != p.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: p.dim(),
            found: v.len(),
        });
    }
    Ok(())
}

/// Normal component `II(X, Y) = −∇²u(X, Y) / |grad u|` of the second fundamental
/// form of the level set of `u` through `p`, with unit normal `grad u/|grad u|`.
pub fn second_fundamental_form(
    g: &MetricField,
    u: &ScalarField,
    p: &Point,
    x: &DVector<f64>,
    y: &DVector<f64>,
    scheme: &DiffScheme,
) -> Result<f64> {
    check_len(p, x)?;
    check_len(p, y)?;
    let data = second_order_data(g, u, p, scheme)?;
    let grad_norm = data.gradient.norm_sq.max(0.0).sqrt();
    if grad_norm < CRITICAL_GRADIENT {
        return Err(GeomError::CriticalPoint {
            point: p.to_vec(),
            grad_norm,
        });
    }
    for v in [x, y] {
        let along = inner(&data.metric, v, &data.gradient.vector).abs();
        let scale = inner(&data.metric, v, v).max(0.0).sqrt() * grad_norm;
        if along > TANGENCY_TOL * scale.max(f64::MIN_POSITIVE) {
            return Err(GeomError::NotTangent {
                residual: along / scale.max(f64::MIN_POSITIVE),
            });
        }
    }
    let hxy = (x.transpose() * &data.hessian_form * y)[(0, 0)];
    Ok(-hxy / grad_norm)
}

/// `(L_X g)_{ij} = X^k ∂_k g_{ij} + g_{kj} ∂_i X^k + g_{ik} ∂_j X^k`
pub fn lie_derivative_metric(
    g: &MetricField,
    x: &VectorField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<DMatrix<f64>> {
    let d = p.dim();
    let gp = g.eval(p);
    let xp = x.eval(p);
    check_len(p, &xp)?;
    let dg = partials(|q: &Point| g.eval(q), p, scheme)?;
    let dx = partials(|q: &Point| x.eval(q), p, scheme)?;
    // jac[(k, i)] = ∂_i X^k
    let mut jac = DMatrix::zeros(d, d);
    for (i, col) in dx.iter().enumerate() {
        jac.set_column(i, col);
    }
    let mut out = jac.transpose() * &gp + &gp * &jac;
    for (k, dgk) in dg.iter().enumerate() {
        out += dgk * xp[k];
    }
    Ok(out)
}

/// `(∇_i A)^k_j = ∂_i A^k_j + Γ^k_{il} A^l_j − Γ^l_{ij} A^k_l`
pub fn covariant_derivative_endomorphism(
    g: &MetricField,
    a: &EndomorphismField,
    p: &Point,
    axis: usize,
    scheme: &DiffScheme,
) -> Result<DMatrix<f64>> {
    if axis >= p.dim() {
        return Err(GeomError::DimensionMismatch {
            expected: p.dim(),
            found: axis,
        });
    }
    let gamma = christoffel(g, p, scheme)?;
    let da = crate::diff::directional(|q: &Point| a.eval(q), p, axis, scheme)?;
    Ok(covariant_from_parts(&gamma, &a.eval(p), &da, axis))
}

/// `∇_i A` for every axis, sharing one connection evaluation.
pub fn covariant_derivatives_endomorphism(
    g: &MetricField,
    a: &EndomorphismField,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<Vec<DMatrix<f64>>> {
    let gamma = christoffel(g, p, scheme)?;
    let ap = a.eval(p);
    let da = partials(|q: &Point| a.eval(q), p, scheme)?;
    Ok(da
        .iter()
        .enumerate()
        .map(|(i, dai)| covariant_from_parts(&gamma, &ap, dai, i))
        .collect())
}

fn covariant_from_parts(
    gamma: &Christoffel,
    ap: &DMatrix<f64>,
    dai: &DMatrix<f64>,
    i: usize,
) -> DMatrix<f64> {
    let gi = gamma.along(i);
    dai + &gi * ap - ap * &gi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(c: &[f64]) -> Point {
        Point::new(c.to_vec()).unwrap()
    }

    fn flat(d: usize) -> MetricField {
        MetricField::new(d, move |_| DMatrix::identity(d, d))
    }

    fn polar() -> MetricField {
        MetricField::new(2, |p| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, p[0] * p[0]]))
        })
    }

    fn conformal(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> MetricField {
        MetricField::new(2, move |p| {
            DMatrix::identity(2, 2) * f(p[0] * p[0] + p[1] * p[1])
        })
    }

    fn sphere() -> MetricField {
        conformal(|s| 4.0 / ((1.0 + s) * (1.0 + s)))
    }

    fn hyperbolic() -> MetricField {
        conformal(|s| 4.0 / ((1.0 - s) * (1.0 - s)))
    }

    fn e(d: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    #[test]
    fn flat_connection_vanishes() {
        let s = DiffScheme::default();
        let c = christoffel(&flat(3), &pt(&[0.3, -1.0, 2.0]), &s).unwrap();
        assert!(c.as_vector().amax() == 0.0);
    }

    #[test]
    fn polar_christoffel() {
        let s = DiffScheme::default();
        let c = christoffel(&polar(), &pt(&[2.0, 1.0]), &s).unwrap();
        assert!((c.get(0, 1, 1) + 2.0).abs() < 1e-9);
        assert!((c.get(1, 0, 1) - 0.5).abs() < 1e-9);
        assert_eq!(c.get(1, 0, 1), c.get(1, 1, 0));
    }

    #[test]
    fn conformal_exponential_christoffel() {
        let g = MetricField::new(2, |p| DMatrix::identity(2, 2) * (2.0 * p[0]).exp());
        let c = christoffel(&g, &pt(&[0.4, -0.7]), &DiffScheme::default()).unwrap();
        assert!((c.get(0, 0, 0) - 1.0).abs() < 1e-8);
        assert!((c.get(0, 1, 1) + 1.0).abs() < 1e-8);
        assert!((c.get(1, 0, 1) - 1.0).abs() < 1e-8);
    }

    #[test]
    fn gradient_examples() {
        let s = DiffScheme::default();
        let u = ScalarField::new(|p| p[0] * p[0] + p[1] * p[1]);
        let gr = gradient(&flat(2), &u, &pt(&[1.0, 2.0]), &s).unwrap();
        assert!((gr.vector[0] - 2.0).abs() < 1e-9 && (gr.vector[1] - 4.0).abs() < 1e-9);
        assert!((gr.norm_sq - 20.0).abs() < 1e-8);

        let u = ScalarField::new(|p| p[1]);
        let gr = gradient(&polar(), &u, &pt(&[2.0, 0.0]), &s).unwrap();
        assert!(gr.vector[0].abs() < 1e-12 && (gr.vector[1] - 0.25).abs() < 1e-10);

        let u = ScalarField::new(|_| 7.0);
        let gr = gradient(&sphere(), &u, &pt(&[0.3, 0.2]), &s).unwrap();
        assert_eq!(gr.vector.amax(), 0.0);
    }

    #[test]
    fn hessian_examples() {
        let s = DiffScheme::default();
        let u = ScalarField::new(|p| p[0] * p[0] + p[1] * p[1]);
        let h = hessian_form(&flat(2), &u, &pt(&[0.5, 0.1]), &s).unwrap();
        assert!((&h - DMatrix::identity(2, 2) * 2.0).norm() < 1e-7, "{h}");

        let u = ScalarField::new(|p| 0.5 * p[0] * p[0]);
        let h = hessian_form(&polar(), &u, &pt(&[2.0, 0.0]), &s).unwrap();
        assert!((h[(0, 0)] - 1.0).abs() < 1e-7);
        assert!((h[(1, 1)] - 4.0).abs() < 1e-7);
        assert!(h[(0, 1)].abs() < 1e-7);
    }

    #[test]
    fn endomorphism_divides_by_metric() {
        let g = MetricField::new(2, |_| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]))
        });
        let u = ScalarField::new(|p| 0.5 * p[0] * p[0] + 2.0 * p[1] * p[1]);
        let h = hessian_endomorphism(&g, &u, &pt(&[0.1, 0.2]), &DiffScheme::default()).unwrap();
        assert!((h - DMatrix::identity(2, 2)).norm() < 1e-7);
    }

    #[test]
    fn constant_curvature_oracles() {
        let s = DiffScheme::default();
        for c in [[0.3, -0.2], [1.1, 0.4], [-0.7, -0.9]] {
            let k = sectional_curvature(&sphere(), &pt(&c), &e(2, 0), &e(2, 1), &s).unwrap();
            assert!((k - 1.0).abs() < 1e-6, "sphere K = {k}");
        }
        for c in [[0.3, -0.2], [0.1, 0.5]] {
            let k = sectional_curvature(&hyperbolic(), &pt(&c), &e(2, 0), &e(2, 1), &s).unwrap();
            assert!((k + 1.0).abs() < 1e-6, "hyperbolic K = {k}");
        }
        let k = sectional_curvature(
            &sphere().scaled(2.0),
            &pt(&[0.3, 0.2]),
            &e(2, 0),
            &e(2, 1),
            &s,
        )
        .unwrap();
        assert!((k - 0.25).abs() < 1e-6);
        let k =
            sectional_curvature(&flat(3), &pt(&[0.3, 0.2, 0.0]), &e(3, 0), &e(3, 2), &s).unwrap();
        assert!(k.abs() < 1e-10);
    }

    #[test]
    fn degenerate_plane_rejected() {
        let v = DVector::from_vec(vec![1.0, 2.0]);
        let r = sectional_curvature(
            &flat(2),
            &pt(&[0.0, 0.0]),
            &v,
            &(&v * 3.0),
            &DiffScheme::default(),
        );
        assert!(matches!(r, Err(GeomError::DegeneratePlane { .. })));
    }

    #[test]
    fn second_fundamental_form_examples() {
        let s = DiffScheme::default();
        let u = ScalarField::new(|p| p[0]);
        let ii = second_fundamental_form(&flat(2), &u, &pt(&[0.3, 0.4]), &e(2, 1), &e(2, 1), &s)
            .unwrap();
        assert!(ii.abs() < 1e-8);

        let u = ScalarField::new(|p| 0.5 * (p[0] * p[0] + p[1] * p[1]));
        let ii = second_fundamental_form(&flat(2), &u, &pt(&[1.0, 0.0]), &e(2, 1), &e(2, 1), &s)
            .unwrap();
        assert!((ii + 1.0).abs() < 1e-8, "{ii}");

        let r = second_fundamental_form(&flat(2), &u, &pt(&[1.0, 0.0]), &e(2, 0), &e(2, 1), &s);
        assert!(matches!(r, Err(GeomError::NotTangent { .. })));
        let r = second_fundamental_form(&flat(2), &u, &pt(&[0.0, 0.0]), &e(2, 0), &e(2, 1), &s);
        assert!(matches!(r, Err(GeomError::CriticalPoint { .. })));
    }

    #[test]
    fn lie_derivative_examples() {
        let s = DiffScheme::default();
        let p = pt(&[0.7, -0.3]);
        let rot = VectorField::new(2, |p| DVector::from_vec(vec![-p[1], p[0]]));
        assert!(
            lie_derivative_metric(&flat(2), &rot, &p, &s)
                .unwrap()
                .norm()
                < 1e-9
        );
        let dil = VectorField::new(2, |p| DVector::from_vec(vec![p[0], p[1]]));
        let l = lie_derivative_metric(&flat(2), &dil, &p, &s).unwrap();
        assert!((l - DMatrix::identity(2, 2) * 2.0).norm() < 1e-9);
        // rotations are isometries of the round sphere too
        assert!(
            lie_derivative_metric(&sphere(), &rot, &p, &s)
                .unwrap()
                .norm()
                < 1e-8
        );
    }

    #[test]
    fn covariant_derivative_examples() {
        let s = DiffScheme::default();
        let p = pt(&[0.4, 0.9]);
        let c = EndomorphismField::new(2, |_| DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
        assert!(
            covariant_derivative_endomorphism(&flat(2), &c, &p, 1, &s)
                .unwrap()
                .norm()
                < 1e-12
        );
        let a = EndomorphismField::new(2, |p| DMatrix::identity(2, 2) * p[0]);
        let d = covariant_derivative_endomorphism(&flat(2), &a, &p, 0, &s).unwrap();
        assert!((d - DMatrix::identity(2, 2)).norm() < 1e-9);
        let id = EndomorphismField::new(2, |_| DMatrix::identity(2, 2));
        for axis in 0..2 {
            let d = covariant_derivative_endomorphism(&sphere(), &id, &p, axis, &s).unwrap();
            assert!(d.norm() < 1e-12);
        }
    }
}
