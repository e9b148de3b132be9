//! Small dense linear algebra: cyclic Jacobi for symmetric matrices, guarded
//! metric inversion and Gram–Schmidt with respect to a metric.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::field::Point;

/// Condition number above which a metric is treated as singular.
pub const MAX_CONDITION: f64 = 1e10;

const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigen-decomposition `A = V diag(values) V^T` of a symmetric matrix.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `k` belongs to `values[k]`.
    pub vectors: DMatrix<f64>,
}

/// Cyclic Jacobi rotations. Converges when the off-diagonal mass drops below
/// `1e-12` relative to the Frobenius norm.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> SymmetricEigen {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "symmetric_eigen needs a square matrix");
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.norm().max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[(p, q)] * m[(p, q)])
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_TOL * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &v.column(i));
    }
    SymmetricEigen { values, vectors }
}

/// Inverse of a metric matrix. Rejects non-positive-definite or
/// ill-conditioned input as [`GeomError::SingularMetric`].
pub fn metric_inverse(g: &DMatrix<f64>, p: &Point) -> Result<DMatrix<f64>> {
    let eig = symmetric_eigen(g);
    let lo = eig.values[0];
    let hi = *eig.values.last().expect("non-empty");
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        return Err(GeomError::SingularMetric {
            point: p.to_vec(),
            condition,
        });
    }
    g.clone()
        .lu()
        .try_inverse()
        .ok_or_else(|| GeomError::SingularMetric {
            point: p.to_vec(),
            condition: f64::INFINITY,
        })
}

pub fn inner(g: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    (v.transpose() * g * w)[(0, 0)]
}

/// Completes `seed` (in order) to a `g`-orthonormal basis using the coordinate
/// axes as fill-in candidates. Columns of the result are the basis.
pub fn orthonormal_completion(g: &DMatrix<f64>, seed: &[DVector<f64>]) -> DMatrix<f64> {
    let d = g.nrows();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(d);
    let candidates = seed
        .iter()
        .cloned()
        .chain((0..d).map(|i| DVector::from_fn(d, |k, _| if k == i { 1.0 } else { 0.0 })));
    for c in candidates {
        if basis.len() == d {
            break;
        }
        let mut v = c;
        // two passes of modified Gram–Schmidt
        for _ in 0..2 {
            for b in &basis {
                let proj = inner(g, b, &v);
                v.axpy(-proj, b, 1.0);
            }
        }
        let n2 = inner(g, &v, &v);
        if n2 > 1e-20 {
            basis.push(v / n2.sqrt());
        }
    }
    let mut out = DMatrix::zeros(d, basis.len());
    for (k, b) in basis.iter().enumerate() {
        out.set_column(k, b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_matches_characteristic_roots() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 5.0]);
        let e = symmetric_eigen(&a);
        let expect = [1.0, 3.0, 5.0];
        for (x, y) in e.values.iter().zip(expect.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
        let recon = &e.vectors
            * DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()))
            * e.vectors.transpose();
        assert!((recon - a).norm() < 1e-12);
    }

    #[test]
    fn singular_metric_is_rejected() {
        let p = Point::new(vec![0.0, 0.0]).unwrap();
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 1e-12]));
        assert!(matches!(
            metric_inverse(&g, &p),
            Err(GeomError::SingularMetric { .. })
        ));
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, -1.0]));
        assert!(metric_inverse(&g, &p).is_err());
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 4.0]));
        let inv = metric_inverse(&g, &p).unwrap();
        assert!((inv[(1, 1)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn completion_is_orthonormal() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.0, 0.3, 1.0, 0.1, 0.0, 0.1, 4.0]);
        let seed = vec![DVector::from_vec(vec![1.0, 1.0, 0.0])];
        let b = orthonormal_completion(&g, &seed);
        let gram = b.transpose() * &g * &b;
        assert!((gram - DMatrix::identity(3, 3)).norm() < 1e-12);
    }
}
