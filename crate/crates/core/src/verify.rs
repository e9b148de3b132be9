//! Per-point eigenstructure of the Hessian endomorphism and the sweep that
//! aggregates every check over seeded samples into a verdict.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::check::{Check, Tolerances};
use crate::diff::{coordinate_gradient, DiffScheme};
use crate::error::{GeomError, Result};
use crate::field::{Point, VectorField};
use crate::kahler::{
    acs_residuals, d_two_form_residual, j_invariance_residual, kahler_form_field, nabla_j_residual,
};
use crate::linalg::{inner, metric_inverse, orthonormal_completion, symmetric_eigen};
use crate::model::{curvature_relation_residual, horizontal_frame, ModelSpace};
use crate::tensor::{hessian_form, lie_derivative_metric, second_order_data};

/// Points with `|grad u|_g` below this are skipped as critical.
pub const REGULAR_GRADIENT: f64 = 1e-8;
/// Closed-form eigenvalues closer than this are treated as one.
pub const ISOTROPY_TOL: f64 = 1e-9;
/// Smallest `u + c` for which the `2uμ` identity is evaluated.
pub const MIN_POTENTIAL: f64 = 1e-10;

/// Eigen-analysis of `H = g⁻¹∇²u` at one regular point.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenStructureReport {
    pub point: Point,
    /// Rayleigh quotient `g(H grad u, grad u) / |grad u|²`.
    pub lambda_numeric: f64,
    /// Eigenvalue of `H` restricted to `span(grad u, J grad u)` closest to `grad u`.
    pub lambda_block: f64,
    /// Mean of the eigenvalues on the complement; absent in real dimension 2.
    pub mu_numeric: Option<f64>,
    /// `‖H grad u − λ grad u‖_g / ‖grad u‖_g`
    pub grad_eigen_residual: f64,
    pub jgrad_eigen_residual: f64,
    /// `max − min` of the complement eigenvalues.
    pub mu_cluster_spread: Option<f64>,
    pub j_invariance: f64,
    pub u_value: f64,
    pub grad_norm_sq: f64,
    /// `∇²u` in a `g`-orthonormal frame starting with `grad u, J grad u`.
    pub adapted_hessian: DMatrix<f64>,
    pub closed_form_gaps: Option<ClosedFormGaps>,
    /// `|2(u + c)μ − |grad u|²| / max(1, |grad u|²)`, with `c` the space's offset (or 0).
    pub identity_2umu_gap: Option<f64>,
}

/// Distances from the closed forms at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormGaps {
    pub lambda: f64,
    pub mu: Option<f64>,
    /// `‖S − diag(λ_cf, λ_cf, μ_cf, …)‖_F` for the adapted Hessian `S`.
    pub hessian_model: f64,
    pub isotropic: bool,
}

pub fn eigenstructure_at_point(
    space: &ModelSpace,
    p: &Point,
    scheme: &DiffScheme,
) -> Result<EigenStructureReport> {
    space.require_admissible(p)?;
    let data = second_order_data(space.metric(), space.u(), p, scheme)?;
    let g = &data.metric;
    let grad = &data.gradient.vector;
    let n2 = data.gradient.norm_sq;
    let grad_norm = n2.max(0.0).sqrt();
    if !(grad_norm >= REGULAR_GRADIENT) {
        return Err(GeomError::CriticalPoint {
            point: p.to_vec(),
            grad_norm,
        });
    }
    let h = &data.hessian_endomorphism;
    let jp = space.complex_structure().eval(p);
    let jgrad = &jp * grad;

    let lambda = inner(&data.hessian_form, grad, grad) / n2;
    let g_norm = |v: &DVector<f64>| inner(g, v, v).max(0.0).sqrt();
    let grad_res = g_norm(&(h * grad - grad * lambda)) / grad_norm;
    let jgrad_res = g_norm(&(h * &jgrad - &jgrad * lambda)) / g_norm(&jgrad).max(f64::MIN_POSITIVE);

    let basis = orthonormal_completion(g, &[grad.clone(), jgrad.clone()]);
    let s = basis.transpose() * &data.hessian_form * &basis;
    let s = (&s + s.transpose()) * 0.5;
    let d = s.nrows();

    let block = symmetric_eigen(&s.view((0, 0), (2, 2)).into_owned());
    let pick = if block.vectors[(0, 0)].abs() >= block.vectors[(0, 1)].abs() {
        0
    } else {
        1
    };
    let lambda_block = block.values[pick];

    let (mu, spread) = if d >= 4 {
        let comp = symmetric_eigen(&s.view((2, 2), (d - 2, d - 2)).into_owned());
        let mean = comp.values.iter().sum::<f64>() / comp.values.len() as f64;
        let spread = comp.values.last().unwrap() - comp.values[0];
        (Some(mean), Some(spread))
    } else {
        (None, None)
    };

    let j_inv = j_invariance_residual(h, &jp)?;
    let u_value = space.u().eval(p);

    let closed_form_gaps = match space.closed_forms() {
        Some(cf) => {
            let lcf = (cf.lambda)(p)?;
            let mcf = (cf.mu)(p)?;
            let isotropic = (lcf - mcf).abs() < ISOTROPY_TOL;
            let mcf = if isotropic { lcf } else { mcf };
            let mut model = DMatrix::zeros(d, d);
            for i in 0..d {
                model[(i, i)] = if i < 2 { lcf } else { mcf };
            }
            Some(ClosedFormGaps {
                lambda: (lambda - lcf).abs(),
                mu: mu.map(|m| (m - mcf).abs()),
                hessian_model: (&s - model).norm(),
                isotropic,
            })
        }
        None => None,
    };

    let identity_2umu_gap = mu.map(|m| {
        let shifted = u_value + space.identity_offset().unwrap_or(0.0);
        (2.0 * shifted * m - n2).abs() / n2.max(1.0)
    });

    Ok(EigenStructureReport {
        point: p.clone(),
        lambda_numeric: lambda,
        lambda_block,
        mu_numeric: mu,
        grad_eigen_residual: grad_res,
        jgrad_eigen_residual: jgrad_res,
        mu_cluster_spread: spread,
        j_invariance: j_inv,
        u_value,
        grad_norm_sq: n2,
        adapted_hessian: s,
        closed_form_gaps,
        identity_2umu_gap,
    })
}

/// `|2(u + c)μ − |grad u|²| / max(1, |grad u|²)` at `p`.
pub fn mu_u_gradient_identity(space: &ModelSpace, p: &Point, scheme: &DiffScheme) -> Result<f64> {
    let rep = eigenstructure_at_point(space, p, scheme)?;
    let shifted = rep.u_value + space.identity_offset().unwrap_or(0.0);
    if !(shifted > MIN_POTENTIAL) {
        return Err(GeomError::NotApplicable {
            space: space.name().to_string(),
            reason: format!("u + c = {shifted:e} is not positive"),
        });
    }
    rep.identity_2umu_gap
        .ok_or_else(|| GeomError::NotApplicable {
            space: space.name().to_string(),
            reason: "mu is undefined in real dimension 2".into(),
        })
}

/// `(|λ − λ_cf|, |μ − μ_cf|)`, the second absent in real dimension 2.
pub fn compare_closed_forms(
    space: &ModelSpace,
    report: &EigenStructureReport,
) -> Result<(f64, Option<f64>)> {
    let cf = space
        .closed_forms()
        .ok_or_else(|| GeomError::NoClosedForms {
            space: space.name().to_string(),
        })?;
    let lcf = (cf.lambda)(&report.point)?;
    let mcf = (cf.mu)(&report.point)?;
    let mcf = if (lcf - mcf).abs() < ISOTROPY_TOL {
        lcf
    } else {
        mcf
    };
    Ok((
        (report.lambda_numeric - lcf).abs(),
        report.mu_numeric.map(|m| (m - mcf).abs()),
    ))
}

/// `‖∇²u + u g‖_F`
pub fn obata_residual(space: &ModelSpace, p: &Point, scheme: &DiffScheme) -> Result<f64> {
    let h = hessian_form(space.metric(), space.u(), p, scheme)?;
    let g = space.metric().eval(p);
    Ok((h + g * space.u().eval(p)).norm())
}

/// `J grad u` as a field.
pub fn j_gradient_field(space: &ModelSpace, scheme: DiffScheme) -> VectorField {
    let g = space.metric().clone();
    let j = space.complex_structure().clone();
    let u = space.u().clone();
    let d = space.dim();
    VectorField::new(d, move |q| {
        let grad = metric_inverse(&g.eval(q), q)
            .and_then(|ginv| coordinate_gradient(&u, q, &scheme).map(|du| ginv * du));
        match grad {
            Ok(v) => j.eval(q) * v,
            Err(_) => DVector::from_element(d, f64::NAN),
        }
    })
}

/// `‖L_X g‖_F / max(1, ‖g‖_F)` for `X = J grad u`.
pub fn killing_residual(space: &ModelSpace, p: &Point, scheme: &DiffScheme) -> Result<f64> {
    let x = j_gradient_field(space, *scheme);
    let l = lie_derivative_metric(space.metric(), &x, p, scheme)?;
    Ok(l.norm() / space.metric().eval(p).norm().max(1.0))
}

/// Largest curvature-relation residual over the horizontal planes at `p`:
/// the holomorphic plane and, when the dimension allows, a totally real one.
pub fn curvature_relation_at(space: &ModelSpace, p: &Point, scheme: &DiffScheme) -> Result<f64> {
    let (z, jz, z2) = horizontal_frame(p)?;
    let mut worst = curvature_relation_residual(space, p, &z, &jz, scheme)?;
    if let Some(z2) = z2 {
        worst = worst.max(curvature_relation_residual(space, p, &z, &z2, scheme)?);
    }
    Ok(worst)
}

/// Sample count, seed, thresholds and the checks to run.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyPlan {
    pub samples: usize,
    pub seed: u64,
    /// Overrides on top of the space's own defaults.
    pub tolerances: Tolerances,
    /// `None` runs the space's default checks.
    pub checks: Option<Vec<Check>>,
}

impl VerifyPlan {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            tolerances: Tolerances::new(),
            checks: None,
        }
    }
}

/// Worst value of one check over the sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub worst_point_index: Option<usize>,
    /// Points at which the check produced a value.
    pub evaluated: usize,
    /// Points at which it raised an error.
    pub errors: usize,
}

/// One check exceeding its tolerance, or failing to evaluate, at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub check: Check,
    pub point_index: usize,
    pub point: Vec<f64>,
    pub value: Option<f64>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioVerdict {
    pub space: String,
    pub points_sampled: usize,
    /// Critical points, excluded from the eigen checks.
    pub points_skipped: usize,
    /// Whether the closed forms have `λ = μ` throughout the sample.
    pub isotropic: bool,
    pub checks: BTreeMap<Check, CheckSummary>,
    pub failures: Vec<Failure>,
    pub pass: bool,
}

struct PointOutcome {
    values: Vec<(Check, std::result::Result<f64, String>)>,
    skipped: bool,
    isotropic: Option<bool>,
}

fn needs_eigen(c: Check) -> bool {
    matches!(
        c,
        Check::GradEigen
            | Check::JgradEigen
            | Check::MuSpread
            | Check::JInvariance
            | Check::LambdaGap
            | Check::MuGap
            | Check::HessianModel
            | Check::Identity2umu
    )
}

fn not_applicable(space: &ModelSpace, what: &str) -> String {
    GeomError::NotApplicable {
        space: space.name().to_string(),
        reason: what.to_string(),
    }
    .to_string()
}

fn evaluate_point(
    space: &ModelSpace,
    p: &Point,
    checks: &[Check],
    scheme: &DiffScheme,
) -> PointOutcome {
    let eigen = if checks.iter().any(|c| needs_eigen(*c)) {
        Some(eigenstructure_at_point(space, p, scheme))
    } else {
        None
    };
    let skipped = matches!(eigen, Some(Err(GeomError::CriticalPoint { .. })));
    let isotropic = match &eigen {
        Some(Ok(r)) => r.closed_form_gaps.map(|g| g.isotropic),
        _ => None,
    };
    let omega = kahler_form_field(space.metric(), space.complex_structure());
    let mut values = Vec::with_capacity(checks.len());
    for &c in checks {
        let v: std::result::Result<f64, String> = if needs_eigen(c) {
            match eigen.as_ref().expect("computed above") {
                Err(GeomError::CriticalPoint { .. }) => continue,
                Err(e) => Err(e.to_string()),
                Ok(r) => {
                    let gaps = r.closed_form_gaps.ok_or_else(|| {
                        GeomError::NoClosedForms {
                            space: space.name().to_string(),
                        }
                        .to_string()
                    });
                    match c {
                        Check::GradEigen => Ok(r.grad_eigen_residual),
                        Check::JgradEigen => Ok(r.jgrad_eigen_residual),
                        Check::MuSpread => r
                            .mu_cluster_spread
                            .ok_or_else(|| not_applicable(space, "mu needs real dimension >= 4")),
                        Check::JInvariance => Ok(r.j_invariance),
                        Check::LambdaGap => gaps.map(|g| g.lambda),
                        Check::MuGap => gaps.and_then(|g| {
                            g.mu.ok_or_else(|| {
                                not_applicable(space, "mu needs real dimension >= 4")
                            })
                        }),
                        Check::HessianModel => gaps.map(|g| g.hessian_model),
                        Check::Identity2umu => r
                            .identity_2umu_gap
                            .ok_or_else(|| not_applicable(space, "mu needs real dimension >= 4")),
                        _ => unreachable!(),
                    }
                }
            }
        } else {
            let r = match c {
                Check::AcsSquare => {
                    acs_residuals(space.complex_structure(), space.metric(), p).map(|r| r.0)
                }
                Check::AcsOrthogonal => {
                    acs_residuals(space.complex_structure(), space.metric(), p).map(|r| r.1)
                }
                Check::DOmega => d_two_form_residual(&omega, p, scheme),
                Check::NablaJ => {
                    nabla_j_residual(space.metric(), space.complex_structure(), p, scheme)
                }
                Check::Killing => killing_residual(space, p, scheme),
                Check::CurvatureRelation => curvature_relation_at(space, p, scheme),
                Check::ObataResidual => obata_residual(space, p, scheme),
                _ => unreachable!(),
            };
            r.map_err(|e| e.to_string())
        };
        let v = match v {
            Ok(x) if !x.is_finite() => Err(format!("non-finite value {x}")),
            other => other,
        };
        values.push((c, v));
    }
    PointOutcome {
        values,
        skipped,
        isotropic,
    }
}

/// Runs every applicable check at `plan.samples` seeded points. Points are
/// generated sequentially and evaluated in parallel; the fold over them is
/// in index order, so the verdict does not depend on the worker count.
pub fn verify_scenario(
    space: &ModelSpace,
    plan: &VerifyPlan,
    scheme: &DiffScheme,
) -> Result<ScenarioVerdict> {
    if plan.samples == 0 {
        return Err(GeomError::NotApplicable {
            space: space.name().to_string(),
            reason: "sample count must be at least 1".into(),
        });
    }
    let points = space.sample_points(plan.samples, plan.seed)?;
    verify_points(space, &points, plan, scheme)
}

/// [`verify_scenario`] on given points.
pub fn verify_points(
    space: &ModelSpace,
    points: &[Point],
    plan: &VerifyPlan,
    scheme: &DiffScheme,
) -> Result<ScenarioVerdict> {
    let checks: Vec<Check> = plan
        .checks
        .clone()
        .unwrap_or_else(|| space.default_checks().to_vec());
    let tolerances = space.tolerances().merged(&plan.tolerances);
    let outcomes: Vec<PointOutcome> = points
        .par_iter()
        .map(|p| evaluate_point(space, p, &checks, scheme))
        .collect();

    let mut summaries: BTreeMap<Check, CheckSummary> = checks
        .iter()
        .map(|&c| {
            (
                c,
                CheckSummary {
                    worst: 0.0,
                    tolerance: tolerances.get(c),
                    pass: true,
                    worst_point_index: None,
                    evaluated: 0,
                    errors: 0,
                },
            )
        })
        .collect();
    let mut failures = Vec::new();
    let mut skipped = 0;
    let mut isotropic = true;
    let mut saw_closed_forms = false;
    for (idx, (p, out)) in points.iter().zip(outcomes).enumerate() {
        if out.skipped {
            skipped += 1;
        }
        if let Some(iso) = out.isotropic {
            saw_closed_forms = true;
            isotropic &= iso;
        }
        for (c, v) in out.values {
            let s = summaries.get_mut(&c).expect("summary per check");
            match v {
                Ok(x) => {
                    s.evaluated += 1;
                    if s.worst_point_index.is_none() || x > s.worst {
                        s.worst = x;
                        s.worst_point_index = Some(idx);
                    }
                    if !(x <= s.tolerance) {
                        s.pass = false;
                        failures.push(Failure {
                            check: c,
                            point_index: idx,
                            point: p.to_vec(),
                            value: Some(x),
                            message: format!("{c} = {x:e} exceeds {:e}", s.tolerance),
                        });
                    }
                }
                Err(msg) => {
                    s.errors += 1;
                    s.pass = false;
                    failures.push(Failure {
                        check: c,
                        point_index: idx,
                        point: p.to_vec(),
                        value: None,
                        message: msg,
                    });
                }
            }
        }
    }
    failures.sort_by(|a, b| {
        a.point_index
            .cmp(&b.point_index)
            .then(a.check.cmp(&b.check))
    });
    let pass = !points.is_empty() && summaries.values().all(|s| s.pass);
    Ok(ScenarioVerdict {
        space: space.name().to_string(),
        points_sampled: points.len(),
        points_skipped: skipped,
        isotropic: saw_closed_forms && isotropic,
        checks: summaries,
        failures,
        pass,
    })
}
