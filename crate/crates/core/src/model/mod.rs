//! Explicit Kähler model spaces: a chart, its metric and complex structure, the
//! function `u` under study and whatever closed forms are known for it.

use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;

use crate::check::{Check, Tolerances};
use crate::error::{GeomError, Result};
use crate::field::{ComplexStructureField, MetricField, Point, ScalarField};
use crate::kahler::acs_residuals;
use crate::rng::SplitMix64;

mod calabi;
mod dwp;
mod flat;
mod sphere;

pub use calabi::{
    calabi_line_bundle_chart, flat_calabi_product, fubini_study_form, CalabiOptions,
    CALIBRATED_CHERN_SIGN,
};
pub use dwp::{
    curvature_relation_residual, dwp_punctured_space, horizontal_frame, DwpOptions, RadialChart,
    WarpData,
};
pub use flat::flat_cn;
pub use sphere::obata_sphere;

pub type PointFn = Arc<dyn Fn(&Point) -> Result<f64> + Send + Sync>;
type Predicate = Arc<dyn Fn(&Point) -> bool + Send + Sync>;

/// Residual bound for the construction-time compatibility check of `(g, J)`.
pub const CONSTRUCTION_ACS_TOL: f64 = 1e-10;
const CONSTRUCTION_POINTS: usize = 20;
const CONSTRUCTION_SEED: u64 = 0x0B_A7A;

/// Known eigenvalues and potential, as functions on the chart.
#[derive(Clone)]
pub struct ClosedForms {
    /// The profile variable the closed forms depend on (`t` or `r`).
    pub radius: PointFn,
    pub lambda: PointFn,
    pub mu: PointFn,
    pub u: PointFn,
}

/// Axis-aligned box plus membership predicate from which points are drawn.
#[derive(Clone)]
pub struct SampleRegion {
    lo: Vec<f64>,
    hi: Vec<f64>,
    contains: Predicate,
}

impl SampleRegion {
    pub fn new(
        lo: Vec<f64>,
        hi: Vec<f64>,
        contains: impl Fn(&Point) -> bool + Send + Sync + 'static,
    ) -> Self {
        assert_eq!(lo.len(), hi.len());
        Self {
            lo,
            hi,
            contains: Arc::new(contains),
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (self.contains)(p)
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lo, &self.hi)
    }
}

#[derive(Clone)]
pub struct ModelSpace {
    name: String,
    metric: MetricField,
    j: ComplexStructureField,
    u: ScalarField,
    admissible: Predicate,
    region: SampleRegion,
    closed_forms: Option<ClosedForms>,
    exclusions: Vec<(Vec<f64>, f64)>,
    identity_offset: Option<f64>,
    warp: Option<WarpData>,
    default_checks: Vec<Check>,
    tolerances: Tolerances,
    differenced: bool,
}

impl fmt::Debug for ModelSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModelSpace")
            .field("name", &self.name)
            .field("dim", &self.dim())
            .field("closed_forms", &self.closed_forms.is_some())
            .field("identity_offset", &self.identity_offset)
            .finish()
    }
}

impl ModelSpace {
    pub fn new(
        name: impl Into<String>,
        metric: MetricField,
        j: ComplexStructureField,
        u: ScalarField,
        admissible: impl Fn(&Point) -> bool + Send + Sync + 'static,
        region: SampleRegion,
    ) -> Result<Self> {
        if metric.dim() != j.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: metric.dim(),
                found: j.dim(),
            });
        }
        if j.dim() % 2 != 0 {
            return Err(GeomError::OddDimension { dim: j.dim() });
        }
        if region.lo.len() != metric.dim() {
            return Err(GeomError::DimensionMismatch {
                expected: metric.dim(),
                found: region.lo.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            metric,
            j,
            u,
            admissible: Arc::new(admissible),
            region,
            closed_forms: None,
            exclusions: Vec::new(),
            identity_offset: None,
            warp: None,
            default_checks: Vec::new(),
            tolerances: Tolerances::new(),
            differenced: false,
        })
    }

    pub fn with_closed_forms(mut self, cf: ClosedForms) -> Self {
        self.closed_forms = Some(cf);
        self
    }

    /// A puncture or zero section excluded from the chart.
    pub fn with_exclusion(mut self, center: Vec<f64>, radius: f64) -> Self {
        self.exclusions.push((center, radius));
        self
    }

    /// Marks `2(u + c)μ = |grad u|²` as expected, with shift `c`.
    pub fn with_identity_offset(mut self, c: f64) -> Self {
        self.identity_offset = Some(c);
        self
    }

    pub fn with_checks(mut self, checks: &[Check]) -> Self {
        self.default_checks = checks.to_vec();
        self
    }

    pub fn with_tolerances(mut self, t: Tolerances) -> Self {
        self.tolerances = t;
        self
    }

    pub fn with_differenced_profiles(mut self, yes: bool) -> Self {
        self.differenced = yes;
        self
    }

    /// Replaces `u` by `a u + b` with `a > 0`. Closed-form eigenvalues scale by
    /// `a` and the identity shift becomes `a c − b`.
    pub fn with_rescaled_potential(mut self, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite() && b.is_finite()) {
            return Err(GeomError::NotApplicable {
                space: self.name.clone(),
                reason: format!("rescaling needs a > 0 and finite b, got a = {a}, b = {b}"),
            });
        }
        self.u = self.u.affine(a, b);
        self.closed_forms = self.closed_forms.map(|cf| {
            let (lam, mu, u) = (cf.lambda, cf.mu, cf.u);
            ClosedForms {
                radius: cf.radius,
                lambda: Arc::new(move |p: &Point| Ok(a * lam(p)?)),
                mu: Arc::new(move |p: &Point| Ok(a * mu(p)?)),
                u: Arc::new(move |p: &Point| Ok(a * u(p)? + b)),
            }
        });
        self.identity_offset = self.identity_offset.map(|c| a * c - b);
        self.name = format!("{}*{a}{b:+}", self.name);
        Ok(self)
    }

    pub(crate) fn with_warp(mut self, w: WarpData) -> Self {
        self.warp = Some(w);
        self
    }

    /// Checks `(g, J)` compatibility at 20 seeded admissible points.
    pub fn validated(self) -> Result<Self> {
        let pts = self.sample_points(CONSTRUCTION_POINTS, CONSTRUCTION_SEED)?;
        for p in &pts {
            let (sq, orth) = acs_residuals(&self.j, &self.metric, p)?;
            let worst = sq.max(orth);
            if !(worst <= CONSTRUCTION_ACS_TOL) {
                return Err(GeomError::IncompatiblePair { residual: worst });
            }
        }
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn complex_structure(&self) -> &ComplexStructureField {
        &self.j
    }

    pub fn u(&self) -> &ScalarField {
        &self.u
    }

    pub fn closed_forms(&self) -> Option<&ClosedForms> {
        self.closed_forms.as_ref()
    }

    pub fn exclusions(&self) -> &[(Vec<f64>, f64)] {
        &self.exclusions
    }

    pub fn identity_offset(&self) -> Option<f64> {
        self.identity_offset
    }

    pub fn warp(&self) -> Option<&WarpData> {
        self.warp.as_ref()
    }

    /// Checks run when a scenario does not list its own.
    pub fn default_checks(&self) -> &[Check] {
        &self.default_checks
    }

    /// Space-specific tolerance defaults, widened tenfold for differenced profiles.
    pub fn tolerances(&self) -> Tolerances {
        if self.differenced {
            self.tolerances.clone().widened(10.0)
        } else {
            self.tolerances.clone()
        }
    }

    pub fn differenced_profiles(&self) -> bool {
        self.differenced
    }

    pub fn region(&self) -> &SampleRegion {
        &self.region
    }

    pub fn is_admissible(&self, p: &Point) -> bool {
        p.dim() == self.dim()
            && (self.admissible)(p)
            && self.exclusions.iter().all(|(c, r)| {
                p.coords()
                    .iter()
                    .zip(c)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
                    > *r
            })
    }

    pub fn require_admissible(&self, p: &Point) -> Result<()> {
        if self.is_admissible(p) {
            Ok(())
        } else {
            Err(GeomError::Inadmissible {
                space: self.name.clone(),
                point: p.to_vec(),
            })
        }
    }

    /// Rejection sampling of `count` admissible points from the region box,
    /// driven by SplitMix64 with one draw per coordinate in axis order.
    pub fn sample_points(&self, count: usize, seed: u64) -> Result<Vec<Point>> {
        let mut rng = SplitMix64::new(seed);
        let attempts_cap = 10_000 + 1_000 * count;
        let d = self.dim();
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0;
        while out.len() < count {
            if attempts >= attempts_cap {
                return Err(GeomError::SamplingExhausted {
                    space: self.name.clone(),
                    attempts,
                });
            }
            attempts += 1;
            let coords: Vec<f64> = (0..d)
                .map(|i| rng.uniform(self.region.lo[i], self.region.hi[i]))
                .collect();
            let p = Point::from_vector(DVector::from_vec(coords));
            if self.region.contains(&p) && self.is_admissible(&p) {
                out.push(p);
            }
        }
        Ok(out)
    }
}

/// Shared helper: `d`-dimensional Euclidean norm of a slice of a point.
pub(crate) fn block_norm(p: &Point, start: usize, len: usize) -> f64 {
    (start..start + len)
        .map(|i| p[i] * p[i])
        .sum::<f64>()
        .sqrt()
}
