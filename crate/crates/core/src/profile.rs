//! One-variable profile functions: warp factors `ρ`, `σ` and the Calabi
//! coefficients `h₁`, `h₂`, with a small named registry.

use std::fmt;
use std::sync::Arc;

use crate::diff::high_order_derivative;
use crate::error::{GeomError, Result};
use crate::quadrature::{adaptive_simpson, DEFAULT_ABS_TOL};

/// Highest derivative order a profile exposes.
pub const MAX_ORDER: usize = 4;

/// Step used when a derivative has to be differenced.
const FALLBACK_STEP: f64 = 1e-3;

type DerivFn = dyn Fn(f64, usize) -> f64 + Send + Sync;

/// A smooth function of one variable together with derivatives up to order 4.
/// Orders above `analytic_orders` are differenced from values.
#[derive(Clone)]
pub struct RadialFn {
    name: String,
    eval: Arc<DerivFn>,
    analytic_orders: usize,
    domain: (f64, f64),
}

impl fmt::Debug for RadialFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialFn")
            .field("name", &self.name)
            .field("analytic_orders", &self.analytic_orders)
            .field("domain", &self.domain)
            .finish()
    }
}

impl RadialFn {
    /// `eval(t, k)` must return the `k`-th derivative for `k <= analytic_orders`.
    pub fn new(
        name: impl Into<String>,
        domain: (f64, f64),
        analytic_orders: usize,
        eval: impl Fn(f64, usize) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            eval: Arc::new(eval),
            analytic_orders: analytic_orders.min(MAX_ORDER),
            domain,
        }
    }

    /// Values only; every derivative is differenced.
    pub fn from_values(
        name: impl Into<String>,
        domain: (f64, f64),
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, domain, 0, move |t, _| f(t))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn analytic_orders(&self) -> usize {
        self.analytic_orders
    }

    /// Drops analytic derivatives.
    pub fn values_only(&self) -> Self {
        Self {
            name: self.name.clone(),
            eval: self.eval.clone(),
            analytic_orders: 0,
            domain: self.domain,
        }
    }

    pub fn in_domain(&self, t: f64) -> bool {
        t > self.domain.0 && t < self.domain.1
    }

    /// `f^{(order)}(t)` without a domain check.
    pub fn raw(&self, t: f64, order: usize) -> f64 {
        if order <= self.analytic_orders {
            (self.eval)(t, order)
        } else {
            let f = self.eval.clone();
            high_order_derivative(move |x| f(x, 0), t, order, FALLBACK_STEP)
        }
    }

    /// `f^{(order)}(t)`, rejecting points outside the open domain.
    pub fn derivative(&self, t: f64, order: usize) -> Result<f64> {
        if !self.in_domain(t) || order > MAX_ORDER {
            return Err(GeomError::ProfileDomain {
                profile: self.name.clone(),
                at: t,
            });
        }
        Ok(self.raw(t, order))
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        self.derivative(t, 0)
    }
}

const WIDE: (f64, f64) = (f64::NEG_INFINITY, f64::INFINITY);

/// Warp factors `ρ` by registry name.
pub fn warp_function(name: &str) -> Option<RadialFn> {
    let f = match name {
        "rho_linear" => RadialFn::new(name, (0.0, f64::INFINITY), 4, |t, k| match k {
            0 => t,
            1 => 1.0,
            _ => 0.0,
        }),
        "rho_sinh" => RadialFn::new(name, (0.0, f64::INFINITY), 4, |t, k| {
            if k % 2 == 0 {
                t.sinh()
            } else {
                t.cosh()
            }
        }),
        "rho_sin" => RadialFn::new(name, (0.0, std::f64::consts::FRAC_PI_2), 4, |t, k| {
            match k % 4 {
                0 => t.sin(),
                1 => t.cos(),
                2 => -t.sin(),
                _ => -t.cos(),
            }
        }),
        "rho_cosh" => RadialFn::new(name, (0.0, f64::INFINITY), 4, |t, k| {
            if k % 2 == 0 {
                t.cosh()
            } else {
                t.sinh()
            }
        }),
        // not odd; used to exercise the oddness stencil
        "rho_quadratic" => RadialFn::new(name, (0.0, f64::INFINITY), 4, |t, k| match k {
            0 => t + t * t,
            1 => 1.0 + 2.0 * t,
            2 => 2.0,
            _ => 0.0,
        }),
        _ => return None,
    };
    Some(f)
}

/// Second warp factors `σ` by registry name; `sigma_derivative` means `σ = ρ′`.
pub fn sigma_function(name: &str) -> Option<Option<RadialFn>> {
    match name {
        "sigma_derivative" => Some(None),
        "sigma_one" => Some(Some(RadialFn::new(name, WIDE, 4, |_, k| {
            if k == 0 {
                1.0
            } else {
                0.0
            }
        }))),
        _ => None,
    }
}

pub const WARP_NAMES: [&str; 5] = [
    "rho_linear",
    "rho_sinh",
    "rho_sin",
    "rho_cosh",
    "rho_quadratic",
];
pub const SIGMA_NAMES: [&str; 2] = ["sigma_derivative", "sigma_one"];

/// Doubly-warped profile: `ρ` and the second factor `σ` (by default `ρ′`).
#[derive(Debug, Clone)]
pub struct WarpProfile {
    rho: RadialFn,
    sigma: Option<RadialFn>,
}

impl WarpProfile {
    /// The Kähler case `σ = ρ′`.
    pub fn new(rho: RadialFn) -> Self {
        Self { rho, sigma: None }
    }

    pub fn with_sigma(rho: RadialFn, sigma: RadialFn) -> Self {
        Self {
            rho,
            sigma: Some(sigma),
        }
    }

    pub fn from_names(rho: &str, sigma: &str) -> Option<Self> {
        let rho = warp_function(rho)?;
        let sigma = sigma_function(sigma)?;
        Some(Self { rho, sigma })
    }

    pub fn rho(&self) -> &RadialFn {
        &self.rho
    }

    pub fn sigma_fn(&self) -> Option<&RadialFn> {
        self.sigma.as_ref()
    }

    /// Whether `σ = ρ′` holds by construction.
    pub fn is_kahler(&self) -> bool {
        self.sigma.is_none()
    }

    pub fn name(&self) -> String {
        match &self.sigma {
            None => self.rho.name().to_string(),
            Some(s) => format!("{}/{}", self.rho.name(), s.name()),
        }
    }

    /// `σ^{(order)}(t)`
    pub fn sigma(&self, t: f64, order: usize) -> Result<f64> {
        match &self.sigma {
            None => {
                if order + 1 > MAX_ORDER {
                    return Err(GeomError::ProfileDomain {
                        profile: self.rho.name().to_string(),
                        at: t,
                    });
                }
                self.rho.derivative(t, order + 1)
            }
            Some(s) => s.derivative(t, order),
        }
    }

    /// Differenced profiles widen tolerances.
    pub fn differenced(&self) -> bool {
        self.rho.analytic_orders() < MAX_ORDER
            || self.sigma.as_ref().is_some_and(|s| s.analytic_orders() < 2)
    }

    pub fn values_only(&self) -> Self {
        Self {
            rho: self.rho.values_only(),
            sigma: self.sigma.as_ref().map(|s| s.values_only()),
        }
    }
}

/// Step for the oddness stencils.
pub const ODDNESS_STEP: f64 = 1e-2;

/// `[|ρ(0)|, |ρ″(0)|, |ρ⁗(0)|]` from centered 8th-order stencils on values of
/// `ρ` around zero. An odd `ρ` gives zeros.
pub fn oddness_check(profile: &WarpProfile) -> Result<[f64; 3]> {
    let rho = profile.rho.clone();
    let f = move |t: f64| rho.raw(t, 0);
    let out = [
        f(0.0).abs(),
        high_order_derivative(&f, 0.0, 2, ODDNESS_STEP).abs(),
        high_order_derivative(&f, 0.0, 4, ODDNESS_STEP).abs(),
    ];
    if out.iter().any(|v| !v.is_finite()) {
        return Err(GeomError::NonFiniteSample { point: vec![0.0] });
    }
    Ok(out)
}

/// Calabi coefficient functions by registry name.
pub fn calabi_function(name: &str) -> Option<RadialFn> {
    let f = match name {
        "h1_one" | "h2_one" => RadialFn::new(name, WIDE, 4, |_, k| if k == 0 { 1.0 } else { 0.0 }),
        "h1_one_plus_r2" => RadialFn::new(name, WIDE, 4, |r, k| match k {
            0 => 1.0 + r * r,
            1 => 2.0 * r,
            2 => 2.0,
            _ => 0.0,
        }),
        // 1 + r²/(1+r²) = 2 − 1/(1+r²)
        "h1_cauchy" => RadialFn::new(name, WIDE, 2, |r, k| {
            let q = 1.0 + r * r;
            match k {
                0 => 2.0 - 1.0 / q,
                1 => 2.0 * r / (q * q),
                _ => 2.0 / (q * q) - 8.0 * r * r / (q * q * q),
            }
        }),
        "h2_cauchy" => RadialFn::new(name, WIDE, 2, |r, k| {
            let q = 1.0 + r * r;
            match k {
                0 => 1.0 / (q * q),
                1 => -4.0 * r / (q * q * q),
                _ => -4.0 / (q * q * q) + 24.0 * r * r / (q * q * q * q),
            }
        }),
        "h2_exp" => RadialFn::new(name, WIDE, 4, |r, k| {
            if k % 2 == 0 {
                (-r).exp()
            } else {
                -(-r).exp()
            }
        }),
        _ => return None,
    };
    Some(f)
}

pub const H1_NAMES: [&str; 3] = ["h1_one", "h1_one_plus_r2", "h1_cauchy"];
pub const H2_NAMES: [&str; 3] = ["h2_one", "h2_cauchy", "h2_exp"];

/// Tolerance for `|h₁′ + l r h₂|` on the validation grid.
pub const ODE_TOL: f64 = 1e-10;
const GRID: usize = 100;

/// Calabi data `(h₁, h₂, l)` on `[0, r_max]`.
#[derive(Debug, Clone)]
pub struct CalabiProfile {
    h1: RadialFn,
    h2: RadialFn,
    l: f64,
    r_max: f64,
}

impl CalabiProfile {
    /// Validates positivity and `h₁′ + l r h₂ = 0` on a 100-point grid.
    pub fn new(h1: RadialFn, h2: RadialFn, l: f64, r_max: f64) -> Result<Self> {
        let p = Self::new_unchecked(h1, h2, l, r_max)?;
        for i in 0..GRID {
            let r = r_max * i as f64 / (GRID - 1) as f64;
            let (a, b) = (p.h1.raw(r, 0), p.h2.raw(r, 0));
            if !(a > 0.0 && b > 0.0) {
                return Err(GeomError::ProfileInvariant {
                    profile: p.name(),
                    reason: format!("h1 = {a}, h2 = {b} at r = {r}"),
                });
            }
            let ode = p.ode_residual(r);
            if !(ode <= ODE_TOL) {
                return Err(GeomError::ProfileInvariant {
                    profile: p.name(),
                    reason: format!("|h1' + l r h2| = {ode:e} at r = {r}"),
                });
            }
        }
        Ok(p)
    }

    /// Skips the invariant checks; for deliberately broken controls.
    pub fn new_unchecked(h1: RadialFn, h2: RadialFn, l: f64, r_max: f64) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite() && l.is_finite()) {
            return Err(GeomError::ProfileInvariant {
                profile: format!("{}/{}", h1.name(), h2.name()),
                reason: format!("need finite l and r_max > 0, got l = {l}, r_max = {r_max}"),
            });
        }
        Ok(Self { h1, h2, l, r_max })
    }

    pub fn name(&self) -> String {
        format!("{}/{}", self.h1.name(), self.h2.name())
    }

    pub fn h1(&self) -> &RadialFn {
        &self.h1
    }

    pub fn h2(&self) -> &RadialFn {
        &self.h2
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn differenced(&self) -> bool {
        self.h1.analytic_orders() < 1 || self.h2.analytic_orders() < 1
    }

    /// `|h₁′(r) + l r h₂(r)|`
    pub fn ode_residual(&self, r: f64) -> f64 {
        (self.h1.raw(r, 1) + self.l * r * self.h2.raw(r, 0)).abs()
    }

    fn check_r(&self, r: f64, allow_zero: bool) -> Result<()> {
        let ok = if allow_zero { r >= 0.0 } else { r > 0.0 };
        if !(ok && r <= self.r_max) {
            return Err(GeomError::ProfileDomain {
                profile: self.name(),
                at: r,
            });
        }
        Ok(())
    }

    /// `u(r) = ∫_0^r s h₂(s) ds`
    pub fn u(&self, r: f64) -> Result<f64> {
        self.check_r(r, true)?;
        let h2 = self.h2.clone();
        adaptive_simpson(move |s| s * h2.raw(s, 0), 0.0, r, DEFAULT_ABS_TOL)
    }

    /// `u′(r) = r h₂(r)`
    pub fn u_prime(&self, r: f64) -> f64 {
        r * self.h2.raw(r, 0)
    }

    /// `u″(r) = h₂(r) + r h₂′(r)`
    pub fn u_second(&self, r: f64) -> f64 {
        self.h2.raw(r, 0) + r * self.h2.raw(r, 1)
    }

    /// `(λ, μ)` with `λ = 1 + r h₂′/(2h₂)` and `μ = r h₁′/(2h₁)`.
    pub fn lambda_mu(&self, r: f64) -> Result<(f64, f64)> {
        self.check_r(r, false)?;
        let lambda = 1.0 + r * self.h2.raw(r, 1) / (2.0 * self.h2.raw(r, 0));
        let mu = r * self.h1.raw(r, 1) / (2.0 * self.h1.raw(r, 0));
        Ok((lambda, mu))
    }

    /// `μ` rewritten with the profile ODE: `−l r² h₂ / (2h₁)`.
    pub fn mu_from_ode(&self, r: f64) -> Result<f64> {
        self.check_r(r, false)?;
        Ok(-self.l * r * r * self.h2.raw(r, 0) / (2.0 * self.h1.raw(r, 0)))
    }
}

/// `u_from_profile`: the potential `∫_0^r s h₂(s) ds`.
pub fn u_from_profile(profile: &CalabiProfile, r: f64) -> Result<f64> {
    profile.u(r)
}

/// Closed-form `(λ, μ)` of a Calabi profile at `r`.
pub fn lambda_mu_closed(profile: &CalabiProfile, r: f64) -> Result<(f64, f64)> {
    profile.lambda_mu(r)
}
