//! Built-in scenarios and construction of their model spaces.

use crate::error::{GeomError, Result};
use crate::model::{
    calabi_line_bundle_chart, dwp_punctured_space, flat_calabi_product, flat_cn, obata_sphere,
    CalabiOptions, DwpOptions, ModelSpace, CALIBRATED_CHERN_SIGN,
};
use crate::profile::{
    calabi_function, sigma_function, warp_function, CalabiProfile, RadialFn, WarpProfile,
};
use crate::scenario::config::Parameters;

/// Which constructor a scenario goes through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Flat,
    Warped,
    CalabiFlat,
    Calabi,
    Sphere,
}

impl Family {
    fn accepts(self) -> &'static [&'static str] {
        match self {
            Family::Flat => &["n", "r_min", "r_max"],
            Family::Warped => &["n", "rho", "sigma", "t_min", "t_max", "fd_profiles"],
            Family::CalabiFlat => &["n", "h2", "r_min", "r_max", "fd_profiles"],
            Family::Calabi => &[
                "k",
                "l",
                "h1",
                "h2",
                "r_min",
                "r_max",
                "w_max",
                "h1_perturb",
                "chern_sign",
                "fd_profiles",
            ],
            Family::Sphere => &["n"],
        }
    }

    fn n_range(self) -> (usize, usize) {
        match self {
            Family::Flat | Family::Warped | Family::CalabiFlat => (1, 3),
            Family::Calabi => (2, 2),
            Family::Sphere => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioEntry {
    pub name: &'static str,
    pub summary: &'static str,
    pub family: Family,
    /// Whether a correct implementation is expected to fail this scenario.
    pub negative_control: bool,
    defaults: fn() -> Parameters,
}

impl ScenarioEntry {
    pub fn defaults(&self) -> Parameters {
        (self.defaults)()
    }

    pub fn accepts(&self, key: &str) -> bool {
        self.family.accepts().contains(&key)
    }

    pub fn n_range(&self) -> (usize, usize) {
        self.family.n_range()
    }
}

fn flat_defaults() -> Parameters {
    Parameters {
        n: Some(2),
        r_min: Some(0.1),
        r_max: Some(2.0),
        ..Parameters::default()
    }
}

fn warped(rho: &str, sigma: &str) -> Parameters {
    let opts = DwpOptions::default();
    Parameters {
        n: Some(2),
        rho: Some(rho.into()),
        sigma: Some(sigma.into()),
        t_min: Some(opts.t_min),
        t_max: Some(opts.t_max),
        fd_profiles: Some(false),
        ..Parameters::default()
    }
}

fn calabi(h1: &str, h2: &str, k: i32, perturb: f64) -> Parameters {
    let opts = CalabiOptions::default();
    Parameters {
        k: Some(k),
        h1: Some(h1.into()),
        h2: Some(h2.into()),
        r_min: Some(opts.r_min),
        r_max: Some(2.0),
        w_max: Some(opts.w_max),
        h1_perturb: Some(perturb),
        chern_sign: Some(CALIBRATED_CHERN_SIGN),
        fd_profiles: Some(false),
        ..Parameters::default()
    }
}

/// The sphere is fixed: real dimension 2.
fn sphere_defaults() -> Parameters {
    Parameters {
        n: Some(1),
        ..Parameters::default()
    }
}

pub const SCENARIOS: [ScenarioEntry; 9] = [
    ScenarioEntry {
        name: "flat_cn",
        summary: "flat C^n with u = |z|^2",
        family: Family::Flat,
        negative_control: false,
        defaults: flat_defaults,
    },
    ScenarioEntry {
        name: "dwp_linear",
        summary: "doubly-warped product with rho = t (flat cone)",
        family: Family::Warped,
        negative_control: false,
        defaults: || warped("rho_linear", "sigma_derivative"),
    },
    ScenarioEntry {
        name: "dwp_sinh",
        summary: "doubly-warped product with rho = sinh t, sigma = rho'",
        family: Family::Warped,
        negative_control: false,
        defaults: || warped("rho_sinh", "sigma_derivative"),
    },
    ScenarioEntry {
        name: "calabi_flat",
        summary: "Calabi fiber h2 = 1 over a flat base (mu = 0)",
        family: Family::CalabiFlat,
        negative_control: false,
        defaults: || Parameters {
            n: Some(2),
            h2: Some("h2_one".into()),
            r_min: Some(0.1),
            r_max: Some(2.0),
            fd_profiles: Some(false),
            ..Parameters::default()
        },
    },
    ScenarioEntry {
        name: "calabi_h2_one",
        summary: "Calabi chart, h2 = 1, h1 = 1 + r^2, degree 2",
        family: Family::Calabi,
        negative_control: false,
        defaults: || calabi("h1_one_plus_r2", "h2_one", 2, 1.0),
    },
    ScenarioEntry {
        name: "calabi_cauchy",
        summary: "Calabi chart, h2 = 1/(1+r^2)^2, h1 = 2 - 1/(1+r^2), degree 2",
        family: Family::Calabi,
        negative_control: false,
        defaults: || calabi("h1_cauchy", "h2_cauchy", 2, 1.0),
    },
    ScenarioEntry {
        name: "obata_sphere",
        summary: "round S^2 in stereographic coordinates, u = height",
        family: Family::Sphere,
        negative_control: false,
        defaults: sphere_defaults,
    },
    ScenarioEntry {
        name: "neg_sigma_mismatch",
        summary: "negative control: rho = cosh t with sigma = 1, so J is not parallel",
        family: Family::Warped,
        negative_control: true,
        defaults: || warped("rho_cosh", "sigma_one"),
    },
    ScenarioEntry {
        name: "neg_broken_ode",
        summary: "negative control: h1 - h1(0) scaled by 1.1, breaking h1' + l r h2 = 0",
        family: Family::Calabi,
        negative_control: true,
        defaults: || calabi("h1_one_plus_r2", "h2_one", 2, 1.1),
    },
];

pub fn lookup(name: &str) -> Option<&'static ScenarioEntry> {
    SCENARIOS.iter().find(|e| e.name == name)
}

fn missing(space: &str, key: &str) -> GeomError {
    GeomError::NotApplicable {
        space: space.to_string(),
        reason: format!("parameter `{key}` has no value"),
    }
}

fn unknown_profile(name: &str) -> GeomError {
    GeomError::NotApplicable {
        space: name.to_string(),
        reason: "no profile with this name".into(),
    }
}

fn maybe_values_only(f: RadialFn, fd: bool) -> RadialFn {
    if fd {
        f.values_only()
    } else {
        f
    }
}

/// `h₁(0) + a (h₁ − h₁(0))`, derivatives scaled by `a`.
fn perturbed(h1: RadialFn, a: f64) -> RadialFn {
    let h0 = h1.raw(0.0, 0);
    let name = format!("{}*{a}", h1.name());
    let orders = h1.analytic_orders();
    let domain = h1.domain();
    RadialFn::new(name, domain, orders, move |r, k| {
        let v = h1.raw(r, k);
        if k == 0 {
            h0 + a * (v - h0)
        } else {
            a * v
        }
    })
}

/// Builds the space for a registry scenario with resolved parameters.
pub fn build_space(entry: &ScenarioEntry, params: &Parameters) -> Result<ModelSpace> {
    let p = entry.defaults().overlaid(params);
    let name = entry.name;
    let fd = p.fd_profiles.unwrap_or(false);
    let n = p.n.ok_or_else(|| missing(name, "n"));
    let real = |v: Option<f64>, key: &str| v.ok_or_else(|| missing(name, key));
    match entry.family {
        Family::Flat => flat_cn(n?, real(p.r_min, "r_min")?, real(p.r_max, "r_max")?),
        Family::Sphere => obata_sphere(2 * n?),
        Family::Warped => {
            let rho_name = p.rho.as_deref().ok_or_else(|| missing(name, "rho"))?;
            let sigma_name = p.sigma.as_deref().ok_or_else(|| missing(name, "sigma"))?;
            let rho = maybe_values_only(
                warp_function(rho_name).ok_or_else(|| unknown_profile(rho_name))?,
                fd,
            );
            let profile =
                match sigma_function(sigma_name).ok_or_else(|| unknown_profile(sigma_name))? {
                    None => WarpProfile::new(rho),
                    Some(sigma) => WarpProfile::with_sigma(rho, maybe_values_only(sigma, fd)),
                };
            let opts = DwpOptions {
                t_min: real(p.t_min, "t_min")?,
                t_max: real(p.t_max, "t_max")?,
            };
            dwp_punctured_space(profile, n?, opts)
        }
        Family::CalabiFlat => {
            let h2_name = p.h2.as_deref().ok_or_else(|| missing(name, "h2"))?;
            let h2 = maybe_values_only(
                calabi_function(h2_name).ok_or_else(|| unknown_profile(h2_name))?,
                fd,
            );
            flat_calabi_product(h2, n?, real(p.r_min, "r_min")?, real(p.r_max, "r_max")?)
        }
        Family::Calabi => {
            let k = p.k.ok_or_else(|| missing(name, "k"))?;
            let sign = p.chern_sign.unwrap_or(CALIBRATED_CHERN_SIGN);
            let l = p.l.unwrap_or(sign * k as f64);
            let h1_name = p.h1.as_deref().ok_or_else(|| missing(name, "h1"))?;
            let h2_name = p.h2.as_deref().ok_or_else(|| missing(name, "h2"))?;
            let h1 = maybe_values_only(
                calabi_function(h1_name).ok_or_else(|| unknown_profile(h1_name))?,
                fd,
            );
            let h2 = maybe_values_only(
                calabi_function(h2_name).ok_or_else(|| unknown_profile(h2_name))?,
                fd,
            );
            let r_max = real(p.r_max, "r_max")?;
            let a = p.h1_perturb.unwrap_or(1.0);
            let opts = CalabiOptions {
                r_min: real(p.r_min, "r_min")?,
                w_max: real(p.w_max, "w_max")?,
            };
            // The chart checks the curvature convention before anything else,
            // so a sign error surfaces as such rather than as a broken ODE.
            if a == 1.0 {
                let space = calabi_line_bundle_chart(
                    CalabiProfile::new_unchecked(h1.clone(), h2.clone(), l, r_max)?,
                    k,
                    opts,
                )?;
                CalabiProfile::new(h1, h2, l, r_max)?;
                return Ok(space);
            }
            // Perturbed metric judged against the closed forms of the nominal profile.
            let nominal = calabi_line_bundle_chart(
                CalabiProfile::new_unchecked(h1.clone(), h2.clone(), l, r_max)?,
                k,
                opts,
            )?;
            let broken = calabi_line_bundle_chart(
                CalabiProfile::new_unchecked(perturbed(h1, a), h2, l, r_max)?,
                k,
                opts,
            )?;
            Ok(match nominal.closed_forms() {
                Some(cf) => broken.with_closed_forms(cf.clone()),
                None => broken,
            })
        }
    }
}
