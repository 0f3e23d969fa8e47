//! Named instances.

use anyhow::Result;
use retarded_bounds::corollaries::{log_case_bound, sun_thm21_bound, sun_thm22_bound, LogCaseParams, PowerCaseParams};
use retarded_bounds::problem::{Kernel, KernelRole, ProblemSource, Role, ScalarFn};
use retarded_bounds::{ProblemInstance, TheoremForm};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Gronwall,
    Blowup,
    Lipovan,
    Sun21,
    Sun22,
    Log,
}

/// A closed-form bound that the general one must reproduce.
#[derive(Debug, Clone)]
pub enum Corollary {
    Power {
        params: PowerCaseParams,
        form: TheoremForm,
        f: Kernel,
        g: Kernel,
        w: ScalarFn,
        alpha: ScalarFn,
    },
    Log {
        params: LogCaseParams,
        f: Kernel,
        w: ScalarFn,
        alpha: ScalarFn,
    },
}

impl Corollary {
    pub fn bound(&self, t: f64) -> Result<f64> {
        Ok(match self {
            Corollary::Power {
                params,
                form: TheoremForm::One,
                f,
                g,
                w,
                alpha,
            } => sun_thm21_bound(params, f, g, w, alpha, t)?,
            Corollary::Power {
                params,
                form: TheoremForm::Two,
                f,
                g,
                w,
                alpha,
            } => sun_thm22_bound(params, f, g, w, alpha, t)?,
            Corollary::Log { params, f, w, alpha } => log_case_bound(params, f, w, alpha, t)?,
        })
    }
}

pub struct Built {
    pub instance: ProblemInstance,
    pub corollary: Option<Corollary>,
}

struct PowerSpec {
    m: f64,
    n: f64,
    c: f64,
    w: &'static str,
    f: &'static str,
    g: &'static str,
    alpha: &'static str,
    form: TheoremForm,
}

impl Preset {
    pub const NAMES: [&'static str; 6] = ["gronwall", "blowup", "lipovan", "sun21", "sun22", "log"];

    pub fn parse(name: &str) -> Option<Preset> {
        Some(match name {
            "gronwall" => Preset::Gronwall,
            "blowup" => Preset::Blowup,
            "lipovan" => Preset::Lipovan,
            "sun21" => Preset::Sun21,
            "sun22" => Preset::Sun22,
            "log" => Preset::Log,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Gronwall => "gronwall",
            Preset::Blowup => "blowup",
            Preset::Lipovan => "lipovan",
            Preset::Sun21 => "sun21",
            Preset::Sun22 => "sun22",
            Preset::Log => "log",
        }
    }

    fn default_t_max(self) -> f64 {
        match self {
            Preset::Blowup => 1.5,
            _ => 1.0,
        }
    }

    pub fn build(self, t_max: Option<f64>) -> Result<Built> {
        let t_max = t_max.unwrap_or(self.default_t_max());
        match self {
            Preset::Gronwall => gronwall("1", t_max),
            Preset::Blowup => gronwall("x", t_max),
            Preset::Lipovan => power(
                PowerSpec {
                    m: 2.0,
                    n: 1.0,
                    c: 1.0,
                    w: "1",
                    f: "1",
                    g: "0",
                    alpha: "t/2",
                    form: TheoremForm::One,
                },
                t_max,
            ),
            Preset::Sun21 => power(
                PowerSpec {
                    m: 3.0,
                    n: 1.0,
                    c: 1.0,
                    w: "1 + x",
                    f: "1",
                    g: "s",
                    alpha: "t/2",
                    form: TheoremForm::One,
                },
                t_max,
            ),
            Preset::Sun22 => power(
                PowerSpec {
                    m: 3.0,
                    n: 1.0,
                    c: 1.0,
                    w: "1 + x",
                    f: "1",
                    g: "0.5",
                    alpha: "t*t/(1 + t)",
                    form: TheoremForm::Two,
                },
                t_max,
            ),
            Preset::Log => {
                let params = LogCaseParams::new(1.0, 2.0, 0.5)?;
                let f = Kernel::parse(KernelRole::F, "1")?;
                let w = ScalarFn::parse(Role::W, "1 + x")?;
                let alpha = ScalarFn::parse(Role::Alpha, "t")?;
                let instance = params.induced_instance(&f, &w, &alpha, t_max)?;
                Ok(Built {
                    instance,
                    corollary: Some(Corollary::Log { params, f, w, alpha }),
                })
            }
        }
    }
}

fn gronwall(w: &str, t_max: f64) -> Result<Built> {
    let instance = ProblemSource {
        phi: "x".into(),
        c: "1".into(),
        eta: "x".into(),
        w: w.into(),
        alpha: "t".into(),
        f: "1".into(),
        g: "0".into(),
        x0: None,
        x1: None,
        form: TheoremForm::One,
        t_max,
    }
    .build()?;
    Ok(Built {
        instance,
        corollary: None,
    })
}

fn power(spec: PowerSpec, t_max: f64) -> Result<Built> {
    let params = PowerCaseParams::new(spec.m, spec.n, spec.c)?;
    let f = Kernel::parse(KernelRole::F, spec.f)?;
    let g = Kernel::parse(KernelRole::G, spec.g)?;
    let w = ScalarFn::parse(Role::W, spec.w)?;
    let alpha = ScalarFn::parse(Role::Alpha, spec.alpha)?;
    let instance = params.induced_instance(&f, &g, &w, &alpha, spec.form, t_max)?;
    Ok(Built {
        instance,
        corollary: Some(Corollary::Power {
            params,
            form: spec.form,
            f,
            g,
            w,
            alpha,
        }),
    })
}
