//! Run configuration: a JSON file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use retarded_bounds::oracle::Family;
use retarded_bounds::problem::ProblemSource;
use retarded_bounds::TheoremForm;
use serde::Deserialize;

use crate::presets::Preset;

pub const DEFAULT_GRID: usize = 101;
pub const DEFAULT_REL_TOL: f64 = 1e-6;
pub const DEFAULT_ABS_TOL: f64 = 1e-8;
pub const DEFAULT_ORACLE_SPACING: f64 = 1.0 / 256.0;
pub const DEFAULT_ORACLE_ITER: usize = 200;
pub const DEFAULT_ORACLE_TOL: f64 = 1e-13;
pub const DEFAULT_TAU_FRACTION: f64 = 0.9;

/// The instance part of a config file.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub phi: String,
    pub c: String,
    pub eta: String,
    pub w: String,
    pub alpha: String,
    pub f: String,
    #[serde(default = "zero")]
    pub g: String,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    #[serde(default)]
    pub form: FormSpec,
    #[serde(default = "one")]
    pub t_max: f64,
}

fn zero() -> String {
    "0".into()
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum FormSpec {
    #[default]
    One,
    Two,
}

impl From<FormSpec> for TheoremForm {
    fn from(f: FormSpec) -> TheoremForm {
        match f {
            FormSpec::One => TheoremForm::One,
            FormSpec::Two => TheoremForm::Two,
        }
    }
}

impl ProblemSpec {
    pub fn source(&self) -> ProblemSource {
        ProblemSource {
            phi: self.phi.clone(),
            c: self.c.clone(),
            eta: self.eta.clone(),
            w: self.w.clone(),
            alpha: self.alpha.clone(),
            f: self.f.clone(),
            g: self.g.clone(),
            x0: self.x0,
            x1: self.x1,
            form: self.form.into(),
            t_max: self.t_max,
        }
    }
}

/// Everything a config file may set. All fields are optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Option<String>,
    pub problem: Option<ProblemSpec>,
    /// Overrides the horizon of a preset or problem.
    pub t_max: Option<f64>,
    /// Number of output grid nodes.
    pub grid: Option<usize>,
    /// Relative slack of the dominance check.
    pub tol: Option<f64>,
    /// Absolute slack of the dominance check.
    pub abs_tol: Option<f64>,
    /// Largest oracle grid spacing; the output grid is refined down to it.
    pub oracle_spacing: Option<f64>,
    pub oracle_iterations: Option<usize>,
    pub oracle_tol: Option<f64>,
    /// Fraction of a finite `τ` up to which dominance is checked.
    pub tau_fraction: Option<f64>,
    /// Hypothesis samples per axis.
    pub samples: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    /// Random family for generated instances; cycles through all when absent.
    pub family: Option<String>,
    pub scale_bound: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Command-line overrides.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub preset: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub seeds: Option<u64>,
    pub grid: Option<usize>,
    pub tol: Option<f64>,
    pub scale_bound: Option<f64>,
}

/// Where the instance comes from.
#[derive(Debug, Clone)]
pub enum InstanceSource {
    Preset(Preset),
    Problem(Box<ProblemSource>),
    Generated { seed: u64, family: Family },
}

/// A fully resolved run.
#[derive(Debug, Clone)]
pub struct Settings {
    pub instance: Option<InstanceSource>,
    pub t_max: Option<f64>,
    pub grid: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub oracle_spacing: f64,
    pub oracle_iterations: usize,
    pub oracle_tol: f64,
    pub tau_fraction: f64,
    pub samples: usize,
    pub seed: u64,
    pub seeds: u64,
    pub family: Option<Family>,
    pub scale_bound: f64,
    pub out: Option<PathBuf>,
}

impl Settings {
    pub fn resolve(cfg: RunConfig, ov: Overrides) -> Result<Settings> {
        let family = match &cfg.family {
            Some(name) => match Family::parse(name) {
                Some(f) => Some(f),
                None => bail!("unknown family {name:?}"),
            },
            None => None,
        };
        let preset_name = ov.preset.or(cfg.preset);
        let instance = match (preset_name, cfg.problem) {
            (Some(_), Some(_)) => bail!("a preset and a problem are both given"),
            (Some(name), None) => match Preset::parse(&name) {
                Some(p) => Some(InstanceSource::Preset(p)),
                None => bail!("unknown preset {name:?}; expected one of {}", Preset::NAMES.join(", ")),
            },
            (None, Some(problem)) => Some(InstanceSource::Problem(Box::new(problem.source()))),
            (None, None) => ov.seed.or(cfg.seed).map(|seed| InstanceSource::Generated {
                seed,
                family: family.unwrap_or_else(|| Family::for_seed(seed)),
            }),
        };
        let s = Settings {
            instance,
            t_max: cfg.t_max,
            grid: ov.grid.or(cfg.grid).unwrap_or(DEFAULT_GRID),
            rel_tol: ov.tol.or(cfg.tol).unwrap_or(DEFAULT_REL_TOL),
            abs_tol: cfg.abs_tol.unwrap_or(DEFAULT_ABS_TOL),
            oracle_spacing: cfg.oracle_spacing.unwrap_or(DEFAULT_ORACLE_SPACING),
            oracle_iterations: cfg.oracle_iterations.unwrap_or(DEFAULT_ORACLE_ITER),
            oracle_tol: cfg.oracle_tol.unwrap_or(DEFAULT_ORACLE_TOL),
            tau_fraction: cfg.tau_fraction.unwrap_or(DEFAULT_TAU_FRACTION),
            samples: cfg.samples.unwrap_or(retarded_bounds::problem::DEFAULT_SAMPLES),
            seed: ov.seed.or(cfg.seed).unwrap_or(0),
            seeds: ov.seeds.or(cfg.seeds).unwrap_or(1),
            family,
            scale_bound: ov.scale_bound.or(cfg.scale_bound).unwrap_or(1.0),
            out: ov.out.or(cfg.out),
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<()> {
        if self.grid < 2 {
            bail!("grid needs at least 2 nodes, got {}", self.grid);
        }
        if let Some(t) = self.t_max {
            if !(t > 0.0 && t.is_finite()) {
                bail!("t_max must be positive, got {t}");
            }
        }
        for (name, v) in [
            ("tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("oracle_tol", self.oracle_tol),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                bail!("{name} must be a nonnegative number, got {v}");
            }
        }
        if !(self.oracle_spacing > 0.0) {
            bail!("oracle_spacing must be positive, got {}", self.oracle_spacing);
        }
        if !(self.tau_fraction > 0.0 && self.tau_fraction <= 1.0) {
            bail!("tau_fraction must lie in (0, 1], got {}", self.tau_fraction);
        }
        if !(self.scale_bound > 0.0 && self.scale_bound.is_finite()) {
            bail!("scale-bound must be positive, got {}", self.scale_bound);
        }
        if self.seeds == 0 {
            bail!("seeds must be at least 1");
        }
        if self.samples < 2 {
            bail!("samples must be at least 2");
        }
        Ok(())
    }
}
