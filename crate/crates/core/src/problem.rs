//! Problem instances and sampled hypothesis checks.
//!
//! A [`ProblemInstance`] bundles the data of one inequality,
//!
//! ```text
//! form One:  φ(u(t)) <= c(t) + ∫_0^{α(t)} [f(t,s) η(u) w(u) + g(t,s) η(u)] ds
//! form Two:  φ(u(t)) <= c(t) + ∫_0^{α(t)} f(t,s) η(u) w(u) ds + ∫_0^t g(t,s) η(u) w(u) ds
//! ```
//!
//! together with the anchors `x0` (lower limit of `G`) and `x1` (lower limit
//! of `Ψ`) and the horizon of interest `t_max`. [`validate`] checks the
//! hypotheses on sample grids; it is a screening tool, not a proof.

use std::fmt;

use thiserror::Error;

use crate::expr::{BinOp, EvalError, Expr, Node, ParseError};
use crate::numerics::{self, diverges_at_zero, invert_monotone, probe_image_sup, DEFAULT_TOL};

/// Default number of samples per axis in [`validate`].
pub const DEFAULT_SAMPLES: usize = 256;
/// Relative margin required between consecutive samples of `φ`.
pub const STRICT_EPS: f64 = 1e-12;
/// Relative width to which `φ⁻¹` is resolved.
pub const PHI_INV_REL_WIDTH: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("cannot parse `{role}`: {source}")]
    Parse {
        role: &'static str,
        #[source]
        source: ParseError,
    },
    #[error("invalid parameter: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Phi,
    C,
    Eta,
    W,
    Alpha,
}

impl Role {
    pub fn name(self) -> &'static str {
        match self {
            Role::Phi => "phi",
            Role::C => "c",
            Role::Eta => "eta",
            Role::W => "w",
            Role::Alpha => "alpha",
        }
    }

    /// The single variable of a function in this role.
    pub fn var(self) -> &'static str {
        match self {
            Role::Phi | Role::Eta | Role::W => "x",
            Role::C | Role::Alpha => "t",
        }
    }
}

/// A one-variable function playing one of the roles φ, c, η, w, α.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFn {
    role: Role,
    expr: Expr,
}

impl ScalarFn {
    pub fn parse(role: Role, text: &str) -> Result<ScalarFn, ProblemError> {
        let expr = Expr::parse(text, &[role.var()]).map_err(|source| ProblemError::Parse {
            role: role.name(),
            source,
        })?;
        Ok(ScalarFn { role, expr })
    }

    pub fn role(&self) -> Role {
        self.role
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, x: f64) -> Result<f64, EvalError> {
        self.expr.eval(&[x])
    }

    /// Value at `x`, NaN on a domain error.
    pub fn at(&self, x: f64) -> f64 {
        self.eval(x).unwrap_or(f64::NAN)
    }

    /// `p` when the expression is the bare variable (`p = 1`) or `x^p` with a literal `p > 0`.
    pub fn power_exponent(&self) -> Option<f64> {
        match self.expr.root() {
            Node::Var(_) => Some(1.0),
            Node::Binary(BinOp::Pow, base, exp) => match (base.as_ref(), exp.as_ref()) {
                (Node::Var(_), Node::Literal(p)) if *p > 0.0 && p.is_finite() => Some(*p),
                _ => None,
            },
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRole {
    F,
    G,
}

impl KernelRole {
    pub fn name(self) -> &'static str {
        match self {
            KernelRole::F => "f",
            KernelRole::G => "g",
        }
    }
}

/// A kernel `k(t, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    role: KernelRole,
    expr: Expr,
}

impl Kernel {
    pub fn parse(role: KernelRole, text: &str) -> Result<Kernel, ProblemError> {
        let expr = Expr::parse(text, &["t", "s"]).map_err(|source| ProblemError::Parse {
            role: role.name(),
            source,
        })?;
        Ok(Kernel { role, expr })
    }

    /// Wraps an expression in `s` alone (or in `t` and `s`).
    pub fn from_expr(role: KernelRole, expr: &Expr) -> Result<Kernel, ProblemError> {
        let expr = expr.rebind(&["t", "s"]).map_err(|source| ProblemError::Parse {
            role: role.name(),
            source,
        })?;
        Ok(Kernel { role, expr })
    }

    pub fn role(&self) -> KernelRole {
        self.role
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn eval(&self, t: f64, s: f64) -> Result<f64, EvalError> {
        self.expr.eval(&[t, s])
    }

    pub fn at(&self, t: f64, s: f64) -> f64 {
        self.eval(t, s).unwrap_or(f64::NAN)
    }

    pub fn depends_on_t(&self) -> bool {
        self.expr.depends_on("t")
    }

    /// True when the kernel is the literal constant 0.
    pub fn is_zero(&self) -> bool {
        matches!(self.expr.root(), Node::Literal(v) if *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremForm {
    /// `g` multiplies `η(u)` and is integrated up to `α(t)`.
    One,
    /// `g` multiplies `η(u) w(u)` and is integrated up to `t`.
    Two,
}

/// String form of an instance; `x0`/`x1` fall back to their defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSource {
    pub phi: String,
    pub c: String,
    pub eta: String,
    pub w: String,
    pub alpha: String,
    pub f: String,
    pub g: String,
    pub x0: Option<f64>,
    pub x1: Option<f64>,
    pub form: TheoremForm,
    pub t_max: f64,
}

impl ProblemSource {
    pub fn build(&self) -> Result<ProblemInstance, ProblemError> {
        let phi = ScalarFn::parse(Role::Phi, &self.phi)?;
        let c = ScalarFn::parse(Role::C, &self.c)?;
        let eta = ScalarFn::parse(Role::Eta, &self.eta)?;
        let w = ScalarFn::parse(Role::W, &self.w)?;
        let alpha = ScalarFn::parse(Role::Alpha, &self.alpha)?;
        let f = Kernel::parse(KernelRole::F, &self.f)?;
        let g = Kernel::parse(KernelRole::G, &self.g)?;
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(ProblemError::Parameter(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        let mut inst = ProblemInstance {
            phi,
            c,
            eta,
            w,
            alpha,
            f,
            g,
            x0: 0.0,
            x1: self.x1.unwrap_or(1.0),
            form: self.form,
            t_max: self.t_max,
        };
        inst.x0 = match self.x0 {
            Some(x0) => x0,
            None => inst.default_x0(),
        };
        Ok(inst)
    }
}

/// The full hypothesis bundle of one inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub phi: ScalarFn,
    pub c: ScalarFn,
    pub eta: ScalarFn,
    pub w: ScalarFn,
    pub alpha: ScalarFn,
    pub f: Kernel,
    pub g: Kernel,
    pub x0: f64,
    pub x1: f64,
    pub form: TheoremForm,
    pub t_max: f64,
}

impl ProblemInstance {
    pub fn with_x0(mut self, x0: f64) -> Self {
        self.x0 = x0;
        self
    }

    pub fn with_x1(mut self, x1: f64) -> Self {
        self.x1 = x1;
        self
    }

    /// `x0 = 0` when `∫_0 ds/η(φ⁻¹(s))` converges, `c(0)/2` otherwise.
    pub fn default_x0(&self) -> f64 {
        let c0 = self.c.at(0.0);
        if !(c0 > 0.0) {
            return 0.0;
        }
        if self.phi.at(0.0) == 0.0 && !self.g_integrand_diverges_at_zero(c0) {
            0.0
        } else {
            0.5 * c0
        }
    }

    fn g_integrand_diverges_at_zero(&self, x_probe: f64) -> bool {
        diverges_at_zero(|s| self.g_integrand(s), x_probe, DEFAULT_TOL)
    }

    /// `φ⁻¹(z)` by bracket expansion from 0 and bisection.
    pub fn phi_inv(&self, z: f64) -> Result<f64, numerics::NumericsError> {
        match self.phi.power_exponent() {
            Some(1.0) => return Ok(z),
            Some(p) if z >= 0.0 => return Ok(z.powf(1.0 / p)),
            _ => {}
        }
        let phi0 = self.phi.at(0.0);
        if z == phi0 {
            return Ok(0.0);
        }
        let x = invert_monotone(|x| self.phi.at(x), z, 0.0, 1e-13)?;
        Ok(x)
    }

    /// `φ⁻¹(z)` when `z` is known to lie in `[φ(lo), φ(hi)]`.
    pub fn phi_inv_within(&self, z: f64, lo: f64, hi: f64) -> f64 {
        if z <= self.phi.at(lo) {
            return lo;
        }
        if z >= self.phi.at(hi) {
            return hi;
        }
        numerics::bisect_bracket(|x| self.phi.at(x), z, lo, hi, PHI_INV_REL_WIDTH, 0.0).unwrap_or(f64::NAN)
    }

    /// `1/η(φ⁻¹(s))`, the integrand of `G`.
    pub fn g_integrand(&self, s: f64) -> f64 {
        match self.phi_inv(s) {
            Ok(y) => 1.0 / self.eta.at(y),
            Err(_) => f64::NAN,
        }
    }
}

/// Where a hypothesis was found violated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Witness {
    At(f64),
    Pair { t: f64, s: f64 },
    None,
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Witness::At(x) => write!(f, "at {x}"),
            Witness::Pair { t, s } => write!(f, "at (t, s) = ({t}, {s})"),
            Witness::None => f.write_str("globally"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub hypothesis: String,
    pub witness: Witness,
    pub magnitude: f64,
}

/// Outcome of [`validate`]. `pass` is true iff `violations` is empty;
/// warnings never fail a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub pass: bool,
    pub violations: Vec<Violation>,
    pub warnings: Vec<Violation>,
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "validation: {}", if self.pass { "pass" } else { "FAIL" })?;
        for v in &self.violations {
            writeln!(
                f,
                "  violated: {} {} (magnitude {:e})",
                v.hypothesis, v.witness, v.magnitude
            )?;
        }
        for v in &self.warnings {
            writeln!(f, "  warning:  {} {}", v.hypothesis, v.witness)?;
        }
        Ok(())
    }
}

/// Keeps the worst violation per hypothesis, in first-seen order.
#[derive(Default)]
struct Collector {
    items: Vec<Violation>,
}

impl Collector {
    fn record(&mut self, hypothesis: &str, witness: Witness, magnitude: f64) {
        let magnitude = if magnitude.is_nan() { f64::INFINITY } else { magnitude };
        match self.items.iter_mut().find(|v| v.hypothesis == hypothesis) {
            Some(v) if magnitude > v.magnitude => {
                v.witness = witness;
                v.magnitude = magnitude;
            }
            Some(_) => {}
            None => self.items.push(Violation {
                hypothesis: hypothesis.to_string(),
                witness,
                magnitude,
            }),
        }
    }

    fn has(&self, hypothesis: &str) -> bool {
        self.items.iter().any(|v| v.hypothesis == hypothesis)
    }
}

fn uniform(end: f64, n: usize) -> Vec<f64> {
    let last = (n - 1) as f64;
    (0..n).map(|i| end * (i as f64 / last)).collect()
}

/// Checks every hypothesis on sample grids.
///
/// Time-dependent data is sampled on `samples` uniform nodes of `[0, t_max]`
/// (kernels on the product grid). `φ, η, w` are sampled on `samples` uniform
/// nodes of `[0, X]`, `X = 4 max(1, c(t_max))`, plus the fixed tail
/// `X 2^k, k = 1..=20`. Unboundedness of `φ` is probed at `2^k, k = 0..=60`.
pub fn validate(inst: &ProblemInstance, samples: usize) -> ValidationReport {
    let samples = samples.max(2);
    let mut bad = Collector::default();
    let mut warn = Collector::default();
    let ts = uniform(inst.t_max, samples);
    let t_max = inst.t_max;

    if !(t_max > 0.0 && t_max.is_finite()) {
        bad.record("t_max > 0", Witness::At(t_max), 1.0);
    }
    if !(inst.x1 > 0.0 && inst.x1.is_finite()) {
        bad.record("x1 > 0", Witness::At(inst.x1), inst.x1.abs());
    }
    if !(inst.x0 >= 0.0 && inst.x0.is_finite()) {
        bad.record("x0 >= 0", Witness::At(inst.x0), inst.x0.abs());
    }

    // c: positive, nondecreasing
    let cs: Vec<Result<f64, EvalError>> = ts.iter().map(|&t| inst.c.eval(t)).collect();
    for (i, (&t, v)) in ts.iter().zip(&cs).enumerate() {
        match v {
            Err(_) => bad.record("c evaluable", Witness::At(t), f64::INFINITY),
            Ok(v) => {
                if !(*v > 0.0) {
                    bad.record("c(t) > 0", Witness::At(t), -v);
                }
                if i > 0 {
                    if let Ok(prev) = cs[i - 1] {
                        if *v < prev {
                            bad.record("c nondecreasing", Witness::At(t), prev - v);
                        }
                    }
                }
            }
        }
    }
    let c0 = inst.c.at(0.0);
    let c_end = inst.c.at(t_max);
    if !(c0 > inst.x0) {
        bad.record("c(0) > x0", Witness::At(0.0), inst.x0 - c0);
    }

    // α: α(0) = 0, 0 <= α(t) <= t, nondecreasing
    let mut prev_alpha: Option<f64> = None;
    for &t in &ts {
        match inst.alpha.eval(t) {
            Err(_) => bad.record("alpha evaluable", Witness::At(t), f64::INFINITY),
            Ok(a) => {
                if a > t {
                    bad.record("alpha(t) <= t", Witness::At(t), a - t);
                }
                if a < 0.0 {
                    bad.record("alpha(t) >= 0", Witness::At(t), -a);
                }
                if let Some(p) = prev_alpha {
                    if a < p {
                        bad.record("alpha nondecreasing", Witness::At(t), p - a);
                    }
                }
                prev_alpha = Some(a);
            }
        }
    }
    if let Ok(a0) = inst.alpha.eval(0.0) {
        if a0 != 0.0 {
            bad.record("alpha(0) = 0", Witness::At(0.0), a0.abs());
        }
    }

    // value grid for φ, η, w
    let x_top = 4.0 * c_end.max(1.0);
    let mut xs = if x_top.is_finite() {
        uniform(x_top, samples)
    } else {
        uniform(4.0, samples)
    };
    let last = *xs.last().expect("non-empty");
    xs.extend((1..=20).map(|k| last * 2f64.powi(k)));

    let mut prev_phi: Option<f64> = None;
    for &x in &xs {
        match inst.phi.eval(x) {
            Err(_) => bad.record("phi evaluable", Witness::At(x), f64::INFINITY),
            Ok(v) => {
                if v < 0.0 {
                    bad.record("phi >= 0", Witness::At(x), -v);
                }
                if let Some(p) = prev_phi {
                    let need = STRICT_EPS * p.abs();
                    // past overflow nothing can be compared
                    let saturated = p == f64::INFINITY;
                    if !saturated && !(v - p > need) {
                        bad.record("phi strictly increasing", Witness::At(x), need - (v - p));
                    }
                }
                prev_phi = Some(v);
            }
        }
    }
    let probe: Vec<f64> = (0..=numerics::PROBE_DOUBLINGS)
        .map(|k| inst.phi.at(2f64.powi(k)))
        .collect();
    let top = probe[probe.len() - 1];
    if !(top > c_end && (top > probe[50] || top == f64::INFINITY)) {
        bad.record(
            "phi unbounded",
            Witness::At(2f64.powi(numerics::PROBE_DOUBLINGS)),
            c_end - top,
        );
    }
    let phi0 = inst.phi.at(0.0);
    if phi0 > inst.x0 {
        bad.record("phi(0) <= x0", Witness::At(0.0), phi0 - inst.x0);
    }

    for (fun, name) in [(&inst.eta, "eta"), (&inst.w, "w")] {
        let mut prev: Option<f64> = None;
        for &x in &xs {
            match fun.eval(x) {
                Err(_) => bad.record(&format!("{name} evaluable"), Witness::At(x), f64::INFINITY),
                Ok(v) => {
                    if v < 0.0 {
                        bad.record(&format!("{name} >= 0"), Witness::At(x), -v);
                    }
                    if x > 0.0 && !(v > 0.0) {
                        bad.record(&format!("{name}(x) > 0 for x > 0"), Witness::At(x), -v);
                    }
                    if let Some(p) = prev {
                        if v < p {
                            bad.record(&format!("{name} nondecreasing"), Witness::At(x), p - v);
                        }
                    }
                    prev = Some(v);
                }
            }
        }
    }

    for kernel in [&inst.f, &inst.g] {
        let name = kernel.role().name();
        let nonneg = format!("{name}(t, s) >= 0");
        let mono = format!("{name} nondecreasing in t");
        let evaluable = format!("{name} evaluable");
        for &s in &ts {
            let mut prev: Option<f64> = None;
            for &t in &ts {
                match kernel.eval(t, s) {
                    Err(_) => bad.record(&evaluable, Witness::Pair { t, s }, f64::INFINITY),
                    Ok(v) => {
                        if v < 0.0 {
                            bad.record(&nonneg, Witness::Pair { t, s }, -v);
                        }
                        if let Some(p) = prev {
                            if v < p {
                                bad.record(&mono, Witness::Pair { t, s }, p - v);
                            }
                        }
                        prev = Some(v);
                    }
                }
            }
        }
    }

    // Admissibility of x0 and divergence of G at infinity need a usable φ⁻¹.
    let phi_ok = !bad.has("phi strictly increasing")
        && !bad.has("phi evaluable")
        && !bad.has("phi unbounded")
        && !bad.has("phi(0) <= x0")
        && !bad.has("eta evaluable")
        && !bad.has("eta(x) > 0 for x > 0");
    if phi_ok && c0 > 0.0 && c0.is_finite() {
        if inst.x0 == 0.0 && inst.g_integrand_diverges_at_zero(c0) {
            bad.record(
                "x0 admissible (integral of 1/eta(phi^-1) diverges at 0)",
                Witness::At(0.0),
                1.0,
            );
        }
        if c0 > inst.x0 {
            let mut acc = 0.0;
            let mut from = inst.x0;
            let mut failed = false;
            let g_probe = probe_image_sup(
                |x| {
                    if failed {
                        return f64::NAN;
                    }
                    match numerics::integrate(|s| inst.g_integrand(s), from, x, DEFAULT_TOL) {
                        Ok(r) => {
                            acc += r.value;
                            from = x;
                            acc
                        }
                        Err(_) => {
                            failed = true;
                            f64::NAN
                        }
                    }
                },
                c0,
            );
            if g_probe.bounded {
                warn.record(
                    "integral of 1/eta(phi^-1) from x0 to infinity appears finite",
                    Witness::None,
                    g_probe.sup,
                );
            }
        }
    }

    ValidationReport {
        pass: bad.items.is_empty(),
        violations: bad.items,
        warnings: warn.items,
    }
}
