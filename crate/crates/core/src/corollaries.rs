//! Closed-form special cases.
//!
//! Power case: `φ(x) = x^m`, `c(t) = c^{m/(m-n)}`, `η(x) = m/(m-n) x^n` with
//! `m > n > 0`, so that `G(x) = x^{(m-n)/m}` (with `x0 = 0`) and, for `x1 = 1`,
//!
//! ```text
//! Ψ(x) = ∫_1^x ds / w(s^{1/(m-n)}).
//! ```
//!
//! Logarithmic case: `φ(x) = x^n`, `η(x) = (x^n + 1) ln(x^n + 1)`, so that
//! `G(x) = ln(ln(1+x) / ln(1+x0))` and `G⁻¹(x) = exp(e^x ln(1+x0)) - 1`.
//!
//! Each case can also be turned into a general [`ProblemInstance`], which is
//! how the closed forms are cross-checked against the bound engine.

use thiserror::Error;

use crate::numerics::{integrate, invert_monotone, NumericsError};
use crate::problem::{Kernel, KernelRole, ProblemError, ProblemInstance, Role, ScalarFn, TheoremForm};

const PSI_TOL: f64 = 1e-13;
const INVERT_TOL: f64 = 1e-14;
/// Values of the closed-form `G⁻¹` are capped here.
pub const LOG_CASE_CAP: f64 = 1e300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorollaryError {
    #[error("invalid parameters: {0}")]
    Params(String),
    #[error("kernel `{0}` must not depend on t")]
    TimeDependent(&'static str),
    #[error("cannot evaluate {what} at {at}")]
    Eval { what: &'static str, at: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Problem(#[from] ProblemError),
}

/// `m > n > 0` and the constant `c > 0` of the power case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerCaseParams {
    pub m: f64,
    pub n: f64,
    pub c: f64,
}

impl PowerCaseParams {
    pub fn new(m: f64, n: f64, c: f64) -> Result<PowerCaseParams, CorollaryError> {
        if !(m > n && n > 0.0 && m.is_finite()) {
            return Err(CorollaryError::Params(format!("need m > n > 0, got m = {m}, n = {n}")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(CorollaryError::Params(format!("need c > 0, got {c}")));
        }
        Ok(PowerCaseParams { m, n, c })
    }

    /// `m - n`.
    pub fn gap(&self) -> f64 {
        self.m - self.n
    }

    /// `G(x) = x^{(m-n)/m}`.
    pub fn g(&self, x: f64) -> f64 {
        x.powf(self.gap() / self.m)
    }

    /// `Ψ(x) = ∫_1^x ds / w(s^{1/(m-n)})`.
    pub fn psi(&self, w: &ScalarFn, x: f64) -> Result<f64, CorollaryError> {
        let k = 1.0 / self.gap();
        signed_integral(|s| 1.0 / w.at(s.powf(k)), 1.0, x)
    }

    /// `Ψ⁻¹(y)` searched to the right of `x_lo`.
    fn psi_inv(&self, w: &ScalarFn, y: f64, x_lo: f64) -> Result<f64, CorollaryError> {
        Ok(invert_monotone(
            |x| self.psi(w, x).unwrap_or(f64::NAN),
            y,
            x_lo,
            INVERT_TOL,
        )?)
    }

    /// The general instance these parameters stand for: `φ = x^m`,
    /// `c(t) = c^{m/(m-n)}`, `η = m/(m-n) x^n`, `x0 = 0`, `x1 = 1`.
    pub fn induced_instance(
        &self,
        f: &Kernel,
        g: &Kernel,
        w: &ScalarFn,
        alpha: &ScalarFn,
        form: TheoremForm,
        t_max: f64,
    ) -> Result<ProblemInstance, CorollaryError> {
        let (m, n) = (self.m, self.n);
        let c = self.c.powf(m / self.gap());
        Ok(ProblemInstance {
            phi: ScalarFn::parse(Role::Phi, &format!("x^{m:?}"))?,
            c: ScalarFn::parse(Role::C, &format!("{c:?}"))?,
            eta: ScalarFn::parse(Role::Eta, &format!("{:?}*x^{n:?}", m / self.gap()))?,
            w: w.clone(),
            alpha: alpha.clone(),
            f: Kernel::from_expr(KernelRole::F, f.expr())?,
            g: Kernel::from_expr(KernelRole::G, g.expr())?,
            x0: 0.0,
            x1: 1.0,
            form,
            t_max,
        })
    }
}

/// `∫_a^b h` for either order of the limits.
fn signed_integral<H: FnMut(f64) -> f64>(h: H, a: f64, b: f64) -> Result<f64, CorollaryError> {
    let v = if b >= a {
        integrate(h, a, b, PSI_TOL)?.value
    } else {
        -integrate(h, b, a, PSI_TOL)?.value
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CorollaryError::Eval { what: "Psi", at: b })
    }
}

fn time_free(k: &Kernel) -> Result<(), CorollaryError> {
    if k.depends_on_t() {
        Err(CorollaryError::TimeDependent(k.role().name()))
    } else {
        Ok(())
    }
}

fn integral_to(k: &Kernel, t: f64, upper: f64) -> Result<f64, CorollaryError> {
    if upper == 0.0 || k.is_zero() {
        return Ok(0.0);
    }
    let v = integrate(|s| k.at(t, s), 0.0, upper, PSI_TOL)?.value;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CorollaryError::Eval {
            what: k.role().name(),
            at: t,
        })
    }
}

fn alpha_at(alpha: &ScalarFn, t: f64) -> Result<f64, CorollaryError> {
    alpha.eval(t).map_err(|_| CorollaryError::Eval { what: "alpha", at: t })
}

/// `{Ψ⁻¹[Ψ(c + ∫_0^{α(t)} g) + ∫_0^{α(t)} f]}^{1/(m-n)}`.
pub fn sun_thm21_bound(
    params: &PowerCaseParams,
    f: &Kernel,
    g: &Kernel,
    w: &ScalarFn,
    alpha: &ScalarFn,
    t: f64,
) -> Result<f64, CorollaryError> {
    time_free(f)?;
    time_free(g)?;
    let a = alpha_at(alpha, t)?;
    let p = params.c + integral_to(g, t, a)?;
    let fi = integral_to(f, t, a)?;
    let x = if fi == 0.0 {
        p
    } else {
        params.psi_inv(w, params.psi(w, p)? + fi, p)?
    };
    Ok(x.powf(1.0 / params.gap()))
}

/// `{Ψ⁻¹[Ψ(c) + ∫_0^{α(t)} f + ∫_0^t g]}^{1/(m-n)}`.
pub fn sun_thm22_bound(
    params: &PowerCaseParams,
    f: &Kernel,
    g: &Kernel,
    w: &ScalarFn,
    alpha: &ScalarFn,
    t: f64,
) -> Result<f64, CorollaryError> {
    time_free(f)?;
    time_free(g)?;
    let a = alpha_at(alpha, t)?;
    let add = integral_to(f, t, a)? + integral_to(g, t, t)?;
    let c = params.c;
    let x = if add == 0.0 {
        c
    } else {
        params.psi_inv(w, params.psi(w, c)? + add, c)?
    };
    Ok(x.powf(1.0 / params.gap()))
}

/// A value that may have been capped at [`LOG_CASE_CAP`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capped {
    pub value: f64,
    pub overflowed: bool,
}

/// `G⁻¹(x) = exp(e^x ln(1 + x0)) - 1` of the logarithmic case.
#[allow(non_snake_case)]
pub fn log_case_G_inverse(x: f64, x0: f64) -> Capped {
    if x == 0.0 {
        return Capped {
            value: x0,
            overflowed: false,
        };
    }
    let v = (x.exp() * x0.ln_1p()).exp_m1();
    if v.is_finite() && v <= LOG_CASE_CAP {
        Capped {
            value: v,
            overflowed: false,
        }
    } else {
        Capped {
            value: LOG_CASE_CAP,
            overflowed: true,
        }
    }
}

/// `G(x) = ln(ln(1 + x) / ln(1 + x0))` of the logarithmic case.
pub fn log_case_g(x: f64, x0: f64) -> f64 {
    (x.ln_1p() / x0.ln_1p()).ln()
}

/// Data of the logarithmic case (`g ≡ 0`, constant `c`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCaseParams {
    pub c: f64,
    pub n: f64,
    pub x0: f64,
}

impl LogCaseParams {
    pub fn new(c: f64, n: f64, x0: f64) -> Result<LogCaseParams, CorollaryError> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(CorollaryError::Params(format!("need n > 0, got {n}")));
        }
        if !(c > x0 && x0 > 0.0 && c.is_finite()) {
            return Err(CorollaryError::Params(format!(
                "need c > x0 > 0, got c = {c}, x0 = {x0}"
            )));
        }
        Ok(LogCaseParams { c, n, x0 })
    }

    /// `Ψ(x) = ∫_1^x ds / w((G⁻¹(s))^{1/n})`.
    pub fn psi(&self, w: &ScalarFn, x: f64) -> Result<f64, CorollaryError> {
        let k = 1.0 / self.n;
        let x0 = self.x0;
        signed_integral(|s| 1.0 / w.at(log_case_G_inverse(s, x0).value.powf(k)), 1.0, x)
    }

    /// `φ = x^n`, `c(t) = c`, `η = (x^n + 1) ln(x^n + 1)`, `g = 0`, `x1 = 1`.
    pub fn induced_instance(
        &self,
        f: &Kernel,
        w: &ScalarFn,
        alpha: &ScalarFn,
        t_max: f64,
    ) -> Result<ProblemInstance, CorollaryError> {
        let n = self.n;
        Ok(ProblemInstance {
            phi: ScalarFn::parse(Role::Phi, &format!("x^{n:?}"))?,
            c: ScalarFn::parse(Role::C, &format!("{:?}", self.c))?,
            eta: ScalarFn::parse(Role::Eta, &format!("(x^{n:?} + 1)*ln(x^{n:?} + 1)"))?,
            w: w.clone(),
            alpha: alpha.clone(),
            f: Kernel::from_expr(KernelRole::F, f.expr())?,
            g: Kernel::parse(KernelRole::G, "0")?,
            x0: self.x0,
            x1: 1.0,
            form: TheoremForm::One,
            t_max,
        })
    }
}

/// `{G⁻¹(Ψ⁻¹[Ψ(G(c)) + ∫_0^{α(t)} f(t,s) ds])}^{1/n}`.
pub fn log_case_bound(
    params: &LogCaseParams,
    f: &Kernel,
    w: &ScalarFn,
    alpha: &ScalarFn,
    t: f64,
) -> Result<f64, CorollaryError> {
    let gc = log_case_g(params.c, params.x0);
    let fi = integral_to(f, t, alpha_at(alpha, t)?)?;
    let z = if fi == 0.0 {
        params.c
    } else {
        let y = params.psi(w, gc)? + fi;
        let x = invert_monotone(|x| params.psi(w, x).unwrap_or(f64::NAN), y, gc, INVERT_TOL)?;
        let v = log_case_G_inverse(x, params.x0);
        if v.overflowed {
            return Err(NumericsError::OutsideImage { y, sup: LOG_CASE_CAP }.into());
        }
        v.value
    };
    Ok(z.powf(1.0 / params.n))
}
