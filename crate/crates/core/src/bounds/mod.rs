//! The bound formulas and the validity horizon.
//!
//! For form One the bound at `t` is
//!
//! ```text
//! φ⁻¹( G⁻¹( Ψ⁻¹[ Ψ(p(t)) + ∫_0^{α(t)} f(t,s) ds ] ) ),  p(t) = G(c(t)) + ∫_0^{α(t)} g(t,s) ds
//! ```
//!
//! and for form Two `Ψ(p(t))` is replaced by `Ψ(G(c(t))) + ∫_0^t g(t,s) ds`.
//! Both are evaluated through `H = Ψ ∘ G` (see [`TransformTables`]).

mod tables;

use thiserror::Error;

pub use tables::TransformTables;

use crate::numerics::{integrate, Grid, NumericsError};
use crate::par::{map_indexed, Execution};
use crate::problem::{Kernel, ProblemInstance, TheoremForm};

/// Tolerance for the integrals of `f` and `g`.
pub const KERNEL_TOL: f64 = 1e-12;
/// Nodes scanned before bisecting for `τ`.
pub const TAU_SCAN_NODES: usize = 512;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("inadmissible instance: {0}")]
    Inadmissible(String),
    #[error("x1 = {x1} lies outside the image of G (sup {sup})")]
    X1OutsideImage { x1: f64, sup: f64 },
    #[error("domain condition fails already at t = 0")]
    VacuousHorizon,
    #[error("cannot evaluate {what} at t = {t}")]
    Eval { what: &'static str, t: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Parameters of the `τ` search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauSearch {
    /// Probe horizon: `τ` is searched in `[0, min(delta, t_max)]`.
    pub delta: f64,
    pub tol: f64,
    /// Relative margin kept below `M`.
    pub safety_margin: f64,
}

impl TauSearch {
    pub fn for_instance(inst: &ProblemInstance) -> TauSearch {
        TauSearch {
            delta: inst.t_max,
            tol: 1e-10,
            safety_margin: 1e-6,
        }
    }
}

/// A computed horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tau {
    pub tau: f64,
    /// True when no domain violation occurred up to the horizon.
    pub capped: bool,
}

/// Bound values on a grid; `None` marks nodes outside the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub grid: Grid,
    pub values: Vec<Option<f64>>,
    pub tau: f64,
    pub tau_capped: bool,
}

impl BoundCurve {
    pub fn in_domain(&self, i: usize) -> bool {
        self.values[i].is_some()
    }

    /// Multiplies every value by `k`.
    pub fn scaled(&self, k: f64) -> BoundCurve {
        BoundCurve {
            values: self.values.iter().map(|v| v.map(|v| v * k)).collect(),
            ..self.clone()
        }
    }
}

fn kernel_integral(k: &Kernel, t: f64, upper: f64) -> Result<f64, BoundsError> {
    if upper == 0.0 || k.is_zero() {
        return Ok(0.0);
    }
    let r = integrate(|s| k.at(t, s), 0.0, upper, KERNEL_TOL)?;
    if r.value.is_finite() {
        Ok(r.value)
    } else {
        Err(BoundsError::Eval {
            what: k.role().name(),
            t,
        })
    }
}

fn alpha(inst: &ProblemInstance, t: f64) -> Result<f64, BoundsError> {
    inst.alpha.eval(t).map_err(|_| BoundsError::Eval { what: "alpha", t })
}

fn c_at(inst: &ProblemInstance, t: f64) -> Result<f64, BoundsError> {
    inst.c.eval(t).map_err(|_| BoundsError::Eval { what: "c", t })
}

/// `∫_0^{α(t)} f(t, s) ds`.
pub fn f_integral(inst: &ProblemInstance, t: f64) -> Result<f64, BoundsError> {
    kernel_integral(&inst.f, t, alpha(inst, t)?)
}

/// `∫_0^{α(t)} g(t, s) ds`.
pub fn g_integral_retarded(inst: &ProblemInstance, t: f64) -> Result<f64, BoundsError> {
    kernel_integral(&inst.g, t, alpha(inst, t)?)
}

/// `∫_0^t g(t, s) ds`.
pub fn g_integral_full(inst: &ProblemInstance, t: f64) -> Result<f64, BoundsError> {
    kernel_integral(&inst.g, t, t)
}

/// `p(t) = G(c(t)) + ∫_0^{α(t)} g(t, s) ds`.
pub fn p_eval(inst: &ProblemInstance, tables: &TransformTables, t: f64) -> Result<f64, BoundsError> {
    Ok(tables.g(c_at(inst, t)?)? + g_integral_retarded(inst, t)?)
}

/// The argument of `Ψ⁻¹` in the bound at `t`, together with the `z` at which
/// `H` was evaluated.
fn psi_argument(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    t: f64,
) -> Result<(f64, f64), BoundsError> {
    let c = c_at(inst, t)?;
    let f = f_integral(inst, t)?;
    match form {
        TheoremForm::One => {
            let gi = g_integral_retarded(inst, t)?;
            let zp = if gi == 0.0 { c } else { tables.g_inv(tables.g(c)? + gi)? };
            Ok((tables.h(zp)? + f, zp))
        }
        TheoremForm::Two => {
            let gi = g_integral_full(inst, t)?;
            Ok((tables.h(c)? + f + gi, c))
        }
    }
}

/// `Ψ(p(t)) + ∫_0^{α(t)} f` (form One) or `Ψ(G(c(t))) + ∫_0^{α(t)} f + ∫_0^t g`
/// (form Two): the quantity that must stay below `M`.
pub fn domain_value(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    t: f64,
) -> Result<f64, BoundsError> {
    psi_argument(inst, tables, form, t).map(|(y, _)| y)
}

/// The membership predicate `domain_value(t) < M (1 - safety_margin)`;
/// evaluation failures count as outside.
pub fn in_domain(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    t: f64,
    safety_margin: f64,
) -> bool {
    let cap = tables.sup() * (1.0 - safety_margin);
    match domain_value(inst, tables, form, t) {
        Ok(y) => y < cap,
        Err(_) => false,
    }
}

/// The bound at `t` without the horizon cut; inversion failures are errors.
pub fn bound_at(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    t: f64,
) -> Result<f64, BoundsError> {
    let (y, zp) = psi_argument(inst, tables, form, t)?;
    let z = if f_is_zero_at(inst, form, t)? {
        zp
    } else {
        tables.h_inv(y)?
    };
    Ok(tables.phi_inv(z)?)
}

/// True when nothing is added to `H(zp)`, so `H⁻¹` would return `zp`.
fn f_is_zero_at(inst: &ProblemInstance, form: TheoremForm, t: f64) -> Result<bool, BoundsError> {
    let f = f_integral(inst, t)?;
    let g = match form {
        TheoremForm::One => 0.0,
        TheoremForm::Two => g_integral_full(inst, t)?,
    };
    Ok(f == 0.0 && g == 0.0)
}

/// `τ` for the instance's own form.
pub fn compute_tau(inst: &ProblemInstance, tables: &TransformTables, search: &TauSearch) -> Result<Tau, BoundsError> {
    tau_for(inst, tables, inst.form, search, Execution::default())
}

fn tau_for(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    search: &TauSearch,
    exec: Execution,
) -> Result<Tau, BoundsError> {
    let horizon = search.delta.min(inst.t_max);
    if !tables.psi_image().bounded {
        return Ok(Tau {
            tau: horizon,
            capped: true,
        });
    }
    let margin = search.safety_margin;
    let inside = |t: f64| in_domain(inst, tables, form, t, margin);
    if !inside(0.0) {
        return Err(BoundsError::VacuousHorizon);
    }
    let scan = Grid::uniform(horizon, TAU_SCAN_NODES).expect("positive horizon");
    let nodes = scan.nodes();
    let ok = map_indexed(nodes.len(), exec, |i| inside(nodes[i]));
    let Some(first_bad) = ok.iter().position(|&b| !b) else {
        return Ok(Tau {
            tau: horizon,
            capped: true,
        });
    };
    let (mut lo, mut hi) = (nodes[first_bad - 1], nodes[first_bad]);
    while hi - lo > search.tol {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Tau { tau: lo, capped: false })
}

/// The horizon of the construction with a fixed probe `δ`: the largest
/// `t <= δ` with `∫_0^{α(t)} f < M - Ψ(p(δ))`. Never exceeds [`compute_tau`]
/// by more than the search tolerance.
pub fn remark_tau(inst: &ProblemInstance, tables: &TransformTables, search: &TauSearch) -> Result<Tau, BoundsError> {
    let delta = search.delta.min(inst.t_max);
    let m = tables.sup() * (1.0 - search.safety_margin);
    if !m.is_finite() {
        return Ok(Tau {
            tau: delta,
            capped: true,
        });
    }
    let base = match inst.form {
        TheoremForm::One => {
            let zp = tables.g_inv(p_eval(inst, tables, delta)?)?;
            tables.h(zp)?
        }
        TheoremForm::Two => tables.h(c_at(inst, delta)?)? + g_integral_full(inst, delta)?,
    };
    let room = m - base;
    if !(room > 0.0) {
        return Err(BoundsError::VacuousHorizon);
    }
    let fits = |t: f64| f_integral(inst, t).is_ok_and(|f| f < room);
    if fits(delta) {
        return Ok(Tau {
            tau: delta,
            capped: true,
        });
    }
    let (mut lo, mut hi) = (0.0, delta);
    while hi - lo > search.tol {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Tau { tau: lo, capped: false })
}

fn curve(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    grid: &Grid,
    search: &TauSearch,
    exec: Execution,
) -> Result<BoundCurve, BoundsError> {
    let tau = tau_for(inst, tables, form, search, exec)?;
    let nodes = grid.nodes();
    let values = map_indexed(nodes.len(), exec, |i| {
        let t = nodes[i];
        if t > tau.tau {
            return None;
        }
        bound_at(inst, tables, form, t).ok().filter(|v| v.is_finite())
    });
    Ok(BoundCurve {
        grid: grid.clone(),
        values,
        tau: tau.tau,
        tau_capped: tau.capped,
    })
}

/// Form One bound on `grid` with the default search.
pub fn bound_thm1(inst: &ProblemInstance, tables: &TransformTables, grid: &Grid) -> Result<BoundCurve, BoundsError> {
    curve(
        inst,
        tables,
        TheoremForm::One,
        grid,
        &TauSearch::for_instance(inst),
        Execution::default(),
    )
}

/// Form Two bound on `grid` with the default search.
pub fn bound_thm2(inst: &ProblemInstance, tables: &TransformTables, grid: &Grid) -> Result<BoundCurve, BoundsError> {
    curve(
        inst,
        tables,
        TheoremForm::Two,
        grid,
        &TauSearch::for_instance(inst),
        Execution::default(),
    )
}

/// Bound for an explicit form, search and execution mode.
pub fn bound_curve(
    inst: &ProblemInstance,
    tables: &TransformTables,
    form: TheoremForm,
    grid: &Grid,
    search: &TauSearch,
    exec: Execution,
) -> Result<BoundCurve, BoundsError> {
    curve(inst, tables, form, grid, search, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ProblemSource;

    fn src() -> ProblemSource {
        ProblemSource {
            phi: "x".into(),
            c: "1".into(),
            eta: "x".into(),
            w: "1".into(),
            alpha: "t".into(),
            f: "1".into(),
            g: "0".into(),
            x0: None,
            x1: None,
            form: TheoremForm::One,
            t_max: 1.0,
        }
    }

    #[test]
    fn kernel_integrals() {
        let mut s = src();
        s.alpha = "t/2".into();
        let inst = s.build().unwrap();
        assert_eq!(f_integral(&inst, 1.0).unwrap(), 0.5);
        assert_eq!(f_integral(&inst, 0.0).unwrap(), 0.0);
        let mut s = src();
        s.f = "t*s".into();
        let inst = s.build().unwrap();
        assert!((f_integral(&inst, 2.0).unwrap() - 4.0).abs() < 1e-12);
        let mut s = src();
        s.f = "0".into();
        assert_eq!(f_integral(&s.build().unwrap(), 0.7).unwrap(), 0.0);
    }

    #[test]
    fn p_with_retarded_g() {
        let mut s = src();
        s.g = "1".into();
        s.x0 = Some((-1.0_f64).exp());
        let inst = s.build().unwrap();
        let t = TransformTables::build(&inst).unwrap();
        assert!((p_eval(&inst, &t, 1.0).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(p_eval(&inst, &t, 0.0).unwrap(), t.g(1.0).unwrap());
    }

    #[test]
    fn gronwall_curve() {
        let inst = src().build().unwrap();
        let t = TransformTables::build(&inst).unwrap();
        let grid = Grid::uniform(1.0, 11).unwrap();
        let c = bound_thm1(&inst, &t, &grid).unwrap();
        assert!(c.tau_capped);
        assert_eq!(c.tau, 1.0);
        assert_eq!(c.values[0], Some(1.0));
        let last = c.values[10].unwrap();
        assert!((last / std::f64::consts::E - 1.0).abs() < 1e-6, "{last}");
    }

    #[test]
    fn blowup_curve_and_tau() {
        let mut s = src();
        s.w = "x".into();
        s.t_max = 1.5;
        let inst = s.build().unwrap();
        let t = TransformTables::build(&inst).unwrap();
        let tau = compute_tau(&inst, &t, &TauSearch::for_instance(&inst)).unwrap();
        assert!(!tau.capped);
        assert!((tau.tau - 1.0).abs() < 1e-6, "{}", tau.tau);
        for x in [0.25, 0.5, 0.75] {
            let b = bound_at(&inst, &t, TheoremForm::One, x).unwrap();
            assert!((b * (1.0 - x) - 1.0).abs() < 1e-6, "t = {x}: {b}");
        }
        assert!(!in_domain(&inst, &t, TheoremForm::One, 1.0, 1e-6));
        let r = remark_tau(&inst, &t, &TauSearch::for_instance(&inst)).unwrap();
        assert!(r.tau <= tau.tau + 1e-10);
        let grid = Grid::uniform(1.5, 31).unwrap();
        let c = bound_thm1(&inst, &t, &grid).unwrap();
        assert!(c.values[19].is_some());
        assert!(c.values[20].is_none());
    }

    #[test]
    fn zero_kernels_give_phi_inverse_of_c() {
        let mut s = src();
        s.phi = "x^2".into();
        s.eta = "2*x".into();
        s.c = "1 + t".into();
        s.f = "0".into();
        let inst = s.build().unwrap();
        let t = TransformTables::build(&inst).unwrap();
        let grid = Grid::uniform(1.0, 5).unwrap();
        for curve in [
            bound_thm1(&inst, &t, &grid).unwrap(),
            bound_thm2(&inst, &t, &grid).unwrap(),
        ] {
            for (i, &x) in grid.nodes().iter().enumerate() {
                assert_eq!(curve.values[i], Some((1.0 + x).sqrt()));
            }
        }
    }

    #[test]
    fn form_two_with_full_g() {
        let mut s = src();
        s.f = "0".into();
        s.g = "1".into();
        s.alpha = "t/2".into();
        s.form = TheoremForm::Two;
        let inst = s.build().unwrap();
        let t = TransformTables::build(&inst).unwrap();
        let grid = Grid::uniform(1.0, 3).unwrap();
        let c = bound_thm2(&inst, &t, &grid).unwrap();
        let b = c.values[2].unwrap();
        assert!((b / std::f64::consts::E - 1.0).abs() < 1e-6, "{b}");
    }
}
