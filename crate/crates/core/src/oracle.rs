//! The equality case, solved independently of the bound engine.
//!
//! The extremal solution satisfies
//!
//! ```text
//! φ(u(t)) = z(t) = c(t) + ∫_0^{α(t)} [f(t,s) η(u) w(u) + g(t,s) η(u)] ds        (form One)
//! φ(u(t)) = z(t) = c(t) + ∫_0^{α(t)} f(t,s) η(u) w(u) ds + ∫_0^t g(t,s) η(u) w(u) ds  (form Two)
//! ```
//!
//! It is found by Picard iteration from `z⁰ = c`. Since `α(t) <= t`, a sweep
//! can march forward in `t`, reusing the values just computed at earlier
//! nodes; the only self-reference left at a node is resolved by a scalar
//! fixed-point iteration. Integrals use trapezoidal accumulation on the
//! solution grid and `u(α(t))` is interpolated linearly between nodes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bounds::BoundCurve;
use crate::expr::Node;
use crate::numerics::Grid;
use crate::problem::{Kernel, ProblemInstance, ProblemSource, TheoremForm};

/// Values of `z` above this mark a blow-up.
pub const BLOWUP_CAP: f64 = 1e12;
const LOCAL_MAX_ITER: usize = 5000;
const LOCAL_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("solution and curve live on different grids")]
    GridMismatch,
    #[error("the equality solution did not converge")]
    NotConverged,
}

/// Fixed point of the equality case on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualitySolution {
    pub grid: Grid,
    pub z: Vec<f64>,
    pub u: Vec<f64>,
    pub converged: bool,
    /// First node at which `z` exceeded the cap or the node equation had no
    /// solution; this and later nodes hold `+inf`.
    pub blowup_index: Option<usize>,
    /// Picard sweeps performed.
    pub iterations: usize,
}

impl EqualitySolution {
    /// Index of the last node carrying a finite value.
    pub fn last_valid(&self) -> usize {
        match self.blowup_index {
            Some(0) | None => self.u.len() - 1,
            Some(i) => i - 1,
        }
    }
}

/// Outcome of a node-wise dominance comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceReport {
    pub pass: bool,
    /// `max(u - bound)` over the compared nodes; `<= 0` means no violation
    /// even without slack.
    pub max_violation: f64,
    /// Node of the smallest margin.
    pub worst_node: Option<usize>,
    /// `bound - u` at compared nodes.
    pub margin: Vec<Option<f64>>,
    pub compared: usize,
}

fn phi_is_identity(inst: &ProblemInstance) -> bool {
    matches!(inst.phi.expr().root(), Node::Var(_))
}

/// Own `φ⁻¹`: doubling expansion from `lo`, then plain bisection.
fn phi_inverse(inst: &ProblemInstance, z: f64, lo: f64) -> f64 {
    if phi_is_identity(inst) {
        return z;
    }
    let phi = |x: f64| inst.phi.at(x);
    let mut lo = lo.max(0.0);
    if phi(lo) >= z {
        return lo;
    }
    let mut hi = (2.0 * lo).max(1.0);
    let mut n = 0;
    while phi(hi) < z {
        lo = hi;
        hi *= 2.0;
        n += 1;
        if n > 2000 || !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if !(mid > lo && mid < hi) {
            break;
        }
        if phi(mid) < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Per-node weights `q` of the two kernels.
struct Weights {
    f: Vec<f64>,
    g: Vec<f64>,
}

struct Marcher<'a> {
    inst: &'a ProblemInstance,
    t: &'a [f64],
    alpha: Vec<f64>,
    c: Vec<f64>,
    /// `k(·, s_j)` for kernels without `t`, else empty.
    f_nodes: Vec<f64>,
    g_nodes: Vec<f64>,
}

fn kernel_nodes(k: &Kernel, t: &[f64]) -> Vec<f64> {
    if k.depends_on_t() {
        Vec::new()
    } else {
        t.iter().map(|&s| k.at(0.0, s)).collect()
    }
}

impl<'a> Marcher<'a> {
    fn new(inst: &'a ProblemInstance, t: &'a [f64]) -> Marcher<'a> {
        Marcher {
            inst,
            t,
            alpha: t.iter().map(|&x| inst.alpha.at(x).clamp(0.0, x)).collect(),
            c: t.iter().map(|&x| inst.c.at(x)).collect(),
            f_nodes: kernel_nodes(&inst.f, t),
            g_nodes: kernel_nodes(&inst.g, t),
        }
    }

    fn q(&self, u: f64) -> (f64, f64) {
        let eta = self.inst.eta.at(u);
        let ew = eta * self.inst.w.at(u);
        match self.inst.form {
            TheoremForm::One => (ew, eta),
            TheoremForm::Two => (ew, ew),
        }
    }

    /// `∫_0^a k(t_i, s) q(u(s)) ds` with the node-`i` values `(u_i, q_i)`
    /// supplied separately (nodes `< i` come from `u`, `q`).
    #[allow(clippy::too_many_arguments)]
    fn integral(
        &self,
        kernel: &Kernel,
        is_f: bool,
        k_nodes: &[f64],
        i: usize,
        a: f64,
        u: &[f64],
        q: &[f64],
        u_i: f64,
        q_i: f64,
        prefix: &[f64],
    ) -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let t = self.t;
        let ti = t[i];
        let kv = |j: usize| {
            if k_nodes.is_empty() {
                kernel.at(ti, t[j])
            } else {
                k_nodes[j]
            }
        };
        let qv = |j: usize| if j == i { q_i } else { q[j] };
        let uv = |j: usize| if j == i { u_i } else { u[j] };
        // last node with t_j <= a
        let jl = t[..=i].partition_point(|&s| s <= a) - 1;
        let mut sum = if !k_nodes.is_empty() && jl < i {
            prefix[jl]
        } else if !k_nodes.is_empty() {
            prefix[i - 1] + 0.5 * (t[i] - t[i - 1]) * (kv(i - 1) * qv(i - 1) + kv(i) * q_i)
        } else {
            let mut acc = 0.0;
            for j in 0..jl {
                acc += 0.5 * (t[j + 1] - t[j]) * (kv(j) * qv(j) + kv(j + 1) * qv(j + 1));
            }
            acc
        };
        if a > t[jl] && jl < i {
            let frac = (a - t[jl]) / (t[jl + 1] - t[jl]);
            let ua = uv(jl) + frac * (uv(jl + 1) - uv(jl));
            let (qf, qg) = self.q(ua);
            let qa = if is_f { qf } else { qg };
            sum += 0.5 * (a - t[jl]) * (kv(jl) * qv(jl) + kernel.at(ti, a) * qa);
        }
        sum
    }

    fn rhs(&self, i: usize, u: &[f64], w: &Weights, pf: &[f64], pg: &[f64], u_i: f64) -> f64 {
        let (qf_i, qg_i) = self.q(u_i);
        let inst = self.inst;
        let a = self.alpha[i];
        let mut z = self.c[i];
        if !inst.f.is_zero() {
            z += self.integral(&inst.f, true, &self.f_nodes, i, a, u, &w.f, u_i, qf_i, pf);
        }
        if !inst.g.is_zero() {
            let upper = match inst.form {
                TheoremForm::One => a,
                TheoremForm::Two => self.t[i],
            };
            z += self.integral(&inst.g, false, &self.g_nodes, i, upper, u, &w.g, u_i, qg_i, pg);
        }
        z
    }

    /// One forward sweep starting from the previous iterate.
    fn sweep(&self, prev: &[f64], z: &mut [f64], u: &mut [f64]) -> Option<usize> {
        let n = self.t.len();
        let mut w = Weights {
            f: vec![0.0; n],
            g: vec![0.0; n],
        };
        let mut pf = vec![0.0; n];
        let mut pg = vec![0.0; n];
        for i in 0..n {
            let lo = if i > 0 { u[i - 1] } else { 0.0 };
            let mut zi = prev[i].max(self.c[i]);
            if i > 0 {
                zi = zi.max(z[i - 1]);
            }
            let mut ui = phi_inverse(self.inst, zi, lo);
            let mut settled = false;
            for _ in 0..LOCAL_MAX_ITER {
                let next = self.rhs(i, u, &w, &pf, &pg, ui);
                if !next.is_finite() || next > BLOWUP_CAP {
                    zi = f64::INFINITY;
                    break;
                }
                let change = (next - zi).abs();
                zi = next;
                ui = phi_inverse(self.inst, zi, lo);
                if change <= LOCAL_TOL * (1.0 + zi.abs()) {
                    settled = true;
                    break;
                }
            }
            if !settled {
                for j in i..n {
                    z[j] = f64::INFINITY;
                    u[j] = f64::INFINITY;
                }
                return Some(i);
            }
            z[i] = zi;
            u[i] = ui;
            let (qf, qg) = self.q(ui);
            w.f[i] = qf;
            w.g[i] = qg;
            if i > 0 {
                let h = 0.5 * (self.t[i] - self.t[i - 1]);
                if !self.f_nodes.is_empty() {
                    pf[i] = pf[i - 1] + h * (self.f_nodes[i - 1] * w.f[i - 1] + self.f_nodes[i] * qf);
                }
                if !self.g_nodes.is_empty() {
                    pg[i] = pg[i - 1] + h * (self.g_nodes[i - 1] * w.g[i - 1] + self.g_nodes[i] * qg);
                }
            }
        }
        None
    }
}

/// Solves the equality case on `grid` by marching Picard sweeps.
///
/// Stops when `sup |z^{k+1} - z^k| <= tol (1 + sup |z^k|)` over the finite
/// nodes, or after `max_iter` sweeps.
pub fn solve_equality(inst: &ProblemInstance, grid: &Grid, max_iter: usize, tol: f64) -> EqualitySolution {
    let t = grid.nodes();
    let n = t.len();
    let marcher = Marcher::new(inst, t);
    let mut z_prev: Vec<f64> = marcher.c.clone();
    let mut z = vec![0.0; n];
    let mut u = vec![0.0; n];
    let mut blowup = None;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        blowup = marcher.sweep(&z_prev, &mut z, &mut u);
        let end = blowup.unwrap_or(n);
        let sup = z_prev[..end].iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let change = (0..end).fold(0.0_f64, |m, j| m.max((z[j] - z_prev[j]).abs()));
        z_prev.copy_from_slice(&z);
        if change <= tol * (1.0 + sup) {
            converged = true;
            break;
        }
    }
    EqualitySolution {
        grid: grid.clone(),
        z,
        u,
        converged,
        blowup_index: blowup,
        iterations,
    }
}

/// Richardson combination `(4 u_{h/2} - u_h) / 3` of the solutions on `grid`
/// and on its midpoint refinement, reported on `grid`.
///
/// Cancels the leading `h²` term of the trapezoidal error, which matters on
/// instances where the bound is tight.
pub fn solve_equality_extrapolated(inst: &ProblemInstance, grid: &Grid, max_iter: usize, tol: f64) -> EqualitySolution {
    let coarse = solve_equality(inst, grid, max_iter, tol);
    let fine = solve_equality(inst, &grid.refined(), max_iter, tol);
    let n = grid.len();
    let fine_blow = fine.blowup_index.map(|j| j / 2);
    let blowup_index = match (coarse.blowup_index, fine_blow) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
    let end = blowup_index.unwrap_or(n);
    let combine = |c: &[f64], f: &[f64], i: usize| {
        if i >= end {
            f64::INFINITY
        } else if i == 0 {
            c[0]
        } else {
            (4.0 * f[2 * i] - c[i]) / 3.0
        }
    };
    let z: Vec<f64> = (0..n).map(|i| combine(&coarse.z, &fine.z, i)).collect();
    let u: Vec<f64> = (0..n).map(|i| combine(&coarse.u, &fine.u, i)).collect();
    EqualitySolution {
        grid: grid.clone(),
        z,
        u,
        converged: coarse.converged && fine.converged,
        blowup_index,
        iterations: coarse.iterations.max(fine.iterations),
    }
}

/// [`solve_equality_extrapolated`] on `grid` refined until its spacing is at
/// most `spacing`, sampled back onto `grid`.
pub fn solve_equality_resolved(
    inst: &ProblemInstance,
    grid: &Grid,
    spacing: f64,
    max_iter: usize,
    tol: f64,
) -> EqualitySolution {
    let mut fine = grid.clone();
    let mut stride = 1usize;
    while fine.max_spacing() > spacing && stride < 1 << 12 {
        fine = fine.refined();
        stride *= 2;
    }
    let sol = solve_equality_extrapolated(inst, &fine, max_iter, tol);
    if stride == 1 {
        return sol;
    }
    let pick = |v: &[f64]| (0..grid.len()).map(|i| v[i * stride]).collect::<Vec<_>>();
    EqualitySolution {
        grid: grid.clone(),
        z: pick(&sol.z),
        u: pick(&sol.u),
        converged: sol.converged,
        blowup_index: sol.blowup_index.map(|j| j.div_ceil(stride)),
        iterations: sol.iterations,
    }
}

/// Checks `u <= bound (1 + rel_slack) + abs_slack` at every node with
/// `t <= min(τ, last finite oracle node)` where the curve is in domain.
pub fn check_dominance(
    sol: &EqualitySolution,
    curve: &BoundCurve,
    rel_slack: f64,
    abs_slack: f64,
) -> Result<DominanceReport, OracleError> {
    check_dominance_until(sol, curve, rel_slack, abs_slack, f64::INFINITY)
}

/// [`check_dominance`] restricted further to `t <= t_limit`.
pub fn check_dominance_until(
    sol: &EqualitySolution,
    curve: &BoundCurve,
    rel_slack: f64,
    abs_slack: f64,
    t_limit: f64,
) -> Result<DominanceReport, OracleError> {
    if sol.grid.nodes() != curve.grid.nodes() {
        return Err(OracleError::GridMismatch);
    }
    if !sol.converged {
        return Err(OracleError::NotConverged);
    }
    let t = sol.grid.nodes();
    let last = sol.last_valid();
    let limit = curve.tau.min(t_limit);
    let mut pass = true;
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_node = None;
    let mut compared = 0;
    let mut margin = vec![None; t.len()];
    for i in 0..t.len() {
        if i > last || t[i] > limit {
            continue;
        }
        let (Some(b), u) = (curve.values[i], sol.u[i]) else {
            continue;
        };
        if !u.is_finite() {
            continue;
        }
        compared += 1;
        margin[i] = Some(b - u);
        if u - b > max_violation {
            max_violation = u - b;
            worst_node = Some(i);
        }
        if !(u <= b * (1.0 + rel_slack) + abs_slack) {
            pass = false;
        }
    }
    Ok(DominanceReport {
        pass,
        max_violation,
        worst_node,
        margin,
        compared,
    })
}

/// Families of random instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// `φ = x^m`, `η = m/(m-n) x^n` with random `m > n > 0`.
    Power,
    /// `φ = x`, `η = x`.
    GronwallLike,
    /// `φ = x^n`, `η = (x^n + 1) ln(x^n + 1)`, `g = 0`.
    LogEta,
    /// A mix of the shapes above and a few others.
    Mixed,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Power, Family::GronwallLike, Family::LogEta, Family::Mixed];

    /// The family a batch run uses for `seed`.
    pub fn for_seed(seed: u64) -> Family {
        Family::ALL[(seed % 4) as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Power => "power",
            Family::GronwallLike => "gronwall-like",
            Family::LogEta => "log-eta",
            Family::Mixed => "mixed",
        }
    }

    pub fn parse(name: &str) -> Option<Family> {
        Family::ALL.into_iter().find(|f| f.name() == name)
    }
}

fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a str]) -> &'a str {
    items[rng.gen_range(0..items.len())]
}

fn random_alpha(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 => "t".into(),
        1 => "t/2".into(),
        2 => "t*t/(1+t)".into(),
        _ => format!("{:?}*t", rng.gen_range(0.05..=1.0_f64)),
    }
}

/// Nonnegative kernels, nondecreasing in `t`.
fn random_kernel(rng: &mut ChaCha8Rng, zero_chance: f64) -> String {
    if rng.gen_bool(zero_chance) {
        return "0".into();
    }
    let a: f64 = rng.gen_range(0.1..1.5);
    let b: f64 = rng.gen_range(0.0..1.0);
    match rng.gen_range(0..5) {
        0 => format!("{a:?}"),
        1 => format!("{a:?} + {b:?}*s"),
        2 => format!("{a:?}*(1 + {b:?}*t*s)"),
        3 => format!("{a:?}*exp(-s)"),
        _ => format!("{a:?}*(1 + {b:?}*t)"),
    }
}

fn random_c(rng: &mut ChaCha8Rng, c0: f64) -> String {
    if rng.gen_bool(0.5) {
        format!("{c0:?}")
    } else {
        format!("{c0:?} + {:?}*t", rng.gen_range(0.0..1.0_f64))
    }
}

/// A seeded instance of `family` that passes validation.
pub fn generate_random_instance(seed: u64, family: Family) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c0: f64 = rng.gen_range(0.5..2.0);
    let alpha = random_alpha(&mut rng);
    let form = if rng.gen_bool(0.5) {
        TheoremForm::One
    } else {
        TheoremForm::Two
    };
    let f = random_kernel(&mut rng, 0.1);
    let g = random_kernel(&mut rng, 0.3);
    let src = match family {
        Family::Power => {
            let m: f64 = rng.gen_range(1.5..4.0);
            let n = m * rng.gen_range(0.2..0.75);
            ProblemSource {
                phi: format!("x^{m:?}"),
                c: random_c(&mut rng, c0),
                eta: format!("{:?}*x^{n:?}", m / (m - n)),
                w: pick(&mut rng, &["1", "1 + x", "sqrt(1 + x)", "1 + x^2"]).into(),
                alpha,
                f,
                g,
                x0: Some(0.0),
                x1: None,
                form,
                t_max: 1.0,
            }
        }
        Family::GronwallLike => ProblemSource {
            phi: "x".into(),
            c: random_c(&mut rng, c0),
            eta: "x".into(),
            w: pick(&mut rng, &["1", "1 + x", "x", "sqrt(1 + x)"]).into(),
            alpha,
            f,
            g,
            x0: None,
            x1: None,
            form,
            t_max: 1.0,
        },
        Family::LogEta => {
            let n: f64 = rng.gen_range(0.5..2.0);
            ProblemSource {
                phi: format!("x^{n:?}"),
                c: random_c(&mut rng, c0),
                eta: format!("(x^{n:?} + 1)*ln(x^{n:?} + 1)"),
                w: pick(&mut rng, &["1", "1 + x", "sqrt(1 + x)"]).into(),
                alpha,
                f,
                g: "0".into(),
                x0: None,
                x1: None,
                form,
                t_max: 1.0,
            }
        }
        Family::Mixed => ProblemSource {
            phi: pick(&mut rng, &["x", "x^2", "x + x^3", "exp(x) - 1"]).into(),
            c: random_c(&mut rng, c0),
            eta: pick(&mut rng, &["x", "sqrt(x)", "1 + x"]).into(),
            w: pick(&mut rng, &["1", "1 + x", "sqrt(1 + x)"]).into(),
            alpha,
            f,
            g,
            x0: None,
            x1: None,
            form,
            t_max: 1.0,
        },
    };
    src.build().expect("generated expressions parse")
}
