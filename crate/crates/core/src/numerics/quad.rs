use super::{Grid, NumericsError};

/// Default mixed tolerance for definite integrals.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 50;
const MAX_EVALS: usize = 4_000_000;
const MAX_SINGULAR_PANELS: u32 = 1100;

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    /// Accumulated Richardson error estimate.
    pub error: f64,
    pub evals: usize,
    /// False when the refinement budget ran out before the tolerance was met;
    /// `value` is still the best available estimate.
    pub converged: bool,
}

trait QuadValue: Copy {
    fn add(self, o: Self) -> Self;
    fn sub(self, o: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    fn norm(self) -> f64;
    fn finite(self) -> bool;
}

impl QuadValue for f64 {
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn sub(self, o: Self) -> Self {
        self - o
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn norm(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl QuadValue for [f64; 2] {
    fn add(self, o: Self) -> Self {
        [self[0] + o[0], self[1] + o[1]]
    }
    fn sub(self, o: Self) -> Self {
        [self[0] - o[0], self[1] - o[1]]
    }
    fn scale(self, k: f64) -> Self {
        [self[0] * k, self[1] * k]
    }
    fn norm(self) -> f64 {
        self[0].abs().max(self[1].abs())
    }
    fn finite(self) -> bool {
        self[0].is_finite() && self[1].is_finite()
    }
}

struct Simpson<F> {
    f: F,
    evals: usize,
    error: f64,
    exhausted: bool,
    min_depth: u32,
}

impl<V: QuadValue, F: FnMut(f64) -> V> Simpson<F> {
    fn eval(&mut self, x: f64) -> Result<V, NumericsError> {
        self.evals += 1;
        let v = (self.f)(x);
        if v.finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFinite { x })
        }
    }

    /// Integrates over `[a, b]` given finite endpoint values.
    fn run(&mut self, a: f64, b: f64, fa: V, fb: V, tol: f64) -> Result<V, NumericsError> {
        let m = 0.5 * (a + b);
        let fm = self.eval(m)?;
        let whole = fa.add(fm.scale(4.0)).add(fb).scale((b - a) / 6.0);
        let eps = tol * (1.0 + whole.norm());
        self.step(a, b, fa, fm, fb, whole, eps, 0)
    }

    #[allow(clippy::too_many_arguments)]
    fn step(
        &mut self,
        a: f64,
        b: f64,
        fa: V,
        fm: V,
        fb: V,
        whole: V,
        eps: f64,
        depth: u32,
    ) -> Result<V, NumericsError> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = self.eval(lm)?;
        let frm = self.eval(rm)?;
        let left = fa.add(flm.scale(4.0)).add(fm).scale((m - a) / 6.0);
        let right = fm.add(frm.scale(4.0)).add(fb).scale((b - m) / 6.0);
        let delta = left.add(right).sub(whole);
        let d = delta.norm();
        let unresolvable = !(lm > a && rm < b && m > lm && rm > m);
        let out_of_budget = depth >= MAX_DEPTH || self.evals >= MAX_EVALS;
        if unresolvable || out_of_budget || (depth >= self.min_depth && d <= 15.0 * eps) {
            if d > 15.0 * eps {
                self.exhausted = true;
            }
            self.error += d / 15.0;
            return Ok(left.add(right).add(delta.scale(1.0 / 15.0)));
        }
        let l = self.step(a, m, fa, flm, fm, left, 0.5 * eps, depth + 1)?;
        let r = self.step(m, b, fm, frm, fb, right, 0.5 * eps, depth + 1)?;
        Ok(l.add(r))
    }
}

fn check_interval(a: f64, b: f64) -> Result<(), NumericsError> {
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(NumericsError::InvalidInterval { a, b });
    }
    Ok(())
}

fn regular<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64, min_depth: u32) -> Result<Integral, NumericsError> {
    let mut s = Simpson {
        f,
        evals: 0,
        error: 0.0,
        exhausted: false,
        min_depth,
    };
    let fa = s.eval(a)?;
    let fb = s.eval(b)?;
    let value = s.run(a, b, fa, fb, tol)?;
    Ok(Integral {
        value,
        error: s.error,
        evals: s.evals,
        converged: !s.exhausted,
    })
}

/// Adaptive Simpson estimate of `∫_a^b h` with mixed tolerance
/// `|err| <= tol * (1 + |result|)`.
///
/// `h` may be infinite at the left endpoint `a` (an integrable algebraic
/// singularity). It is then never evaluated at `a`: the interval is split
/// into dyadic panels shrinking towards `a` and the remaining tail is
/// extrapolated from the geometric decay of the panel contributions.
pub fn integrate<H: FnMut(f64) -> f64>(mut h: H, a: f64, b: f64, tol: f64) -> Result<Integral, NumericsError> {
    check_interval(a, b)?;
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evals: 0,
            converged: true,
        });
    }
    let fa = h(a);
    if !fa.is_finite() {
        return singular_left(h, a, b, tol);
    }
    let mut s = Simpson {
        f: h,
        evals: 1,
        error: 0.0,
        exhausted: false,
        min_depth: 1,
    };
    let fb = s.eval(b)?;
    let value = s.run(a, b, fa, fb, tol)?;
    Ok(Integral {
        value,
        error: s.error,
        evals: s.evals,
        converged: !s.exhausted,
    })
}

fn singular_left<H: FnMut(f64) -> f64>(mut h: H, a: f64, b: f64, tol: f64) -> Result<Integral, NumericsError> {
    let width = b - a;
    let head = regular(&mut h, a + 0.5 * width, b, tol, 1)?;
    let mut total = head.value;
    let mut evals = head.evals;
    let mut error = head.error;
    let mut prev_panel: Option<f64> = None;
    let mut prev_estimate: Option<f64> = None;
    let mut stable = 0;
    let mut growing = 0;
    let mut zeros = 0;
    let mut scale = 0.5;
    for _ in 0..MAX_SINGULAR_PANELS {
        let hi = a + width * scale;
        let lo = a + width * scale * 0.5;
        scale *= 0.5;
        if !(lo > a && hi > lo) {
            break;
        }
        let panel = regular(&mut h, lo, hi, tol, 0)?;
        evals += panel.evals;
        error += panel.error;
        let d = panel.value;
        total += d;
        match prev_panel {
            Some(p) if p != 0.0 => {
                zeros = 0;
                let rho = d / p;
                if (0.0..0.999).contains(&rho) {
                    growing = 0;
                    let estimate = total + d * rho / (1.0 - rho);
                    let change = prev_estimate.map(|pe| (estimate - pe).abs());
                    match change {
                        Some(c) if c <= tol * (1.0 + estimate.abs()) => stable += 1,
                        _ => stable = 0,
                    }
                    if stable >= 2 {
                        return Ok(Integral {
                            value: estimate,
                            error: error + change.unwrap_or(0.0),
                            evals,
                            converged: true,
                        });
                    }
                    prev_estimate = Some(estimate);
                } else {
                    stable = 0;
                    if rho >= 0.999 {
                        growing += 1;
                        if growing >= 8 {
                            return Err(NumericsError::Divergent { a });
                        }
                    }
                }
            }
            Some(_) if d == 0.0 => {
                zeros += 1;
                if zeros >= 3 {
                    return Ok(Integral {
                        value: total,
                        error,
                        evals,
                        converged: true,
                    });
                }
            }
            _ => {}
        }
        prev_panel = Some(d);
    }
    match prev_estimate {
        Some(value) => Ok(Integral {
            value,
            error,
            evals,
            converged: false,
        }),
        None => Err(NumericsError::Divergent { a }),
    }
}

/// Joint adaptive Simpson for two integrands sharing their sample points
/// (the tolerance applies to the larger component). Both must be finite on
/// the closed interval.
pub fn integrate_pair<H: FnMut(f64) -> [f64; 2]>(
    h: H,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<([f64; 2], bool), NumericsError> {
    check_interval(a, b)?;
    if a == b {
        return Ok(([0.0; 2], true));
    }
    let mut s = Simpson {
        f: h,
        evals: 0,
        error: 0.0,
        exhausted: false,
        min_depth: 0,
    };
    let fa = s.eval(a)?;
    let fb = s.eval(b)?;
    let value = s.run(a, b, fa, fb, tol)?;
    Ok((value, !s.exhausted))
}

/// Running integrals `result[i] = ∫_0^{grid[i]} h`, accumulated panel by
/// panel so that every increment is an independent [`integrate`] call.
pub fn cumulative<H: FnMut(f64) -> f64>(mut h: H, grid: &Grid, tol: f64) -> Result<Vec<f64>, NumericsError> {
    let nodes = grid.nodes();
    let mut out = Vec::with_capacity(nodes.len());
    out.push(0.0);
    let mut acc = 0.0;
    for w in nodes.windows(2) {
        acc += integrate(&mut h, w[0], w[1], tol)?.value;
        out.push(acc);
    }
    Ok(out)
}
