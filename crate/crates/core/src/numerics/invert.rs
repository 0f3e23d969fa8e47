use super::NumericsError;

/// Bisection stops once the bracket is this narrow relative to its ends.
pub const INVERSION_REL_WIDTH: f64 = 1e-12;

const MAX_EXPANSIONS: usize = 2100;
const MAX_BISECTIONS: usize = 4000;
const FLAT_DOUBLINGS: usize = 8;

/// Solves `F(x) = y` for a continuous nondecreasing `F`, searching to the
/// right of `x_lo`.
///
/// The bracket is grown by doubling steps from `x_lo`, then narrowed by
/// bisection to relative width [`INVERSION_REL_WIDTH`] and until
/// `|F(x) - y| <= tol * (1 + |y|)` (or the floating-point bracket is exhausted).
/// If `F` stops growing before reaching `y`, the target is reported as outside
/// the image of `F`.
pub fn invert_monotone<F: FnMut(f64) -> f64>(mut f: F, y: f64, x_lo: f64, tol: f64) -> Result<f64, NumericsError> {
    let f_lo = f(x_lo);
    if !f_lo.is_finite() {
        return Err(NumericsError::NonFinite { x: x_lo });
    }
    if y.is_nan() {
        return Err(NumericsError::NonFinite { x: x_lo });
    }
    if y <= f_lo {
        if f_lo - y <= tol * (1.0 + y.abs()) {
            return Ok(x_lo);
        }
        return Err(NumericsError::BelowRange { y, floor: f_lo });
    }
    if y == f64::INFINITY {
        return Err(NumericsError::OutsideImage { y, sup: f64::INFINITY });
    }
    let mut step = x_lo.abs().max(1.0);
    let mut lo = x_lo;
    let mut prev = f_lo;
    let mut flat = 0;
    for _ in 0..MAX_EXPANSIONS {
        let hi = x_lo + step;
        if !hi.is_finite() {
            break;
        }
        let fh = f(hi);
        if fh.is_nan() {
            return Err(NumericsError::NonFinite { x: hi });
        }
        if fh >= y {
            return bisect_bracket(f, y, lo, hi, INVERSION_REL_WIDTH, tol);
        }
        if fh - prev <= 1e-15 * (1.0 + fh.abs()) {
            flat += 1;
            if flat >= FLAT_DOUBLINGS {
                return Err(NumericsError::OutsideImage { y, sup: fh });
            }
        } else {
            flat = 0;
        }
        prev = fh;
        lo = hi;
        step *= 2.0;
    }
    Err(NumericsError::BracketExhausted { y })
}

/// Bisection for `F(x) = y` on a bracket with `F(lo) < y <= F(hi)`.
///
/// Wide brackets on the positive axis are split geometrically so the number
/// of steps grows with the number of binary orders of magnitude, not the
/// bracket width.
pub fn bisect_bracket<F: FnMut(f64) -> f64>(
    mut f: F,
    y: f64,
    mut lo: f64,
    mut hi: f64,
    rel_width: f64,
    tol: f64,
) -> Result<f64, NumericsError> {
    let mut f_lo = f64::NEG_INFINITY;
    let mut f_hi = f64::INFINITY;
    let ok = |fx: f64| (fx - y).abs() <= tol * (1.0 + y.abs());
    for _ in 0..MAX_BISECTIONS {
        let narrow = hi - lo <= rel_width * lo.abs().max(hi.abs());
        if narrow && (ok(f_lo) || ok(f_hi)) {
            break;
        }
        let mid = if lo > 0.0 && hi > 4.0 * lo {
            lo.sqrt() * hi.sqrt()
        } else {
            0.5 * (lo + hi)
        };
        if !(mid > lo && mid < hi) {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(NumericsError::NonFinite { x: mid });
        }
        if fm < y {
            lo = mid;
            f_lo = fm;
        } else {
            hi = mid;
            f_hi = fm;
        }
    }
    if (f_lo - y).abs() < (f_hi - y).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}
