//! Monotone cubic Hermite segments.
//!
//! Slopes are limited with the Fritsch–Carlson condition so that each segment
//! stays monotone between its end values.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
    pub d0: f64,
    pub d1: f64,
}

impl Segment {
    /// Builds a segment from end values and (possibly unlimited) slopes.
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> Segment {
        let (d0, d1) = limit_slopes(x1 - x0, y1 - y0, d0, d1);
        Segment { x0, x1, y0, y1, d0, d1 }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = self.x1 - self.x0;
        let t = (x - self.x0) / h;
        let u = 1.0 - t;
        let h00 = (1.0 + 2.0 * t) * u * u;
        let h10 = t * u * u;
        let h01 = t * t * (3.0 - 2.0 * t);
        let h11 = t * t * (t - 1.0);
        h00 * self.y0 + h01 * self.y1 + h * (h10 * self.d0 + h11 * self.d1)
    }

    /// Solves `eval(x) = y` by bisection for `y` between the end values.
    pub fn invert(&self, y: f64) -> f64 {
        if y <= self.y0 {
            return self.x0;
        }
        if y >= self.y1 {
            return self.x1;
        }
        let (mut lo, mut hi) = (self.x0, self.x1);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if !(mid > lo && mid < hi) {
                break;
            }
            if self.eval(mid) < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

#[allow(clippy::manual_clamp)]
fn limit_slopes(h: f64, dy: f64, d0: f64, d1: f64) -> (f64, f64) {
    let secant = dy / h;
    if secant == 0.0 {
        return (0.0, 0.0);
    }
    // an infinite end slope (singular endpoint) is clamped to the boundary
    // of the monotone region; a NaN slope falls to 0
    let a = (d0 / secant).max(0.0).min(3.0);
    let b = (d1 / secant).max(0.0).min(3.0);
    let s = a * a + b * b;
    if s > 9.0 {
        let tau = 3.0 / s.sqrt();
        (tau * a * secant, tau * b * secant)
    } else {
        (a * secant, b * secant)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let f = |x: f64| x * x * x + x;
        let df = |x: f64| 3.0 * x * x + 1.0;
        let s = Segment::new(1.0, 1.5, f(1.0), f(1.5), df(1.0), df(1.5));
        for i in 0..=10 {
            let x = 1.0 + 0.05 * i as f64;
            assert!((s.eval(x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn limited_segment_is_monotone() {
        let s = Segment::new(0.0, 1.0, 0.0, 1.0, 50.0, 50.0);
        let mut prev = s.eval(0.0);
        for i in 1..=1000 {
            let v = s.eval(i as f64 / 1000.0);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn inversion_round_trip() {
        let s = Segment::new(2.0, 3.0, 0.5, 0.9, 0.3, 0.5);
        for i in 1..10 {
            let y = 0.5 + 0.04 * i as f64;
            let x = s.invert(y);
            assert!((s.eval(x) - y).abs() < 1e-14);
        }
    }
}
