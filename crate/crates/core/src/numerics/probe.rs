use super::quad::integrate;

/// Number of doublings in [`probe_image_sup`].
pub const PROBE_DOUBLINGS: i32 = 60;

/// Result of probing `sup F` along a geometric sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageProbe {
    /// Conservative estimate of the supremum, `+inf` when unbounded.
    pub sup: f64,
    pub bounded: bool,
    pub points: Vec<(f64, f64)>,
    /// Set when `F` stopped being finite at some probe point.
    pub hit_non_finite: bool,
}

/// Evaluates a nondecreasing `F` at `x_start * 2^k`, `k = 0..=60`.
///
/// Classified bounded when each of the last five increments is below
/// `1e-12 * (1 + |F|)`, the cap then being the last value plus the last
/// increment; or when the last increments shrink by a stable ratio `r <= 0.9`,
/// the cap then adding the geometric tail `d r / (1 - r)`. A non-finite value
/// ends the probe and is classified bounded at the last finite value.
pub fn probe_image_sup<F: FnMut(f64) -> f64>(mut f: F, x_start: f64) -> ImageProbe {
    let mut points = Vec::with_capacity(PROBE_DOUBLINGS as usize + 1);
    let mut hit_non_finite = false;
    for k in 0..=PROBE_DOUBLINGS {
        let x = x_start * 2f64.powi(k);
        let v = f(x);
        if !v.is_finite() {
            hit_non_finite = true;
            break;
        }
        points.push((x, v));
    }
    let Some(&(_, last)) = points.last() else {
        return ImageProbe {
            sup: f64::NAN,
            bounded: true,
            points,
            hit_non_finite,
        };
    };
    if hit_non_finite {
        return ImageProbe {
            sup: last,
            bounded: true,
            points,
            hit_non_finite,
        };
    }
    let increments: Vec<f64> = points.windows(2).map(|w| w[1].1 - w[0].1).collect();
    let flat = increments.len() >= 5
        && increments[increments.len() - 5..]
            .iter()
            .all(|d| d.abs() < 1e-12 * (1.0 + last.abs()));
    let (bounded, sup) = if flat {
        (true, last + increments.last().copied().unwrap_or(0.0).max(0.0))
    } else if let Some(r) = geometric_ratio(&increments) {
        let d = *increments.last().expect("increments");
        (true, last + d * r / (1.0 - r))
    } else {
        (false, f64::INFINITY)
    };
    ImageProbe {
        sup,
        bounded,
        points,
        hit_non_finite,
    }
}

const GL_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_1,
];

/// `∫_a^b h` as `∫ e^u h(e^u) du` over `[ln a, ln b]`, ten-point Gauss-Legendre.
fn log_panel<H: FnMut(f64) -> f64>(h: &mut H, a: f64, b: f64) -> f64 {
    let (la, lb) = (a.ln(), b.ln());
    let (mid, half) = (0.5 * (la + lb), 0.5 * (lb - la));
    let mut sum = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        for u in [mid - half * x, mid + half * x] {
            let s = u.exp();
            sum += w * s * h(s);
        }
    }
    sum * half
}

/// Largest of the last five increment ratios when they are positive, stable
/// within 0.05 and at most 0.9.
fn geometric_ratio(increments: &[f64]) -> Option<f64> {
    if increments.len() < 6 {
        return None;
    }
    let tail = &increments[increments.len() - 6..];
    if tail.iter().any(|d| !(*d > 0.0)) {
        return None;
    }
    let ratios: Vec<f64> = tail.windows(2).map(|w| w[1] / w[0]).collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    (max <= 0.9 && max - min <= 0.01).then_some(max)
}

/// Decides whether `∫_0^{x_probe} h` diverges at 0, for `h > 0` on
/// `(0, x_probe]`.
///
/// Computes `∫_{ε_k}^{x_probe} h` for `ε_k = x_probe * 2^-k`, `k = 4..=40`.
/// The dyadic pieces use a fixed Gauss-Legendre rule in `ln s`: near 0 the
/// integrand often carries rounding noise that would stall an adaptive rule.
/// The integral is judged finite when the last increment is below
/// `tol * (1 + |I|)`, or when the increments decay geometrically with a
/// stable ratio at most 0.9. Anything else, including quadrature failures,
/// counts as divergent.
pub fn diverges_at_zero<H: FnMut(f64) -> f64>(mut h: H, x_probe: f64, tol: f64) -> bool {
    if !(x_probe > 0.0) {
        return true;
    }
    let eps = |k: i32| x_probe * 2f64.powi(-k);
    let Ok(first) = integrate(&mut h, eps(4), x_probe, tol) else {
        return true;
    };
    let mut total = first.value;
    let mut increments = Vec::with_capacity(37);
    for k in 5..=40 {
        let r = log_panel(&mut h, eps(k), eps(k - 1));
        if !r.is_finite() {
            return true;
        }
        total += r;
        increments.push(r);
    }
    let last = *increments.last().expect("36 increments");
    if last.abs() <= tol * (1.0 + total.abs()) {
        return false;
    }
    let ratios: Vec<f64> = increments
        .windows(2)
        .rev()
        .take(5)
        .map(|w| if w[0] != 0.0 { w[1] / w[0] } else { f64::INFINITY })
        .collect();
    let max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let geometric = min >= 0.0 && max <= 0.9 && max - min <= 1e-3;
    !geometric
}
