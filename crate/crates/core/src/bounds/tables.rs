//! Tabulated `G` and `Ψ`.
//!
//! Everything is stored in `z`-space (the space of values of `φ`). Besides
//! `G(z) = ∫_{x0}^z dζ/η(φ⁻¹ζ)` the table carries
//!
//! ```text
//! H(z) = Ψ(G(z)) = ∫_{z1}^z dζ / (η(φ⁻¹ζ) w(φ⁻¹ζ)),   z1 = G⁻¹(x1),
//! ```
//!
//! obtained from the definition of `Ψ` by the substitution `s = G(ζ)`. Then
//! `Ψ = H ∘ G⁻¹` and `Ψ⁻¹ = G ∘ H⁻¹`, so no quadrature ever has `G⁻¹` inside
//! its integrand.
//!
//! Coarse knots sit at `c(0) 2^k`; each coarse panel is refined on first use
//! into monotone cubic Hermite pieces with exact end slopes.

use std::sync::{Arc, OnceLock};

use crate::numerics::hermite::Segment;
use crate::numerics::{
    bisect_bracket, diverges_at_zero, integrate, integrate_pair, invert_monotone, probe_image_sup, ImageProbe,
    NumericsError, DEFAULT_TOL, PROBE_DOUBLINGS,
};
use crate::problem::{ProblemInstance, ScalarFn};

use super::BoundsError;

/// Tolerance of the panel integrals behind every knot.
const PANEL_TOL: f64 = 1e-13;
/// Interpolation budget per piece, relative to `1 + |value|`.
const PIECE_BUDGET: f64 = 1e-10;
const MAX_REFINE_DEPTH: u32 = 40;
/// Knots below `c(0)` when `x0 = 0`.
const HEAD_DOUBLINGS: i32 = 40;
/// The last knot sits one doubling past the last probe point.
const TOP_DOUBLING: i32 = PROBE_DOUBLINGS + 1;
const PHI_INV_REL_WIDTH: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Comp {
    G,
    H,
}

#[derive(Debug, Clone, Copy)]
struct Knot {
    z: f64,
    /// `φ⁻¹(z)`
    x: f64,
    /// `G` and `H` relative to the knot at `c(0)`.
    g: f64,
    h: f64,
    dg: f64,
    dh: f64,
}

impl Knot {
    fn value(&self, comp: Comp) -> f64 {
        match comp {
            Comp::G => self.g,
            Comp::H => self.h,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: Knot,
    b: Knot,
    sg: Segment,
    sh: Segment,
    /// False when refinement hit its depth limit; values are then integrated.
    trusted: bool,
}

impl Piece {
    fn new(a: Knot, b: Knot, trusted: bool) -> Piece {
        Piece {
            a,
            b,
            sg: Segment::new(a.z, b.z, a.g, b.g, a.dg, b.dg),
            sh: Segment::new(a.z, b.z, a.h, b.h, a.dh, b.dh),
            trusted,
        }
    }

    fn segment(&self, comp: Comp) -> &Segment {
        match comp {
            Comp::G => &self.sg,
            Comp::H => &self.sh,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum PhiKind {
    Identity,
    Power(f64),
    General,
}

fn classify_phi(phi: &ScalarFn) -> PhiKind {
    match phi.power_exponent() {
        Some(1.0) => PhiKind::Identity,
        Some(p) => PhiKind::Power(p),
        None => PhiKind::General,
    }
}

/// The part of the tables that does not depend on `x1`.
#[derive(Debug)]
struct Core {
    inst: ProblemInstance,
    phi_kind: PhiKind,
    knots: Vec<Knot>,
    panels: Vec<OnceLock<Result<Vec<Piece>, NumericsError>>>,
    /// `G` relative to the reference knot at `z = 0`, when `x0 = 0`.
    head_g: Option<f64>,
    /// `G_rel(x0)`.
    g_origin: f64,
}

impl Core {
    fn phi(&self, x: f64) -> f64 {
        self.inst.phi.at(x)
    }

    /// `φ⁻¹(z)` for `z` in `[φ(lo), φ(hi)]`.
    fn phi_inv_in(&self, z: f64, lo: f64, hi: f64) -> f64 {
        match self.phi_kind {
            PhiKind::Identity => z,
            PhiKind::Power(p) => z.powf(1.0 / p),
            PhiKind::General => {
                if z <= self.phi(lo) {
                    return lo;
                }
                if z >= self.phi(hi) {
                    return hi;
                }
                bisect_bracket(|x| self.phi(x), z, lo, hi, PHI_INV_REL_WIDTH, 0.0).unwrap_or(f64::NAN)
            }
        }
    }

    fn phi_inv_free(&self, z: f64) -> Result<f64, NumericsError> {
        match self.phi_kind {
            PhiKind::Identity => Ok(z),
            PhiKind::Power(p) => Ok(z.powf(1.0 / p)),
            PhiKind::General => {
                if z == self.phi(0.0) {
                    return Ok(0.0);
                }
                let x = invert_monotone(|x| self.phi(x), z, 0.0, 0.0)?;
                Ok(x)
            }
        }
    }

    /// `[1/η(x), 1/(η(x) w(x))]` at `x = φ⁻¹(z)`.
    fn integrands_at(&self, x: f64) -> [f64; 2] {
        let hg = 1.0 / self.inst.eta.at(x);
        [hg, hg / self.inst.w.at(x)]
    }

    fn integrands(&self, z: f64, lo: f64, hi: f64) -> [f64; 2] {
        self.integrands_at(self.phi_inv_in(z, lo, hi))
    }

    /// `∫_a^b` of both integrands, `φ⁻¹` bracketed by `[xa, xb]`.
    fn panel(&self, a: f64, b: f64, xa: f64, xb: f64) -> Result<[f64; 2], NumericsError> {
        match integrate_pair(|z| self.integrands(z, xa, xb), a, b, PANEL_TOL) {
            Err(NumericsError::NonFinite { x }) if x == a => {
                // singular left end: integrate each component on its own
                let ig = integrate(|z| self.integrands(z, xa, xb)[0], a, b, PANEL_TOL)?;
                let ih = integrate(|z| self.integrands(z, xa, xb)[1], a, b, PANEL_TOL)?;
                Ok([ig.value, ih.value])
            }
            r => r.map(|(v, _)| v),
        }
    }

    fn knot(&self, z: f64, x: f64, g: f64, h: f64) -> Knot {
        let [dg, dh] = self.integrands_at(x);
        Knot { z, x, g, h, dg, dh }
    }

    fn build(inst: &ProblemInstance) -> Result<Core, BoundsError> {
        let c0 = inst.c.at(0.0);
        let x0 = inst.x0;
        if !(c0 > 0.0 && c0.is_finite()) {
            return Err(BoundsError::Inadmissible(format!("c(0) = {c0} is not positive")));
        }
        if !(x0 >= 0.0 && x0 < c0) {
            return Err(BoundsError::Inadmissible(format!(
                "x0 = {x0} must satisfy 0 <= x0 < c(0) = {c0}"
            )));
        }
        let phi0 = inst.phi.at(0.0);
        if !(phi0 <= x0) {
            return Err(BoundsError::Inadmissible(format!("phi(0) = {phi0} exceeds x0 = {x0}")));
        }
        let mut core = Core {
            inst: inst.clone(),
            phi_kind: classify_phi(&inst.phi),
            knots: Vec::new(),
            panels: Vec::new(),
            head_g: None,
            g_origin: 0.0,
        };
        let h_g = |s: f64| core.phi_inv_free(s).map_or(f64::NAN, |x| core.integrands_at(x)[0]);
        if x0 == 0.0 && diverges_at_zero(h_g, c0, DEFAULT_TOL) {
            return Err(BoundsError::Inadmissible(
                "x0 = 0 but the integral defining G diverges at 0".into(),
            ));
        }

        let first = if x0 > 0.0 { x0 } else { c0 * 2f64.powi(-HEAD_DOUBLINGS) };
        let mut zs = vec![first];
        zs.extend(
            (-HEAD_DOUBLINGS..=TOP_DOUBLING)
                .map(|k| c0 * 2f64.powi(k))
                .filter(|&z| z > first),
        );
        let mut xs = Vec::with_capacity(zs.len());
        for &z in &zs {
            xs.push(core.phi_inv_free(z)?);
        }
        // cumulative values from the first knot, then shifted to the reference
        let mut g = vec![0.0; zs.len()];
        let mut h = vec![0.0; zs.len()];
        for i in 1..zs.len() {
            let [ig, ih] = core.panel(zs[i - 1], zs[i], xs[i - 1], xs[i])?;
            if !(ig.is_finite() && ih.is_finite()) {
                return Err(NumericsError::NonFinite { x: zs[i] }.into());
            }
            g[i] = g[i - 1] + ig;
            h[i] = h[i - 1] + ih;
        }
        let r = zs.iter().position(|&z| z == c0).expect("c(0) is a knot");
        let (gr, hr) = (g[r], h[r]);
        core.knots = (0..zs.len())
            .map(|i| {
                let (gi, hi) = if i == r { (0.0, 0.0) } else { (g[i] - gr, h[i] - hr) };
                core.knot(zs[i], xs[i], gi, hi)
            })
            .collect();
        core.panels = (1..zs.len()).map(|_| OnceLock::new()).collect();
        if x0 == 0.0 {
            let head = integrate(|s| core.integrands(s, 0.0, xs[0])[0], 0.0, first, PANEL_TOL)?;
            let head_g = core.knots[0].g - head.value;
            core.head_g = Some(head_g);
            core.g_origin = head_g;
        } else {
            core.g_origin = core.knots[0].g;
        }
        Ok(core)
    }

    fn pieces(&self, panel: usize) -> Result<&[Piece], NumericsError> {
        let slot = self.panels[panel].get_or_init(|| {
            let mut out = Vec::new();
            self.refine(self.knots[panel], self.knots[panel + 1], 0, &mut out)?;
            Ok(out)
        });
        match slot {
            Ok(v) => Ok(v),
            Err(e) => Err(e.clone()),
        }
    }

    fn refine(&self, a: Knot, b: Knot, depth: u32, out: &mut Vec<Piece>) -> Result<(), NumericsError> {
        let mz = 0.5 * (a.z + b.z);
        if !(mz > a.z && mz < b.z) {
            out.push(Piece::new(a, b, true));
            return Ok(());
        }
        let mx = self.phi_inv_in(mz, a.x, b.x);
        let [ig, ih] = self.panel(a.z, mz, a.x, mx)?;
        let m = self.knot(mz, mx, a.g + ig, a.h + ih);
        let whole = Piece::new(a, b, true);
        let err_g = (whole.sg.eval(mz) - m.g).abs();
        let err_h = (whole.sh.eval(mz) - m.h).abs();
        let fits = err_g <= PIECE_BUDGET * (1.0 + m.g.abs()) && err_h <= PIECE_BUDGET * (1.0 + m.h.abs());
        if fits || depth >= MAX_REFINE_DEPTH {
            out.push(Piece::new(a, m, fits));
            out.push(Piece::new(m, b, fits));
            return Ok(());
        }
        self.refine(a, m, depth + 1, out)?;
        self.refine(m, b, depth + 1, out)
    }

    /// Value of `comp` relative to the reference knot.
    fn value(&self, comp: Comp, z: f64) -> Result<f64, NumericsError> {
        let first = &self.knots[0];
        let last = self.knots.last().expect("knots");
        if z.is_nan() {
            return Err(NumericsError::NonFinite { x: z });
        }
        if z < first.z {
            return self.head_value(comp, z);
        }
        if z > last.z {
            return Err(NumericsError::OutsideImage { y: z, sup: last.z });
        }
        let k = self.knots.partition_point(|kn| kn.z < z);
        if self.knots[k].z == z {
            return Ok(self.knots[k].value(comp));
        }
        let pieces = self.pieces(k - 1)?;
        let j = pieces.partition_point(|p| p.b.z < z).min(pieces.len() - 1);
        let p = &pieces[j];
        if p.trusted {
            Ok(p.segment(comp).eval(z))
        } else {
            let v = self.panel(p.a.z, z, p.a.x, p.b.x)?;
            Ok(p.a.value(comp) + v[comp as usize])
        }
    }

    fn head_value(&self, comp: Comp, z: f64) -> Result<f64, NumericsError> {
        let first = &self.knots[0];
        let Some(head_g) = self.head_g else {
            return Err(NumericsError::BelowRange { y: z, floor: first.z });
        };
        if z < 0.0 {
            return Err(NumericsError::BelowRange { y: z, floor: 0.0 });
        }
        if z == 0.0 {
            return match comp {
                Comp::G => Ok(head_g),
                Comp::H => {
                    let r = integrate(|s| self.integrands(s, 0.0, first.x)[1], 0.0, first.z, PANEL_TOL)?;
                    Ok(first.h - r.value)
                }
            };
        }
        let v = self.panel(z, first.z, 0.0, first.x)?;
        Ok(first.value(comp) - v[comp as usize])
    }

    /// Solves `value(comp, z) = v`.
    fn inverse(&self, comp: Comp, v: f64) -> Result<f64, NumericsError> {
        if v.is_nan() {
            return Err(NumericsError::NonFinite { x: v });
        }
        let first = &self.knots[0];
        let last = self.knots.last().expect("knots");
        if v > last.value(comp) {
            return Err(NumericsError::OutsideImage {
                y: v,
                sup: last.value(comp),
            });
        }
        if v < first.value(comp) {
            return self.head_inverse(comp, v);
        }
        let k = self.knots.partition_point(|kn| kn.value(comp) < v);
        if self.knots[k].value(comp) == v {
            return Ok(self.knots[k].z);
        }
        let pieces = self.pieces(k - 1)?;
        let j = pieces.partition_point(|p| p.b.value(comp) < v).min(pieces.len() - 1);
        let p = &pieces[j];
        if p.trusted {
            Ok(p.segment(comp).invert(v))
        } else {
            bisect_bracket(|z| self.value(comp, z).unwrap_or(f64::NAN), v, p.a.z, p.b.z, 1e-15, 0.0)
        }
    }

    fn head_inverse(&self, comp: Comp, v: f64) -> Result<f64, NumericsError> {
        let first = &self.knots[0];
        if self.head_g.is_none() {
            return Err(NumericsError::BelowRange {
                y: v,
                floor: first.value(comp),
            });
        }
        if comp == Comp::G && v < self.head_g.unwrap_or(f64::NEG_INFINITY) {
            return Err(NumericsError::BelowRange {
                y: v,
                floor: self.head_g.unwrap_or(0.0),
            });
        }
        // geometric bisection on (0, first.z]
        let (mut lo, mut hi) = (first.z * f64::EPSILON * f64::EPSILON, first.z);
        for _ in 0..200 {
            let mid = if hi > 4.0 * lo {
                lo.sqrt() * hi.sqrt()
            } else {
                0.5 * (lo + hi)
            };
            if !(mid > lo && mid < hi) || hi - lo <= 1e-15 * hi {
                break;
            }
            if self.value(comp, mid)? < v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn phi_inv(&self, z: f64) -> Result<f64, NumericsError> {
        let first = &self.knots[0];
        let last = self.knots.last().expect("knots");
        if z >= first.z && z <= last.z {
            let k = self.knots.partition_point(|kn| kn.z < z);
            if self.knots[k].z == z {
                return Ok(self.knots[k].x);
            }
            Ok(self.phi_inv_in(z, self.knots[k - 1].x, self.knots[k].x))
        } else {
            self.phi_inv_free(z)
        }
    }
}

/// Numerically realized `G`, `G⁻¹`, `Ψ`, `Ψ⁻¹` for one instance.
///
/// Cheap to clone; clones share the lazily refined interpolation tables.
#[derive(Debug, Clone)]
pub struct TransformTables {
    core: Arc<Core>,
    x1: f64,
    z1: f64,
    /// `H_rel(z1)`.
    h_origin: f64,
    g_image: ImageProbe,
    psi_image: ImageProbe,
}

impl TransformTables {
    /// Builds the tables for `inst` with its own `x0` and `x1`.
    pub fn build(inst: &ProblemInstance) -> Result<TransformTables, BoundsError> {
        let core = Arc::new(Core::build(inst)?);
        Self::with_core(core, inst.x1)
    }

    /// Same tables with a different lower limit of `Ψ`; reuses the `G` table.
    pub fn rebase_x1(&self, x1: f64) -> Result<TransformTables, BoundsError> {
        Self::with_core(Arc::clone(&self.core), x1)
    }

    fn with_core(core: Arc<Core>, x1: f64) -> Result<TransformTables, BoundsError> {
        if !(x1 > 0.0 && x1.is_finite()) {
            return Err(BoundsError::Inadmissible(format!("x1 = {x1} must be positive")));
        }
        let c0 = core.inst.c.at(0.0);
        let g_image = probe_image_sup(|z| core.value(Comp::G, z).map_or(f64::NAN, |v| v - core.g_origin), c0);
        let z1 = core
            .inverse(Comp::G, x1 + core.g_origin)
            .map_err(|_| BoundsError::X1OutsideImage { x1, sup: g_image.sup })?;
        let h_origin = core.value(Comp::H, z1)?;
        let mut psi_image = probe_image_sup(|z| core.value(Comp::H, z).map_or(f64::NAN, |v| v - h_origin), c0);
        // report the probe in the variable of Ψ
        for p in &mut psi_image.points {
            p.0 = core.value(Comp::G, p.0)? - core.g_origin;
        }
        Ok(TransformTables {
            core,
            x1,
            z1,
            h_origin,
            g_image,
            psi_image,
        })
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.core.inst
    }

    pub fn x0(&self) -> f64 {
        self.core.inst.x0
    }

    pub fn x1(&self) -> f64 {
        self.x1
    }

    /// `G⁻¹(x1)`, the lower limit of `H` in `z`-space.
    pub fn z1(&self) -> f64 {
        self.z1
    }

    /// `G(x) = ∫_{x0}^x ds/η(φ⁻¹(s))`.
    pub fn g(&self, x: f64) -> Result<f64, NumericsError> {
        Ok(self.core.value(Comp::G, x)? - self.core.g_origin)
    }

    pub fn g_inv(&self, y: f64) -> Result<f64, NumericsError> {
        if y == 0.0 {
            return Ok(self.x0());
        }
        self.core.inverse(Comp::G, y + self.core.g_origin)
    }

    /// `H(z) = Ψ(G(z))`.
    pub fn h(&self, z: f64) -> Result<f64, NumericsError> {
        Ok(self.core.value(Comp::H, z)? - self.h_origin)
    }

    /// `H⁻¹(y) = G⁻¹(Ψ⁻¹(y))`.
    pub fn h_inv(&self, y: f64) -> Result<f64, NumericsError> {
        self.core.inverse(Comp::H, y + self.h_origin)
    }

    /// `Ψ(x) = ∫_{x1}^x ds/w(φ⁻¹(G⁻¹(s)))`.
    pub fn psi(&self, x: f64) -> Result<f64, NumericsError> {
        self.h(self.g_inv(x)?)
    }

    pub fn psi_inv(&self, y: f64) -> Result<f64, NumericsError> {
        self.g(self.h_inv(y)?)
    }

    /// `φ⁻¹(z)`, bracketed by the table knots.
    pub fn phi_inv(&self, z: f64) -> Result<f64, NumericsError> {
        self.core.phi_inv(z)
    }

    /// Probe of `sup Ψ`; points are `(x, Ψ(x))`.
    pub fn psi_image(&self) -> &ImageProbe {
        &self.psi_image
    }

    /// Probe of `sup G`; points are `(z, G(z))`.
    pub fn g_image(&self) -> &ImageProbe {
        &self.g_image
    }

    /// Estimated `M = sup Ψ`, `+inf` when `Ψ` looks unbounded.
    pub fn sup(&self) -> f64 {
        self.psi_image.sup
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{ProblemSource, TheoremForm};

    fn inst(phi: &str, eta: &str, w: &str, x0: Option<f64>, x1: Option<f64>) -> ProblemInstance {
        ProblemSource {
            phi: phi.into(),
            c: "1".into(),
            eta: eta.into(),
            w: w.into(),
            alpha: "t".into(),
            f: "1".into(),
            g: "0".into(),
            x0,
            x1,
            form: TheoremForm::One,
            t_max: 1.0,
        }
        .build()
        .unwrap()
    }

    #[test]
    fn square_root_g() {
        let t = TransformTables::build(&inst("x^2", "2*x", "1", None, None)).unwrap();
        assert_eq!(t.x0(), 0.0);
        assert!((t.g(4.0).unwrap() - 2.0).abs() < 1e-9);
        for x in [0.001, 0.3, 1.0, 7.5, 100.0] {
            assert!((t.g(x).unwrap() - x.sqrt()).abs() < 1e-9, "x = {x}");
        }
        assert_eq!(t.g(0.0).unwrap(), 0.0);
        assert!(!t.g_image().bounded);
    }

    #[test]
    fn logarithmic_g() {
        let t = TransformTables::build(&inst("x", "x", "1", Some(1.0_f64.exp().recip()), None)).unwrap();
        assert!((t.g(1.0).unwrap() - 1.0).abs() < 1e-10);
        let t = TransformTables::build(&inst("x", "x", "1", Some(0.5), None)).unwrap();
        assert_eq!(t.g(0.5).unwrap(), 0.0);
        let e = 1.0_f64.exp();
        assert!((t.g(e).unwrap() - (2.0 * e).ln()).abs() < 1e-10);
    }

    #[test]
    fn shifted_psi() {
        // φ = x, η = 1: G(x) = x - x0; w = 1: Ψ(x) = x - x1
        let t = TransformTables::build(&inst("x", "1", "1", Some(0.0), Some(1.0))).unwrap();
        assert!((t.psi(3.0).unwrap() - 2.0).abs() < 1e-10);
        assert_eq!(t.psi(1.0).unwrap(), 0.0);
        assert!((t.psi_inv(2.0).unwrap() - 3.0).abs() < 1e-10);
        assert!(!t.psi_image().bounded);
        assert_eq!(t.sup(), f64::INFINITY);
    }

    #[test]
    fn bounded_psi_for_quadratic_growth() {
        // G(z) = ln(2z), H(z) = 1/z1 - 1/z
        let t = TransformTables::build(&inst("x", "x", "x", None, None)).unwrap();
        let z1 = 0.5 * 1.0_f64.exp();
        assert!((t.z1() - z1).abs() < 1e-10);
        assert!(t.psi_image().bounded);
        assert!((t.sup() - 1.0 / z1).abs() < 1e-10);
        assert!((t.h(3.0).unwrap() - (1.0 / z1 - 1.0 / 3.0)).abs() < 1e-10);
        assert!(t.h_inv(t.sup() * 1.01).is_err());
    }

    #[test]
    fn inverses_round_trip() {
        let t = TransformTables::build(&inst("x + x^3", "sqrt(x)", "1 + x", None, None)).unwrap();
        for z in [0.2, 1.0, 1.7, 10.0, 1e4] {
            let g = t.g(z).unwrap();
            assert!((t.g_inv(g).unwrap() - z).abs() <= 1e-9 * z, "z = {z}");
            let h = t.h(z).unwrap();
            assert!((t.h_inv(h).unwrap() - z).abs() <= 1e-9 * z, "z = {z}");
        }
        let x = t.phi_inv(10.0).unwrap();
        assert!((x - 2.0).abs() < 1e-13);
    }

    #[test]
    fn rebase_shifts_psi_only() {
        let t = TransformTables::build(&inst("x", "x", "1 + x", None, None)).unwrap();
        let u = t.rebase_x1(2.0).unwrap();
        let d1 = t.psi(3.0).unwrap() - t.psi(1.5).unwrap();
        let d2 = u.psi(3.0).unwrap() - u.psi(1.5).unwrap();
        assert!((d1 - d2).abs() < 1e-10);
        assert_eq!(t.g(2.0).unwrap(), u.g(2.0).unwrap());
        assert_eq!(u.psi(2.0).unwrap(), 0.0);
    }

    #[test]
    fn inadmissible_anchors() {
        let bad = inst("x", "x", "1", Some(0.0), None);
        assert!(matches!(
            TransformTables::build(&bad),
            Err(BoundsError::Inadmissible(_))
        ));
        let bad = inst("x", "x", "1", Some(2.0), None);
        assert!(matches!(
            TransformTables::build(&bad),
            Err(BoundsError::Inadmissible(_))
        ));
    }
}
