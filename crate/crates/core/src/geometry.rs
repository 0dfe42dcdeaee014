//! Arcs of the circle, the argument lift, and images of arcs under iterates.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::boundary::{iterate_boundary, BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::orbit::ReferenceOrbit;
use crate::product::{cis_turn, golden_section, BlaschkeProduct, DiskPoint};

/// Bits carried by arcs built from double-precision data.
pub const DEFAULT_ARC_BITS: u32 = 128;
const QUAD_MAX_DEPTH: u32 = 60;
const SUBARC_RELATIVE_TOL: f64 = 1e-6;

/// A closed arc `[center - length/2, center + length/2]` in turns, with the
/// normalized measure (the whole circle has length 1).
#[derive(Clone, Debug, PartialEq)]
pub struct Arc {
    center: BoundaryPoint,
    length: ExtF64,
}

#[derive(Serialize, Deserialize)]
struct ArcSpec {
    center_turn: String,
    length: ExtF64,
    #[serde(default)]
    precision_bits: Option<u32>,
    #[serde(default)]
    is_full_circle: bool,
}

impl Serialize for Arc {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        ArcSpec {
            center_turn: self.center.to_decimal_string(),
            length: self.length,
            precision_bits: Some(self.center.bits()),
            is_full_circle: self.is_full_circle(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Arc {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = ArcSpec::deserialize(d)?;
        let digits = spec
            .center_turn
            .trim()
            .split_once('.')
            .map_or(0, |(_, f)| f.len());
        let bits = spec
            .precision_bits
            .unwrap_or(((digits as f64) / std::f64::consts::LOG10_2).ceil() as u32 + 4);
        let center = BoundaryPoint::parse(&spec.center_turn, bits.max(1))
            .map_err(serde::de::Error::custom)?;
        Arc::new(center, spec.length).map_err(serde::de::Error::custom)
    }
}

/// Bits a center needs so that an arc of this length is resolved with
/// double precision to spare.
fn bits_for_length(length: ExtF64) -> u32 {
    let scale = (-length.log2_abs()).max(0.0).ceil() as u32;
    scale + ACCURACY_BITS + 64
}

impl Arc {
    pub fn new(center: BoundaryPoint, length: ExtF64) -> Result<Self> {
        if !(length > ExtF64::ZERO) || length > ExtF64::ONE {
            return Err(Error::InvalidInput(format!(
                "arc length {length} must lie in (0, 1]"
            )));
        }
        let bits = bits_for_length(length).max(center.bits());
        Ok(Arc {
            center: center.with_bits(bits),
            length,
        })
    }

    pub fn full() -> Self {
        Arc {
            center: BoundaryPoint::zero(DEFAULT_ARC_BITS),
            length: ExtF64::ONE,
        }
    }

    /// The arc from `base + lo` to `base + hi` (offsets in turns, `lo < hi`).
    pub fn from_offsets(base: &BoundaryPoint, lo: ExtF64, hi: ExtF64) -> Result<Self> {
        let length = hi - lo;
        let bits = bits_for_length(length).max(base.bits());
        let mid = (lo + hi).mul_pow2(-1);
        Arc::new(base.with_bits(bits).add_turns(mid), length)
    }

    pub fn center(&self) -> &BoundaryPoint {
        &self.center
    }

    pub fn length(&self) -> ExtF64 {
        self.length
    }

    pub fn is_full_circle(&self) -> bool {
        self.length == ExtF64::ONE
    }

    pub fn half_length(&self) -> ExtF64 {
        self.length.mul_pow2(-1)
    }

    pub fn start(&self) -> BoundaryPoint {
        self.center.add_turns(-self.half_length())
    }

    pub fn end(&self) -> BoundaryPoint {
        self.center.add_turns(self.half_length())
    }

    /// Signed offset of `p` from the center.
    pub fn offset_of(&self, p: &BoundaryPoint) -> ExtF64 {
        p.offset_from(&self.center)
    }

    pub fn contains(&self, p: &BoundaryPoint) -> bool {
        self.is_full_circle() || self.offset_of(p).abs() <= self.half_length()
    }

    /// Whether `inner` lies inside `self` (up to one unit of the finer grid).
    pub fn contains_arc(&self, inner: &Arc) -> bool {
        if self.is_full_circle() {
            return true;
        }
        if inner.is_full_circle() {
            return false;
        }
        let off = self.offset_of(&inner.center);
        let bits = self.center.bits().max(inner.center.bits());
        let slack = ExtF64::from_parts(1.0, -(bits as i64) + 2);
        off.abs() + inner.half_length() <= self.half_length() + slack
    }

    /// Offsets of the endpoints relative to `p`, which must lie in the arc.
    /// The full circle is read as `[p - 1/2, p + 1/2]`.
    pub fn offsets_around(&self, p: &BoundaryPoint) -> (ExtF64, ExtF64) {
        if self.is_full_circle() {
            return (ExtF64::new(-0.5), ExtF64::new(0.5));
        }
        let off = self.offset_of(p);
        (-self.half_length() - off, self.half_length() - off)
    }

    /// Arc with the same center and `factor` times the length, capped at the
    /// full circle.
    pub fn dilate(&self, factor: f64) -> Arc {
        let length = self.length.mul_f64(factor);
        if length >= ExtF64::ONE {
            return Arc::full();
        }
        Arc::new(self.center.clone(), length).expect("positive length")
    }

    /// The interior point `(1 - length) e^{2 pi i center}` in polar form
    /// (direction, defect), exact at any depth.
    pub fn polar_point(&self) -> Result<(BoundaryPoint, ExtF64)> {
        if self.is_full_circle() {
            return Err(Error::FullCircle);
        }
        Ok((self.center.clone(), self.length))
    }
}

/// Image of an arc under an iterate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ArcImageResult {
    /// Lifted measure with multiplicity, not clamped.
    pub measure: ExtF64,
    /// Image arc; the full circle once `measure >= 1`.
    pub image: Arc,
    pub injective: bool,
}

/// `(1 / 2 pi) * integral of sum_n P(z_n, e^{it})` over the turn interval,
/// by adaptive Simpson quadrature with Richardson extrapolation to absolute
/// tolerance `2^-40`.
pub fn argument_lift(f: &BlaschkeProduct, from_turn: f64, to_turn: f64) -> Result<f64> {
    argument_lift_with_accuracy(f, from_turn, to_turn, 40)
}

pub fn argument_lift_with_accuracy(
    f: &BlaschkeProduct,
    from_turn: f64,
    to_turn: f64,
    accuracy_bits: u32,
) -> Result<f64> {
    if !(from_turn <= to_turn && to_turn <= from_turn + 1.0) {
        return Err(Error::InvalidInput(format!(
            "turn interval [{from_turn}, {to_turn}] must satisfy a <= b <= a + 1"
        )));
    }
    if from_turn == to_turn {
        return Ok(0.0);
    }
    let g = |x: f64| f.poisson_sum_at_turn(x);
    let tol = (2f64).powi(-(accuracy_bits as i32));
    let (a, b) = (from_turn, to_turn);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (g(a), g(m), g(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson(&g, a, b, fa, fm, fb, whole, tol, 0)
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    g: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (g(lm), g(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth >= QUAD_MAX_DEPTH || m <= a || m >= b {
        return Err(Error::QuadratureNonconvergence {
            from: a,
            to: b,
            depth,
        });
    }
    Ok(simpson(g, a, m, fa, flm, fm, left, tol / 2.0, depth + 1)?
        + simpson(g, m, b, fm, frm, fb, right, tol / 2.0, depth + 1)?)
}

/// `I(z)`: the arc centered at `z / |z|` with length `1 - |z|`.
pub fn arc_from_point(z: DiskPoint) -> Result<Arc> {
    let r = z.norm();
    if r == 0.0 {
        return Err(Error::Degenerate(
            "I(z) has no center direction at z = 0".into(),
        ));
    }
    if !(r < 1.0) {
        return Err(Error::InvalidInput(format!("|z| = {r} must be < 1")));
    }
    let turn = z.im.atan2(z.re) / std::f64::consts::TAU;
    Arc::new(
        BoundaryPoint::from_f64(turn, DEFAULT_ARC_BITS),
        ExtF64::new(1.0 - r),
    )
}

/// `z(I)`: the point with `I(z(I)) = I`.
pub fn point_from_arc(arc: &Arc) -> Result<DiskPoint> {
    if arc.is_full_circle() {
        return Err(Error::FullCircle);
    }
    Ok(cis_turn(arc.center.to_f64()) * (1.0 - arc.length.to_f64()))
}

/// Image of `arc` under `f^n`, from the lifted offsets of its endpoints.
pub fn arc_image(f: &BlaschkeProduct, arc: &Arc, n: usize) -> Result<ArcImageResult> {
    if n == 0 {
        return Ok(ArcImageResult {
            measure: arc.length,
            image: arc.clone(),
            injective: !arc.is_full_circle(),
        });
    }
    if arc.is_full_circle() {
        let measure = ExtF64::exp2(n as f64 * (f.degree() as f64).log2());
        return Ok(ArcImageResult {
            measure,
            image: Arc::full(),
            injective: false,
        });
    }
    let orbit = ReferenceOrbit::new(f, &arc.center, n)?;
    let h = arc.half_length();
    let measure = orbit.image_measure(-h, h, n);
    image_from_measure(f, arc, n, measure)
}

fn image_from_measure(
    f: &BlaschkeProduct,
    arc: &Arc,
    n: usize,
    measure: ExtF64,
) -> Result<ArcImageResult> {
    if measure >= ExtF64::ONE {
        return Ok(ArcImageResult {
            measure,
            image: Arc::full(),
            injective: false,
        });
    }
    // Start point of the image, carried with enough bits to resolve it.
    let growth = (n as f64 * f.k_max().log2()).ceil() as u32;
    let bits = bits_for_length(measure).max(arc.center.bits()) + growth + 64;
    let start = arc.center.with_bits(bits).add_turns(-arc.half_length());
    let image_start = iterate_boundary(f, &start, n)?;
    let image = Arc::from_offsets(&image_start, ExtF64::ZERO, measure)?;
    Ok(ArcImageResult {
        measure,
        image,
        injective: true,
    })
}

/// Offsets `(lo, hi)` around `pivot` (an offset from the chart center),
/// inside `[lo_lim, hi_lim]`, whose image at depth `n` has measure `delta`
/// to relative `1e-6`.  Grows symmetrically about the pivot, clipped at the
/// limits.
pub(crate) fn subarc_offsets(
    orbit: &ReferenceOrbit,
    lo_lim: ExtF64,
    hi_lim: ExtF64,
    pivot: ExtF64,
    n: usize,
    delta: f64,
) -> Result<(ExtF64, ExtF64)> {
    let window = |h: ExtF64| (lo_lim.max(pivot - h), hi_lim.min(pivot + h));
    let measure = |h: ExtF64| {
        let (lo, hi) = window(h);
        orbit.image_measure(lo, hi, n).to_f64()
    };
    let target = delta;
    let tol = delta * SUBARC_RELATIVE_TOL;
    let h_max = (pivot - lo_lim).max(hi_lim - pivot);
    if measure(h_max) < target - tol {
        return Err(Error::Infeasible(format!(
            "ambient arc image measure is below {delta}"
        )));
    }
    // Bracket in log space, starting from the linear estimate.
    let guess = ExtF64::new(delta * 0.5) / orbit.derivative(n);
    let mut lo_h = guess.min(h_max);
    let mut hi_h = lo_h;
    let mut m = measure(lo_h);
    if (m - target).abs() <= tol {
        return Ok(window(lo_h));
    }
    let mut steps = 0;
    if m < target {
        loop {
            steps += 1;
            if steps > 4000 {
                return Err(Error::Infeasible(
                    "subarc bracketing did not terminate".into(),
                ));
            }
            hi_h = (hi_h.mul_f64(2.0)).min(h_max);
            let mh = measure(hi_h);
            if (mh - target).abs() <= tol {
                return Ok(window(hi_h));
            }
            if mh > target {
                break;
            }
            lo_h = hi_h;
        }
    } else {
        loop {
            steps += 1;
            if steps > 4000 {
                return Err(Error::Infeasible(
                    "subarc bracketing did not terminate".into(),
                ));
            }
            lo_h = lo_h.mul_f64(0.5);
            m = measure(lo_h);
            if (m - target).abs() <= tol {
                return Ok(window(lo_h));
            }
            if m < target {
                break;
            }
            hi_h = lo_h;
        }
    }
    // Bisection on the half-width: geometric first, then arithmetic.
    for iter in 0..400 {
        let mid = if iter < 60 {
            ExtF64::exp2(0.5 * (lo_h.log2_abs() + hi_h.log2_abs()))
        } else {
            (lo_h + hi_h).mul_pow2(-1)
        };
        let mm = measure(mid);
        if (mm - target).abs() <= tol {
            return Ok(window(mid));
        }
        if mm < target {
            lo_h = mid;
        } else {
            hi_h = mid;
        }
    }
    Err(Error::Infeasible(format!(
        "no subarc with image measure {delta} found to tolerance"
    )))
}

/// A subarc `J` of `arc` containing `xi` with `m(f^n(J)) = delta` to
/// relative `1e-6`.  Grows symmetrically about `xi`, clipped at the ends of
/// `arc`, then bisects.
pub fn find_subarc_with_image_measure(
    f: &BlaschkeProduct,
    arc: &Arc,
    n: usize,
    xi: &BoundaryPoint,
    delta: f64,
) -> Result<Arc> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Infeasible(format!(
            "target image measure {delta} must lie in (0, 1)"
        )));
    }
    if !arc.contains(xi) {
        return Err(Error::Infeasible("xi is not in the ambient arc".into()));
    }
    let orbit = ReferenceOrbit::new(f, xi, n)?;
    let (lo_lim, hi_lim) = arc.offsets_around(xi);
    let (lo, hi) = subarc_offsets(&orbit, lo_lim, hi_lim, ExtF64::ZERO, n, delta)?;
    Arc::from_offsets(orbit.center(), lo, hi)
}

/// Smallest one-step lifted image measure over arcs of length `1/2 - eps`:
/// grid over centers, golden-section refinement at each discrete minimum.
pub fn min_image_measure_of_arcs(f: &BlaschkeProduct, length: f64) -> f64 {
    let grid = (64 * f.degree()).max(512);
    let h = 1.0 / grid as f64;
    let measure = |c: f64| f.lift_increment(c - 0.5 * length, length);
    let vals: Vec<f64> = (0..grid).map(|j| measure(j as f64 * h)).collect();
    let mut best = f64::INFINITY;
    for j in 0..grid {
        let v = vals[j];
        best = best.min(v);
        if v <= vals[(j + grid - 1) % grid] && v <= vals[(j + 1) % grid] {
            let (_, fx) =
                golden_section(measure, (j as f64 - 1.0) * h, (j as f64 + 1.0) * h, false);
            best = best.min(fx);
        }
    }
    best
}

/// Whether every arc of length `1/2 - eps` is mapped onto the whole circle.
pub fn check_full_image_property(f: &BlaschkeProduct, eps: f64) -> Result<bool> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::InvalidInput(format!(
            "eps = {eps} must lie in (0, 1/2)"
        )));
    }
    Ok(min_image_measure_of_arcs(f, 0.5 - eps) >= 1.0)
}

/// Point `(1 - defect) e^{2 pi i direction}` as a double (defects below
/// `2^-53` collapse onto the circle).
pub fn polar_to_disk(direction: &BoundaryPoint, defect: ExtF64) -> Complex64 {
    cis_turn(direction.to_f64()) * (1.0 - defect.to_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn arc(center: f64, length: f64) -> Arc {
        Arc::new(BoundaryPoint::from_f64(center, 128), ExtF64::new(length)).unwrap()
    }

    #[test]
    fn lift_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        assert!((argument_lift(&sq, 0.2, 0.5).unwrap() - 0.6).abs() < 1e-12);
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0), c(0.1, -0.7)]).unwrap();
        assert!((argument_lift(&f, 0.3, 1.3).unwrap() - 3.0).abs() < 1e-10);
        let g = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let first = argument_lift(&g, 0.0, 0.5).unwrap();
        let second = argument_lift(&g, 0.5, 1.0).unwrap();
        // A real zero makes the Poisson sum even in the angle, so each half
        // turn carries exactly half the degree.
        assert!((first - 1.0).abs() < 1e-10);
        assert!((first + second - 2.0).abs() < 1e-10);
        assert!(argument_lift(&g, 0.5, 0.2).is_err());
    }

    #[test]
    fn arc_point_correspondence() {
        let a = arc_from_point(c(0.9, 0.0)).unwrap();
        assert_eq!(a.center().to_f64(), 0.0);
        assert!((a.length().to_f64() - 0.1).abs() < 1e-15);
        let a = arc_from_point(c(0.0, 0.5)).unwrap();
        assert!((a.center().to_f64() - 0.25).abs() < 1e-15);
        assert_eq!(a.length().to_f64(), 0.5);
        let a = arc_from_point(c(-0.99, 0.0)).unwrap();
        assert!((a.center().to_f64() - 0.5).abs() < 1e-15);
        assert!(matches!(
            arc_from_point(c(0.0, 0.0)),
            Err(Error::Degenerate(_))
        ));
        assert!((point_from_arc(&arc(0.25, 0.5)).unwrap() - c(0.0, 0.5)).norm() < 1e-15);
        assert!(matches!(
            point_from_arc(&Arc::full()),
            Err(Error::FullCircle)
        ));
    }

    #[test]
    fn doubling_images() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let r = arc_image(&sq, &arc(0.3, 0.1), 1).unwrap();
        assert!((r.measure.to_f64() - 0.2).abs() < 1e-15 && r.injective);
        assert!((r.image.center().to_f64() - 0.6).abs() < 1e-15);
        let r = arc_image(&sq, &arc(0.3, 0.1), 4).unwrap();
        assert!((r.measure.to_f64() - 1.6).abs() < 1e-14);
        assert!(r.image.is_full_circle() && !r.injective);
        let g = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(arc_image(&g, &Arc::full(), 3)
            .unwrap()
            .image
            .is_full_circle());
    }

    #[test]
    fn subarc_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let ambient =
            Arc::from_offsets(&BoundaryPoint::zero(128), ExtF64::ZERO, ExtF64::new(0.5)).unwrap();
        let xi = BoundaryPoint::from_f64(0.1, 128);
        let j = find_subarc_with_image_measure(&sq, &ambient, 2, &xi, 0.2).unwrap();
        assert!((j.length().to_f64() - 0.05).abs() < 0.05 * 1e-6);
        assert!((j.center().to_f64() - 0.1).abs() < 1e-12);
        assert!(matches!(
            find_subarc_with_image_measure(&sq, &Arc::full(), 1, &BoundaryPoint::zero(64), 1.0),
            Err(Error::Infeasible(_))
        ));
        // Clipping: xi near the ambient start forces an asymmetric subarc.
        let xi = BoundaryPoint::from_f64(0.01, 128);
        let j = find_subarc_with_image_measure(&sq, &ambient, 3, &xi, 0.4).unwrap();
        assert!(ambient.contains_arc(&j) && j.contains(&xi));
        assert!((arc_image(&sq, &j, 3).unwrap().measure.to_f64() - 0.4).abs() < 0.4e-6);
    }

    #[test]
    fn full_image_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        assert!(!check_full_image_property(&sq, 0.1).unwrap());
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(check_full_image_property(&f, 0.05).unwrap());
        let g = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!(!check_full_image_property(&g, 0.01).unwrap());
    }

    #[test]
    fn arc_json_round_trip() {
        let a = Arc::from_offsets(
            &BoundaryPoint::from_f64(0.3, 400),
            ExtF64::from_parts(-1.0, -300),
            ExtF64::from_parts(3.0, -300),
        )
        .unwrap();
        let s = serde_json::to_string(&a).unwrap();
        let back: Arc = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
    }
}
