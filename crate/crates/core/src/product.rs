//! Finite Blaschke products and their double-precision evaluation.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of the closed unit disk.  Double precision is enough strictly
/// inside; boundary work goes through [`crate::BoundaryPoint`].
pub type DiskPoint = Complex64;

const CERTIFIED_TOLERANCE: f64 = 1e-10;
const DEFAULT_GRID: usize = 1024;

/// `f(z) = prod (z - a) / (1 - conj(a) z)` over the stored zeros.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "ProductSpec", into = "ProductSpec")]
pub struct BlaschkeProduct {
    zeros: Vec<Complex64>,
    origin_zeros: usize,
    nonzero: Vec<Complex64>,
    k_min: f64,
    k_max: f64,
}

impl PartialEq for BlaschkeProduct {
    fn eq(&self, other: &Self) -> bool {
        self.zeros == other.zeros
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ZeroSpec {
    re: f64,
    im: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct ProductSpec {
    zeros: Vec<ZeroSpec>,
}

impl TryFrom<ProductSpec> for BlaschkeProduct {
    type Error = Error;
    fn try_from(spec: ProductSpec) -> Result<Self> {
        BlaschkeProduct::new(
            spec.zeros
                .iter()
                .map(|z| Complex64::new(z.re, z.im))
                .collect(),
        )
    }
}

impl From<BlaschkeProduct> for ProductSpec {
    fn from(f: BlaschkeProduct) -> Self {
        ProductSpec {
            zeros: f
                .zeros
                .iter()
                .map(|z| ZeroSpec { re: z.re, im: z.im })
                .collect(),
        }
    }
}

/// Extremes of `|f'|` on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionConstants {
    pub k_min: f64,
    pub k_max: f64,
    pub grid_size: usize,
    pub certified_tolerance: f64,
}

/// Poisson kernel `(1 - |z|^2) / |xi - z|^2`.
pub fn poisson_kernel(z: Complex64, xi: Complex64) -> f64 {
    (1.0 - z.norm_sqr()) / (xi - z).norm_sqr()
}

/// Pseudohyperbolic distance `|z - w| / |1 - conj(w) z|`.
pub fn pseudohyperbolic(z: DiskPoint, w: DiskPoint) -> f64 {
    let den = (Complex64::new(1.0, 0.0) - w.conj() * z).norm();
    if den == 0.0 {
        return 1.0;
    }
    ((z - w).norm() / den).min(1.0)
}

/// `e^{2 pi i t}`.
pub fn cis_turn(t: f64) -> Complex64 {
    let (s, c) = (TAU * t).sin_cos();
    Complex64::new(c, s)
}

impl BlaschkeProduct {
    pub fn new(zeros: Vec<Complex64>) -> Result<Self> {
        if zeros.is_empty() {
            return Err(Error::InvalidInput(
                "a Blaschke product needs at least one zero".into(),
            ));
        }
        for (index, z) in zeros.iter().enumerate() {
            let modulus = z.norm();
            if !modulus.is_finite() || modulus >= 1.0 {
                return Err(Error::ZeroOutsideDisk { index, modulus });
            }
        }
        let origin_zeros = zeros.iter().filter(|z| z.norm() == 0.0).count();
        let nonzero = zeros.iter().copied().filter(|z| z.norm() != 0.0).collect();
        let mut f = BlaschkeProduct {
            zeros,
            origin_zeros,
            nonzero,
            k_min: 0.0,
            k_max: 0.0,
        };
        let (k_min, k_max) = f.refined_extremes(DEFAULT_GRID.max(8 * f.degree()));
        f.k_min = k_min;
        f.k_max = k_max;
        Ok(f)
    }

    /// `z^d`.
    pub fn power(d: usize) -> Result<Self> {
        Self::new(vec![Complex64::new(0.0, 0.0); d])
    }

    pub fn zeros(&self) -> &[Complex64] {
        &self.zeros
    }

    pub fn degree(&self) -> usize {
        self.zeros.len()
    }

    pub fn zero_at_origin_count(&self) -> usize {
        self.origin_zeros
    }

    pub fn nonzero_zeros(&self) -> &[Complex64] {
        &self.nonzero
    }

    pub fn fixes_origin(&self) -> bool {
        self.origin_zeros >= 1
    }

    /// `z^d`: the boundary map is exact multiplication of turns by `d`.
    pub fn is_pure_power(&self) -> bool {
        self.nonzero.is_empty()
    }

    /// The solvers need `f(0) = 0` and `f` not a rotation.
    pub fn check_expanding_contract(&self) -> Result<()> {
        if !self.fixes_origin() {
            return Err(Error::InvalidInput(
                "product must have a zero at the origin".into(),
            ));
        }
        if self.degree() < 2 {
            return Err(Error::InvalidInput(
                "a degree-1 product fixing 0 is a rotation".into(),
            ));
        }
        Ok(())
    }

    /// min |f'| on the circle (cached at construction).
    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    /// max |f'| on the circle (cached at construction).
    pub fn k_max(&self) -> f64 {
        self.k_max
    }

    pub fn evaluate(&self, z: DiskPoint) -> Result<DiskPoint> {
        let mut num = Complex64::new(1.0, 0.0);
        let mut den = Complex64::new(1.0, 0.0);
        for a in &self.zeros {
            let d = Complex64::new(1.0, 0.0) - a.conj() * z;
            if d.norm() < 1e-300 {
                return Err(Error::PoleProximity(d.norm()));
            }
            num *= z - a;
            den *= d;
        }
        Ok(num / den)
    }

    /// `f(z)` without the pole check, for hot interior loops.
    pub fn eval_unchecked(&self, z: Complex64) -> Complex64 {
        let mut num = Complex64::new(1.0, 0.0);
        let mut den = Complex64::new(1.0, 0.0);
        for a in &self.zeros {
            num *= z - a;
            den *= Complex64::new(1.0, 0.0) - a.conj() * z;
        }
        num / den
    }

    /// `f'(z)` by the product rule over the factors `(z - a) / (1 - conj(a) z)`,
    /// whose derivatives are `(1 - |a|^2) / (1 - conj(a) z)^2`.
    pub fn derivative(&self, z: DiskPoint) -> DiskPoint {
        let factors: Vec<(Complex64, Complex64)> = self
            .zeros
            .iter()
            .map(|a| {
                let d = Complex64::new(1.0, 0.0) - a.conj() * z;
                ((z - a) / d, (1.0 - a.norm_sqr()) / (d * d))
            })
            .collect();
        let mut total = Complex64::new(0.0, 0.0);
        for k in 0..factors.len() {
            let mut term = factors[k].1;
            for (j, (b, _)) in factors.iter().enumerate() {
                if j != k {
                    term *= b;
                }
            }
            total += term;
        }
        total
    }

    /// `sum_n P(z_n, xi)` at `xi = e^{2 pi i t}`; equals `|f'(xi)|`.
    pub fn poisson_sum_at_turn(&self, t: f64) -> f64 {
        let xi = cis_turn(t);
        self.poisson_sum(xi)
    }

    pub fn poisson_sum(&self, xi: Complex64) -> f64 {
        self.origin_zeros as f64
            + self
                .nonzero
                .iter()
                .map(|&a| poisson_kernel(a, xi))
                .sum::<f64>()
    }

    /// Derivative modulus at a boundary point (the Poisson-sum form of `|f'|`).
    pub fn derivative_modulus_boundary(&self, xi: &crate::BoundaryPoint) -> f64 {
        self.poisson_sum_at_turn(xi.to_f64())
    }

    /// Continuous increasing lift of the boundary map in turns:
    /// `x -> d x + sum_{a != 0} arg(1 - a e^{-2 pi i x}) / pi`.
    /// Its derivative is the Poisson sum and it gains exactly `d` per turn.
    pub fn lift(&self, x: f64) -> f64 {
        let d = self.degree() as f64;
        let u = cis_turn(-x);
        d * x
            + self
                .nonzero
                .iter()
                .map(|&a| (Complex64::new(1.0, 0.0) - a * u).arg() / PI)
                .sum::<f64>()
    }

    /// `lift(x + e) - lift(x)`, computed without cancellation for any `e`.
    ///
    /// With `w = 1 - a e^{-2 pi i x}` the ratio of the perturbed to the base
    /// factor is `1 + q`, `q = a e^{-2 pi i x} (1 - e^{-2 pi i e}) / w`, and both
    /// factors lie in the right half-plane so the principal argument is exact.
    pub fn lift_increment(&self, x: f64, e: f64) -> f64 {
        let d = self.degree() as f64;
        if self.nonzero.is_empty() {
            return d * e;
        }
        let (s, c) = (PI * e).sin_cos();
        let shift = Complex64::new(2.0 * s * s, 2.0 * s * c);
        let u = cis_turn(-x);
        let mut total = d * e;
        for &a in &self.nonzero {
            let au = a * u;
            let beta = au / (Complex64::new(1.0, 0.0) - au);
            let q = shift * beta;
            total += q.im.atan2(1.0 + q.re) / PI;
        }
        total
    }

    /// Grid search for the extrema of the Poisson sum, refined by golden
    /// section around every discrete local extremum.
    fn refined_extremes(&self, grid: usize) -> (f64, f64) {
        if self.nonzero.is_empty() {
            let d = self.degree() as f64;
            return (d, d);
        }
        let h = 1.0 / grid as f64;
        let vals: Vec<f64> = (0..grid)
            .map(|j| self.poisson_sum_at_turn(j as f64 * h))
            .collect();
        let mut k_min = f64::INFINITY;
        let mut k_max = f64::NEG_INFINITY;
        for j in 0..grid {
            let prev = vals[(j + grid - 1) % grid];
            let next = vals[(j + 1) % grid];
            let v = vals[j];
            k_min = k_min.min(v);
            k_max = k_max.max(v);
            let x0 = (j as f64 - 1.0) * h;
            let x1 = (j as f64 + 1.0) * h;
            if v <= prev && v <= next {
                let (_, fx) = golden_section(|x| self.poisson_sum_at_turn(x), x0, x1, false);
                k_min = k_min.min(fx);
            }
            if v >= prev && v >= next {
                let (_, fx) = golden_section(|x| self.poisson_sum_at_turn(x), x0, x1, true);
                k_max = k_max.max(fx);
            }
        }
        (k_min, k_max)
    }

    /// Extremes of `|f'|` on the circle over a grid of `grid_size` points,
    /// refined until doubling the grid changes neither by more than the
    /// certified tolerance.
    pub fn expansion_constants(&self, grid_size: usize) -> Result<ExpansionConstants> {
        if grid_size < 4 * self.degree() {
            return Err(Error::InvalidInput(format!(
                "grid_size {grid_size} must be at least 4 * degree = {}",
                4 * self.degree()
            )));
        }
        let mut grid = grid_size;
        let (mut lo, mut hi) = self.refined_extremes(grid);
        for _ in 0..6 {
            let (lo2, hi2) = self.refined_extremes(grid * 2);
            let settled =
                (lo2 - lo).abs() < CERTIFIED_TOLERANCE && (hi2 - hi).abs() < CERTIFIED_TOLERANCE;
            lo = lo.min(lo2);
            hi = hi.max(hi2);
            grid *= 2;
            if settled {
                break;
            }
        }
        if lo <= 1.0 + CERTIFIED_TOLERANCE {
            return Err(Error::NotExpanding { k_min: lo });
        }
        Ok(ExpansionConstants {
            k_min: lo,
            k_max: hi,
            grid_size: grid,
            certified_tolerance: CERTIFIED_TOLERANCE,
        })
    }

    /// Bits needed to iterate a boundary point `n_max` times and keep
    /// `target_accuracy_bits` of angular accuracy: each step can expand errors
    /// by up to `k_max`, plus 64 guard bits.
    pub fn required_precision(&self, n_max: usize, target_accuracy_bits: u32) -> u32 {
        let growth = (n_max as f64 * self.k_max.log2()).ceil();
        growth as u32 + target_accuracy_bits + 64
    }

    /// Interior orbit `z, f(z), ..., f^n(z)` in double precision.
    pub fn interior_orbit(&self, z: DiskPoint, n: usize) -> Vec<DiskPoint> {
        let mut out = Vec::with_capacity(n + 1);
        let mut cur = z;
        out.push(cur);
        for _ in 0..n {
            cur = self.eval_unchecked(cur);
            out.push(cur);
        }
        out
    }

    /// Geometric decay rate of interior orbits: the least-squares slope of
    /// `log |f^n(z)|` over the second half of each orbit's usable range,
    /// exponentiated and maximized over samples.
    pub fn estimate_decay_rate(&self, samples: &[DiskPoint], n_max: usize) -> Result<f64> {
        if n_max < 10 {
            return Err(Error::InvalidInput("n_max must be at least 10".into()));
        }
        const UNDERFLOW: f64 = 1e-300;
        let mut best: Option<f64> = None;
        for &z in samples {
            if z.norm() >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "sample {z} is not inside the disk"
                )));
            }
            let mut pts = Vec::new();
            let mut cur = z;
            for n in 0..=n_max {
                let m = cur.norm();
                if !(m > UNDERFLOW) {
                    break;
                }
                pts.push((n as f64, m.ln()));
                cur = self.eval_unchecked(cur);
            }
            if pts.len() < 3 {
                continue;
            }
            let tail = &pts[pts.len() / 2..];
            let tail = if tail.len() >= 3 {
                tail
            } else {
                &pts[pts.len() - 3..]
            };
            let slope = least_squares_slope(tail);
            let rate = slope.exp().clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            best = Some(best.map_or(rate, |b: f64| b.max(rate)));
        }
        best.ok_or_else(|| {
            Error::DegenerateOrbit("every sample orbit underflowed before 3 usable points".into())
        })
    }
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Golden-section search on `[a, b]`; returns the argument and value of the
/// located minimum (or maximum when `maximize`).
pub fn golden_section(f: impl Fn(f64) -> f64, a: f64, b: f64, maximize: bool) -> (f64, f64) {
    let sign = if maximize { -1.0 } else { 1.0 };
    let g = |x: f64| sign * f(x);
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (a, b);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let mut fc = g(c);
    let mut fd = g(d);
    for _ in 0..80 {
        if (b - a).abs() <= 1e-14 * (1.0 + a.abs() + b.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = g(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = g(d);
        }
    }
    let (x, fx) = if fc < fd { (c, fc) } else { (d, fd) };
    (x, sign * fx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn evaluate_examples() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(f.evaluate(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        assert!((f.evaluate(c(1.0, 0.0)).unwrap() - c(1.0, 0.0)).norm() < 1e-15);
        let sq = BlaschkeProduct::power(2).unwrap();
        assert!((sq.evaluate(c(0.0, 0.3)).unwrap() - c(-0.09, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn rejects_zero_on_circle() {
        assert!(matches!(
            BlaschkeProduct::new(vec![c(1.0, 0.0)]),
            Err(Error::ZeroOutsideDisk { index: 0, .. })
        ));
    }

    #[test]
    fn poisson_sum_examples() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert!((f.poisson_sum_at_turn(0.5) - 4.0 / 3.0).abs() < 1e-14);
        assert!((f.poisson_sum_at_turn(0.0) - 4.0).abs() < 1e-14);
        assert_eq!(
            BlaschkeProduct::power(2).unwrap().poisson_sum_at_turn(0.37),
            2.0
        );
    }

    #[test]
    fn expansion_constants_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let k = sq.expansion_constants(16).unwrap();
        assert_eq!((k.k_min, k.k_max), (2.0, 2.0));
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let k = f.expansion_constants(64).unwrap();
        assert!((k.k_min - 7.0 / 3.0).abs() < 1e-10, "{}", k.k_min);
        assert!((k.k_max - 5.0).abs() < 1e-10, "{}", k.k_max);
        assert!(f.expansion_constants(4).is_err());
        let rot = BlaschkeProduct::power(1).unwrap();
        assert!(matches!(
            rot.expansion_constants(16),
            Err(Error::NotExpanding { .. })
        ));
    }

    #[test]
    fn required_precision_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        assert_eq!(sq.required_precision(100, 53), 217);
        assert_eq!(sq.required_precision(0, 53), 117);
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        assert_eq!(f.required_precision(50, 53), 234);
    }

    #[test]
    fn pseudohyperbolic_examples() {
        let w = c(0.3, -0.4);
        assert!((pseudohyperbolic(c(0.0, 0.0), w) - 0.5).abs() < 1e-15);
        assert_eq!(pseudohyperbolic(w, w), 0.0);
        assert!((pseudohyperbolic(c(0.5, 0.0), c(-0.5, 0.0)) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn lift_matches_argument_and_increment() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.3, 0.6), c(-0.7, 0.1)]).unwrap();
        assert!((f.lift(1.25) - f.lift(0.25) - 3.0).abs() < 1e-12);
        for &x in &[0.0, 0.1, 0.77] {
            let v = f.evaluate(cis_turn(x)).unwrap();
            let t = f.lift(x);
            assert!((cis_turn(t) - v).norm() < 1e-12);
            for &e in &[1e-9, 0.013, 0.4, 2.7, -0.3] {
                let direct = f.lift(x + e) - f.lift(x);
                assert!((f.lift_increment(x, e) - direct).abs() < 1e-12);
            }
        }
        let tiny = f.lift_increment(0.3, 1e-200);
        assert!((tiny / 1e-200 - f.poisson_sum_at_turn(0.3)).abs() < 1e-9);
    }

    #[test]
    fn derivative_modulus_matches_poisson_sum() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.2, -0.5), c(0.6, 0.6)]).unwrap();
        for j in 0..50 {
            let t = j as f64 / 50.0;
            let d = f.derivative(cis_turn(t)).norm();
            assert!((d / f.poisson_sum_at_turn(t) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_rate_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = sq.estimate_decay_rate(&[c(0.5, 0.0)], 40).unwrap();
        assert!(a <= 0.5);
        assert!(sq.estimate_decay_rate(&[c(0.0, 0.0)], 40).is_err());
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let a = f.estimate_decay_rate(&[c(0.9, 0.0)], 200).unwrap();
        // f'(0) = -0.5, so the geometric rate near the fixed point is 1/2.
        assert!((a - 0.5).abs() < 1e-3, "{a}");
    }
}
