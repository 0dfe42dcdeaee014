//! Reference orbits: deep iterates of many boundary points near one center.
//!
//! A candidate `xi = c + eps` (turns) is followed through its offset
//! `e_j = lift(f^j(xi)) - lift(f^j(c))` from the reference orbit of `c`.
//! While `|e_j|` is tiny the offset is linear, `e_j = eps * (f^j)'(c)`, and
//! the candidate's terms equal the reference's to far below double precision,
//! so prefix sums of the reference stand in for them.  Once the offset is
//! large enough to matter it is advanced exactly with
//! [`BlaschkeProduct::lift_increment`], which never cancels.  Only the
//! reference needs high precision; each candidate costs about
//! `60 / log2(k_min)` double-precision steps.
//!
//! Candidate turns are accurate while `|e_j|` stays of order one, i.e. while
//! the arc swept by the candidates has an image of a few turns at most.

use num_complex::Complex64;
use rug::Integer;

use crate::boundary::{hp_orbit, BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::product::{cis_turn, BlaschkeProduct};

/// Offsets below this are treated as linear.
const LINEAR_LIMIT_LOG2: f64 = -60.0;
/// Offsets above this only feed measures; they are grown by the degree.
const HUGE_OFFSET: f64 = 1.099_511_627_776e12; // 2^40
/// Hard cap on reference precision.
pub const MAX_REFERENCE_BITS: u32 = 1 << 23;

#[derive(Clone, Debug)]
pub struct ReferenceOrbit {
    f: BlaschkeProduct,
    center: BoundaryPoint,
    turns: Vec<f64>,
    derivs: Vec<ExtF64>,
}

fn unit_turn(re: f64, im: f64) -> f64 {
    let t = im.atan2(re) / std::f64::consts::TAU;
    if t < 0.0 {
        t + 1.0
    } else {
        t
    }
}

impl ReferenceOrbit {
    /// Orbit of `center` to `depth`, with the center carried at the precision
    /// that depth requires (extending a dyadic point is exact).
    pub fn new(f: &BlaschkeProduct, center: &BoundaryPoint, depth: usize) -> Result<Self> {
        let bits = f.required_precision(depth, ACCURACY_BITS);
        if bits > MAX_REFERENCE_BITS {
            return Err(Error::PrecisionBudget {
                needed: bits,
                available: MAX_REFERENCE_BITS,
            });
        }
        let center = center.with_bits(bits.max(center.bits()));
        let mut turns = Vec::with_capacity(depth + 1);
        if f.is_pure_power() {
            let d = f.degree() as u32;
            let mut numer = center.numer().clone();
            let cbits = center.bits();
            for j in 0..=depth {
                if j > 0 {
                    numer *= d;
                    numer.keep_bits_mut(cbits);
                }
                turns.push(BoundaryPoint::from_dyadic(Integer::from(&numer), cbits).to_f64());
            }
        } else {
            hp_orbit(f, &center, ExtF64::ZERO, depth, ACCURACY_BITS, |j, z| {
                let t = if j == 0 {
                    center.to_f64()
                } else {
                    unit_turn(z.re.to_f64(), z.im.to_f64())
                };
                turns.push(if t >= 1.0 { 0.0 } else { t });
            });
        }
        let mut derivs = Vec::with_capacity(depth + 1);
        let mut d = ExtF64::ONE;
        derivs.push(d);
        for &t in &turns[..depth] {
            d = d.mul_f64(f.poisson_sum_at_turn(t));
            derivs.push(d);
        }
        Ok(ReferenceOrbit {
            f: f.clone(),
            center,
            turns,
            derivs,
        })
    }

    pub fn product(&self) -> &BlaschkeProduct {
        &self.f
    }

    pub fn center(&self) -> &BoundaryPoint {
        &self.center
    }

    pub fn depth(&self) -> usize {
        self.turns.len() - 1
    }

    /// Turn of `f^n(center)`.
    pub fn turn(&self, n: usize) -> f64 {
        self.turns[n]
    }

    /// `|(f^n)'(center)|`.
    pub fn derivative(&self, n: usize) -> ExtF64 {
        self.derivs[n]
    }

    /// The candidate point `center + eps`.
    pub fn point(&self, eps: ExtF64) -> BoundaryPoint {
        self.center.add_turns(eps)
    }

    /// First index at which the offset of `eps` leaves the linear regime
    /// (`depth + 1` if it never does).
    pub fn linear_start(&self, eps: ExtF64) -> usize {
        if eps.is_zero() {
            return self.turns.len();
        }
        let need = LINEAR_LIMIT_LOG2 - eps.log2_abs();
        let past = |j: usize| self.derivs[j].log2_abs() >= need;
        if self.f.k_min() > 1.0 {
            self.derivs.partition_point(|d| d.log2_abs() < need)
        } else {
            (0..self.turns.len())
                .find(|&j| past(j))
                .unwrap_or(self.turns.len())
        }
    }

    /// Visits `(n, e_n)` for `linear_start <= n <= to`, advancing offsets
    /// exactly from the end of the linear regime.
    fn walk(&self, eps: ExtF64, to: usize, mut visit: impl FnMut(usize, f64)) {
        let s = self.linear_start(eps);
        if s > to {
            return;
        }
        let mut e = (eps * self.derivs[s]).to_f64();
        visit(s, e);
        for j in s..to {
            e = self.f.lift_increment(self.turns[j], e);
            visit(j + 1, e);
        }
    }

    /// Lifted offset of `eps` at depth `n` in turns (the signed measure of
    /// the image of the arc from the center to `center + eps`).
    pub fn image_offset(&self, eps: ExtF64, n: usize) -> ExtF64 {
        let s = self.linear_start(eps);
        if s > n {
            return eps * self.derivs[n];
        }
        let mut e = (eps * self.derivs[s]).to_f64();
        for j in s..n {
            if e.abs() > HUGE_OFFSET {
                let d = self.f.degree() as f64;
                return ExtF64::new(e) * ExtF64::exp2((n - j) as f64 * d.log2());
            }
            e = self.f.lift_increment(self.turns[j], e);
        }
        ExtF64::new(e)
    }

    /// Measure of the image at depth `n` of the arc between two offsets
    /// (`lo <= hi`).  Exact in the linear regime, where it matters most.
    pub fn image_measure(&self, lo: ExtF64, hi: ExtF64, n: usize) -> ExtF64 {
        if self.linear_start(lo) > n && self.linear_start(hi) > n {
            return (hi - lo) * self.derivs[n];
        }
        self.image_offset(hi, n) - self.image_offset(lo, n)
    }

    /// Turn of `f^n(center + eps)`.
    pub fn candidate_turn(&self, eps: ExtF64, n: usize) -> f64 {
        let mut out = self.turns[n];
        self.walk(eps, n, |j, e| {
            if j == n {
                let t = self.turns[n] + e;
                out = t - t.floor();
            }
        });
        out
    }
}

/// A reference orbit paired with coefficients `a_1..a_N` and the reference's
/// prefix sums, for evaluating partial sums at many candidates.
#[derive(Clone, Debug)]
pub struct SumChart {
    orbit: ReferenceOrbit,
    coeffs: Vec<Complex64>,
    prefix: Vec<Complex64>,
}

impl SumChart {
    /// `coeffs[n]` is `a_n`; `coeffs[0]` is ignored.  The chart covers
    /// indices up to the orbit depth.
    pub fn new(orbit: ReferenceOrbit, coeffs: Vec<Complex64>) -> Self {
        let depth = orbit.depth();
        assert!(
            coeffs.len() > depth,
            "coefficients must reach the orbit depth"
        );
        let mut prefix = Vec::with_capacity(depth + 1);
        let mut acc = Complex64::new(0.0, 0.0);
        prefix.push(acc);
        for (c, &t) in coeffs[1..=depth].iter().zip(&orbit.turns[1..=depth]) {
            acc += c * cis_turn(t);
            prefix.push(acc);
        }
        SumChart {
            orbit,
            coeffs,
            prefix,
        }
    }

    pub fn orbit(&self) -> &ReferenceOrbit {
        &self.orbit
    }

    pub fn coeff(&self, n: usize) -> Complex64 {
        self.coeffs[n]
    }

    /// `sum_{n=m}^{n_end} a_n f^n(center + eps)`, `1 <= m`.
    pub fn partial_sum(&self, eps: ExtF64, m: usize, n_end: usize) -> Complex64 {
        if m > n_end {
            return Complex64::new(0.0, 0.0);
        }
        let s = self.orbit.linear_start(eps);
        let mut total = Complex64::new(0.0, 0.0);
        if m < s {
            let hi = n_end.min(s - 1);
            total += self.prefix[hi] - self.prefix[m - 1];
        }
        let turns = &self.orbit.turns;
        self.orbit.walk(eps, n_end, |j, e| {
            if j >= m {
                total += self.coeffs[j] * cis_turn(turns[j] + e);
            }
        });
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::iterate_boundary;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn doubling_reference_is_exact() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let c0 = BoundaryPoint::parse("0.1", 64).unwrap();
        let orbit = ReferenceOrbit::new(&sq, &c0, 300).unwrap();
        let exact = iterate_boundary(&sq, &orbit.center().clone(), 300).unwrap();
        assert_eq!(orbit.turn(300), exact.to_f64());
        assert_eq!(orbit.derivative(300), ExtF64::from_parts(1.0, 300));
        let eps = ExtF64::from_parts(1.0, -290);
        assert_eq!(orbit.image_offset(eps, 200), ExtF64::from_parts(1.0, -90));
        assert_eq!(orbit.image_offset(eps, 291), ExtF64::new(2.0));
    }

    #[test]
    fn candidates_match_direct_iteration() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.2)]).unwrap();
        let center = BoundaryPoint::from_f64(0.3, 64);
        let depth = 120;
        let orbit = ReferenceOrbit::new(&f, &center, depth).unwrap();
        for log_eps in [-400.0, -150.0, -100.0, -20.0] {
            for sign in [1.0, -1.0] {
                let eps = ExtF64::exp2(log_eps).mul_f64(sign * 0.7);
                let pt = orbit.point(eps);
                for n in [0, 1, 50, depth] {
                    if orbit.image_offset(eps, n).abs() > ExtF64::new(8.0) {
                        continue;
                    }
                    let direct = iterate_boundary(&f, &pt, n).unwrap().to_f64();
                    let got = orbit.candidate_turn(eps, n);
                    let gap = (direct - got + 0.5).rem_euclid(1.0) - 0.5;
                    assert!(
                        gap.abs() < 1e-12,
                        "eps 2^{log_eps} n {n}: {direct} vs {got}"
                    );
                }
            }
        }
    }

    #[test]
    fn measure_of_small_arcs_scales_with_derivative() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(-0.4, 0.5)]).unwrap();
        let orbit = ReferenceOrbit::new(&f, &BoundaryPoint::from_f64(0.71, 64), 400).unwrap();
        let h = ExtF64::from_parts(1.0, -700);
        let m = orbit.image_measure(-h, h, 300);
        let rel = (m / (h.mul_f64(2.0) * orbit.derivative(300))).to_f64() - 1.0;
        assert!(rel.abs() < 1e-12);
    }

    #[test]
    fn chart_sums_match_term_by_term() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.3, -0.3)]).unwrap();
        let depth = 80;
        let orbit = ReferenceOrbit::new(&f, &BoundaryPoint::from_f64(0.05, 64), depth).unwrap();
        let coeffs: Vec<Complex64> = (0..=depth)
            .map(|n| c(1.0 / (n.max(1) as f64), 0.0))
            .collect();
        let chart = SumChart::new(orbit, coeffs.clone());
        let eps = ExtF64::exp2(-75.0);
        let pt = chart.orbit().point(eps);
        let mut direct = Complex64::new(0.0, 0.0);
        for (n, c) in coeffs.iter().enumerate().take(depth + 1).skip(3) {
            let t = iterate_boundary(&f, &pt, n).unwrap().to_f64();
            direct += c * cis_turn(t);
        }
        let got = chart.partial_sum(eps, 3, depth);
        assert!((got - direct).norm() < 1e-12, "{got} vs {direct}");
    }
}
