//! Boundary points as exact dyadic turn fractions, and high-precision orbits.

use std::fmt;

use num_complex::Complex64;
use rug::float::Constant;
use rug::{Float, Integer};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::product::BlaschkeProduct;

/// Default angular accuracy kept by orbit computations.
pub const ACCURACY_BITS: u32 = 53;
/// Guard bits on top of the accuracy target.
pub const GUARD_BITS: u32 = 64;

/// A point `e^{2 pi i t}` of the circle with `t = numer / 2^bits` in [0, 1).
///
/// Arithmetic on the turn is exact; `bits` is the stored precision.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BoundaryPoint {
    numer: Integer,
    bits: u32,
}

/// Serialized form: the turn as a decimal string plus its precision.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BoundaryPointSpec {
    pub turn: String,
    pub precision_bits: u32,
}

impl Serialize for BoundaryPoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        BoundaryPointSpec {
            turn: self.to_decimal_string(),
            precision_bits: self.bits,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BoundaryPoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = BoundaryPointSpec::deserialize(d)?;
        BoundaryPoint::parse(&spec.turn, spec.precision_bits).map_err(serde::de::Error::custom)
    }
}

/// Decimal digits carried by a `bits`-bit fraction: `ceil(bits * log10 2)`.
pub fn decimal_digits(bits: u32) -> usize {
    (bits as f64 * std::f64::consts::LOG10_2).ceil() as usize
}

impl BoundaryPoint {
    pub fn zero(bits: u32) -> Self {
        BoundaryPoint {
            numer: Integer::new(),
            bits,
        }
    }

    /// `numer / 2^bits`, reduced mod 1.
    pub fn from_dyadic(numer: Integer, bits: u32) -> Self {
        let mut numer = numer;
        numer.keep_bits_mut(bits);
        BoundaryPoint { numer, bits }
    }

    /// Nearest representable point to a double turn (reduced mod 1).
    pub fn from_f64(turn: f64, bits: u32) -> Self {
        let t = turn - turn.floor();
        let scaled = Float::with_val(bits + 64, t) << bits;
        let numer = scaled.to_integer().unwrap_or_default();
        BoundaryPoint::from_dyadic(numer, bits)
    }

    /// Exact turn from an MPFR value, rounded to `bits`.
    pub fn from_float(turn: &Float, bits: u32) -> Self {
        let mut t = Float::with_val(turn.prec().max(bits + 8), turn);
        t <<= bits;
        let numer = t.to_integer().unwrap_or_default();
        BoundaryPoint::from_dyadic(numer, bits)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn numer(&self) -> &Integer {
        &self.numer
    }

    /// The turn rounded to the nearest double.
    pub fn to_f64(&self) -> f64 {
        let mut f = Float::with_val(53, &self.numer);
        f >>= self.bits;
        f.to_f64()
    }

    /// The turn as an MPFR float (exact when `prec >= bits`).
    pub fn to_float(&self, prec: u32) -> Float {
        let mut f = Float::with_val(prec.max(self.bits.max(1)), &self.numer);
        f >>= self.bits;
        if prec < f.prec() {
            f.set_prec(prec);
        }
        f
    }

    /// Same point, stored with a different precision (rounded down when shrinking).
    pub fn with_bits(&self, bits: u32) -> Self {
        if bits >= self.bits {
            BoundaryPoint {
                numer: Integer::from(&self.numer << (bits - self.bits)),
                bits,
            }
        } else {
            let shift = self.bits - bits;
            let half = Integer::from(1) << (shift - 1);
            let numer = Integer::from(&self.numer + &half) >> shift;
            BoundaryPoint::from_dyadic(numer, bits)
        }
    }

    /// `self + offset` (turns, mod 1), rounding the offset to the stored grid.
    pub fn add_turns(&self, offset: ExtF64) -> Self {
        if offset.is_zero() {
            return self.clone();
        }
        let scaled = offset.to_float(64) << self.bits;
        let step = Float::with_val(scaled.prec(), scaled.round_ref())
            .to_integer()
            .unwrap_or_default();
        BoundaryPoint::from_dyadic(Integer::from(&self.numer + &step), self.bits)
    }

    /// Signed shortest difference `self - other` in (-1/2, 1/2] turns.
    pub fn offset_from(&self, other: &BoundaryPoint) -> ExtF64 {
        let bits = self.bits.max(other.bits);
        let a = self.with_bits(bits);
        let b = other.with_bits(bits);
        let mut diff = Integer::from(&a.numer - &b.numer);
        diff.keep_bits_mut(bits);
        let half = Integer::from(1) << (bits - 1);
        if diff > half {
            diff -= Integer::from(1) << bits;
        }
        let mut f = Float::with_val(64, &diff);
        f >>= bits;
        ExtF64::from_float(&f)
    }

    /// Exact decimal expansion with `ceil(bits * log10 2)` digits, which
    /// parses back to the same point.
    pub fn to_decimal_string(&self) -> String {
        let digits = decimal_digits(self.bits);
        // numer * 10^digits / 2^bits, rounded to nearest.
        let scaled: Integer = &self.numer * Integer::from(Integer::u_pow_u(10, digits as u32));
        let half = if self.bits > 0 {
            Integer::from(1) << (self.bits - 1)
        } else {
            Integer::new()
        };
        let q: Integer = Integer::from(&scaled + &half) >> self.bits;
        let s = q.to_string();
        if s.len() > digits {
            // Rounded up to 1.0 (a point within half an ulp of a full turn).
            return format!("0.{}", "0".repeat(digits.max(1)));
        }
        format!("0.{}{}", "0".repeat(digits - s.len()), s)
    }

    /// Parses a decimal turn in [0, 1) (or any real, reduced mod 1) at `bits`.
    pub fn parse(s: &str, bits: u32) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidInput(format!("cannot parse turn '{s}'"));
        let (neg, body) = match s.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, s.strip_prefix('+').unwrap_or(s)),
        };
        if body.contains(['e', 'E']) {
            let parsed = Float::parse(s).map_err(|_| bad())?;
            let f = Float::with_val(bits + 64, parsed);
            let fl = Float::with_val(bits + 64, f.floor_ref());
            let f = Float::with_val(bits + 64, &f - &fl);
            return Ok(BoundaryPoint::from_float(&f, bits));
        }
        let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
        if int_part
            .chars()
            .chain(frac_part.chars())
            .any(|c| !c.is_ascii_digit())
            || body.is_empty()
        {
            return Err(bad());
        }
        let digits = frac_part.len() as u32;
        let whole = format!(
            "{}{}",
            if int_part.is_empty() { "0" } else { int_part },
            frac_part
        );
        let value = Integer::from_str_radix(&whole, 10).map_err(|_| bad())?;
        let denom = Integer::from(Integer::u_pow_u(10, digits));
        // round(value * 2^bits / 10^digits)
        let scaled = value << bits;
        let half = Integer::from(&denom >> 1);
        let mut numer = Integer::from(&scaled + &half) / &denom;
        if neg {
            numer = -numer;
        }
        Ok(BoundaryPoint::from_dyadic(numer, bits))
    }

    /// `e^{2 pi i t}` rounded to doubles.
    pub fn to_complex(&self) -> Complex64 {
        let (s, c) = hp_unit(self, 64);
        Complex64::new(c.to_f64(), s.to_f64())
    }
}

impl fmt::Display for BoundaryPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

/// `(sin, cos)` of `2 pi t` at precision `prec`.
pub(crate) fn hp_unit(t: &BoundaryPoint, prec: u32) -> (Float, Float) {
    let tau = Float::with_val(prec + 16, Constant::Pi) * 2u32;
    let angle = tau * t.to_float(prec + 16);
    let mut s = Float::with_val(prec, angle);
    let mut c = Float::new(prec);
    s.sin_cos_mut(&mut c);
    (s, c)
}

/// A complex number with MPFR parts.
#[derive(Clone, Debug)]
pub(crate) struct HpComplex {
    pub re: Float,
    pub im: Float,
}

impl HpComplex {
    fn mul(&self, o: &HpComplex, prec: u32) -> HpComplex {
        let re = Float::with_val(prec, &self.re * &o.re) - Float::with_val(prec, &self.im * &o.im);
        let im = Float::with_val(prec, &self.re * &o.im) + Float::with_val(prec, &self.im * &o.re);
        HpComplex { re, im }
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    fn set_prec(&mut self, prec: u32) {
        self.re.set_prec(prec);
        self.im.set_prec(prec);
    }
}

/// One application of `f` at precision `prec`.
pub(crate) fn hp_step(f: &BlaschkeProduct, z: &HpComplex, prec: u32) -> HpComplex {
    let one = |p| Float::with_val(p, 1);
    let mut num = HpComplex {
        re: one(prec),
        im: Float::new(prec),
    };
    let mut den = HpComplex {
        re: one(prec),
        im: Float::new(prec),
    };
    for a in f.nonzero_zeros() {
        let n = HpComplex {
            re: Float::with_val(prec, &z.re - a.re),
            im: Float::with_val(prec, &z.im - a.im),
        };
        // 1 - conj(a) z = 1 - (a.re z.re + a.im z.im) - i (a.re z.im - a.im z.re)
        let dr =
            one(prec) - Float::with_val(prec, &z.re * a.re) - Float::with_val(prec, &z.im * a.im);
        let di = Float::with_val(prec, &z.im * a.re) - Float::with_val(prec, &z.re * a.im);
        let d = HpComplex { re: dr, im: -di };
        num = num.mul(&n, prec);
        den = den.mul(&d, prec);
    }
    let mut m = f.zero_at_origin_count();
    let mut base = z.clone();
    base.set_prec(prec);
    while m > 0 {
        if m & 1 == 1 {
            num = num.mul(&base, prec);
        }
        m >>= 1;
        if m > 0 {
            base = base.mul(&base, prec);
        }
    }
    if f.nonzero_zeros().is_empty() {
        return num;
    }
    let norm =
        Float::with_val(prec, den.re.square_ref()) + Float::with_val(prec, den.im.square_ref());
    let conj = HpComplex {
        re: den.re.clone(),
        im: -den.im.clone(),
    };
    let q = num.mul(&conj, prec);
    HpComplex {
        re: q.re / &norm,
        im: q.im / &norm,
    }
}

/// Precision schedule for an orbit of depth `n`: step `j` needs enough bits to
/// absorb the expansion still ahead of it.
pub(crate) fn precision_at(f: &BlaschkeProduct, remaining: usize, accuracy_bits: u32) -> u32 {
    f.required_precision(remaining, accuracy_bits).max(64)
}

/// Visits `f^j(z0)` for `j = 0..=n`, rounded to doubles, where `z0` is the
/// boundary point `start` pushed inward by `defect` (`|z0| = 1 - defect`).
/// Precision drops along the orbit as the remaining expansion shrinks.
pub(crate) fn hp_orbit(
    f: &BlaschkeProduct,
    start: &BoundaryPoint,
    defect: ExtF64,
    n: usize,
    accuracy_bits: u32,
    mut visit: impl FnMut(usize, &HpComplex),
) {
    let defect_bits = if defect.is_zero() {
        0
    } else {
        (-defect.log2_abs()).max(0.0).ceil() as u32
    };
    let p0 = precision_at(f, n, accuracy_bits) + defect_bits;
    let (s, c) = hp_unit(start, p0);
    let mut z = HpComplex { re: c, im: s };
    if !defect.is_zero() {
        let r = Float::with_val(p0, 1) - defect.to_float(64);
        z.re *= &r;
        z.im *= &r;
    }
    visit(0, &z);
    for j in 1..=n {
        let p = precision_at(f, n - j, accuracy_bits) + defect_bits.saturating_sub(j as u32);
        z = hp_step(f, &z, p);
        visit(j, &z);
    }
}

/// Turn of `e^{i theta}` for an MPFR complex point, in [0, 1).
pub(crate) fn hp_turn(z: &HpComplex, prec: u32) -> Float {
    let mut y = Float::with_val(prec, &z.im);
    y.atan2_mut(&Float::with_val(prec, &z.re));
    let tau = Float::with_val(prec, Constant::Pi) * 2u32;
    let mut t = y / tau;
    if t < 0 {
        t += 1u32;
    }
    t
}

/// `f(xi)` on the circle through the closed-form argument lift, evaluated at
/// the point's own precision plus guard bits.
pub fn evaluate_boundary(f: &BlaschkeProduct, xi: &BoundaryPoint) -> Result<BoundaryPoint> {
    let bits = xi.bits();
    if f.is_pure_power() {
        let numer = Integer::from(xi.numer() * f.degree() as u32);
        return Ok(BoundaryPoint::from_dyadic(numer, bits));
    }
    let prec = bits + GUARD_BITS + f.k_max().log2().ceil() as u32;
    let x = xi.to_float(prec + 8);
    let mut lifted = Float::with_val(prec, &x * f.degree() as u32);
    let pi = Float::with_val(prec, Constant::Pi);
    let (s, c) = hp_unit(xi, prec);
    for a in f.nonzero_zeros() {
        // w = 1 - a e^{-2 pi i x} = 1 - (a.re c + a.im s) - i (a.im c - a.re s)
        let wr = Float::with_val(prec, 1)
            - Float::with_val(prec, &c * a.re)
            - Float::with_val(prec, &s * a.im);
        let wi = Float::with_val(prec, &s * a.re) - Float::with_val(prec, &c * a.im);
        let mut arg = wi;
        arg.atan2_mut(&wr);
        lifted += arg / &pi;
    }
    let fl = Float::with_val(prec, lifted.floor_ref());
    let frac = Float::with_val(prec, &lifted - &fl);
    Ok(BoundaryPoint::from_float(&frac, bits))
}

/// `f^n` of a boundary point.  Requires `bits >= required_precision(n)`; the
/// result keeps the input's precision, with angular accuracy
/// `2^-(bits - n log2 k_max)`.  Pure powers are exact.
pub fn iterate_boundary(
    f: &BlaschkeProduct,
    xi: &BoundaryPoint,
    n: usize,
) -> Result<BoundaryPoint> {
    let needed = f.required_precision(n, ACCURACY_BITS);
    if xi.bits() < needed {
        return Err(Error::PrecisionBudget {
            needed,
            available: xi.bits(),
        });
    }
    let bits = xi.bits();
    if f.is_pure_power() {
        let d = Integer::from(f.degree());
        let modulus = Integer::from(1) << bits;
        let factor = d
            .pow_mod(&Integer::from(n), &modulus)
            .expect("positive modulus");
        return Ok(BoundaryPoint::from_dyadic(
            Integer::from(xi.numer() * &factor),
            bits,
        ));
    }
    let prec = bits + GUARD_BITS;
    let (s, c) = hp_unit(xi, prec);
    let mut z = HpComplex { re: c, im: s };
    for _ in 0..n {
        z = hp_step(f, &z, prec);
    }
    Ok(BoundaryPoint::from_float(&hp_turn(&z, prec), bits))
}

/// Interior orbit of `z` in double precision (`f^j(z)`, `j = 0..=n`).
pub fn iterate_interior(f: &BlaschkeProduct, z: Complex64, n: usize) -> Complex64 {
    let mut cur = z;
    for _ in 0..n {
        cur = f.eval_unchecked(cur);
    }
    cur
}

/// Orbit of the interior point `(1 - defect) e^{2 pi i t}` computed with
/// enough precision that points astronomically close to the circle are
/// followed faithfully.  Returns `f^j` for `j = 0..=n` as doubles.
pub fn near_boundary_orbit(
    f: &BlaschkeProduct,
    direction: &BoundaryPoint,
    defect: ExtF64,
    n: usize,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n + 1);
    hp_orbit(f, direction, defect, n, ACCURACY_BITS, |_, z| {
        out.push(z.to_complex())
    });
    out
}
