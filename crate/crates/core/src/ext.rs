//! A double with a 64-bit exponent.
//!
//! Arc lengths and orbit derivatives leave the `f64` exponent range long before
//! the dynamics get interesting (an arc whose image under `f^2000` is a quarter
//! turn has length around `2^-2000`).  `ExtF64` keeps a normalized `f64`
//! mantissa and a separate exponent so products and quotients never overflow.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::Float;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtF64 {
    /// Zero, or magnitude in [0.5, 1).
    mant: f64,
    exp: i64,
}

/// `2^e` for `e` inside the normal exponent range.
fn pow2(e: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&e));
    f64::from_bits(((e + 1023) as u64) << 52)
}

/// Split `x` into `(m, e)` with `x = m * 2^e` and `|m|` in [0.5, 1).
pub fn frexp(x: f64) -> (f64, i64) {
    if x == 0.0 || !x.is_finite() {
        return (x, 0);
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        let (m, e) = frexp(x * pow2(64));
        return (m, e - 64);
    }
    let m = f64::from_bits((bits & !(0x7ff << 52)) | (1022 << 52));
    (m, biased - 1022)
}

/// `m * 2^e`, saturating to infinity or flushing to zero outside the range.
pub fn ldexp(m: f64, e: i64) -> f64 {
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    let mut m = m;
    let mut e = e;
    while e > 1000 {
        m *= pow2(1000);
        e -= 1000;
        if m.is_infinite() {
            return m;
        }
    }
    while e < -1000 {
        m *= pow2(-1000);
        e += 1000;
        if m == 0.0 {
            return m;
        }
    }
    m * pow2(e)
}

impl ExtF64 {
    pub const ZERO: ExtF64 = ExtF64 { mant: 0.0, exp: 0 };
    pub const ONE: ExtF64 = ExtF64 { mant: 0.5, exp: 1 };

    pub fn new(x: f64) -> Self {
        assert!(x.is_finite(), "ExtF64 from non-finite value {x}");
        let (mant, exp) = frexp(x);
        ExtF64 { mant, exp }
    }

    /// `m * 2^e`.
    pub fn from_parts(m: f64, e: i64) -> Self {
        let x = ExtF64::new(m);
        if x.mant == 0.0 {
            return ExtF64::ZERO;
        }
        ExtF64 {
            mant: x.mant,
            exp: x.exp + e,
        }
    }

    /// `2^x` for a real `x`, without overflow.
    pub fn exp2(x: f64) -> Self {
        let e = x.floor();
        ExtF64::from_parts((x - e).exp2(), e as i64)
    }

    pub fn mantissa(self) -> f64 {
        self.mant
    }

    pub fn exponent(self) -> i64 {
        self.exp
    }

    pub fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    pub fn to_f64(self) -> f64 {
        ldexp(self.mant, self.exp)
    }

    /// `log2 |x|`; negative infinity at zero.
    pub fn log2_abs(self) -> f64 {
        if self.mant == 0.0 {
            return f64::NEG_INFINITY;
        }
        self.mant.abs().log2() + self.exp as f64
    }

    pub fn abs(self) -> Self {
        ExtF64 {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn signum(self) -> f64 {
        if self.mant == 0.0 {
            0.0
        } else {
            self.mant.signum()
        }
    }

    pub fn mul_pow2(self, k: i64) -> Self {
        if self.mant == 0.0 {
            return self;
        }
        ExtF64 {
            mant: self.mant,
            exp: self.exp + k,
        }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self * ExtF64::new(x)
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    /// Exact conversion into an MPFR float with `prec` bits of mantissa.
    pub fn to_float(self, prec: u32) -> Float {
        let mut f = Float::with_val(prec.max(53), self.mant);
        let e = self.exp.clamp(i32::MIN as i64 / 2, i32::MAX as i64 / 2) as i32;
        f <<= e;
        f
    }

    /// Rounds an MPFR float to 53 bits of mantissa.
    pub fn from_float(f: &Float) -> Self {
        if f.is_zero() {
            return ExtF64::ZERO;
        }
        let (m, e) = f.to_f64_exp();
        ExtF64::from_parts(m, e as i64)
    }

    /// Decimal scientific notation with 17 significant digits, which round-trips.
    pub fn to_decimal_string(self) -> String {
        if self.mant == 0.0 {
            return "0".to_string();
        }
        if (-1000..1000).contains(&self.exp) {
            return format!("{:e}", self.to_f64());
        }
        self.to_float(64).to_string_radix(10, Some(17))
    }

    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if let Ok(x) = s.parse::<f64>() {
            let literal_zero = !s
                .split(['e', 'E'])
                .next()
                .unwrap_or("")
                .chars()
                .any(|c| ('1'..='9').contains(&c));
            if x.is_finite() && ((x == 0.0 && literal_zero) || x.abs() > 1e-300) {
                return Some(ExtF64::new(x));
            }
        }
        let parsed = Float::parse(s).ok()?;
        let f = Float::with_val(64, parsed);
        if !f.is_finite() {
            return None;
        }
        Some(ExtF64::from_float(&f))
    }
}

impl From<f64> for ExtF64 {
    fn from(x: f64) -> Self {
        ExtF64::new(x)
    }
}

impl Mul for ExtF64 {
    type Output = ExtF64;
    fn mul(self, o: ExtF64) -> ExtF64 {
        if self.mant == 0.0 || o.mant == 0.0 {
            return ExtF64::ZERO;
        }
        ExtF64::from_parts(self.mant * o.mant, self.exp + o.exp)
    }
}

impl Div for ExtF64 {
    type Output = ExtF64;
    fn div(self, o: ExtF64) -> ExtF64 {
        assert!(o.mant != 0.0, "ExtF64 division by zero");
        if self.mant == 0.0 {
            return ExtF64::ZERO;
        }
        ExtF64::from_parts(self.mant / o.mant, self.exp - o.exp)
    }
}

impl Add for ExtF64 {
    type Output = ExtF64;
    fn add(self, o: ExtF64) -> ExtF64 {
        if self.mant == 0.0 {
            return o;
        }
        if o.mant == 0.0 {
            return self;
        }
        let (big, small) = if self.exp >= o.exp {
            (self, o)
        } else {
            (o, self)
        };
        let shift = big.exp - small.exp;
        if shift > 110 {
            return big;
        }
        ExtF64::from_parts(big.mant + ldexp(small.mant, -shift), big.exp)
    }
}

impl Sub for ExtF64 {
    type Output = ExtF64;
    fn sub(self, o: ExtF64) -> ExtF64 {
        self + (-o)
    }
}

impl Neg for ExtF64 {
    type Output = ExtF64;
    fn neg(self) -> ExtF64 {
        ExtF64 {
            mant: -self.mant,
            exp: self.exp,
        }
    }
}

impl PartialOrd for ExtF64 {
    fn partial_cmp(&self, o: &ExtF64) -> Option<Ordering> {
        let (a, b) = (self.signum(), o.signum());
        if a != b {
            return a.partial_cmp(&b);
        }
        if a == 0.0 {
            return Some(Ordering::Equal);
        }
        let mag = match self.exp.cmp(&o.exp) {
            Ordering::Equal => self.mant.abs().partial_cmp(&o.mant.abs())?,
            other => other,
        };
        Some(if a > 0.0 { mag } else { mag.reverse() })
    }
}

/// Serialized as a decimal string so tiny and huge values survive JSON.
impl serde::Serialize for ExtF64 {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_decimal_string())
    }
}

impl<'de> serde::Deserialize<'de> for ExtF64 {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        ExtF64::parse(&s)
            .ok_or_else(|| serde::de::Error::custom(format!("bad extended float '{s}'")))
    }
}

impl fmt::Display for ExtF64 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frexp_normalizes() {
        for &x in &[1.0, 0.75, -3.5, 1e-310, 6.0e300, f64::MIN_POSITIVE] {
            let (m, e) = frexp(x);
            assert!((0.5..1.0).contains(&m.abs()), "{x}: {m}");
            assert_eq!(ldexp(m, e), x);
        }
    }

    #[test]
    fn products_survive_tiny_exponents() {
        let tiny = ExtF64::from_parts(1.0, -5000);
        let back = tiny * ExtF64::from_parts(3.0, 5000);
        assert_eq!(back.to_f64(), 3.0);
        assert_eq!(tiny.to_f64(), 0.0);
        assert!((tiny.log2_abs() + 5000.0).abs() < 1e-12);
    }

    #[test]
    fn addition_aligns_exponents() {
        let a = ExtF64::from_parts(1.0, -3000);
        let b = ExtF64::from_parts(1.0, -3001);
        let s = a + b;
        assert!((s.log2_abs() - (-3000.0 + 1.5f64.log2())).abs() < 1e-12);
        assert!((a - a).is_zero());
    }

    #[test]
    fn ordering_and_decimal_round_trip() {
        let a = ExtF64::from_parts(1.25, -4000);
        let b = ExtF64::from_parts(1.0, -3999);
        assert!(a < b);
        assert!(-b < -a);
        let s = a.to_decimal_string();
        let back = ExtF64::parse(&s).unwrap();
        assert_eq!(back, a);
        assert_eq!(ExtF64::parse("0.125").unwrap().to_f64(), 0.125);
    }
}
