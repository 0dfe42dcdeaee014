//! Coefficient sequences and partial sums of `sum a_n f^n`.

use std::fmt;
use std::sync::Arc as Shared;

use num_complex::Complex64;
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::boundary::{hp_orbit, BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::geometry::Arc;
use crate::orbit::{ReferenceOrbit, SumChart};
use crate::product::{cis_turn, BlaschkeProduct, DiskPoint};

/// How the magnitudes `|a_n|` are generated.
#[derive(Clone)]
pub enum CoefficientKind {
    /// `a_1, a_2, ...` verbatim; zero past the end.
    List(Vec<Complex64>),
    /// `c n^-p`.
    Power { c: f64, p: f64 },
    /// `c / (n log^q(n + 1))`.
    HarmonicLog { c: f64, q: f64 },
    /// `c r^n`.
    Geometric { c: f64, ratio: f64 },
    /// Any function of the index.
    Plugin(Shared<dyn Fn(usize) -> Complex64 + Send + Sync>),
}

impl fmt::Debug for CoefficientKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoefficientKind::List(v) => write!(f, "List(len {})", v.len()),
            CoefficientKind::Power { c, p } => write!(f, "Power {{ c: {c}, p: {p} }}"),
            CoefficientKind::HarmonicLog { c, q } => write!(f, "HarmonicLog {{ c: {c}, q: {q} }}"),
            CoefficientKind::Geometric { c, ratio } => {
                write!(f, "Geometric {{ c: {c}, ratio: {ratio} }}")
            }
            CoefficientKind::Plugin(_) => f.write_str("Plugin"),
        }
    }
}

/// Argument assigned to `a_n` on top of the magnitude (lists keep their own).
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PhaseRule {
    RealPositive,
    /// `(-1)^n`.
    Alternating,
    /// Independent uniform phases, reproducible from the seed.
    Random(u64),
    /// The same phase `e^{2 pi i t}` for every term.
    Turn(f64),
}

/// Analytic facts asserted by the user; never inferred from data.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeclaredFlags {
    pub tends_to_zero: bool,
    pub abs_summable: bool,
    pub slow_decay: bool,
}

#[derive(Clone, Debug)]
pub struct CoefficientSequence {
    kind: CoefficientKind,
    phase: PhaseRule,
    flags: DeclaredFlags,
}

/// JSON form of a coefficient sequence.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CoefficientSpec {
    List {
        values: Vec<ComplexValue>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<DeclaredFlags>,
    },
    Power {
        #[serde(default = "one")]
        c: f64,
        p: f64,
        #[serde(default, flatten)]
        phase: PhaseSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<DeclaredFlags>,
    },
    HarmonicLog {
        #[serde(default = "one")]
        c: f64,
        q: f64,
        #[serde(default, flatten)]
        phase: PhaseSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<DeclaredFlags>,
    },
    Geometric {
        #[serde(default = "one")]
        c: f64,
        ratio: f64,
        #[serde(default, flatten)]
        phase: PhaseSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        flags: Option<DeclaredFlags>,
    },
}

fn one() -> f64 {
    1.0
}

/// `"phase"`: `real-positive` (default), `alternating`, `random` (with
/// `phase_seed`) or `turn` (with `phase_turn`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PhaseSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase_turn: Option<f64>,
}

/// A complex number in JSON: `0.5`, `[re, im]`, `{"re": .., "im": ..}` or
/// `"0.3+0.4i"`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
    Parts { re: f64, im: f64 },
    Text(String),
}

impl ComplexValue {
    pub fn to_complex(&self) -> Result<Complex64> {
        match self {
            ComplexValue::Real(x) => Ok(Complex64::new(*x, 0.0)),
            ComplexValue::Pair([re, im]) => Ok(Complex64::new(*re, *im)),
            ComplexValue::Parts { re, im } => Ok(Complex64::new(*re, *im)),
            ComplexValue::Text(s) => parse_complex(s),
        }
    }
}

/// Parses `a`, `bi`, `a+bi`, `a-bi` (also with `j`, spaces and exponents).
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::InvalidInput(format!("cannot parse complex number '{s}'"));
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if t.is_empty() {
        return Err(bad());
    }
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t
            .parse::<f64>()
            .map(|x| Complex64::new(x, 0.0))
            .map_err(|_| bad());
    };
    // Split at the last sign that is not part of an exponent.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => 1.0,
        "-" => -1.0,
        x => x.parse::<f64>().map_err(|_| bad())?,
    };
    let re = re.parse::<f64>().map_err(|_| bad())?;
    Ok(Complex64::new(re, im))
}

impl PhaseSpec {
    fn rule(&self) -> Result<PhaseRule> {
        match self.phase.as_deref().unwrap_or("real-positive") {
            "real-positive" => Ok(PhaseRule::RealPositive),
            "alternating" => Ok(PhaseRule::Alternating),
            "random" => Ok(PhaseRule::Random(self.phase_seed.unwrap_or(0))),
            "turn" => Ok(PhaseRule::Turn(self.phase_turn.unwrap_or(0.0))),
            other => Err(Error::InvalidInput(format!("unknown phase rule '{other}'"))),
        }
    }

    fn from_rule(rule: PhaseRule) -> Self {
        match rule {
            PhaseRule::RealPositive => PhaseSpec::default(),
            PhaseRule::Alternating => PhaseSpec {
                phase: Some("alternating".into()),
                ..Default::default()
            },
            PhaseRule::Random(seed) => PhaseSpec {
                phase: Some("random".into()),
                phase_seed: Some(seed),
                ..Default::default()
            },
            PhaseRule::Turn(t) => PhaseSpec {
                phase: Some("turn".into()),
                phase_turn: Some(t),
                ..Default::default()
            },
        }
    }
}

impl TryFrom<CoefficientSpec> for CoefficientSequence {
    type Error = Error;
    fn try_from(spec: CoefficientSpec) -> Result<Self> {
        let (seq, flags) = match spec {
            CoefficientSpec::List { values, flags } => {
                let v = values
                    .iter()
                    .map(ComplexValue::to_complex)
                    .collect::<Result<Vec<_>>>()?;
                (CoefficientSequence::list(v), flags)
            }
            CoefficientSpec::Power { c, p, phase, flags } => (
                CoefficientSequence::power(c, p)?.with_phase(phase.rule()?),
                flags,
            ),
            CoefficientSpec::HarmonicLog { c, q, phase, flags } => (
                CoefficientSequence::harmonic_log(c, q)?.with_phase(phase.rule()?),
                flags,
            ),
            CoefficientSpec::Geometric {
                c,
                ratio,
                phase,
                flags,
            } => (
                CoefficientSequence::geometric(c, ratio)?.with_phase(phase.rule()?),
                flags,
            ),
        };
        Ok(match flags {
            Some(f) => seq.with_flags(f),
            None => seq,
        })
    }
}

impl CoefficientSequence {
    pub fn list(values: Vec<Complex64>) -> Self {
        let flags = DeclaredFlags {
            tends_to_zero: true,
            abs_summable: true,
            slow_decay: false,
        };
        CoefficientSequence {
            kind: CoefficientKind::List(values),
            phase: PhaseRule::RealPositive,
            flags,
        }
    }

    pub fn power(c: f64, p: f64) -> Result<Self> {
        if !(c.is_finite() && p.is_finite() && c >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "power law needs finite c >= 0 and p, got c={c}, p={p}"
            )));
        }
        let flags = DeclaredFlags {
            tends_to_zero: p > 0.0 || c == 0.0,
            abs_summable: p > 1.0 || c == 0.0,
            slow_decay: p > 1.0,
        };
        Ok(CoefficientSequence {
            kind: CoefficientKind::Power { c, p },
            phase: PhaseRule::RealPositive,
            flags,
        })
    }

    pub fn harmonic_log(c: f64, q: f64) -> Result<Self> {
        if !(c.is_finite() && q.is_finite() && c >= 0.0 && q >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "harmonic-log needs finite c >= 0 and q >= 0, got c={c}, q={q}"
            )));
        }
        let flags = DeclaredFlags {
            tends_to_zero: true,
            abs_summable: q > 1.0 || c == 0.0,
            slow_decay: q > 1.0,
        };
        Ok(CoefficientSequence {
            kind: CoefficientKind::HarmonicLog { c, q },
            phase: PhaseRule::RealPositive,
            flags,
        })
    }

    pub fn geometric(c: f64, ratio: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0 && ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidInput(format!(
                "geometric needs c >= 0 and 0 < ratio < 1, got c={c}, ratio={ratio}"
            )));
        }
        let flags = DeclaredFlags {
            tends_to_zero: true,
            abs_summable: true,
            slow_decay: false,
        };
        Ok(CoefficientSequence {
            kind: CoefficientKind::Geometric { c, ratio },
            phase: PhaseRule::RealPositive,
            flags,
        })
    }

    /// Coefficients from an arbitrary function; flags must be declared.
    pub fn plugin(
        f: impl Fn(usize) -> Complex64 + Send + Sync + 'static,
        flags: DeclaredFlags,
    ) -> Self {
        CoefficientSequence {
            kind: CoefficientKind::Plugin(Shared::new(f)),
            phase: PhaseRule::RealPositive,
            flags,
        }
    }

    pub fn with_phase(mut self, phase: PhaseRule) -> Self {
        self.phase = phase;
        self
    }

    pub fn with_flags(mut self, flags: DeclaredFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn kind(&self) -> &CoefficientKind {
        &self.kind
    }

    pub fn phase(&self) -> PhaseRule {
        self.phase
    }

    pub fn flags(&self) -> DeclaredFlags {
        self.flags
    }

    /// JSON form (`None` for plugins).
    pub fn to_spec(&self) -> Option<CoefficientSpec> {
        let phase = PhaseSpec::from_rule(self.phase);
        let flags = Some(self.flags);
        Some(match &self.kind {
            CoefficientKind::List(v) => CoefficientSpec::List {
                values: v
                    .iter()
                    .map(|z| ComplexValue::Parts { re: z.re, im: z.im })
                    .collect(),
                flags,
            },
            CoefficientKind::Power { c, p } => CoefficientSpec::Power {
                c: *c,
                p: *p,
                phase,
                flags,
            },
            CoefficientKind::HarmonicLog { c, q } => CoefficientSpec::HarmonicLog {
                c: *c,
                q: *q,
                phase,
                flags,
            },
            CoefficientKind::Geometric { c, ratio } => CoefficientSpec::Geometric {
                c: *c,
                ratio: *ratio,
                phase,
                flags,
            },
            CoefficientKind::Plugin(_) => return None,
        })
    }

    /// Number of nonzero-able terms for finite lists.
    pub fn finite_len(&self) -> Option<usize> {
        match &self.kind {
            CoefficientKind::List(v) => Some(v.len()),
            _ => None,
        }
    }

    fn magnitude(&self, n: usize) -> f64 {
        let x = n as f64;
        match &self.kind {
            CoefficientKind::Power { c, p } => c * x.powf(-p),
            CoefficientKind::HarmonicLog { c, q } => c / (x * (x + 1.0).ln().powf(*q)),
            CoefficientKind::Geometric { c, ratio } => c * ratio.powf(x),
            CoefficientKind::List(_) | CoefficientKind::Plugin(_) => unreachable!(),
        }
    }

    fn phase_factor(&self, n: usize) -> Complex64 {
        match self.phase {
            PhaseRule::RealPositive => Complex64::new(1.0, 0.0),
            PhaseRule::Alternating => Complex64::new(if n % 2 == 0 { 1.0 } else { -1.0 }, 0.0),
            PhaseRule::Turn(t) => cis_turn(t),
            PhaseRule::Random(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_word_pos(2 * n as u128);
                let u = (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
                cis_turn(u)
            }
        }
    }

    /// `a_n` for `n >= 1` (and 0 at `n = 0`).
    pub fn value(&self, n: usize) -> Complex64 {
        if n == 0 {
            return Complex64::new(0.0, 0.0);
        }
        match &self.kind {
            CoefficientKind::List(v) => v.get(n - 1).copied().unwrap_or_default(),
            CoefficientKind::Plugin(g) => g(n),
            _ => self.phase_factor(n) * self.magnitude(n),
        }
    }

    pub fn abs(&self, n: usize) -> f64 {
        match &self.kind {
            CoefficientKind::List(_) | CoefficientKind::Plugin(_) => self.value(n).norm(),
            _ if n == 0 => 0.0,
            _ => self.magnitude(n),
        }
    }

    /// `[0, a_1, ..., a_n]`, ready for index-by-`n` access.
    pub fn dense(&self, n: usize) -> Vec<Complex64> {
        (0..=n).map(|k| self.value(k)).collect()
    }

    /// Whether `|a_n|` is nonincreasing for all `n >= 1`.
    fn monotone(&self) -> bool {
        matches!(self.kind, CoefficientKind::Power { p, .. } if p >= 0.0)
            || matches!(
                self.kind,
                CoefficientKind::HarmonicLog { .. } | CoefficientKind::Geometric { .. }
            )
    }

    /// `max_{from <= n <= horizon} |a_n|`.
    pub fn sup_abs_from(&self, from: usize, horizon: usize) -> f64 {
        let from = from.max(1);
        if from > horizon {
            return 0.0;
        }
        if self.monotone() {
            return self.abs(from);
        }
        let end = self.finite_len().map_or(horizon, |len| len.min(horizon));
        (from..=end).map(|n| self.abs(n)).fold(0.0, f64::max)
    }

    /// `sum_{n=from}^{to} |a_n|`.
    pub fn abs_sum(&self, from: usize, to: usize) -> f64 {
        let to = self.finite_len().map_or(to, |len| len.min(to));
        (from.max(1)..=to).rev().map(|n| self.abs(n)).sum()
    }

    /// Analytic bounds on `sum_{k > h} |a_k|`, when available.
    fn remainder_bounds(&self, h: usize) -> Option<(f64, f64)> {
        let x = h as f64;
        match &self.kind {
            CoefficientKind::List(v) => (h >= v.len()).then_some((0.0, 0.0)),
            CoefficientKind::Power { c, p } if *p > 1.0 => {
                let lower = c * (x + 1.0).powf(1.0 - p) / (p - 1.0);
                let upper = if h == 0 {
                    f64::INFINITY
                } else {
                    c * x.powf(1.0 - p) / (p - 1.0)
                };
                // The k = h+1 term alone is also a lower bound; it matters for tiny h.
                Some((lower.max(c * (x + 1.0).powf(-p)), upper))
            }
            CoefficientKind::HarmonicLog { c, q } if *q > 1.0 && h >= 1 => {
                let lower = c * (x + 2.0).ln().powf(1.0 - q) / (q - 1.0);
                let upper = c * (1.0 + 1.0 / x) * (x + 1.0).ln().powf(1.0 - q) / (q - 1.0);
                Some((lower, upper))
            }
            CoefficientKind::Geometric { c, ratio } => {
                let r = c * ratio.powf(x + 1.0) / (1.0 - ratio);
                Some((r, r))
            }
            _ => None,
        }
    }
}

/// `sum_{n < k <= horizon} |a_k|` plus bounds on what lies beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailSum {
    pub partial: f64,
    pub remainder_lower: f64,
    pub remainder_upper: f64,
}

impl TailSum {
    pub fn lower(&self) -> f64 {
        self.partial + self.remainder_lower
    }

    pub fn upper(&self) -> f64 {
        self.partial + self.remainder_upper
    }

    pub fn midpoint(&self) -> f64 {
        if self.remainder_upper.is_finite() {
            self.partial + 0.5 * (self.remainder_lower + self.remainder_upper)
        } else {
            self.lower()
        }
    }
}

/// Tail `sum_{k > n} |a_k|`: an exact sum up to `horizon` (default `n`, or
/// the end of a finite list) and
/// integral-test bounds for the rest.  Without analytic bounds the remainder
/// is reported as `[0, inf)`.
pub fn tail_abs_sum(a: &CoefficientSequence, n: usize, horizon: Option<usize>) -> Result<TailSum> {
    if horizon.is_none() && !a.flags.abs_summable {
        return Err(Error::UnboundedTail);
    }
    let h = horizon.unwrap_or(a.finite_len().unwrap_or(n)).max(n);
    let partial = a.abs_sum(n + 1, h);
    let (remainder_lower, remainder_upper) = a.remainder_bounds(h).unwrap_or((0.0, f64::INFINITY));
    Ok(TailSum {
        partial,
        remainder_lower,
        remainder_upper,
    })
}

/// Ratio `|a_n| / sum_{k > n} |a_k|` along `n = 1..=n_max`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailRatioReport {
    pub ratios: Vec<(usize, f64)>,
    /// Largest ratio over the last decade `(n_max / 10, n_max]`.
    pub last_decade_max: f64,
    /// Whether the ratios are nonincreasing over the last decade.
    pub decreasing_trend: bool,
}

/// Tracks the ratio whose vanishing in the limit is the slow-decay
/// hypothesis (fast geometric decay keeps it bounded away from zero).
pub fn check_tail_ratio(a: &CoefficientSequence, n_max: usize) -> Result<TailRatioReport> {
    if !a.flags.abs_summable {
        return Err(Error::InvalidInput(
            "tail ratios need absolutely summable coefficients".into(),
        ));
    }
    let extra = 1000.max(n_max);
    let mut ratios = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let tail = tail_abs_sum(a, n, Some(n + extra))?.midpoint();
        let r = if tail > 0.0 {
            a.abs(n) / tail
        } else {
            f64::INFINITY
        };
        ratios.push((n, r));
    }
    let decade: Vec<f64> = ratios
        .iter()
        .filter(|(n, _)| *n > n_max / 10)
        .map(|r| r.1)
        .collect();
    let last_decade_max = decade.iter().copied().fold(0.0, f64::max);
    let decreasing_trend = decade.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    Ok(TailRatioReport {
        ratios,
        last_decade_max,
        decreasing_trend,
    })
}

/// `sum_{n <= N} |a_n| K^{n - N}`.
pub fn weighted_geometric_tail(a: &CoefficientSequence, k: f64, n: usize) -> Result<f64> {
    if !(k > 1.0) {
        return Err(Error::InvalidInput(format!("K = {k} must exceed 1")));
    }
    let mut acc = 0.0;
    for j in 1..=n {
        acc = acc / k + a.abs(j);
    }
    Ok(acc)
}

/// Where a series is evaluated.
#[derive(Clone, Debug, PartialEq)]
pub enum SeriesPoint {
    Boundary(BoundaryPoint),
    Interior(DiskPoint),
}

/// Calls `visit(n, f^n(x))` for `n = 0..=depth` in one pass.  Boundary
/// points must carry `required_precision(depth)` bits.
pub fn visit_orbit(
    f: &BlaschkeProduct,
    x: &SeriesPoint,
    depth: usize,
    mut visit: impl FnMut(usize, Complex64),
) -> Result<()> {
    match x {
        SeriesPoint::Interior(z) => {
            if !(z.norm() <= 1.0) {
                return Err(Error::InvalidInput(format!(
                    "interior point {z} is outside the disk"
                )));
            }
            let mut cur = *z;
            visit(0, cur);
            for n in 1..=depth {
                cur = f.eval_unchecked(cur);
                visit(n, cur);
            }
        }
        SeriesPoint::Boundary(xi) => {
            let needed = f.required_precision(depth, ACCURACY_BITS);
            if xi.bits() < needed {
                return Err(Error::PrecisionBudget {
                    needed,
                    available: xi.bits(),
                });
            }
            if f.is_pure_power() {
                let d = f.degree() as u32;
                let mut numer = xi.numer().clone();
                visit(0, cis_turn(xi.to_f64()));
                for n in 1..=depth {
                    numer *= d;
                    numer.keep_bits_mut(xi.bits());
                    visit(
                        n,
                        cis_turn(
                            BoundaryPoint::from_dyadic(Integer::from(&numer), xi.bits()).to_f64(),
                        ),
                    );
                }
            } else {
                hp_orbit(f, xi, ExtF64::ZERO, depth, ACCURACY_BITS, |n, z| {
                    let w = z.to_complex();
                    visit(n, w / w.norm());
                });
            }
        }
    }
    Ok(())
}

/// `sum_{n=M}^{N} a_n f^n(x)` in a single pass along the orbit.
pub fn partial_sum(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    x: &SeriesPoint,
    m: usize,
    n: usize,
) -> Result<Complex64> {
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let mut total = Complex64::new(0.0, 0.0);
    visit_orbit(f, x, n, |k, w| {
        if k >= m {
            total += a.value(k) * w;
        }
    })?;
    Ok(total)
}

/// One row of a partial-sum trace.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SumRow {
    pub n: usize,
    pub re: f64,
    pub im: f64,
    /// Upper bound on `sum_{k > n} |a_k|` (infinite when unknown).
    pub tail_bound: f64,
}

/// Cumulative sums `F_n(x)`, `n = 1..=depth`, with tail bounds.
pub fn partial_sum_trace(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    x: &SeriesPoint,
    depth: usize,
) -> Result<Vec<SumRow>> {
    let mut rows = Vec::with_capacity(depth);
    let mut acc = Complex64::new(0.0, 0.0);
    visit_orbit(f, x, depth, |k, w| {
        if k >= 1 {
            acc += a.value(k) * w;
            rows.push(SumRow {
                n: k,
                re: acc.re,
                im: acc.im,
                tail_bound: f64::INFINITY,
            });
        }
    })?;
    if a.flags.abs_summable {
        for row in &mut rows {
            row.tail_bound = tail_abs_sum(a, row.n, Some(row.n))?.upper();
        }
    }
    Ok(rows)
}

/// Incrementally maintained `F_N(x) = sum_{n <= N} a_n f^n(x)`.
#[derive(Clone, Debug)]
pub struct PartialSumState {
    upto: usize,
    value: Complex64,
    point: SeriesPoint,
    cursor: SeriesPoint,
}

impl PartialSumState {
    pub fn new(point: SeriesPoint) -> Self {
        PartialSumState {
            upto: 0,
            value: Complex64::new(0.0, 0.0),
            cursor: point.clone(),
            point,
        }
    }

    pub fn upto(&self) -> usize {
        self.upto
    }

    pub fn value(&self) -> Complex64 {
        self.value
    }

    pub fn point(&self) -> &SeriesPoint {
        &self.point
    }

    /// `f^N(x)`.
    pub fn cursor(&self) -> &SeriesPoint {
        &self.cursor
    }

    /// Adds `a_{N+1} f^{N+1}(x)`.  Boundary cursors keep the starting
    /// point's precision, so the depth is bounded by its budget.
    pub fn advance(&mut self, f: &BlaschkeProduct, a: &CoefficientSequence) -> Result<()> {
        let next = self.upto + 1;
        let w = match &self.cursor {
            SeriesPoint::Interior(z) => {
                let w = f.eval_unchecked(*z);
                self.cursor = SeriesPoint::Interior(w);
                w
            }
            SeriesPoint::Boundary(xi) => {
                let needed = f.required_precision(next, ACCURACY_BITS);
                if xi.bits() < needed {
                    return Err(Error::PrecisionBudget {
                        needed,
                        available: xi.bits(),
                    });
                }
                let img = crate::boundary::evaluate_boundary(f, xi)?;
                let w = img.to_complex();
                self.cursor = SeriesPoint::Boundary(img);
                w
            }
        };
        self.value += a.value(next) * w;
        self.upto = next;
        Ok(())
    }
}

/// Largest pairwise spread of `F_N` over `samples` equally spaced points of
/// `arc` (endpoints included).
pub fn oscillation_on_arc(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    arc: &Arc,
    n: usize,
    samples: usize,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let orbit = ReferenceOrbit::new(f, arc.center(), n)?;
    let h = arc.half_length();
    if arc.is_full_circle() || orbit.image_measure(-h, h, n) > ExtF64::new(1.0 + 1e-9) {
        return Err(Error::InvalidInput(
            "arc image at this depth exceeds the circle".into(),
        ));
    }
    let chart = SumChart::new(orbit, a.dense(n));
    let vals: Vec<Complex64> = (0..samples)
        .map(|j| {
            let eps = -h + arc.length().mul_f64(j as f64 / (samples - 1) as f64);
            chart.partial_sum(eps, 1, n)
        })
        .collect();
    let mut best = 0.0f64;
    for i in 0..vals.len() {
        for j in i + 1..vals.len() {
            best = best.max((vals[i] - vals[j]).norm());
        }
    }
    Ok(best)
}

/// `sqrt(sum_{n=m}^{n_end} |a_n|^2)`.
pub fn l2_norm(a: &CoefficientSequence, m: usize, n_end: usize) -> f64 {
    (m.max(1)..=n_end)
        .map(|k| a.abs(k).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        assert_eq!(parse_complex("0.3+0.4i").unwrap(), Complex64::new(0.3, 0.4));
        assert_eq!(parse_complex("-2+i").unwrap(), Complex64::new(-2.0, 1.0));
        assert_eq!(
            parse_complex("1e-3-2.5e+1j").unwrap(),
            Complex64::new(1e-3, -25.0)
        );
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
        assert_eq!(parse_complex("7").unwrap(), Complex64::new(7.0, 0.0));
        assert!(parse_complex("x").is_err());
    }

    #[test]
    fn spec_json() {
        let a: CoefficientSpec =
            serde_json::from_str(r#"{"kind":"power","c":1,"p":2,"phase":"real-positive"}"#)
                .unwrap();
        let a = CoefficientSequence::try_from(a).unwrap();
        assert_eq!(a.value(2), Complex64::new(0.25, 0.0));
        assert!(a.flags().abs_summable && a.flags().slow_decay);
        let l: CoefficientSpec =
            serde_json::from_str(r#"{"kind":"list","values":[1, [0, 1], "2-i"]}"#).unwrap();
        let l = CoefficientSequence::try_from(l).unwrap();
        assert_eq!(l.value(3), Complex64::new(2.0, -1.0));
        assert_eq!(l.value(4), Complex64::new(0.0, 0.0));
        let r = CoefficientSequence::power(1.0, 1.0)
            .unwrap()
            .with_phase(PhaseRule::Random(9));
        let back = CoefficientSequence::try_from(r.to_spec().unwrap()).unwrap();
        assert_eq!(back.value(17), r.value(17));
        assert!((r.value(17).norm() - 1.0 / 17.0).abs() < 1e-15);
    }

    #[test]
    fn tail_examples() {
        let a = CoefficientSequence::power(1.0, 2.0).unwrap();
        let t = tail_abs_sum(&a, 10, None).unwrap();
        assert!(t.lower() > 1.0 / 11.0 - 1e-15 && t.upper() <= 0.1 + 1e-15);
        let l = CoefficientSequence::list(vec![Complex64::new(1.0, 0.0); 3]);
        assert_eq!(tail_abs_sum(&l, 1, None).unwrap().upper(), 2.0);
        let h = CoefficientSequence::power(1.0, 1.0).unwrap();
        assert!(matches!(
            tail_abs_sum(&h, 5, None),
            Err(Error::UnboundedTail)
        ));
    }

    #[test]
    fn ratio_examples() {
        let a = CoefficientSequence::power(1.0, 2.0).unwrap();
        let r = check_tail_ratio(&a, 200).unwrap();
        assert!(r.decreasing_trend);
        assert!((r.ratios[99].1 * 100.0 - 1.0).abs() < 0.02);
        let g = CoefficientSequence::geometric(1.0, 0.5).unwrap();
        let r = check_tail_ratio(&g, 50).unwrap();
        assert!((r.last_decade_max - 1.0).abs() < 1e-9);
    }

    #[test]
    fn weighted_tail_examples() {
        let ones = CoefficientSequence::power(1.0, 0.0).unwrap();
        assert!((weighted_geometric_tail(&ones, 2.0, 3).unwrap() - 1.75).abs() < 1e-15);
        let single = CoefficientSequence::list(vec![Complex64::new(1.0, 0.0)]);
        assert_eq!(
            weighted_geometric_tail(&single, 2.0, 11).unwrap(),
            2f64.powi(-10)
        );
    }

    #[test]
    fn partial_sum_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::geometric(1.0, 0.5).unwrap();
        let xi = SeriesPoint::Boundary(BoundaryPoint::zero(256));
        let s = partial_sum(&sq, &a, &xi, 1, 60).unwrap();
        assert!((s.re - (1.0 - 2f64.powi(-60))).abs() < 1e-15 && s.im == 0.0);
        let z = CoefficientSequence::list(vec![]);
        assert_eq!(
            partial_sum(&sq, &z, &xi, 1, 10).unwrap(),
            Complex64::new(0.0, 0.0)
        );
        let b = CoefficientSequence::power(1.0, 2.0).unwrap();
        let s = partial_sum(
            &sq,
            &b,
            &SeriesPoint::Interior(Complex64::new(0.5, 0.0)),
            1,
            20,
        )
        .unwrap();
        let direct: f64 = (1..=20)
            .map(|n: i32| 0.5f64.powf(2f64.powi(n)) / (n * n) as f64)
            .sum();
        assert!((s.re - direct).abs() < 1e-16);
    }

    #[test]
    fn incremental_state_matches_one_pass() {
        let f =
            BlaschkeProduct::new(vec![Complex64::new(0.0, 0.0), Complex64::new(0.2, 0.4)]).unwrap();
        let a = CoefficientSequence::power(1.0, 1.0)
            .unwrap()
            .with_phase(PhaseRule::Random(3));
        let xi = BoundaryPoint::from_f64(0.37, f.required_precision(30, 53));
        let mut st = PartialSumState::new(SeriesPoint::Boundary(xi.clone()));
        for _ in 0..30 {
            st.advance(&f, &a).unwrap();
        }
        let once = partial_sum(&f, &a, &SeriesPoint::Boundary(xi), 1, 30).unwrap();
        assert!((st.value() - once).norm() < 1e-13);
        assert!(st.advance(&f, &a).is_err());
    }

    #[test]
    fn oscillation_examples() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let arc = Arc::new(BoundaryPoint::from_f64(0.3, 128), ExtF64::new(0.1)).unwrap();
        let single = CoefficientSequence::list(vec![Complex64::new(1.0, 0.0)]);
        let osc = oscillation_on_arc(&sq, &single, &arc, 1, 33).unwrap();
        assert!((osc - 2.0 * (0.2 * std::f64::consts::PI).sin()).abs() < 1e-12);
        let zero = CoefficientSequence::list(vec![]);
        assert_eq!(oscillation_on_arc(&sq, &zero, &arc, 3, 33).unwrap(), 0.0);
    }
}
