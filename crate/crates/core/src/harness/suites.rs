use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::boundary::{near_boundary_orbit, BoundaryPoint};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::geometry::{arc_from_point, arc_image, subarc_offsets};
use crate::orbit::ReferenceOrbit;
use crate::product::{cis_turn, BlaschkeProduct};
use crate::series::{tail_abs_sum, weighted_geometric_tail, CoefficientSequence};
use crate::solver::calibrate::rng_for;
use crate::solver::NearPoint;

pub const PROPERTY_IDS: [&str; 8] = [
    "lemma2.1",
    "cor2.2",
    "cor2.3",
    "lemma2.4a",
    "lemma2.4b",
    "lemma2.7",
    "lemma4.0",
    "pommerenke",
];

/// Where each trial's product comes from.
#[derive(Clone, Debug)]
pub enum ProductGenerator {
    /// Degree 2..=5, at least one zero at the origin, other zeros of modulus
    /// at most 0.9.
    Random,
    Fixed(BlaschkeProduct),
}

impl ProductGenerator {
    fn sample(&self, rng: &mut ChaCha8Rng) -> BlaschkeProduct {
        match self {
            ProductGenerator::Random => random_product(rng),
            ProductGenerator::Fixed(f) => f.clone(),
        }
    }

    fn label(&self) -> Value {
        match self {
            ProductGenerator::Random => json!("random"),
            ProductGenerator::Fixed(f) => json!({ "zeros": zeros_json(f) }),
        }
    }
}

pub fn random_product(rng: &mut impl Rng) -> BlaschkeProduct {
    let d = rng.gen_range(2..=5usize);
    let at_origin = rng.gen_range(1..=d);
    let mut zeros = vec![Complex64::new(0.0, 0.0); at_origin];
    for _ in at_origin..d {
        // sqrt makes the zeros uniform in area.
        let r = 0.9 * rng.gen::<f64>().sqrt();
        zeros.push(cis_turn(rng.gen::<f64>()) * r);
    }
    BlaschkeProduct::new(zeros).expect("zeros are inside the disk")
}

#[derive(Clone, Debug)]
pub struct SuiteConfig {
    pub generator: ProductGenerator,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl SuiteConfig {
    pub fn new(trials: usize, seed: u64) -> Self {
        SuiteConfig {
            generator: ProductGenerator::Random,
            trials,
            seed,
            tolerance: 1e-9,
        }
    }
}

/// The same inequality checked against a second constant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondaryCheck {
    pub label: String,
    pub violations: usize,
    pub worst_margin: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property_id: String,
    pub trials: usize,
    pub violations: usize,
    /// Smallest `RHS - LHS`; absent when no trial carries an explicit bound.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    pub seed: u64,
    pub generator: Value,
    /// Extreme of the suite's empirical quantity (see `envelope_label`).
    pub envelope: f64,
    pub envelope_label: String,
    /// Sampled configuration of the worst case.
    pub parameters: Value,
    pub secondary: Option<SecondaryCheck>,
    pub notes: Vec<String>,
}

struct Trial {
    margin: Option<f64>,
    envelope: f64,
    secondary: Option<(f64, f64)>,
    params: Value,
}

struct Suite {
    envelope_label: &'static str,
    envelope_is_max: bool,
    secondary_label: Option<&'static str>,
    notes: &'static [&'static str],
    run: fn(&BlaschkeProduct, &mut ChaCha8Rng) -> Result<Trial>,
}

fn suite(id: &str) -> Option<Suite> {
    Some(match id {
        "lemma2.1" => Suite {
            envelope_label: "max chord / (2 pi delta K^(k-N)) over bounds >= 1e-6",
            envelope_is_max: true,
            secondary_label: None,
            notes: &["chords |f^k(x) - f^k(y)| for endpoint and random pairs of an arc with m(f^N(I)) = delta, k = 1..=N"],
            run: lemma21_trial,
        },
        "cor2.2" => Suite {
            envelope_label: "max |sum| / (2 pi (K^2-1)^(-1/2) delta ||a||_2)",
            envelope_is_max: true,
            secondary_label: Some("constant 2 pi K (K^2-1)^(-1/2)"),
            notes: &[
                "explicit constant c = 2 pi (K^2-1)^(-1/2); blocks M < N with uniform complex coefficients",
                "Cauchy-Schwarz with sum_{j>=0} K^(-2j) = K^2/(K^2-1) gives c = 2 pi K (K^2-1)^(-1/2); checked as the secondary constant",
            ],
            run: cor22_trial,
        },
        "cor2.3" => Suite {
            envelope_label: "max |sum| / bound",
            envelope_is_max: true,
            secondary_label: None,
            notes: &["bound 2 pi delta (sup|a| K^(L-N+1)/(K-1) + sup_{n>L}|a| K/(K-1)) with 1 < L < N"],
            run: cor23_trial,
        },
        "lemma2.4a" => Suite {
            envelope_label: "min m(f(I(z))) over |f(z)| <= 1/2",
            envelope_is_max: false,
            secondary_label: None,
            notes: &["no explicit delta(gamma); the margin is m(f(I(z))) itself and the envelope is the empirical delta(1/2)"],
            run: lemma24a_trial,
        },
        "lemma2.4b" => Suite {
            envelope_label: "max |f^N(z(I))| over m(f^N(I)) = 1/2",
            envelope_is_max: true,
            secondary_label: None,
            notes: &["no explicit gamma(delta); the margin is 1 - |f^N(z(I))| and the envelope is the empirical gamma(1/2)"],
            run: lemma24b_trial,
        },
        "lemma2.7" => Suite {
            envelope_label: "max ratio at N = 10^4",
            envelope_is_max: true,
            secondary_label: None,
            notes: &[
                "ratio sum_{n<=N} b_n K^(n-N) / sum_{k>N} b_k with K = k_min(f), b power or log-harmonic",
                "margin is the smaller decrease of the ratio over N = 10^2, 10^3, 10^4",
            ],
            run: lemma27_trial,
        },
        "lemma4.0" => Suite {
            envelope_label: "max sum_{k<=N(z)} |f^k(xi) - f^k(z)|",
            envelope_is_max: true,
            secondary_label: None,
            notes: &[
                "delta = 0.99 min(1/20, 1/(10 k_max)); N(z) smallest n with m(f^n(I(z))) >= delta",
                "explicit check only for z^d: N(z) = ceil(log_d(delta/(1-|z|))) and sum <= (pi+1)(1-|z|)(d^(N+1)-d)/(d-1)",
            ],
            run: lemma40_trial,
        },
        "pommerenke" => Suite {
            envelope_label: "max over samples of sup_n (|f^n(z)| (1-|z|)^13)^(1/n)",
            envelope_is_max: true,
            secondary_label: None,
            notes: &["empirical rate a in |f^n(z)| <= a^n (1-|z|)^-13, n <= 60; the margin is 1 - a"],
            run: pommerenke_trial,
        },
        _ => return None,
    })
}

/// Runs `config.trials` independent trials of a registered property and
/// reduces them in trial order.
pub fn run_lemma_suite(property_id: &str, config: &SuiteConfig) -> Result<PropertyReport> {
    let suite =
        suite(property_id).ok_or_else(|| Error::UnknownProperty(property_id.to_string()))?;
    if config.trials == 0 {
        return Err(Error::InvalidInput("trial_count must be positive".into()));
    }
    if !(config.tolerance >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "tolerance {} must be nonnegative",
            config.tolerance
        )));
    }
    let stream = 1000
        + PROPERTY_IDS
            .iter()
            .position(|&p| p == property_id)
            .expect("registered") as u64;
    let trials: Vec<Trial> = (0..config.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(config.seed, stream, i);
            let f = config.generator.sample(&mut rng);
            (suite.run)(&f, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;

    let tol = config.tolerance;
    let mut violations = 0;
    let mut worst: Option<(f64, usize)> = None;
    let mut envelope: Option<(f64, usize)> = None;
    let mut secondary = suite.secondary_label.map(|label| SecondaryCheck {
        label: label.to_string(),
        violations: 0,
        worst_margin: f64::INFINITY,
        envelope: f64::NEG_INFINITY,
    });
    for (i, t) in trials.iter().enumerate() {
        if let Some(m) = t.margin {
            if m < -tol {
                violations += 1;
            }
            if worst.is_none_or(|(w, _)| m < w) {
                worst = Some((m, i));
            }
        }
        let better = |e: f64| {
            if suite.envelope_is_max {
                t.envelope > e
            } else {
                t.envelope < e
            }
        };
        if envelope.is_none_or(|(e, _)| better(e)) {
            envelope = Some((t.envelope, i));
        }
        if let (Some(s), Some((m, e))) = (secondary.as_mut(), t.secondary) {
            if m < -tol {
                s.violations += 1;
            }
            s.worst_margin = s.worst_margin.min(m);
            s.envelope = s.envelope.max(e);
        }
    }
    let (envelope, envelope_at) = envelope.expect("at least one trial");
    let worst_at = worst.map_or(envelope_at, |w| w.1);
    let mut parameters = trials[worst_at].params.clone();
    parameters["trial"] = json!(worst_at);
    Ok(PropertyReport {
        property_id: property_id.to_string(),
        trials: config.trials,
        violations,
        worst_margin: worst.map(|w| w.0),
        tolerance: tol,
        seed: config.seed,
        generator: config.generator.label(),
        envelope,
        envelope_label: suite.envelope_label.to_string(),
        parameters,
        secondary,
        notes: suite.notes.iter().map(|s| s.to_string()).collect(),
    })
}

fn zeros_json(f: &BlaschkeProduct) -> Value {
    json!(f.zeros().iter().map(|z| [z.re, z.im]).collect::<Vec<_>>())
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (lo.ln() + rng.gen::<f64>() * (hi.ln() - lo.ln())).exp()
}

/// An arc around a random center whose image at depth `n` has measure close
/// to `delta`, as offsets from the chart center, with the measured image.
fn arc_with_image(
    f: &BlaschkeProduct,
    rng: &mut ChaCha8Rng,
    n: usize,
    delta: f64,
) -> Result<(ReferenceOrbit, ExtF64, ExtF64, f64)> {
    let center = BoundaryPoint::from_f64(rng.gen::<f64>(), 64);
    let orbit = ReferenceOrbit::new(f, &center, n)?;
    let (lo, hi) = subarc_offsets(
        &orbit,
        ExtF64::new(-0.5),
        ExtF64::new(0.5),
        ExtF64::ZERO,
        n,
        delta,
    )?;
    let measured = orbit.image_measure(lo, hi, n).to_f64();
    Ok((orbit, lo, hi, measured))
}

/// Endpoint pair plus one random pair inside `[lo, hi]`.
fn pairs(rng: &mut ChaCha8Rng, lo: ExtF64, hi: ExtF64) -> [(ExtF64, ExtF64); 2] {
    let len = hi - lo;
    let x = lo + len.mul_f64(rng.gen::<f64>());
    let y = lo + len.mul_f64(rng.gen::<f64>());
    [(lo, hi), (x, y)]
}

fn turn_gap(a: f64, b: f64) -> f64 {
    let d = a - b;
    d - d.round()
}

fn chord(a: f64, b: f64) -> f64 {
    2.0 * (PI * turn_gap(a, b)).sin().abs()
}

/// `f^n(x) - f^n(y)` on the circle from the two turns.
fn difference(a: f64, b: f64) -> Complex64 {
    cis_turn(b) * (cis_turn(turn_gap(a, b)) - 1.0)
}

fn random_coeff(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn lemma21_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let n = rng.gen_range(1..=30usize);
    let delta = log_uniform(rng, 1e-3, 0.99);
    let (orbit, lo, hi, measured) = arc_with_image(f, rng, n, delta)?;
    let k_min = f.k_min();
    let mut margin = f64::INFINITY;
    let mut ratio = 0.0f64;
    let mut at = 0;
    for (x, y) in pairs(rng, lo, hi) {
        for k in 1..=n {
            let c = chord(orbit.candidate_turn(x, k), orbit.candidate_turn(y, k));
            let rhs = TAU * measured * k_min.powi(k as i32 - n as i32);
            if rhs - c < margin {
                margin = rhs - c;
                at = k;
            }
            // Below this the turns' rounding dominates the ratio.
            if rhs >= 1e-6 {
                ratio = ratio.max(c / rhs);
            }
        }
    }
    Ok(Trial {
        margin: Some(margin),
        envelope: ratio,
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "N": n, "delta": measured, "k": at, "K": k_min,
            "center": orbit.center().to_decimal_string() }),
    })
}

fn cor22_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let n = rng.gen_range(2..=40usize);
    let m = rng.gen_range(1..n);
    let coeffs: Vec<Complex64> = (m..=n).map(|_| random_coeff(rng)).collect();
    let l2 = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let delta = log_uniform(rng, 1e-3, 0.99);
    let (orbit, lo, hi, measured) = arc_with_image(f, rng, n, delta)?;
    let k = f.k_min();
    let stated = TAU / (k * k - 1.0).sqrt();
    let corrected = stated * k;
    let mut lhs = 0.0f64;
    for (x, y) in pairs(rng, lo, hi) {
        let s: Complex64 = (m..=n)
            .zip(&coeffs)
            .map(|(j, a)| a * difference(orbit.candidate_turn(x, j), orbit.candidate_turn(y, j)))
            .sum();
        lhs = lhs.max(s.norm());
    }
    let scale = measured * l2;
    Ok(Trial {
        margin: Some(stated * scale - lhs),
        envelope: lhs / (stated * scale),
        secondary: Some((corrected * scale - lhs, lhs / (corrected * scale))),
        params: json!({ "zeros": zeros_json(f), "M": m, "N": n, "delta": measured, "K": k, "lhs": lhs,
            "rhs": stated * scale, "l2": l2 }),
    })
}

fn cor23_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let n = rng.gen_range(3..=60usize);
    let l = rng.gen_range(2..n);
    let p = rng.gen_range(0.3..2.0);
    let coeffs: Vec<Complex64> = (1..=n)
        .map(|j| cis_turn(rng.gen::<f64>()) * rng.gen::<f64>() * (j as f64).powf(-p))
        .collect();
    let delta = log_uniform(rng, 1e-3, 0.99);
    let (orbit, lo, hi, measured) = arc_with_image(f, rng, n, delta)?;
    let k = f.k_min();
    let sup = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let sup_after = coeffs[l..].iter().map(|c| c.norm()).fold(0.0, f64::max);
    let bound = TAU
        * measured
        * (sup * k.powi(l as i32 - n as i32 + 1) / (k - 1.0) + sup_after * k / (k - 1.0));
    let mut lhs = 0.0f64;
    for (x, y) in pairs(rng, lo, hi) {
        let s: Complex64 = coeffs
            .iter()
            .enumerate()
            .map(|(i, a)| {
                a * difference(
                    orbit.candidate_turn(x, i + 1),
                    orbit.candidate_turn(y, i + 1),
                )
            })
            .sum();
        lhs = lhs.max(s.norm());
    }
    Ok(Trial {
        margin: Some(bound - lhs),
        envelope: lhs / bound,
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "N": n, "L": l, "p": p, "delta": measured, "K": k, "lhs": lhs, "bound": bound }),
    })
}

fn lemma24a_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    const GAMMA: f64 = 0.5;
    let mut z = Complex64::new(0.0, 0.0);
    for attempt in 0..64 {
        let r = if attempt < 63 {
            rng.gen_range(1e-6..1.0)
        } else {
            GAMMA * rng.gen::<f64>()
        };
        z = cis_turn(rng.gen::<f64>()) * r;
        if z.norm() > 0.0 && f.eval_unchecked(z).norm() <= GAMMA {
            break;
        }
    }
    let measure = arc_image(f, &arc_from_point(z)?, 1)?.measure.to_f64();
    Ok(Trial {
        margin: Some(measure),
        envelope: measure,
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "z": [z.re, z.im], "gamma": GAMMA, "measure": measure }),
    })
}

fn lemma24b_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    const DELTA: f64 = 0.5;
    let n = rng.gen_range(1..=20usize);
    let (orbit, lo, hi, measured) = arc_with_image(f, rng, n, DELTA)?;
    let center = orbit.point((lo + hi).mul_pow2(-1));
    let z = NearPoint::new(center, hi - lo)?;
    let modulus = z.iterate_modulus(f, n);
    Ok(Trial {
        margin: Some(1.0 - modulus),
        envelope: modulus,
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "N": n, "delta": measured, "modulus": modulus,
            "arc_length": (hi - lo).to_decimal_string(), "center": z.direction.to_decimal_string() }),
    })
}

fn lemma27_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let k = f.k_min();
    let log_family = rng.gen_bool(0.5);
    let exponent = rng.gen_range(1.05..4.0);
    let a = if log_family {
        CoefficientSequence::harmonic_log(1.0, exponent)?
    } else {
        CoefficientSequence::power(1.0, exponent)?
    };
    let mut ratios = [0.0; 3];
    for (slot, n) in ratios.iter_mut().zip([100usize, 1000, 10000]) {
        let tail = tail_abs_sum(&a, n, None)?.midpoint();
        *slot = weighted_geometric_tail(&a, k, n)? / tail;
    }
    let margin = (ratios[0] - ratios[1]).min(ratios[1] - ratios[2]);
    Ok(Trial {
        margin: Some(margin),
        envelope: ratios[2],
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "K": k, "family": if log_family { "harmonic-log" } else { "power" },
            "exponent": exponent, "ratios": ratios }),
    })
}

/// `delta` used for `N(z)`: inside `(0, 1/(10 k_max))` with a margin.
pub(crate) fn lemma40_delta(f: &BlaschkeProduct) -> f64 {
    (1.0 / 20.0f64).min(1.0 / (10.0 * f.k_max())) * 0.99
}

/// Smallest `n >= 1` with `m(f^n(arc)) >= delta` for the arc of half-length
/// `h` around the chart center.
pub(crate) fn first_depth_reaching(orbit: &ReferenceOrbit, h: ExtF64, delta: f64) -> Option<usize> {
    (1..=orbit.depth()).find(|&n| orbit.image_measure(-h, h, n).to_f64() >= delta)
}

/// Depth by which arcs of length `defect` certainly reach image `delta`.
pub(crate) fn depth_bound(f: &BlaschkeProduct, defect: ExtF64, delta: f64) -> usize {
    let steps = (delta.log2() - defect.log2_abs()) / f.k_min().log2();
    steps.max(0.0).ceil() as usize + 2
}

fn lemma40_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    let delta = lemma40_delta(f);
    let j = rng.gen_range(4..=40u32);
    let defect = ExtF64::exp2(-(j as f64));
    let direction = BoundaryPoint::from_f64(rng.gen::<f64>(), 64);
    let orbit = ReferenceOrbit::new(f, &direction, depth_bound(f, defect, delta))?;
    let h = defect.mul_pow2(-1);
    let n_z = first_depth_reaching(&orbit, h, delta)
        .ok_or_else(|| Error::DegenerateOrbit("arc image never reached delta".into()))?;
    let eps = h.mul_f64(2.0 * rng.gen::<f64>() - 1.0);
    let interior = near_boundary_orbit(f, &direction, defect, n_z);
    let sum: f64 = (1..=n_z)
        .map(|k| (cis_turn(orbit.candidate_turn(eps, k)) - interior[k]).norm())
        .sum();
    let mut params = json!({ "zeros": zeros_json(f), "delta": delta, "defect_log2": -(j as f64), "N_z": n_z, "sum": sum });
    let margin = if f.is_pure_power() {
        let d = f.degree() as f64;
        let closed = ((delta.log2() + j as f64) / d.log2()).ceil().max(1.0) as usize;
        let bound = (PI + 1.0) * defect.to_f64() * (d.powi(n_z as i32 + 1) - d) / (d - 1.0);
        params["closed_form_N"] = json!(closed);
        params["bound"] = json!(bound);
        if closed != n_z {
            Some(-1.0)
        } else {
            Some(bound - sum)
        }
    } else {
        None
    };
    Ok(Trial {
        margin,
        envelope: sum,
        secondary: None,
        params,
    })
}

fn pommerenke_trial(f: &BlaschkeProduct, rng: &mut ChaCha8Rng) -> Result<Trial> {
    const DEPTH: usize = 60;
    let fit: Vec<Complex64> = (0..8)
        .map(|_| cis_turn(rng.gen::<f64>()) * 0.9 * rng.gen::<f64>())
        .collect();
    let fitted = f.estimate_decay_rate(&fit, DEPTH).ok();
    let defect = log_uniform(rng, 1e-3, 1.0);
    let z = cis_turn(rng.gen::<f64>()) * (1.0 - defect);
    let scale = 13.0 * defect.ln();
    let mut rate = 0.0f64;
    let mut cur = z;
    for n in 1..=DEPTH {
        cur = f.eval_unchecked(cur);
        let m = cur.norm();
        if m == 0.0 {
            break;
        }
        rate = rate.max(((m.ln() + scale) / n as f64).exp());
    }
    Ok(Trial {
        margin: Some(1.0 - rate),
        envelope: rate,
        secondary: None,
        params: json!({ "zeros": zeros_json(f), "z": [z.re, z.im], "rate": rate, "fitted_decay_rate": fitted }),
    })
}
