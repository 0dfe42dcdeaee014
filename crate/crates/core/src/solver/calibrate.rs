//! Empirical estimates of the constants the constructions depend on.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::search::{search_block_maximizer, NearPoint};
use crate::boundary::BoundaryPoint;
use crate::error::{Error, Result};
use crate::geometry::{arc_from_point, arc_image, find_subarc_with_image_measure, Arc};
use crate::product::{cis_turn, BlaschkeProduct};
use crate::series::CoefficientSequence;

const EPSILON_CANDIDATES: [f64; 3] = [0.5, 0.25, 0.1];
const MIN_RATIO: f64 = 0.05;
/// Relative margin taken off the 10th-percentile ratio.
const RATIO_MARGIN: f64 = 0.1;
const MAX_GAP: usize = 10_000;

/// How much sampling calibration does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBudget {
    pub seed: u64,
    /// Random starts per candidate threshold.
    pub starts: usize,
    pub block_len: usize,
    /// Random arcs for the modulus envelope and for the image-measure floor.
    pub arcs: usize,
    pub search_budget: usize,
}

impl Default for CalibrationBudget {
    fn default() -> Self {
        CalibrationBudget {
            seed: 0,
            starts: 50,
            block_len: 40,
            arcs: 200,
            search_budget: 128,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationEntry {
    pub name: String,
    pub value: f64,
    pub samples: usize,
    /// Distance from the estimate to the nearest failing value.
    pub worst_margin: f64,
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimates {
    pub epsilon_f: f64,
    pub c_f: f64,
    pub eta_f: f64,
    pub gamma0: f64,
    pub delta1: f64,
    #[serde(rename = "T_gap")]
    pub t_gap: usize,
    #[serde(default)]
    pub calibration_log: Vec<CalibrationEntry>,
}

impl ConstantEstimates {
    /// Constants given directly rather than calibrated.
    pub fn manual(
        epsilon_f: f64,
        c_f: f64,
        eta_f: f64,
        gamma0: f64,
        delta1: f64,
        t_gap: usize,
    ) -> Result<Self> {
        let c = ConstantEstimates {
            epsilon_f,
            c_f,
            eta_f,
            gamma0,
            delta1,
            t_gap,
            calibration_log: Vec::new(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.eta_f > 0.0
            && self.eta_f <= self.c_f
            && self.c_f < 1.0
            && self.epsilon_f > 0.0
            && self.epsilon_f < 1.0
            && self.gamma0 >= 0.0
            && self.gamma0 < 1.0
            && self.delta1 > 0.0
            && self.delta1 < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "inconsistent constants {self:?}"
            )))
        }
    }

    /// The radius from which `T_gap` iterates reach the `eta_f` disk.
    pub fn gamma1(&self) -> f64 {
        (1.0 + self.gamma0) / 2.0
    }

    /// Bound on the pseudo-hyperbolic distance of the recentered point.
    pub fn c1(&self) -> f64 {
        1.0 - self.eta_f / 2.0
    }
}

/// Independent generator per (seed, stream, sample index).
pub(crate) fn rng_for(seed: u64, stream: u64, index: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&(index as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Smallest `T` with `|f^T(z)| <= eta` on a radial grid of `|z| <= gamma1`.
pub fn gap_length(f: &BlaschkeProduct, gamma1: f64, eta: f64) -> Result<usize> {
    if !(0.0..1.0).contains(&gamma1) || !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidInput(format!(
            "need 0 <= gamma1 < 1 and 0 < eta < 1, got {gamma1}, {eta}"
        )));
    }
    let radii = 16;
    let angles = 64 * f.degree().max(8);
    let mut pts: Vec<Complex64> = Vec::with_capacity(radii * angles + 1);
    pts.push(Complex64::new(0.0, 0.0));
    for i in 1..=radii {
        let r = gamma1 * i as f64 / radii as f64;
        pts.extend((0..angles).map(|j| cis_turn(j as f64 / angles as f64) * r));
    }
    for t in 0..=MAX_GAP {
        if pts.iter().all(|z| z.norm() <= eta) {
            return Ok(t);
        }
        for z in pts.iter_mut() {
            *z = f.eval_unchecked(*z);
        }
    }
    Err(Error::CalibrationFailure(format!(
        "iterates of |z| <= {gamma1} do not enter |z| <= {eta}"
    )))
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    sorted[idx]
}

/// Achieved block ratios `Re(sum)/sum|a|` from random starts `|z| <= eps`.
fn block_ratios(
    f: &BlaschkeProduct,
    eps: f64,
    budget: &CalibrationBudget,
    stream: u64,
) -> Result<Vec<f64>> {
    (0..budget.starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(budget.seed, stream, i);
            let r = eps * rng.gen::<f64>().sqrt().max(1e-3);
            let z = cis_turn(rng.gen()) * r;
            let coeffs: Vec<Complex64> =
                (0..budget.block_len).map(|_| cis_turn(rng.gen())).collect();
            let a = CoefficientSequence::list(coeffs);
            let arc = NearPoint::from_disk(z)?.shadow();
            let (_, value) = search_block_maximizer(
                f,
                &a,
                z,
                1,
                budget.block_len,
                Complex64::new(1.0, 0.0),
                &arc,
                budget.search_budget,
            )?;
            Ok(value / budget.block_len as f64)
        })
        .collect()
}

pub fn calibrate_constants(
    f: &BlaschkeProduct,
    budget: &CalibrationBudget,
) -> Result<ConstantEstimates> {
    f.check_expanding_contract()
        .map_err(|e| Error::CalibrationFailure(e.to_string()))?;
    if f.k_min() <= 1.0 + 1e-12 {
        return Err(Error::CalibrationFailure(format!(
            "k_min = {} does not exceed 1",
            f.k_min()
        )));
    }
    if budget.starts == 0 || budget.arcs == 0 || budget.block_len == 0 {
        return Err(Error::InvalidInput(
            "calibration budget must be positive".into(),
        ));
    }
    let mut log = Vec::new();

    let mut chosen = None;
    for (k, &eps) in EPSILON_CANDIDATES.iter().enumerate() {
        let mut ratios = block_ratios(f, eps, budget, 1 + k as u64)?;
        ratios.sort_by(f64::total_cmp);
        let worst = ratios[0];
        log.push(CalibrationEntry {
            name: format!("block ratio at epsilon {eps}"),
            value: worst,
            samples: ratios.len(),
            worst_margin: worst - MIN_RATIO,
            note: format!(
                "minimum achieved ratio; 10th percentile {:.4}",
                percentile(&ratios, 0.1)
            ),
        });
        if worst >= MIN_RATIO {
            chosen = Some((eps, ratios));
            break;
        }
    }
    let (epsilon_f, ratios) = chosen.ok_or_else(|| {
        Error::CalibrationFailure("no smallness threshold reaches ratio 0.05".into())
    })?;
    let p10 = percentile(&ratios, 0.1);
    let c_f = (p10 * (1.0 - RATIO_MARGIN)).min(0.99);
    if !(c_f > 0.0) {
        return Err(Error::CalibrationFailure(
            "block ratio collapsed to 0".into(),
        ));
    }
    let eta_f = 0.9 * epsilon_f.min(2.0 * c_f / 3.0);
    log.push(CalibrationEntry {
        name: "epsilon_f".into(),
        value: epsilon_f,
        samples: ratios.len(),
        worst_margin: ratios[0] - MIN_RATIO,
        note: "largest candidate whose random starts all reach ratio 0.05".into(),
    });
    log.push(CalibrationEntry {
        name: "c_f".into(),
        value: c_f,
        samples: ratios.len(),
        worst_margin: p10 - c_f,
        note: "10th-percentile achieved ratio less 10%".into(),
    });
    log.push(CalibrationEntry {
        name: "eta_f".into(),
        value: eta_f,
        samples: ratios.len(),
        worst_margin: c_f - eta_f,
        note: "0.9 min(epsilon_f, 2 c_f / 3)".into(),
    });

    // Modulus envelope over arcs whose image has measure 1/2.
    let moduli: Vec<f64> = (0..budget.arcs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(budget.seed, 10, i);
            let depth = rng.gen_range(1..=12);
            let center = BoundaryPoint::from_f64(rng.gen(), 64);
            let arc = find_subarc_with_image_measure(f, &Arc::full(), depth, &center, 0.5)?;
            let z = NearPoint::new(arc.center().clone(), arc.length())?;
            Ok(z.iterate_modulus(f, depth))
        })
        .collect::<Result<_>>()?;
    let gamma0 = moduli.iter().copied().fold(0.0, f64::max);
    if !(gamma0 < 1.0) {
        return Err(Error::CalibrationFailure(format!(
            "modulus envelope {gamma0} is not below 1"
        )));
    }
    log.push(CalibrationEntry {
        name: "gamma0".into(),
        value: gamma0,
        samples: moduli.len(),
        worst_margin: 1.0 - gamma0,
        note: "max |f^N(z(I))| over random arcs with image measure 1/2, N in 1..=12".into(),
    });

    let gamma1 = (1.0 + gamma0) / 2.0;
    let t_gap = gap_length(f, gamma1, eta_f)?;
    log.push(CalibrationEntry {
        name: "T_gap".into(),
        value: t_gap as f64,
        samples: 1,
        worst_margin: 1.0 - gamma1,
        note: format!("radial grid of |z| <= {gamma1:.4} reaches |z| <= eta_f"),
    });

    // Image-measure floor for points mapped close to the origin.
    let mut measures = Vec::new();
    let mut rng = rng_for(budget.seed, 20, 0);
    let mut tries = 0usize;
    while measures.len() < budget.arcs && tries < 1000 * budget.arcs {
        tries += 1;
        let z = cis_turn(rng.gen()) * rng.gen::<f64>().sqrt();
        if z.norm() < 1e-9 || f.eval_unchecked(z).norm() > epsilon_f {
            continue;
        }
        let arc = arc_from_point(z)?;
        measures.push(arc_image(f, &arc, 1)?.measure.to_f64().min(1.0));
    }
    if measures.is_empty() {
        return Err(Error::CalibrationFailure(
            "no sample maps inside the smallness threshold".into(),
        ));
    }
    let delta0 = measures.iter().copied().fold(f64::INFINITY, f64::min);
    let delta1 = delta0 / 2.0;
    if !(delta1 > 0.0) {
        return Err(Error::CalibrationFailure(
            "image measure floor collapsed to 0".into(),
        ));
    }
    log.push(CalibrationEntry {
        name: "delta1".into(),
        value: delta1,
        samples: measures.len(),
        worst_margin: delta1,
        note: format!("half the minimum m(f(I(z))) over |f(z)| <= {epsilon_f}"),
    });

    let consts = ConstantEstimates {
        epsilon_f,
        c_f,
        eta_f,
        gamma0,
        delta1,
        t_gap,
        calibration_log: log,
    };
    consts
        .validate()
        .map_err(|e| Error::CalibrationFailure(e.to_string()))?;
    Ok(consts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubling_gap_example() {
        let sq = BlaschkeProduct::power(2).unwrap();
        assert_eq!(gap_length(&sq, 0.75, 0.5).unwrap(), 2);
    }

    #[test]
    fn rotation_fails() {
        let rot = BlaschkeProduct::power(1).unwrap();
        let r = calibrate_constants(&rot, &CalibrationBudget::default());
        assert!(matches!(r, Err(Error::CalibrationFailure(_))));
    }

    #[test]
    fn doubling_constants_are_consistent() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let budget = CalibrationBudget {
            starts: 12,
            arcs: 40,
            ..Default::default()
        };
        let c = calibrate_constants(&sq, &budget).unwrap();
        assert!(c.eta_f <= c.c_f && c.c_f < 1.0);
        assert!(c.gamma0 < 1.0);
        assert!(c.t_gap >= 1);
        assert!(!c.calibration_log.is_empty());
    }
}
