//! Lower bound for a block of the series along a nested sequence of arcs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::blocks::build_block_plan;
use super::calibrate::ConstantEstimates;
use super::search::{Goal, NearPoint, Search};
use super::{BlockRecord, CaseTag, PartialSumRecord, SolverTrace};
use crate::boundary::{BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::geometry::{subarc_offsets, Arc};
use crate::product::{BlaschkeProduct, DiskPoint};
use crate::series::{partial_sum, CoefficientSequence, SeriesPoint};

pub(crate) const DEFAULT_SEARCH_BUDGET: usize = 128;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyOutcome {
    pub point: BoundaryPoint,
    /// `Re(sum_{M}^{N} a_n f^n(xi)) / sum |a_n|`, recomputed at full precision.
    pub ratio: f64,
    pub trace: SolverTrace,
}

/// Builds `xi` with `Re(sum_{M}^{N} a_n f^n(xi))` a fixed fraction of
/// `sum |a_n|`, long block by long block, each search confined to the arc
/// left by the previous one.
#[allow(clippy::too_many_arguments)]
pub fn certify_lower_bound(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    z: DiskPoint,
    m: usize,
    n: usize,
    consts: &ConstantEstimates,
    t: usize,
    t_short: usize,
) -> Result<CertifyOutcome> {
    certify_with_shift(
        f,
        a,
        z,
        m,
        n,
        consts,
        t,
        t_short,
        DEFAULT_SEARCH_BUDGET,
        0.0,
    )
}

/// [`certify_lower_bound`] with an explicit search budget and grid shift.
#[allow(clippy::too_many_arguments)]
pub fn certify_with_shift(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    z: DiskPoint,
    m: usize,
    n: usize,
    consts: &ConstantEstimates,
    t: usize,
    t_short: usize,
    budget: usize,
    shift: f64,
) -> Result<CertifyOutcome> {
    consts.validate()?;
    let start = NearPoint::from_disk(z)?;
    let plan = build_block_plan(a, m, n, t, t_short)?;
    let modulus = start.iterate_modulus(f, m);
    if !(modulus < consts.epsilon_f) {
        return Err(Error::InvalidInput(format!(
            "|f^M(z)| = {modulus} is not below epsilon_f = {}",
            consts.epsilon_f
        )));
    }
    let total = a.abs_sum(m, n);
    if !(total > 0.0) {
        return Err(Error::InvalidInput("block has no mass".into()));
    }
    let mut coeffs = a.dense(n);
    coeffs
        .iter_mut()
        .take(m)
        .for_each(|c| *c = Complex64::new(0.0, 0.0));

    let mut trace = SolverTrace::new("certify");
    trace.eta_used = consts.eta_f;
    trace.notes.push(format!(
        "block plan: long {:?}, short {:?}",
        plan.long_blocks, plan.short_blocks
    ));
    let mut arc = start.shadow().dilate(1.0 / consts.c_f);
    trace.arcs.push(arc.clone());
    trace.arc_depths.push(m);
    let mut witness: Option<(BoundaryPoint, Complex64)> = None;
    for (j, &(lo, hi)) in plan.long_blocks.iter().enumerate() {
        if lo > n {
            break;
        }
        let to = hi.min(n);
        let stall = |e: Error| Error::ConstructionStall {
            block: j + 1,
            reason: e.to_string(),
        };
        let search = Search {
            f,
            coeffs: &coeffs,
            from: m,
            to,
            base: Complex64::new(0.0, 0.0),
            goal: Goal::Along(Complex64::new(1.0, 0.0)),
            budget,
            shift,
        };
        let found = search.run(&arc).map_err(stall)?;
        let orbit = found.chart.orbit();
        let h = found.arc.half_length();
        let (s_lo, s_hi) =
            subarc_offsets(orbit, -h, h, found.offset, to, consts.delta1).map_err(stall)?;
        arc = Arc::from_offsets(orbit.center(), s_lo, s_hi).map_err(stall)?;
        trace.arcs.push(arc.clone());
        trace.arc_depths.push(to);
        trace.blocks.push(BlockRecord {
            round: j + 1,
            start: lo,
            gap_end: lo,
            end: to,
            case: CaseTag::Long,
        });
        trace.partial_sum_log.push(PartialSumRecord {
            round: j + 1,
            depth: to,
            value: found.value,
            case: CaseTag::Long,
        });
        witness = Some((found.point, found.value));
    }
    let (point, value) = witness.ok_or_else(|| Error::ConstructionStall {
        block: 0,
        reason: "no long block".into(),
    })?;
    let point = point.with_bits(point.bits().max(f.required_precision(n, ACCURACY_BITS)));
    let exact = partial_sum(f, a, &SeriesPoint::Boundary(point.clone()), m, n)?;
    let ratio = exact.re / total;
    trace.final_value = value.re / total;
    trace.recomputed_value = ratio;
    trace.witness = Some(point.clone());
    trace.witness_depth = n;
    trace.certified = ratio >= consts.c_f * (1.0 - t_short as f64 / t as f64) / 2.0;
    Ok(CertifyOutcome {
        point,
        ratio,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> ConstantEstimates {
        ConstantEstimates::manual(0.5, 0.3, 0.18, 0.9, 0.1, 4).unwrap()
    }

    #[test]
    fn positive_coefficients_reach_ratio_one() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::list(vec![Complex64::new(1.0, 0.0); 40]);
        let out =
            certify_lower_bound(&sq, &a, Complex64::new(0.0, 0.0), 1, 40, &consts(), 8, 2).unwrap();
        assert!(out.ratio > 0.99, "{}", out.ratio);
        assert!(out.trace.certified);
        for arc in &out.trace.arcs {
            assert!(arc.contains(&out.point));
        }
    }

    #[test]
    fn single_coefficient() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let mut v = vec![Complex64::new(0.0, 0.0); 30];
        v[19] = Complex64::new(0.0, 2.0);
        let a = CoefficientSequence::list(v);
        let out =
            certify_lower_bound(&sq, &a, Complex64::new(0.0, 0.0), 1, 30, &consts(), 8, 2).unwrap();
        assert!(out.ratio > 1.0 - 1e-9, "{}", out.ratio);
    }

    #[test]
    fn start_must_be_small() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::list(vec![Complex64::new(1.0, 0.0); 8]);
        let r = certify_lower_bound(&sq, &a, Complex64::new(0.9, 0.0), 1, 8, &consts(), 4, 2);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
