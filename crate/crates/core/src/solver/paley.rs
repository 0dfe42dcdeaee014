//! Steering partial sums to a target: the contraction step, the target
//! solver and the cluster follower.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::calibrate::{gap_length, ConstantEstimates};
use super::search::{Goal, NearPoint, Search};
use super::{BlockRecord, CaseTag, PartialSumRecord, SolverTrace, TargetVisit};
use crate::boundary::{BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::geometry::{arc_image, find_subarc_with_image_measure, Arc};
use crate::orbit::{ReferenceOrbit, SumChart};
use crate::product::{golden_section, BlaschkeProduct};
use crate::series::{partial_sum, CoefficientSequence, SeriesPoint};

/// Image measure of the working arcs.
const WORKING_MEASURE: f64 = 0.5;
/// How far ahead the case split looks for large coefficients.
const SUP_HORIZON: usize = 10_000;
/// Longest block the mass rule may ask for.
const MAX_BLOCK: usize = 1_000_000;
/// Smallest image measure tried when locking in a visit.
const MIN_LOCK_MEASURE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaleyOptions {
    pub max_rounds: usize,
    pub tol: f64,
    /// Grid points per search chunk.
    pub budget: usize,
    /// Grid offset in cells, for reruns on perturbed grids.
    pub shift: f64,
    /// Start from this point instead of the best first-term point.
    pub initial_turn: Option<BoundaryPoint>,
    /// Points per arc for the distance and oscillation samples.
    pub samples: usize,
    /// Consecutive rounds without a decrease before the stall rule fires.
    pub stall_rounds: usize,
}

impl Default for PaleyOptions {
    fn default() -> Self {
        PaleyOptions {
            max_rounds: 200,
            tol: 1e-3,
            budget: 64,
            shift: 0.0,
            initial_turn: None,
            samples: 33,
            stall_rounds: 10,
        }
    }
}

/// Searches `xi` in the dilate `eta^{-1} I(z*)` maximizing the component of
/// `sum_{n=M}^{N} a_n f^n(xi)` along `w`, and returns `xi` with the new
/// residual `w - block(xi)`, recomputed at full precision.  Fails unless the
/// residual shrank by `eta_f sum |a_n|`.
pub fn contraction_step(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    z_star: &NearPoint,
    m: usize,
    n: usize,
    w: Complex64,
    consts: &ConstantEstimates,
) -> Result<(BoundaryPoint, Complex64)> {
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let eta = consts.eta_f;
    let mass = a.abs_sum(m, n);
    if mass == 0.0 {
        return Ok((z_star.direction.clone(), w));
    }
    if mass > eta * w.norm() * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "block mass {mass} exceeds eta |w| = {}",
            eta * w.norm()
        )));
    }
    let modulus = z_star.iterate_modulus(f, m);
    if modulus > eta * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "|f^M(z*)| = {modulus} exceeds eta = {eta}"
        )));
    }
    let mut coeffs = a.dense(n);
    coeffs
        .iter_mut()
        .take(m)
        .for_each(|c| *c = Complex64::new(0.0, 0.0));
    let search = Search {
        f,
        coeffs: &coeffs,
        from: m,
        to: n,
        base: Complex64::new(0.0, 0.0),
        goal: Goal::Along(w / w.norm()),
        budget: 128,
        shift: 0.0,
    };
    let found = search.run(&z_star.shadow().dilate(1.0 / eta))?;
    let point = found.point.with_bits(
        found
            .point
            .bits()
            .max(f.required_precision(n, ACCURACY_BITS)),
    );
    let block = partial_sum(f, a, &SeriesPoint::Boundary(point.clone()), m, n)?;
    let residual = w - block;
    let required = w.norm() - eta * mass;
    if residual.norm() > required + 1e-12 * w.norm() {
        return Err(Error::ContractionFailure {
            achieved: residual.norm(),
            required,
        });
    }
    Ok((point, residual))
}

/// Drives `F_N(xi) = sum_{n<=N} a_n f^n(xi)` to within `tol` of `w` for a
/// divergent, null coefficient sequence.
pub fn paley_solve(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    w: Complex64,
    consts: &ConstantEstimates,
    max_rounds: usize,
    tol: f64,
) -> Result<SolverTrace> {
    let opts = PaleyOptions {
        max_rounds,
        tol,
        ..Default::default()
    };
    paley_solve_with(f, a, w, consts, &opts)
}

pub fn paley_solve_with(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    w: Complex64,
    consts: &ConstantEstimates,
    opts: &PaleyOptions,
) -> Result<SolverTrace> {
    let mut solver = Solver::start(f, a, w, consts, opts, "paley")?;
    let reached = solver.run_to(w, opts.max_rounds)?;
    solver.finish(reached)
}

/// Follows `targets` in order with one point, retargeting once the partial
/// sums come within `per_target_tol` of the current target.
pub fn cluster_follow(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    targets: &[Complex64],
    consts: &ConstantEstimates,
    per_target_tol: f64,
) -> Result<SolverTrace> {
    let opts = PaleyOptions {
        tol: per_target_tol,
        ..Default::default()
    };
    cluster_follow_with(f, a, targets, consts, &opts)
}

pub fn cluster_follow_with(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    targets: &[Complex64],
    consts: &ConstantEstimates,
    opts: &PaleyOptions,
) -> Result<SolverTrace> {
    let first = *targets
        .first()
        .ok_or_else(|| Error::InvalidInput("no targets".into()))?;
    let mut solver = Solver::start(f, a, first, consts, opts, "cluster")?;
    let mut reached = true;
    for (i, &w) in targets.iter().enumerate() {
        if !solver.run_to(w, opts.max_rounds)? {
            reached = false;
            solver.trace.notes.push(format!(
                "target {i} not reached in {} rounds",
                opts.max_rounds
            ));
            break;
        }
        let (depth, residual) = (solver.depth, solver.residual);
        let residual = if i + 1 < targets.len() {
            solver.lock_visit(w)?
        } else {
            residual
        };
        solver.trace.visits.push(TargetVisit {
            target_index: i,
            target: w,
            round: solver.round,
            depth,
            residual,
            point: solver.point.clone(),
        });
    }
    solver.trace.target = targets.last().copied();
    solver.finish(reached)
}

struct Solver<'a> {
    f: &'a BlaschkeProduct,
    a: &'a CoefficientSequence,
    opts: &'a PaleyOptions,
    eta: f64,
    gamma1: f64,
    t_gap: usize,
    halved: bool,
    coeffs: Vec<Complex64>,
    arc: Arc,
    depth: usize,
    point: BoundaryPoint,
    value: Complex64,
    residual: f64,
    round: usize,
    case: CaseTag,
    trace: SolverTrace,
}

impl<'a> Solver<'a> {
    fn start(
        f: &'a BlaschkeProduct,
        a: &'a CoefficientSequence,
        w: Complex64,
        consts: &ConstantEstimates,
        opts: &'a PaleyOptions,
        kind: &str,
    ) -> Result<Self> {
        let flags = a.flags();
        if !flags.tends_to_zero || flags.abs_summable {
            return Err(Error::InvalidInput(
                "coefficients must be declared null and not absolutely summable".into(),
            ));
        }
        consts.validate()?;
        f.check_expanding_contract()?;
        if !(opts.tol > 0.0) || opts.samples < 3 {
            return Err(Error::InvalidInput(
                "need tol > 0 and at least 3 samples".into(),
            ));
        }
        let coeffs = a.dense(64);
        let point = match &opts.initial_turn {
            Some(p) => p.clone(),
            None => {
                let search = Search {
                    f,
                    coeffs: &coeffs,
                    from: 1,
                    to: 1,
                    base: Complex64::new(0.0, 0.0),
                    goal: Goal::Toward(w),
                    budget: opts.budget,
                    shift: opts.shift,
                };
                search.run(&Arc::full())?.point
            }
        };
        let arc = find_subarc_with_image_measure(f, &Arc::full(), 1, &point, WORKING_MEASURE)?;
        let mut trace = SolverTrace::new(kind);
        trace.target = Some(w);
        trace.eta_used = consts.eta_f;
        Ok(Solver {
            f,
            a,
            opts,
            eta: consts.eta_f,
            gamma1: consts.gamma1(),
            t_gap: consts.t_gap.max(1),
            halved: false,
            coeffs,
            arc,
            depth: 1,
            point,
            value: Complex64::new(0.0, 0.0),
            residual: f64::INFINITY,
            round: 0,
            case: CaseTag::Initial,
            trace,
        })
    }

    /// Shrinks the arc around the visiting point until `|F_N - w| <= tol`
    /// at every sample of it, then deepens until the image is back to the
    /// working measure.  Every later witness then inherits the visit.
    /// Returns the largest sampled `|F_N - w|` on the kept arc.
    fn lock_visit(&mut self, w: Complex64) -> Result<f64> {
        let (f, n) = (self.f, self.depth);
        let stall = |e: Error| Error::ConstructionStall {
            block: self.round,
            reason: e.to_string(),
        };
        let mut delta = WORKING_MEASURE;
        let (arc, worst) = loop {
            delta /= 2.0;
            if delta < MIN_LOCK_MEASURE {
                return Err(stall(Error::Infeasible("visit cannot be locked in".into())));
            }
            let arc = find_subarc_with_image_measure(f, &self.arc, n, &self.point, delta)
                .map_err(stall)?;
            let orbit = ReferenceOrbit::new(f, arc.center(), n)?;
            let chart = SumChart::new(orbit, self.coeffs[..=n].to_vec());
            let h = arc.half_length();
            let k = self.opts.samples;
            let worst = (0..k)
                .map(|i| {
                    (chart.partial_sum(-h + h.mul_f64(2.0 * i as f64 / (k - 1) as f64), 1, n) - w)
                        .norm()
                })
                .fold(0.0, f64::max);
            if worst <= self.opts.tol {
                break (arc, worst);
            }
        };
        let mut depth = n;
        while arc_image(f, &arc, depth)?.measure.to_f64() < WORKING_MEASURE {
            depth += 1;
        }
        self.arc = find_subarc_with_image_measure(f, &arc, depth, &self.point, WORKING_MEASURE)
            .map_err(stall)?;
        self.depth = depth;
        self.trace.arcs.push(self.arc.clone());
        self.trace.arc_depths.push(depth);
        self.trace.notes.push(format!(
            "round {}: visit locked on an arc of image {delta} at depth {n}",
            self.round
        ));
        Ok(worst)
    }

    fn ensure_coeffs(&mut self, n: usize) {
        while self.coeffs.len() <= n {
            let k = self.coeffs.len();
            self.coeffs.push(self.a.value(k));
        }
    }

    /// Samples `F_N` over the current arc: sets the best point, `d_k`, and
    /// logs the spread.
    fn measure_round(&mut self, w: Complex64) -> Result<()> {
        let n = self.depth;
        self.ensure_coeffs(n);
        let orbit = ReferenceOrbit::new(self.f, self.arc.center(), n)?;
        let chart = SumChart::new(orbit, self.coeffs[..=n].to_vec());
        let h = self.arc.half_length();
        let k = self.opts.samples;
        let at = |i: f64| -h + h.mul_f64(2.0 * i / (k - 1) as f64);
        let values: Vec<Complex64> = (0..k)
            .map(|i| chart.partial_sum(at(i as f64), 1, n))
            .collect();
        let mut spread: f64 = 0.0;
        for (i, p) in values.iter().enumerate() {
            for q in &values[i + 1..] {
                spread = spread.max((p - q).norm());
            }
        }
        let dist = |eps: ExtF64| (chart.partial_sum(eps, 1, n) - w).norm();
        let mut best = (self.arc.offset_of(&self.point), f64::INFINITY);
        best.1 = dist(best.0);
        let mut best_i = None;
        for (i, v) in values.iter().enumerate() {
            if (v - w).norm() < best.1 {
                best = (at(i as f64), (v - w).norm());
                best_i = Some(i);
            }
        }
        if let Some(i) = best_i {
            let lo = at(i.saturating_sub(1) as f64);
            let hi = at((i + 1).min(k - 1) as f64);
            let span = hi - lo;
            let (t, d) = golden_section(|t| dist(lo + span.mul_f64(t)), 0.0, 1.0, false);
            if d < best.1 {
                best = (lo + span.mul_f64(t), d);
            }
        }
        self.point = chart.orbit().point(best.0);
        self.value = chart.partial_sum(best.0, 1, n);
        self.residual = best.1;
        self.trace.residuals.push(best.1);
        self.trace.oscillations.push(spread);
        self.trace.arcs.push(self.arc.clone());
        self.trace.arc_depths.push(n);
        self.trace.partial_sum_log.push(PartialSumRecord {
            round: self.round,
            depth: n,
            value: self.value,
            case: self.case,
        });
        Ok(())
    }

    /// Rounds until `d_k <= tol` (true) or the round budget runs out (false).
    fn run_to(&mut self, w: Complex64, max_rounds: usize) -> Result<bool> {
        let mut previous = f64::INFINITY;
        let mut idle = 0;
        let mut first = true;
        for _ in 0..max_rounds {
            if first && self.round > 0 {
                // Retargeting: the current state is re-measured against `w`.
                self.trace
                    .notes
                    .push(format!("round {}: retarget to {w}", self.round));
            }
            first = false;
            self.measure_round(w)?;
            let d = self.residual;
            if d <= self.opts.tol {
                return Ok(true);
            }
            // A stall is a run of rounds in which d_k never decreases.
            if d < previous * (1.0 - 1e-9) {
                idle = 0;
            } else {
                idle += 1;
            }
            previous = d;
            if idle >= self.opts.stall_rounds {
                if self.halved {
                    return Err(Error::Stall {
                        rounds: self.round,
                        residual: d,
                        trace: Box::new(self.trace.clone()),
                    });
                }
                self.halved = true;
                self.eta /= 2.0;
                self.t_gap = gap_length(self.f, self.gamma1, self.eta)?.max(1);
                self.trace.eta_used = self.eta;
                self.trace.notes.push(format!(
                    "round {}: stalled, eta halved to {}",
                    self.round, self.eta
                ));
                idle = 0;
            }
            self.step(w)?;
        }
        self.measure_round(w)?;
        Ok(self.residual <= self.opts.tol)
    }

    fn step(&mut self, w: Complex64) -> Result<()> {
        let (f, a, eta, d) = (self.f, self.a, self.eta, self.residual);
        self.round += 1;
        let round = self.round;
        let stall = |e: Error| Error::ConstructionStall {
            block: round,
            reason: e.to_string(),
        };
        let z_star = NearPoint::new(self.arc.center().clone(), self.arc.length().mul_f64(eta))?;
        let gap_end = self.depth + self.t_gap;
        self.trace
            .gap_moduli
            .push(z_star.iterate_modulus(f, gap_end));

        let sup = a.sup_abs_from(gap_end, gap_end + SUP_HORIZON);
        let (case, block_start, end) = if sup <= eta * d / 4.0 {
            let mut mass = 0.0;
            let mut end = gap_end;
            loop {
                mass += a.abs(end);
                if mass >= eta * d / 2.0 {
                    break;
                }
                end += 1;
                if end > gap_end + MAX_BLOCK {
                    return Err(stall(Error::Infeasible(
                        "block mass target not reached".into(),
                    )));
                }
            }
            (CaseTag::CaseI, gap_end, end)
        } else {
            let j = (gap_end..=gap_end + SUP_HORIZON)
                .find(|&j| a.abs(j) >= sup)
                .unwrap_or(gap_end);
            (CaseTag::CaseII, j, j)
        };
        self.ensure_coeffs(end);
        self.trace.blocks.push(BlockRecord {
            round,
            start: self.depth + 1,
            gap_end: block_start,
            end,
            case,
        });

        // Candidates: best point for the whole sum, the contraction point,
        // and the current point carried forward.
        let mut cands: Vec<(BoundaryPoint, f64)> = Vec::new();
        let direct = Search {
            f,
            coeffs: &self.coeffs,
            from: 1,
            to: end,
            base: Complex64::new(0.0, 0.0),
            goal: Goal::Toward(w),
            budget: self.opts.budget,
            shift: self.opts.shift,
        };
        let found = direct.run(&self.arc).map_err(stall)?;
        cands.push((found.point, -found.score));
        if case == CaseTag::CaseI {
            let target = w - self.value;
            if target.norm() > 0.0 {
                let contraction = Search {
                    f,
                    coeffs: &self.coeffs,
                    from: self.depth + 1,
                    to: end,
                    base: Complex64::new(0.0, 0.0),
                    goal: Goal::Along(target / target.norm()),
                    budget: self.opts.budget,
                    shift: self.opts.shift,
                };
                let c = contraction
                    .run(&z_star.shadow().dilate(1.0 / eta))
                    .map_err(stall)?;
                if self.arc.contains(&c.point) {
                    let full = c.chart.partial_sum(c.offset, 1, end);
                    cands.push((c.point, (full - w).norm()));
                }
            }
        }
        let orbit = ReferenceOrbit::new(f, &self.point, end)?;
        let chart = SumChart::new(orbit, self.coeffs[..=end].to_vec());
        cands.push((
            self.point.clone(),
            (chart.partial_sum(ExtF64::ZERO, 1, end) - w).norm(),
        ));
        let best = cands
            .into_iter()
            .fold(None, |acc: Option<(BoundaryPoint, f64)>, c| match acc {
                Some(b) if b.1 <= c.1 => Some(b),
                _ => Some(c),
            });
        let (point, _) = best.expect("at least one candidate");
        self.arc = find_subarc_with_image_measure(f, &self.arc, end, &point, WORKING_MEASURE)
            .map_err(stall)?;
        self.point = point;
        self.depth = end;
        self.case = case;
        Ok(())
    }

    fn finish(mut self, reached: bool) -> Result<SolverTrace> {
        let n = self.depth;
        let point = self.point.with_bits(
            self.point
                .bits()
                .max(self.f.required_precision(n, ACCURACY_BITS)),
        );
        let exact = partial_sum(self.f, self.a, &SeriesPoint::Boundary(point.clone()), 1, n)?;
        let w = self.trace.target.unwrap_or_default();
        self.trace.witness = Some(point);
        self.trace.witness_depth = n;
        self.trace.final_value = self.residual;
        self.trace.recomputed_value = (exact - w).norm();
        self.trace.certified =
            reached && self.trace.recomputed_value <= self.opts.tol * (1.0 + 1e-6);
        Ok(self.trace)
    }
}
