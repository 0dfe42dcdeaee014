use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::suites::{depth_bound, first_depth_reaching, lemma40_delta};
use crate::boundary::{near_boundary_orbit, BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::geometry::subarc_offsets;
use crate::orbit::ReferenceOrbit;
use crate::product::BlaschkeProduct;
use crate::series::{visit_orbit, CoefficientSequence, SeriesPoint};
use crate::solver::calibrate::rng_for;

/// Interior orbits are followed until the certified remainder of
/// `sum |f^k(z)|` drops below this.
const ORBIT_TAIL: f64 = 1e-17;
const MAX_INTERIOR_TERMS: usize = 200_000;
const MAX_SCHEDULE: usize = 1000;

/// `|g(0)|` for `f(z) = z g(z)`: the Schwarz-Pick bound
/// `|f(w)| <= |w| (|w| + |g(0)|) / (1 + |g(0)| |w|)` certifies orbit tails.
fn schwarz_factor(f: &BlaschkeProduct) -> f64 {
    if f.zero_at_origin_count() >= 2 {
        0.0
    } else {
        f.nonzero_zeros().iter().map(|z| z.norm()).product()
    }
}

/// `f^k(z)` for `k = 0..` of `z = (1 - defect) e^{2 pi i direction}`, in high
/// precision for `hp_steps` steps and in double precision afterwards, until
/// `sum_{k > last} |f^k(z)|` is certified below [`ORBIT_TAIL`].  Returns the
/// orbit and that remainder bound.
fn radial_orbit(
    f: &BlaschkeProduct,
    direction: &BoundaryPoint,
    defect: ExtF64,
    hp_steps: usize,
) -> (Vec<Complex64>, f64) {
    let mut orbit = near_boundary_orbit(f, direction, defect, hp_steps);
    let g0 = schwarz_factor(f);
    loop {
        let rho = orbit.last().expect("orbit starts at z").norm();
        let q = (rho + g0) / (1.0 + g0 * rho);
        let tail = if q < 1.0 {
            rho * q / (1.0 - q)
        } else {
            f64::INFINITY
        };
        if tail < ORBIT_TAIL || orbit.len() > MAX_INTERIOR_TERMS {
            return (orbit, tail);
        }
        let next = f.eval_unchecked(*orbit.last().expect("nonempty"));
        orbit.push(next);
    }
}

/// `N(z)` for `z = (1 - defect) xi`: the first depth at which `I(z)` has
/// image measure at least `delta`.
fn matched_depth(
    f: &BlaschkeProduct,
    direction: &BoundaryPoint,
    defect: ExtF64,
    delta: f64,
) -> Result<usize> {
    let orbit = ReferenceOrbit::new(f, direction, depth_bound(f, defect, delta))?;
    first_depth_reaching(&orbit, defect.mul_pow2(-1), delta)
        .ok_or_else(|| Error::DegenerateOrbit("arc image never reached delta".into()))
}

/// `sum_{k <= N(z)} |f^k(xi) - f^k(z)| + sum_{k > N(z)} |f^k(z)|` for
/// `z = (1 - defect) xi`: with `sup |a_n|` it bounds the gap between the
/// boundary partial sum and the radial value.
fn radial_gap_constant(
    f: &BlaschkeProduct,
    xi: &BoundaryPoint,
    defect: ExtF64,
    delta: f64,
) -> Result<(usize, f64)> {
    let n_z = matched_depth(f, xi, defect, delta)?;
    let (interior, tail) = radial_orbit(f, xi, defect, n_z + 8);
    let xi = xi.with_bits(xi.bits().max(f.required_precision(n_z, ACCURACY_BITS)));
    let mut near = 0.0;
    visit_orbit(f, &SeriesPoint::Boundary(xi), n_z, |k, w| {
        if k >= 1 {
            near += (w - interior[k]).norm();
        }
    })?;
    let far: f64 = interior.iter().skip(n_z + 1).map(|w| w.norm()).sum();
    Ok((n_z, near + far + tail))
}

/// `C_emp`: 1.25 times the largest [`radial_gap_constant`] over `directions`
/// random directions and radii `1 - 2^-j`, `j = 1..=max_j`.
pub fn calibrate_radial_constant(
    f: &BlaschkeProduct,
    seed: u64,
    directions: usize,
    max_j: u32,
) -> Result<f64> {
    f.check_expanding_contract()?;
    let delta = lemma40_delta(f);
    let mut worst = 0.0f64;
    for i in 0..directions {
        let mut rng = rng_for(seed, 2000, i);
        let xi = BoundaryPoint::from_f64(rng.gen::<f64>(), 64);
        for j in 1..=max_j {
            let (_, c) = radial_gap_constant(f, &xi, ExtF64::exp2(-(j as f64)), delta)?;
            worst = worst.max(c);
        }
    }
    Ok(1.25 * worst)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelRow {
    pub radius: f64,
    /// `N(r xi)`.
    pub depth: usize,
    pub boundary_sum: Complex64,
    pub radial_value: Complex64,
    pub discrepancy: f64,
    /// Certified bound on the neglected part of the radial series.
    pub radial_tail: f64,
    /// The gap bound for this very `(xi, r)`, times `sup |a_n|`.
    pub pointwise_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbelReport {
    pub delta: f64,
    pub c_emp: f64,
    pub sup_abs: f64,
    pub max_discrepancy: f64,
    /// `max_discrepancy <= c_emp * sup_abs`.
    pub within_bound: bool,
    pub rows: Vec<AbelRow>,
    pub convergent: bool,
    pub warnings: Vec<String>,
}

fn radial_value(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    xi: &BoundaryPoint,
    defect: ExtF64,
    hp_steps: usize,
    sup: f64,
) -> (Complex64, f64, usize) {
    let (orbit, tail) = radial_orbit(f, xi, defect, hp_steps);
    let value = orbit
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, w)| a.value(k) * w)
        .sum();
    (value, sup * tail, orbit.len() - 1)
}

/// Boundary partial sums at every depth in `depths` (sorted), one pass.
fn boundary_sums(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    xi: &BoundaryPoint,
    depths: &[usize],
) -> Result<Vec<Complex64>> {
    let max = depths.iter().copied().max().unwrap_or(0);
    let xi = xi.with_bits(xi.bits().max(f.required_precision(max, ACCURACY_BITS)));
    let mut sums = vec![Complex64::new(0.0, 0.0); max + 1];
    let mut acc = Complex64::new(0.0, 0.0);
    visit_orbit(f, &SeriesPoint::Boundary(xi), max, |k, w| {
        if k >= 1 {
            acc += a.value(k) * w;
        }
        sums[k] = acc;
    })?;
    Ok(depths.iter().map(|&d| sums[d]).collect())
}

/// Compares `F(r xi)` with the boundary partial sum at depth `N(r xi)` for
/// each radius.  `c_emp` defaults to [`calibrate_radial_constant`] with 16
/// directions and `j <= 20`.
pub fn abel_check(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    xi: &BoundaryPoint,
    radii: &[f64],
    c_emp: Option<f64>,
    seed: u64,
) -> Result<AbelReport> {
    f.check_expanding_contract()?;
    if radii.is_empty() || radii.iter().any(|&r| !(r > 0.0 && r < 1.0)) {
        return Err(Error::InvalidInput(
            "radii must be a nonempty list inside (0, 1)".into(),
        ));
    }
    let delta = lemma40_delta(f);
    let c_emp = match c_emp {
        Some(c) => c,
        None => calibrate_radial_constant(f, seed, 16, 20)?,
    };
    let mut rows = Vec::with_capacity(radii.len());
    let mut depths = Vec::with_capacity(radii.len());
    for &r in radii {
        let defect = ExtF64::new(1.0 - r);
        let (n_z, gap) = radial_gap_constant(f, xi, defect, delta)?;
        depths.push(n_z);
        rows.push((r, defect, n_z, gap));
    }
    let horizon = depths.iter().copied().max().unwrap_or(1) + MAX_INTERIOR_TERMS;
    let sup = a.sup_abs_from(1, horizon);
    let sums = boundary_sums(f, a, xi, &depths)?;
    let rows: Vec<AbelRow> = rows
        .into_iter()
        .zip(&sums)
        .map(|((radius, defect, depth, gap), &boundary_sum)| {
            let (radial_value, radial_tail, _) = radial_value(f, a, xi, defect, depth + 8, sup);
            AbelRow {
                radius,
                depth,
                boundary_sum,
                radial_value,
                discrepancy: (boundary_sum - radial_value).norm(),
                radial_tail,
                pointwise_bound: gap * sup,
            }
        })
        .collect();
    let max_discrepancy = rows.iter().map(|r| r.discrepancy).fold(0.0, f64::max);
    let (convergent, warnings) = cauchy_check(&rows);
    Ok(AbelReport {
        delta,
        c_emp,
        sup_abs: sup,
        within_bound: max_discrepancy <= c_emp * sup,
        max_discrepancy,
        rows,
        convergent,
        warnings,
    })
}

/// Partial sums at increasing probed depths should settle: the spread over
/// the deeper half must not exceed the spread over the shallower half.
fn cauchy_check(rows: &[AbelRow]) -> (bool, Vec<String>) {
    let mut by_depth: Vec<(usize, Complex64)> =
        rows.iter().map(|r| (r.depth, r.boundary_sum)).collect();
    by_depth.sort_by_key(|r| r.0);
    by_depth.dedup_by_key(|r| r.0);
    if by_depth.len() < 4 {
        return (
            true,
            vec!["fewer than four distinct depths; convergence not probed".into()],
        );
    }
    let spread = |s: &[(usize, Complex64)]| {
        s.iter()
            .flat_map(|x| s.iter().map(move |y| (x.1 - y.1).norm()))
            .fold(0.0, f64::max)
    };
    let half = by_depth.len() / 2;
    let (early, late) = (spread(&by_depth[..=half]), spread(&by_depth[half..]));
    if late > early.max(1e-12) {
        let msg = format!("partial sums do not settle: spread {late:e} over the deeper depths against {early:e} before");
        (false, vec![msg])
    } else {
        (true, Vec::new())
    }
}

/// Hausdorff distance between finite point sets (brute force).
pub fn hausdorff_distance(x: &[Complex64], y: &[Complex64]) -> f64 {
    let directed = |p: &[Complex64], q: &[Complex64]| {
        p.iter()
            .map(|a| {
                q.iter()
                    .map(|b| (a - b).norm())
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    };
    if x.is_empty() && y.is_empty() {
        return 0.0;
    }
    directed(x, y).max(directed(y, x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusterReport {
    pub depths: Vec<usize>,
    /// `1 - r_N` with `m(f^N(I(r_N xi))) = delta`.
    pub defects: Vec<ExtF64>,
    pub boundary_sums: Vec<Complex64>,
    pub radial_values: Vec<Complex64>,
    pub hausdorff: f64,
    pub max_matched_gap: f64,
    pub c_emp: f64,
    pub sup_abs: f64,
    pub within_bound: bool,
}

/// Partial sums at the scheduled depths against radial values at the radii
/// matched to those depths, as point sets.
pub fn radial_cluster_compare(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    xi: &BoundaryPoint,
    depth_schedule: &[usize],
    c_emp: Option<f64>,
    seed: u64,
) -> Result<ClusterReport> {
    f.check_expanding_contract()?;
    if depth_schedule.is_empty()
        || depth_schedule.len() > MAX_SCHEDULE
        || depth_schedule.contains(&0)
    {
        return Err(Error::InvalidInput(format!(
            "schedule needs 1..={MAX_SCHEDULE} positive depths"
        )));
    }
    let delta = lemma40_delta(f);
    let c_emp = match c_emp {
        Some(c) => c,
        None => calibrate_radial_constant(f, seed, 16, 20)?,
    };
    let max_depth = depth_schedule.iter().copied().max().expect("nonempty");
    let orbit = ReferenceOrbit::new(f, xi, max_depth)?;
    let sup = a.sup_abs_from(1, max_depth + MAX_INTERIOR_TERMS);
    let mut defects = Vec::with_capacity(depth_schedule.len());
    let mut radial_values = Vec::with_capacity(depth_schedule.len());
    for &n in depth_schedule {
        // Symmetric arc around xi whose image at depth n has measure delta.
        let (lo, hi) = subarc_offsets(
            &orbit,
            ExtF64::new(-0.5),
            ExtF64::new(0.5),
            ExtF64::ZERO,
            n,
            delta,
        )?;
        let defect = hi - lo;
        let (value, _, _) = radial_value(f, a, xi, defect, n + 8, sup);
        defects.push(defect);
        radial_values.push(value);
    }
    let boundary_sums = boundary_sums(f, a, xi, depth_schedule)?;
    let hausdorff = hausdorff_distance(&boundary_sums, &radial_values);
    let max_matched_gap = boundary_sums
        .iter()
        .zip(&radial_values)
        .map(|(b, r)| (b - r).norm())
        .fold(0.0, f64::max);
    Ok(ClusterReport {
        depths: depth_schedule.to_vec(),
        defects,
        boundary_sums,
        radial_values,
        hausdorff,
        max_matched_gap,
        c_emp,
        sup_abs: sup,
        within_bound: hausdorff <= c_emp * sup,
    })
}
