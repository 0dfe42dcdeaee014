use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use num_complex::Complex64;
use rayon::prelude::*;
use rug::Integer;
use serde::{Deserialize, Serialize};

use crate::boundary::{BoundaryPoint, ACCURACY_BITS};
use crate::error::{Error, Result};
use crate::product::{cis_turn, BlaschkeProduct};
use crate::series::{partial_sum, tail_abs_sum, CoefficientSequence, SeriesPoint};

/// Dyadic sample points carry at most this many bits.
const MAX_LEVEL: u32 = 53;
/// The main scan targets the pilot's covered disc shrunk by this factor.
pub const PILOT_SHRINK: f64 = 0.9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanDisc {
    pub center: Complex64,
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Cells per side.
    pub resolution: usize,
    pub sample_budget: usize,
    /// Number of terms `N_total` kept in the truncated series.
    pub truncation: usize,
    /// The first pass samples all `2^initial_level` dyadic points.
    pub initial_level: u32,
}

impl ScanOptions {
    pub fn new(resolution: usize, sample_budget: usize, truncation: usize) -> Self {
        ScanOptions {
            resolution,
            sample_budget,
            truncation,
            initial_level: 10,
        }
    }
}

/// Occupancy of a square grid laid over the scan disc by images of sampled
/// boundary points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub disc_center: Complex64,
    pub disc_radius: f64,
    pub resolution: usize,
    /// Row-major, row 0 at the lowest imaginary part.
    #[serde(skip)]
    pub occupancy: Vec<bool>,
    pub samples_used: usize,
    /// Occupied cells over cells whose centers lie in the disc.
    pub coverage_fraction: f64,
    pub cells_inside: usize,
    pub cells_occupied: usize,
    /// The budget ran out while intervals still needed refinement.
    pub budget_exhausted: bool,
    pub deepest_level: u32,
    pub truncation: usize,
    /// Upper bound on `sum_{n > N_total} |a_n|`.
    pub tail_bound: f64,
    /// Largest disc all of whose cells are occupied.
    pub covered_disc: Option<ScanDisc>,
}

impl CoverageGrid {
    fn empty(disc: ScanDisc, resolution: usize, truncation: usize, tail_bound: f64) -> Self {
        CoverageGrid {
            disc_center: disc.center,
            disc_radius: disc.radius,
            resolution,
            occupancy: vec![false; resolution * resolution],
            samples_used: 0,
            coverage_fraction: 0.0,
            cells_inside: 0,
            cells_occupied: 0,
            budget_exhausted: false,
            deepest_level: 0,
            truncation,
            tail_bound,
            covered_disc: None,
        }
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.disc_radius / self.resolution as f64
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Complex64 {
        let h = self.cell_size();
        self.disc_center
            + Complex64::new(
                -self.disc_radius + (ix as f64 + 0.5) * h,
                -self.disc_radius + (iy as f64 + 0.5) * h,
            )
    }

    pub fn inside(&self, ix: usize, iy: usize) -> bool {
        (self.cell_center(ix, iy) - self.disc_center).norm() <= self.disc_radius
    }

    pub fn occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupancy[iy * self.resolution + ix]
    }

    fn cell_of(&self, w: Complex64) -> Option<(usize, usize)> {
        let h = self.cell_size();
        let x = ((w.re - self.disc_center.re + self.disc_radius) / h).floor();
        let y = ((w.im - self.disc_center.im + self.disc_radius) / h).floor();
        let r = self.resolution as f64;
        (x >= 0.0 && y >= 0.0 && x < r && y < r).then_some((x as usize, y as usize))
    }

    fn mark(&mut self, w: Complex64) {
        if let Some((ix, iy)) = self.cell_of(w) {
            self.occupancy[iy * self.resolution + ix] = true;
        }
    }

    fn tally(&mut self) {
        let res = self.resolution;
        let (mut inside, mut occupied) = (0, 0);
        for iy in 0..res {
            for ix in 0..res {
                if self.inside(ix, iy) {
                    inside += 1;
                    occupied += usize::from(self.occupied(ix, iy));
                }
            }
        }
        self.cells_inside = inside;
        self.cells_occupied = occupied;
        self.coverage_fraction = if inside == 0 {
            0.0
        } else {
            occupied as f64 / inside as f64
        };
    }

    fn full(&self) -> bool {
        self.cells_inside > 0 && self.cells_occupied == self.cells_inside
    }

    /// Binary PGM, top row at the largest imaginary part: occupied cells in
    /// the disc black, empty ones white, cells outside the disc gray.
    pub fn to_pgm(&self) -> Vec<u8> {
        let res = self.resolution;
        let mut out = format!("P5\n{res} {res}\n255\n").into_bytes();
        for iy in (0..res).rev() {
            for ix in 0..res {
                out.push(match (self.inside(ix, iy), self.occupied(ix, iy)) {
                    (true, true) => 0,
                    (true, false) => 255,
                    (false, true) => 96,
                    (false, false) => 192,
                });
            }
        }
        out
    }
}

/// Largest disc, centered at an occupied cell inside the scan disc, that
/// meets no empty cell and no cell outside the disc.  Distances to blocked
/// cells come from an exact Euclidean distance transform.
pub fn largest_covered_disc(grid: &CoverageGrid) -> Option<ScanDisc> {
    let res = grid.resolution;
    let h = grid.cell_size();
    let open = |ix: usize, iy: usize| grid.inside(ix, iy) && grid.occupied(ix, iy);
    let mut dist: Vec<f64> = (0..res * res)
        .map(|i| if open(i % res, i / res) { FAR } else { 0.0 })
        .collect();
    for ix in 0..res {
        let col: Vec<f64> = (0..res).map(|iy| dist[iy * res + ix]).collect();
        for (iy, v) in distance_1d(&col).into_iter().enumerate() {
            dist[iy * res + ix] = v;
        }
    }
    for iy in 0..res {
        let row = distance_1d(&dist[iy * res..(iy + 1) * res]);
        dist[iy * res..(iy + 1) * res].copy_from_slice(&row);
    }
    let slack = h * FRAC_1_SQRT_2;
    let mut best: Option<ScanDisc> = None;
    for iy in 0..res {
        for ix in 0..res {
            if !open(ix, iy) {
                continue;
            }
            let c = grid.cell_center(ix, iy);
            let to_edge = grid.disc_radius - (c - grid.disc_center).norm();
            let d = dist[iy * res + ix];
            let to_blocked = if d >= FAR {
                f64::INFINITY
            } else {
                d.sqrt() * h - slack
            };
            let radius = to_edge.min(to_blocked);
            // Ties keep the first cell in row-major order.
            if radius > 0.0 && best.is_none_or(|b| radius > b.radius) {
                best = Some(ScanDisc { center: c, radius });
            }
        }
    }
    best
}

/// Stand-in for an infinite squared distance.
const FAR: f64 = 1e30;

/// Squared distance transform of a sampled function along a line
/// (lower envelope of parabolas).
fn distance_1d(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let sq = |q: usize| (q * q) as f64;
    for q in 1..n {
        let mut s;
        loop {
            let p = v[k];
            s = ((f[q] + sq(q)) - (f[p] + sq(p))) / (2.0 * (q as f64 - p as f64));
            // z[0] is -inf, so this never pops the first parabola.
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut out = vec![0.0; n];
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = (d * d + f[v[k]]).min(FAR);
    }
    out
}

/// Evaluates the truncated series at dyadic turns `j / 2^level`.
enum Sampler<'a> {
    /// `z^d`: turns multiply by `d` exactly; once an orbit hits turn 0 the
    /// rest of the sum is a precomputed suffix.
    Power {
        d: u128,
        coeffs: Vec<Complex64>,
        suffix: Vec<Complex64>,
    },
    General {
        f: &'a BlaschkeProduct,
        a: &'a CoefficientSequence,
        n: usize,
        bits: u32,
    },
}

impl Sampler<'_> {
    fn value(&self, level: u32, j: u64) -> Complex64 {
        match self {
            Sampler::Power { d, coeffs, suffix } => {
                let mask = (1u128 << level) - 1;
                let scale = (-(level as f64)).exp2();
                let mut numer = j as u128;
                let mut total = Complex64::new(0.0, 0.0);
                for n in 1..coeffs.len() {
                    numer = (numer * d) & mask;
                    if numer == 0 {
                        return total + suffix[n];
                    }
                    total += coeffs[n] * cis_turn(numer as f64 * scale);
                }
                total
            }
            Sampler::General { f, a, n, bits } => {
                let xi = BoundaryPoint::from_dyadic(Integer::from(j), level).with_bits(*bits);
                partial_sum(f, a, &SeriesPoint::Boundary(xi), 1, *n)
                    .expect("point carries the required precision")
            }
        }
    }
}

/// Upper bound on `|F_N(x) - F_N(y)|` for `|x - y| <= 2^-level` turns.
fn variation_bound(f: &BlaschkeProduct, abs: &[f64], level: u32) -> f64 {
    let gap = (-(level as f64)).exp2();
    let k = f.k_max().max(1.0);
    let mut growth = 1.0f64;
    let mut total = 0.0;
    for &m in &abs[1..] {
        growth *= k;
        total += m * (TAU * growth * gap).min(2.0);
    }
    total
}

/// Scans the image of the circle under the series truncated at
/// `options.truncation` terms: all dyadic points of the initial level, then
/// level by level the midpoints of adjacent pairs whose images are more than
/// one cell apart, skipping pairs whose images cannot reach the disc.
pub fn peano_scan(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    disc: ScanDisc,
    options: &ScanOptions,
) -> Result<CoverageGrid> {
    let flags = a.flags();
    if !(flags.abs_summable && flags.slow_decay) {
        return Err(Error::InvalidInput(
            "coefficients must be declared absolutely summable with slow tail decay".into(),
        ));
    }
    if !(disc.radius > 0.0 && disc.radius.is_finite()) || !(disc.center.norm().is_finite()) {
        return Err(Error::InvalidInput(format!(
            "scan disc radius {} must be positive",
            disc.radius
        )));
    }
    if options.resolution == 0 || options.truncation == 0 || options.sample_budget == 0 {
        return Err(Error::InvalidInput(
            "resolution, truncation and sample budget must be positive".into(),
        ));
    }
    if options.initial_level > MAX_LEVEL {
        return Err(Error::InvalidInput(format!(
            "initial level must be at most {MAX_LEVEL}"
        )));
    }
    let n = options.truncation;
    let tail = tail_abs_sum(a, n, None)?.upper();
    let cell = 2.0 * disc.radius / options.resolution as f64;
    if !(tail < cell * FRAC_1_SQRT_2) {
        return Err(Error::InvalidInput(format!(
            "tail bound {tail:e} after {n} terms is not below half a cell diagonal {:e}",
            cell * FRAC_1_SQRT_2
        )));
    }
    let coeffs = a.dense(n);
    let abs: Vec<f64> = coeffs.iter().map(|c| c.norm()).collect();
    let sampler = if f.is_pure_power() {
        let mut suffix = vec![Complex64::new(0.0, 0.0); n + 2];
        for k in (1..=n).rev() {
            suffix[k] = suffix[k + 1] + coeffs[k];
        }
        Sampler::Power {
            d: f.degree() as u128,
            coeffs,
            suffix,
        }
    } else {
        Sampler::General {
            f,
            a,
            n,
            bits: f.required_precision(n, ACCURACY_BITS),
        }
    };

    let mut grid = CoverageGrid::empty(disc, options.resolution, n, tail);
    let budget = options.sample_budget;
    let level0 = options.initial_level;
    let count0 = 1u64 << level0;
    let take = count0.min(budget as u64);
    let vals: Vec<Complex64> = (0..take)
        .into_par_iter()
        .map(|j| sampler.value(level0, j))
        .collect();
    vals.iter().for_each(|&w| grid.mark(w));
    grid.samples_used = take as usize;
    grid.deepest_level = level0;
    grid.tally();
    if take < count0 {
        grid.budget_exhausted = true;
        grid.covered_disc = largest_covered_disc(&grid);
        return Ok(grid);
    }

    let mut intervals: Vec<(u64, Complex64, Complex64)> = (0..count0)
        .map(|j| (j, vals[j as usize], vals[((j + 1) % count0) as usize]))
        .collect();
    drop(vals);
    let mut level = level0;
    while !grid.full() && level < MAX_LEVEL {
        let reach = disc.radius + variation_bound(f, &abs, level) + cell;
        let todo: Vec<(u64, Complex64, Complex64)> = intervals
            .into_iter()
            .filter(|&(_, l, r)| (l - r).norm() > cell && (l - disc.center).norm() <= reach)
            .collect();
        if todo.is_empty() {
            break;
        }
        let remaining = budget - grid.samples_used;
        let take = todo.len().min(remaining);
        let mids: Vec<Complex64> = todo[..take]
            .par_iter()
            .map(|&(j, _, _)| sampler.value(level + 1, 2 * j + 1))
            .collect();
        mids.iter().for_each(|&w| grid.mark(w));
        grid.samples_used += take;
        grid.deepest_level = level + 1;
        grid.tally();
        if take < todo.len() {
            grid.budget_exhausted = true;
            break;
        }
        intervals = todo
            .iter()
            .zip(&mids)
            .flat_map(|(&(j, l, r), &m)| [(2 * j, l, m), (2 * j + 1, m, r)])
            .collect();
        level += 1;
    }
    grid.covered_disc = largest_covered_disc(&grid);
    Ok(grid)
}

/// Smallest power-of-two truncation whose tail bound is below a quarter of
/// the cell diagonal of a `resolution`-cell grid over a disc of `radius`.
pub fn truncation_for(a: &CoefficientSequence, radius: f64, resolution: usize) -> Result<usize> {
    let target = 2.0 * radius / resolution as f64 * FRAC_1_SQRT_2 * 0.5;
    let mut n = 64usize;
    while n <= 1 << 26 {
        if tail_abs_sum(a, n, None)?.upper() < target {
            return Ok(n);
        }
        n *= 2;
    }
    Err(Error::InvalidInput(format!(
        "no truncation up to 2^26 terms brings the tail below {target:e}"
    )))
}

/// Pilot scan over the disc of radius `sum |a_n|` around 0 that bounds the
/// whole image.  Returns the largest fully covered disc it found, shrunk by
/// [`PILOT_SHRINK`], together with the pilot grid.  A uniform pilot
/// (`sample_budget = 2^initial_level`) samples the image density evenly.
pub fn pilot_disc(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    options: &ScanOptions,
) -> Result<(ScanDisc, CoverageGrid)> {
    let bound =
        a.abs_sum(1, options.truncation) + tail_abs_sum(a, options.truncation, None)?.upper();
    if !(bound > 0.0) {
        return Err(Error::Degenerate(
            "all coefficients vanish; the image is a point".into(),
        ));
    }
    let grid = peano_scan(
        f,
        a,
        ScanDisc {
            center: Complex64::new(0.0, 0.0),
            radius: bound,
        },
        options,
    )?;
    let disc = grid
        .covered_disc
        .ok_or_else(|| Error::Degenerate("the pilot scan covered no disc".into()))?;
    Ok((
        ScanDisc {
            center: disc.center,
            radius: disc.radius * PILOT_SHRINK,
        },
        grid,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::DeclaredFlags;

    fn declared(a: CoefficientSequence) -> CoefficientSequence {
        a.with_flags(DeclaredFlags {
            tends_to_zero: true,
            abs_summable: true,
            slow_decay: true,
        })
    }

    #[test]
    fn zero_series_covers_nothing_away_from_zero() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = declared(CoefficientSequence::list(vec![Complex64::new(0.0, 0.0); 5]));
        let disc = ScanDisc {
            center: Complex64::new(2.0, 0.0),
            radius: 0.5,
        };
        let g = peano_scan(&sq, &a, disc, &ScanOptions::new(16, 10_000, 5)).unwrap();
        assert_eq!(g.coverage_fraction, 0.0);
        assert!(!g.budget_exhausted);
        assert!(g.covered_disc.is_none());
    }

    #[test]
    fn single_term_marks_only_the_circle() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = declared(CoefficientSequence::list(vec![Complex64::new(1.0, 0.0)]));
        let disc = ScanDisc {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
        };
        let g = peano_scan(&sq, &a, disc, &ScanOptions::new(32, 100_000, 1)).unwrap();
        let h = g.cell_size();
        for iy in 0..32 {
            for ix in 0..32 {
                if g.occupied(ix, iy) {
                    let r = g.cell_center(ix, iy).norm();
                    assert!(
                        (r - 1.0).abs() <= h * FRAC_1_SQRT_2 + 1e-12,
                        "cell ({ix}, {iy}) at radius {r}"
                    );
                }
            }
        }
        assert!(g.cells_occupied > 0 && g.coverage_fraction < 0.5);
    }

    #[test]
    fn power_sampler_matches_partial_sums() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = declared(CoefficientSequence::power(1.0, 1.5).unwrap());
        let n = 200;
        let coeffs = a.dense(n);
        let mut suffix = vec![Complex64::new(0.0, 0.0); n + 2];
        for k in (1..=n).rev() {
            suffix[k] = suffix[k + 1] + coeffs[k];
        }
        let s = Sampler::Power {
            d: 2,
            coeffs,
            suffix,
        };
        for (level, j) in [(10u32, 37u64), (20, 123_457), (1, 1), (0, 0)] {
            let xi = BoundaryPoint::from_dyadic(Integer::from(j), level)
                .with_bits(sq.required_precision(n, ACCURACY_BITS));
            let exact = partial_sum(&sq, &a, &SeriesPoint::Boundary(xi), 1, n).unwrap();
            assert!((s.value(level, j) - exact).norm() < 1e-12, "level {level}");
        }
    }

    #[test]
    fn distance_transform_matches_brute_force() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::power(1.0, 1.5).unwrap();
        let disc = ScanDisc {
            center: Complex64::new(0.0, 0.0),
            radius: 2.7,
        };
        let g = peano_scan(&sq, &a, disc, &ScanOptions::new(24, 20_000, 100_000)).unwrap();
        let h = g.cell_size();
        let mut best = 0.0f64;
        for iy in 0..24 {
            for ix in 0..24 {
                if !(g.inside(ix, iy) && g.occupied(ix, iy)) {
                    continue;
                }
                let c = g.cell_center(ix, iy);
                let mut r = g.disc_radius - (c - g.disc_center).norm();
                for jy in 0..24 {
                    for jx in 0..24 {
                        if !(g.inside(jx, jy) && g.occupied(jx, jy)) {
                            r = r.min((g.cell_center(jx, jy) - c).norm() - h * FRAC_1_SQRT_2);
                        }
                    }
                }
                best = best.max(r);
            }
        }
        let found = g.covered_disc.unwrap().radius;
        assert!((found - best).abs() < 1e-12, "{found} vs {best}");
    }

    #[test]
    fn truncation_must_resolve_cells() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::power(1.0, 1.5).unwrap();
        let disc = ScanDisc {
            center: Complex64::new(0.0, 0.0),
            radius: 0.5,
        };
        assert!(matches!(
            peano_scan(&sq, &a, disc, &ScanOptions::new(64, 1000, 10)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn coverage_is_monotone_in_budget() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::power(1.0, 1.5).unwrap();
        let disc = ScanDisc {
            center: Complex64::new(0.3, 0.2),
            radius: 0.6,
        };
        let mut last = 0.0;
        for budget in [2_000, 8_000, 32_000] {
            let g = peano_scan(&sq, &a, disc, &ScanOptions::new(16, budget, 100_000)).unwrap();
            assert!(g.coverage_fraction >= last);
            last = g.coverage_fraction;
        }
        assert!(last > 0.3, "{last}");
    }
}
