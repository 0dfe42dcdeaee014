//! Nested search over an arc for points where a block of the series does
//! best.
//!
//! Deep terms oscillate far too fast to grid the whole arc, so the search
//! proceeds in chunks.  Each chunk charts the current arc to the depth at
//! which its image is still a few turns, grids the partial sum up to that
//! depth, refines the best brackets, and then shrinks the arc around the best
//! point to an arc whose image is a quarter turn.  The next chunk starts from
//! there with the later terms added in.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::BoundaryPoint;
use crate::error::{Error, Result};
use crate::ext::ExtF64;
use crate::geometry::{arc_from_point, subarc_offsets, Arc};
use crate::orbit::{ReferenceOrbit, SumChart};
use crate::product::{golden_section, BlaschkeProduct, DiskPoint};
use crate::series::CoefficientSequence;

/// Image measure (turns) of the arc a chunk grids at its last term.
pub(crate) const CHUNK_TURNS: f64 = 8.0;
/// Image measure kept around the best point between chunks.
pub(crate) const SHRINK_MEASURE: f64 = 0.25;
const MAX_CHUNKS: usize = 100_000;
const REFINED_BRACKETS: usize = 3;

/// An interior point `(1 - defect) e^{2 pi i direction}` kept in polar form
/// so that points extremely close to the circle stay exact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearPoint {
    pub direction: BoundaryPoint,
    pub defect: ExtF64,
}

impl NearPoint {
    pub fn new(direction: BoundaryPoint, defect: ExtF64) -> Result<Self> {
        if !(defect > ExtF64::ZERO) || defect > ExtF64::ONE {
            return Err(Error::InvalidInput(format!(
                "defect {defect} must lie in (0, 1]"
            )));
        }
        Ok(NearPoint { direction, defect })
    }

    pub fn origin() -> Self {
        NearPoint {
            direction: BoundaryPoint::zero(64),
            defect: ExtF64::ONE,
        }
    }

    pub fn from_disk(z: DiskPoint) -> Result<Self> {
        if !(z.norm() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "point {z} is not inside the disk"
            )));
        }
        if z.norm() == 0.0 {
            return Ok(Self::origin());
        }
        let arc = arc_from_point(z)?;
        Ok(NearPoint {
            direction: arc.center().clone(),
            defect: arc.length(),
        })
    }

    /// The arc `I(z)`: centered at the direction, of length the defect.
    pub fn shadow(&self) -> Arc {
        if self.defect >= ExtF64::ONE {
            return Arc::full();
        }
        Arc::new(self.direction.clone(), self.defect).expect("defect checked")
    }

    pub fn to_complex(&self) -> Complex64 {
        crate::geometry::polar_to_disk(&self.direction, self.defect)
    }

    /// `|f^n(z)|`, followed at whatever precision the defect demands.
    pub fn iterate_modulus(&self, f: &BlaschkeProduct, n: usize) -> f64 {
        if self.defect.to_f64() > 1e-3 {
            return crate::boundary::iterate_interior(f, self.to_complex(), n).norm();
        }
        let orbit = crate::boundary::near_boundary_orbit(f, &self.direction, self.defect, n);
        orbit.last().map_or(0.0, |z| z.norm())
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) enum Goal {
    /// Maximize the projection onto a unit direction.
    Along(Complex64),
    /// Minimize the distance to a point.
    Toward(Complex64),
}

impl Goal {
    fn score(self, s: Complex64) -> f64 {
        match self {
            Goal::Along(d) => (d.conj() * s).re,
            Goal::Toward(w) => -(s - w).norm(),
        }
    }
}

/// One nested search: the objective is `goal(base + sum_{n=from}^{to} a_n f^n)`.
pub(crate) struct Search<'a> {
    pub f: &'a BlaschkeProduct,
    /// Dense coefficients, `coeffs[n] = a_n`, reaching at least `to`.
    pub coeffs: &'a [Complex64],
    pub from: usize,
    pub to: usize,
    pub base: Complex64,
    pub goal: Goal,
    pub budget: usize,
    /// Grid offset as a fraction of a cell, for reruns on shifted grids.
    pub shift: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Found {
    pub point: BoundaryPoint,
    /// `base + sum` at the point, from the chart.
    pub value: Complex64,
    pub score: f64,
    /// Arc searched by the last chunk (contains the point).
    pub arc: Arc,
    /// Chart of the last chunk, centered on `arc`.
    pub chart: SumChart,
    /// Offset of the point in that chart.
    pub offset: ExtF64,
}

impl Search<'_> {
    fn chart_depth(&self, length: ExtF64) -> usize {
        let k = self.f.k_min().max(1.0 + 1e-9);
        let need = ((CHUNK_TURNS.log2() - length.log2_abs()) / k.log2())
            .ceil()
            .max(0.0);
        let guess = if need > 1e9 {
            usize::MAX / 2
        } else {
            need as usize + 1
        };
        guess.max(self.from).min(self.to)
    }

    fn chart(&self, arc: &Arc, depth: usize) -> Result<SumChart> {
        let orbit = ReferenceOrbit::new(self.f, arc.center(), depth)?;
        Ok(SumChart::new(orbit, self.coeffs[..=depth].to_vec()))
    }

    pub fn run(&self, arc: &Arc) -> Result<Found> {
        if self.budget < 3 {
            return Err(Error::InvalidInput(format!(
                "search budget {} is below 3",
                self.budget
            )));
        }
        if self.from < 1 || self.from > self.to || self.coeffs.len() <= self.to {
            return Err(Error::InvalidInput(format!(
                "bad block [{}, {}]",
                self.from, self.to
            )));
        }
        let mut arc = arc.clone();
        let mut last_end = self.from - 1;
        for _ in 0..MAX_CHUNKS {
            let depth = self.chart_depth(arc.length());
            let chart = self.chart(&arc, depth)?;
            let orbit = chart.orbit();
            let h = arc.half_length();
            let measure = |n: usize| orbit.image_measure(-h, h, n).to_f64();
            if measure(self.from) > CHUNK_TURNS {
                // Terms before `from` are not scored, so any subarc whose
                // image at `from` still wraps several times loses nothing.
                let (lo, hi) =
                    subarc_offsets(orbit, -h, h, ExtF64::ZERO, self.from, CHUNK_TURNS / 2.0)?;
                arc = Arc::from_offsets(orbit.center(), lo, hi)?;
                continue;
            }
            // Largest depth whose image is still a few turns.
            let (mut lo_n, mut hi_n) = (self.from, depth);
            if measure(hi_n) <= CHUNK_TURNS {
                lo_n = hi_n;
            }
            while hi_n - lo_n > 1 {
                let mid = (lo_n + hi_n) / 2;
                if measure(mid) <= CHUNK_TURNS {
                    lo_n = mid;
                } else {
                    hi_n = mid;
                }
            }
            let end = lo_n.max(last_end + 1).min(self.to);
            last_end = end;
            let (offset, value, score) = self.best_in_chunk(&chart, h, end, arc.is_full_circle());
            if end == self.to {
                let point = chart.orbit().point(offset);
                return Ok(Found {
                    point,
                    value,
                    score,
                    arc,
                    chart,
                    offset,
                });
            }
            let (lo, hi) = subarc_offsets(chart.orbit(), -h, h, offset, end, SHRINK_MEASURE)?;
            arc = Arc::from_offsets(chart.orbit().center(), lo, hi)?;
        }
        Err(Error::ConstructionStall {
            block: self.to,
            reason: "search did not reach the block end".into(),
        })
    }

    fn best_in_chunk(
        &self,
        chart: &SumChart,
        h: ExtF64,
        end: usize,
        cyclic: bool,
    ) -> (ExtF64, Complex64, f64) {
        let n = self.budget;
        let width = h.mul_f64(2.0);
        let eval = |eps: ExtF64| {
            let v = self.base + chart.partial_sum(eps, self.from, end);
            (self.goal.score(v), v)
        };
        let at = |x: f64| -h + width.mul_f64(x / n as f64);
        let grid: Vec<(f64, Complex64)> = (0..n)
            .into_par_iter()
            .map(|i| eval(at(i as f64 + self.shift)))
            .collect();
        // Ties go to the point nearest the center of the arc.
        let mut best = (at(self.shift), grid[0].1, grid[0].0);
        for (i, g) in grid.iter().enumerate() {
            let eps = at(i as f64 + self.shift);
            if g.0 > best.2 || (g.0 == best.2 && eps.abs() < best.0.abs()) {
                best = (eps, g.1, g.0);
            }
        }
        // Discrete local maxima, best first, lowest index on ties.
        let mut peaks: Vec<usize> = (0..n)
            .filter(|&i| {
                let prev = if i > 0 {
                    Some(grid[i - 1].0)
                } else if cyclic {
                    Some(grid[n - 1].0)
                } else {
                    None
                };
                let next = if i + 1 < n {
                    Some(grid[i + 1].0)
                } else if cyclic {
                    Some(grid[0].0)
                } else {
                    None
                };
                prev.is_none_or(|p| grid[i].0 >= p) && next.is_none_or(|q| grid[i].0 >= q)
            })
            .collect();
        peaks.sort_by(|&a, &b| grid[b].0.total_cmp(&grid[a].0).then(a.cmp(&b)));
        peaks.truncate(REFINED_BRACKETS);
        let refined: Vec<(ExtF64, f64)> = peaks
            .par_iter()
            .map(|&i| {
                let x = i as f64 + self.shift;
                let lo = at(x - 1.0).max(-h);
                let hi = at(x + 1.0).min(h);
                let span = hi - lo;
                let (t, s) = golden_section(|t| eval(lo + span.mul_f64(t)).0, 0.0, 1.0, true);
                (lo + span.mul_f64(t), s)
            })
            .collect();
        for (eps, s) in refined {
            if s > best.2 {
                let (score, v) = eval(eps);
                best = (eps, v, score);
            }
        }
        best
    }
}

/// A point of `search_arc` (nearly) maximizing
/// `Re(conj(direction) sum_{n=M}^{N} a_n f^n(xi))`, and that value.
/// `z` is the interior point whose shadow the arc is drawn from.
#[allow(clippy::too_many_arguments)]
pub fn search_block_maximizer(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    z: DiskPoint,
    m: usize,
    n: usize,
    direction: Complex64,
    search_arc: &Arc,
    budget: usize,
) -> Result<(BoundaryPoint, f64)> {
    search_block_maximizer_shifted(f, a, z, m, n, direction, search_arc, budget, 0.0)
}

/// [`search_block_maximizer`] on a grid shifted by `shift` cells.
#[allow(clippy::too_many_arguments)]
pub fn search_block_maximizer_shifted(
    f: &BlaschkeProduct,
    a: &CoefficientSequence,
    z: DiskPoint,
    m: usize,
    n: usize,
    direction: Complex64,
    search_arc: &Arc,
    budget: usize,
    shift: f64,
) -> Result<(BoundaryPoint, f64)> {
    if !(z.norm() < 1.0) {
        return Err(Error::InvalidInput(format!(
            "point {z} is not inside the disk"
        )));
    }
    if !(direction.norm() > 0.0) {
        return Err(Error::InvalidInput("direction must be nonzero".into()));
    }
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let coeffs = a.dense(n);
    let search = Search {
        f,
        coeffs: &coeffs,
        from: m,
        to: n,
        base: Complex64::new(0.0, 0.0),
        goal: Goal::Along(direction / direction.norm()),
        budget,
        shift,
    };
    let found = search.run(search_arc)?;
    Ok((found.point, found.score))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{partial_sum, SeriesPoint};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn positive_coefficients_peak_at_the_fixed_point() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::list(vec![c(1.0, 0.0); 40]);
        let (xi, v) =
            search_block_maximizer(&sq, &a, c(0.0, 0.0), 1, 40, c(1.0, 0.0), &Arc::full(), 64)
                .unwrap();
        assert_eq!(xi.to_f64(), 0.0);
        assert!((v - 40.0).abs() < 1e-9, "{v}");
    }

    #[test]
    fn single_term_reaches_one() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let mut v = vec![c(0.0, 0.0); 12];
        v.push(c(1.0, 0.0));
        let a = CoefficientSequence::list(v);
        let arc = Arc::new(BoundaryPoint::from_f64(0.3, 64), ExtF64::new(0.01)).unwrap();
        let (xi, val) =
            search_block_maximizer(&sq, &a, c(0.0, 0.0), 13, 13, c(1.0, 0.0), &arc, 64).unwrap();
        assert!(arc.contains(&xi));
        assert!(val > 1.0 - 1e-12, "{val}");
    }

    #[test]
    fn deep_block_value_matches_direct_sum() {
        let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
        let a = CoefficientSequence::power(1.0, 1.0)
            .unwrap()
            .with_phase(crate::series::PhaseRule::Random(3));
        let arc = Arc::new(BoundaryPoint::from_f64(0.2, 64), ExtF64::new(0.05)).unwrap();
        let (xi, val) =
            search_block_maximizer(&f, &a, c(0.0, 0.0), 5, 300, c(0.0, 1.0), &arc, 64).unwrap();
        assert!(arc.contains(&xi));
        let direct = partial_sum(&f, &a, &SeriesPoint::Boundary(xi), 5, 300).unwrap();
        assert!((direct.im - val).abs() < 1e-9, "{} vs {val}", direct.im);
        // A greedy block search should beat the block's l2 size comfortably.
        assert!(val > 1.0, "{val}");
    }

    #[test]
    fn rejects_tiny_budgets() {
        let sq = BlaschkeProduct::power(2).unwrap();
        let a = CoefficientSequence::list(vec![c(1.0, 0.0); 4]);
        let r = search_block_maximizer(&sq, &a, c(0.0, 0.0), 1, 4, c(1.0, 0.0), &Arc::full(), 2);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }
}
