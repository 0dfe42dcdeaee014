//! Splitting a coefficient range into long blocks separated by short,
//! low-mass blocks.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::CoefficientSequence;

/// Blocks `G_j = [M + jT, M + (j+1)T - 1]` over `[M, N]` padded to a multiple
/// of `T`.  Each even block `G_{2k}`, `k >= 1`, gives up its lightest aligned
/// `T'`-subblock as a short block; the long blocks fill the gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    pub t: usize,
    pub t_short: usize,
    pub m: usize,
    pub n: usize,
    /// Last index after zero padding.
    pub padded_end: usize,
    /// Inclusive ranges; the last one may be shorter than `T` or absent.
    pub long_blocks: Vec<(usize, usize)>,
    pub short_blocks: Vec<(usize, usize)>,
}

pub fn build_block_plan(
    a: &CoefficientSequence,
    m: usize,
    n: usize,
    t: usize,
    t_short: usize,
) -> Result<BlockPlan> {
    if t == 0 || t_short == 0 || t % t_short != 0 {
        return Err(Error::InvalidGeometry(format!(
            "T' = {t_short} must divide T = {t}"
        )));
    }
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= M <= N, got M={m}, N={n}"
        )));
    }
    let count = (n - m + 1).div_ceil(t);
    let padded_end = m + count * t - 1;
    let abs = |k: usize| if k <= n { a.abs(k) } else { 0.0 };
    let mut short_blocks = Vec::new();
    for g in (2..count).step_by(2) {
        let start = m + g * t;
        let best = (0..t / t_short)
            .map(|s| {
                let lo = start + s * t_short;
                (lo, (lo..lo + t_short).map(abs).sum::<f64>())
            })
            // Strict comparison keeps the lowest start on ties.
            .fold(None, |acc: Option<(usize, f64)>, cur| match acc {
                Some(b) if b.1 <= cur.1 => Some(b),
                _ => Some(cur),
            })
            .expect("at least one subblock");
        short_blocks.push((best.0, best.0 + t_short - 1));
    }
    let mut long_blocks = Vec::new();
    let mut next = m;
    for &(lo, hi) in &short_blocks {
        if lo > next {
            long_blocks.push((next, lo - 1));
        }
        next = hi + 1;
    }
    if next <= padded_end {
        long_blocks.push((next, padded_end));
    }
    Ok(BlockPlan {
        t,
        t_short,
        m,
        n,
        padded_end,
        long_blocks,
        short_blocks,
    })
}

impl BlockPlan {
    fn mass(a: &CoefficientSequence, n: usize, lo: usize, hi: usize) -> f64 {
        (lo..=hi.min(n)).map(|k| a.abs(k)).sum()
    }

    /// Short-block mass against `T'/T` of its enclosing even block, per block.
    pub fn short_block_margins(&self, a: &CoefficientSequence) -> Vec<f64> {
        self.short_blocks
            .iter()
            .map(|&(lo, hi)| {
                let g = (lo - self.m) / self.t;
                let start = self.m + g * self.t;
                let enclosing = Self::mass(a, self.n, start, start + self.t - 1);
                self.t_short as f64 / self.t as f64 * enclosing - Self::mass(a, self.n, lo, hi)
            })
            .collect()
    }

    /// `sum over long blocks of |a_n|` and the total mass.
    pub fn long_and_total_mass(&self, a: &CoefficientSequence) -> (f64, f64) {
        let long = self
            .long_blocks
            .iter()
            .map(|&(lo, hi)| Self::mass(a, self.n, lo, hi))
            .sum();
        (long, Self::mass(a, self.n, self.m, self.n))
    }

    /// Whether the long blocks keep at least `1 - T'/T` of the mass.
    pub fn long_mass_holds(&self, a: &CoefficientSequence) -> bool {
        let (long, total) = self.long_and_total_mass(a);
        long >= (1.0 - self.t_short as f64 / self.t as f64) * total * (1.0 - 1e-12)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn list(v: &[f64]) -> CoefficientSequence {
        CoefficientSequence::list(v.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    #[test]
    fn lightest_subblock_is_short() {
        let a = list(&[5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 5.0, 1.0, 2.0, 0.5, 0.5]);
        let plan = build_block_plan(&a, 1, 12, 4, 2).unwrap();
        assert_eq!(plan.short_blocks, vec![(11, 12)]);
        assert_eq!(plan.long_blocks, vec![(1, 10)]);
        assert!(plan.short_block_margins(&a).iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn ties_take_the_first_subblock() {
        let a = list(&[1.0; 12]);
        let plan = build_block_plan(&a, 1, 12, 4, 2).unwrap();
        assert_eq!(plan.short_blocks, vec![(9, 10)]);
        assert_eq!(plan.long_blocks, vec![(1, 8), (11, 12)]);
    }

    #[test]
    fn geometry_checks() {
        let a = list(&[1.0; 12]);
        assert!(matches!(
            build_block_plan(&a, 1, 12, 4, 3),
            Err(Error::InvalidGeometry(_))
        ));
        let plan = build_block_plan(&a, 3, 9, 4, 2).unwrap();
        assert_eq!(plan.padded_end, 10);
        assert!(plan.short_blocks.is_empty());
    }
}
