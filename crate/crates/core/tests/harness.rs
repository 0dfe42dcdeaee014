use blaschke_sums::harness::{pilot_disc, truncation_for, ProductGenerator, PROPERTY_IDS};
use blaschke_sums::series::{DeclaredFlags, SeriesPoint};
use blaschke_sums::{
    abel_check, paley_solve, partial_sum, peano_scan, radial_cluster_compare, run_lemma_suite,
    BlaschkeProduct, BoundaryPoint, CoefficientSequence, ConstantEstimates, ScanOptions,
    SuiteConfig,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn offset_zero() -> BlaschkeProduct {
    BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap()
}

fn uniform_point(rng: &mut ChaCha8Rng, bits: u32) -> BoundaryPoint {
    let mut numer = Integer::new();
    for _ in 0..bits.div_ceil(32) {
        numer = (numer << 32) + rng.gen::<u32>();
    }
    numer.keep_bits_mut(bits);
    BoundaryPoint::from_dyadic(numer, bits)
}

/// Iterates of an inner function fixing 0 are orthonormal on the circle, so
/// the mean square of `sum_{M}^{N} a_n f^n` over uniform points is
/// `sum |a_n|^2`.
#[test]
fn square_summable_tails_have_orthogonal_mean_square() {
    let a = CoefficientSequence::power(1.0, 1.0).unwrap();
    let expected: f64 = (501..=1000).map(|n| (n as f64).powi(-2)).sum();
    for f in [BlaschkeProduct::power(2).unwrap(), offset_zero()] {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let bits = f.required_precision(1000, 53);
        let mean_square = (0..200)
            .map(|_| {
                let p = uniform_point(&mut rng, bits);
                partial_sum(&f, &a, &SeriesPoint::Boundary(p), 501, 1000)
                    .unwrap()
                    .norm_sqr()
            })
            .sum::<f64>()
            / 200.0;
        let ratio = mean_square / expected;
        assert!(
            (0.7..1.4).contains(&ratio),
            "mean square {mean_square} vs {expected}"
        );
    }
}

#[test]
fn suites_on_the_doubling_map() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let config = SuiteConfig {
        generator: ProductGenerator::Fixed(sq),
        ..SuiteConfig::new(300, 5)
    };
    for id in PROPERTY_IDS {
        let report = run_lemma_suite(id, &config).unwrap();
        assert_eq!(report.trials, 300);
        if id == "cor2.2" {
            let corrected = report.secondary.as_ref().unwrap();
            assert_eq!(corrected.violations, 0, "{report:?}");
        } else {
            assert_eq!(report.violations, 0, "{id}: {report:?}");
        }
    }
}

#[test]
fn abel_bound_holds_for_an_offset_zero() {
    let f = offset_zero();
    let radii: Vec<f64> = (1..=20).map(|j| 1.0 - (-(j as f64)).exp2()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let a = CoefficientSequence::power(1.0, 2.0).unwrap();
    for _ in 0..3 {
        let xi = BoundaryPoint::from_f64(rng.gen(), 128);
        let report = abel_check(&f, &a, &xi, &radii, None, 1).unwrap();
        assert!(report.within_bound, "{report:?}");
        assert!(report.convergent);
        assert_eq!(report.rows.len(), 20);
        for row in &report.rows {
            assert!(row.discrepancy <= report.c_emp * report.sup_abs);
        }
    }
}

#[test]
fn paley_witness_radial_values_track_partial_sums() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let a = CoefficientSequence::power(1.0, 1.0).unwrap();
    let w = c(0.3, 0.4);
    let consts = ConstantEstimates::manual(0.5, 0.3, 0.18, 0.9, 0.1, 4).unwrap();
    let trace = paley_solve(&sq, &a, w, &consts, 200, 1e-3).unwrap();
    let xi = trace.witness.unwrap();
    let n = trace.witness_depth;
    let schedule: Vec<usize> = (n.saturating_sub(4).max(1)..=n).collect();
    let report = radial_cluster_compare(&sq, &a, &xi, &schedule, None, 1).unwrap();
    assert!(report.within_bound, "{report:?}");
    let last = *report.boundary_sums.last().unwrap();
    assert!((last - w).norm() <= 1e-3 + 1e-9);
    assert!((report.radial_values.last().unwrap() - w).norm() <= report.c_emp * report.sup_abs);
}

#[test]
fn scan_of_the_pilot_disc_is_monotone_in_budget() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let flags = DeclaredFlags {
        tends_to_zero: true,
        abs_summable: true,
        slow_decay: true,
    };
    let a = CoefficientSequence::power(1.0, 1.5)
        .unwrap()
        .with_flags(flags);
    let pilot = ScanOptions {
        resolution: 128,
        sample_budget: 1 << 16,
        truncation: 0,
        initial_level: 16,
    };
    let radius = 2.7;
    let pilot = ScanOptions {
        truncation: truncation_for(&a, radius, 128).unwrap(),
        ..pilot
    };
    let (disc, _) = pilot_disc(&sq, &a, &pilot).unwrap();
    let truncation = truncation_for(&a, disc.radius, 32).unwrap();
    let mut last = 0.0;
    for budget in [1 << 12, 1 << 14, 1 << 16] {
        let grid = peano_scan(
            &sq,
            &a,
            disc,
            &ScanOptions {
                resolution: 32,
                sample_budget: budget,
                truncation,
                initial_level: 10,
            },
        )
        .unwrap();
        assert!(grid.coverage_fraction >= last);
        last = grid.coverage_fraction;
    }
    assert!(last > 0.9, "coverage {last}");
}
