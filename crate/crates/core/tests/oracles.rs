//! Closed-form and brute-force oracles, computed independently of the
//! library's own code paths.

use std::f64::consts::PI;

use blaschke_sums::series::SeriesPoint;
use blaschke_sums::{
    arc_image, iterate_boundary, partial_sum, tail_abs_sum, Arc, BlaschkeProduct, BoundaryPoint,
    CoefficientSequence, ExtF64,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Integer;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn random_point(rng: &mut ChaCha8Rng, bits: u32) -> BoundaryPoint {
    let words = bits.div_ceil(32) as usize;
    let mut numer = Integer::new();
    for _ in 0..words {
        numer = (numer << 32) + rng.gen::<u32>();
    }
    numer.keep_bits_mut(bits);
    BoundaryPoint::from_dyadic(numer, bits)
}

/// `2^n t mod 1` on the dyadic numerator, then `e^{2 pi i .}` from the top
/// 64 bits.
fn doubling_turn(p: &BoundaryPoint, n: usize) -> (Integer, f64) {
    let bits = p.bits();
    let mut numer = Integer::from(p.numer() << n as u32);
    numer.keep_bits_mut(bits);
    let top = if bits > 64 {
        Integer::from(&numer >> (bits - 64))
    } else {
        Integer::from(&numer << (64 - bits))
    };
    let turn = top.to_f64() / 2f64.powi(64);
    (numer, turn)
}

fn cis(turn: f64) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * turn)
}

#[test]
fn doubling_boundary_iterates_are_exact_shifts() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let n = rng.gen_range(1..400);
        let bits = sq.required_precision(n, 53);
        let p = random_point(&mut rng, bits);
        let image = iterate_boundary(&sq, &p, n).unwrap();
        assert_eq!(image.numer(), &doubling_turn(&p, n).0);
        assert_eq!(image.bits(), bits);
    }
}

#[test]
fn doubling_arc_images_scale_by_powers_of_two() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..200 {
        let n = rng.gen_range(1..200);
        let length = ExtF64::exp2(-rng.gen_range(1.0..250.0));
        let center = random_point(&mut rng, 320);
        let arc = Arc::new(center, length).unwrap();
        let img = arc_image(&sq, &arc, n).unwrap();
        let expected = length.mul_pow2(n as i64);
        let rel = ((img.measure.to_f64() / expected.to_f64()) - 1.0).abs();
        if expected.to_f64() < 1.0 {
            assert!(
                rel < 1e-9,
                "n={n} len={length} measure={} rel={rel}",
                img.measure
            );
            assert!(img.injective);
            assert!((img.image.length().to_f64() / expected.to_f64() - 1.0).abs() < 1e-9);
        } else {
            assert!(img.image.is_full_circle());
        }
    }
}

#[test]
fn doubling_boundary_sums_match_term_by_term() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let a = CoefficientSequence::power(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..50 {
        let n = rng.gen_range(1..300);
        let bits = sq.required_precision(n, 53);
        let p = random_point(&mut rng, bits);
        let got = partial_sum(&sq, &a, &SeriesPoint::Boundary(p.clone()), 1, n).unwrap();
        let want: Complex64 = (1..=n)
            .map(|k| cis(doubling_turn(&p, k).1) / k as f64)
            .sum();
        assert!((got - want).norm() < 1e-12, "n={n}: {got} vs {want}");
    }
}

#[test]
fn doubling_interior_sum_at_one_half() {
    let sq = BlaschkeProduct::power(2).unwrap();
    let a = CoefficientSequence::power(1.0, 2.0).unwrap();
    let got = partial_sum(&sq, &a, &SeriesPoint::Interior(c(0.5, 0.0)), 1, 20).unwrap();
    // 0.5^(2^n) by repeated squaring in extended exponent form.
    let mut want = 0.0;
    let mut log2 = -1.0f64;
    for n in 1..=20 {
        log2 *= 2.0;
        want += log2.exp2() / (n * n) as f64;
    }
    assert!((got - c(want, 0.0)).norm() < 1e-16);
}

/// `f'/f = sum (1 - |a|^2) / ((z - a)(1 - conj(a) z))`, and `|f| = 1` on the
/// circle.
fn derivative_modulus_by_product_rule(zeros: &[Complex64], xi: Complex64) -> f64 {
    zeros
        .iter()
        .map(|&a| (1.0 - a.norm_sqr()) / ((xi - a) * (1.0 - a.conj() * xi)))
        .sum::<Complex64>()
        .norm()
}

#[test]
fn derivative_modulus_is_the_poisson_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..1000 {
        let d = rng.gen_range(2..=5);
        let zeros: Vec<Complex64> = (0..d)
            .map(|_| {
                Complex64::from_polar(0.9 * rng.gen::<f64>().sqrt(), 2.0 * PI * rng.gen::<f64>())
            })
            .collect();
        let f = BlaschkeProduct::new(zeros.clone()).unwrap();
        let p = random_point(&mut rng, 128);
        let xi = cis(p.to_f64());
        let want = derivative_modulus_by_product_rule(&zeros, xi);
        let via_boundary = f.derivative_modulus_boundary(&p);
        let via_poisson = f.poisson_sum(xi);
        assert!(
            (via_boundary / want - 1.0).abs() < 1e-10,
            "{via_boundary} vs {want}"
        );
        assert!(
            (via_poisson / want - 1.0).abs() < 1e-10,
            "{via_poisson} vs {want}"
        );
    }
}

#[test]
fn expansion_extremes_of_an_offset_zero() {
    let f = BlaschkeProduct::new(vec![c(0.0, 0.0), c(0.0, 0.0), c(0.5, 0.0)]).unwrap();
    // 2 + P(0.5, xi) ranges over [2 + 1/3, 2 + 3].
    assert!((f.k_min() - 7.0 / 3.0).abs() < 1e-12);
    assert!((f.k_max() - 5.0).abs() < 1e-12);
    assert_eq!(f.required_precision(50, 53), 234);
    let grid = 1 << 16;
    let (lo, hi) = (0..grid).fold((f64::INFINITY, 0.0f64), |(lo, hi), k| {
        let x = f.poisson_sum(cis(k as f64 / grid as f64));
        (lo.min(x), hi.max(x))
    });
    assert!((lo - f.k_min()).abs() < 1e-6 && (hi - f.k_max()).abs() < 1e-6);
}

#[test]
fn tails_match_a_long_direct_sum() {
    let a = CoefficientSequence::power(1.0, 1.5).unwrap();
    let tail = tail_abs_sum(&a, 100, None).unwrap();
    // Direct sum to 10^6 plus the integral bounds of the remainder.
    let direct: f64 = (101..=1_000_000u64).map(|n| (n as f64).powf(-1.5)).sum();
    let lo = direct + 2.0 / (1_000_001f64).sqrt();
    let hi = direct + 2.0 / (1_000_000f64).sqrt();
    assert!(
        tail.lower() <= hi + 1e-12 && tail.upper() >= lo - 1e-12,
        "{tail:?} vs [{lo}, {hi}]"
    );
    assert!(tail.midpoint() <= 2.0 / 10.0 * 1.001);
}
