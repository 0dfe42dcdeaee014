use std::f64::consts::PI;

use blaschke_sums::geometry::DEFAULT_ARC_BITS;
use blaschke_sums::series::SeriesPoint;
use blaschke_sums::{
    arc_image, argument_lift, build_block_plan, evaluate_boundary, find_subarc_with_image_measure,
    iterate_boundary, partial_sum, Arc, BlaschkeProduct, BoundaryPoint, CoefficientSequence,
    ExtF64, PartialSumState,
};
use num_complex::Complex64;
use proptest::prelude::*;

/// Degree 2..=5, at least one zero at the origin, the rest of modulus <= 0.9.
fn product() -> impl Strategy<Value = BlaschkeProduct> {
    (2usize..=5)
        .prop_flat_map(|d| {
            (
                Just(d),
                1..=d,
                prop::collection::vec((0.0..0.9f64, 0.0..1.0f64), d),
            )
        })
        .prop_map(|(d, origin, polar)| {
            let zeros = (0..d)
                .map(|k| {
                    if k < origin {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::from_polar(polar[k].0, 2.0 * PI * polar[k].1)
                    }
                })
                .collect();
            BlaschkeProduct::new(zeros).unwrap()
        })
}

fn turn() -> impl Strategy<Value = f64> {
    0.0..1.0f64
}

fn turn_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decimal_turns_round_trip(t in turn(), bits in 8u32..400) {
        let p = BoundaryPoint::from_f64(t, bits);
        let back = BoundaryPoint::parse(&p.to_decimal_string(), bits).unwrap();
        prop_assert_eq!(back, p);
    }

    #[test]
    fn offsets_invert_additions(t in turn(), e in -0.49..0.49f64) {
        let p = BoundaryPoint::from_f64(t, 128);
        let q = p.add_turns(ExtF64::new(e));
        prop_assert!((q.offset_from(&p).to_f64() - e).abs() < 1e-15);
    }

    #[test]
    fn interior_orbits_shrink(f in product(), r in 0.0..0.999f64, t in turn()) {
        let mut z = Complex64::from_polar(r, 2.0 * PI * t);
        for _ in 0..40 {
            let next = f.evaluate(z).unwrap();
            prop_assert!(next.norm() <= z.norm() * (1.0 + 1e-12) + 1e-300);
            z = next;
        }
    }

    #[test]
    fn boundary_and_complex_evaluation_agree(f in product(), t in turn()) {
        let p = BoundaryPoint::from_f64(t, 128);
        let image = evaluate_boundary(&f, &p).unwrap();
        let direct = f.evaluate(p.to_complex()).unwrap();
        prop_assert!((image.to_complex() - direct).norm() < 1e-12);
    }

    #[test]
    fn generated_products_expand(f in product()) {
        prop_assert!(f.k_min() > 1.0);
        let consts = f.expansion_constants(1024).unwrap();
        prop_assert!(consts.k_min <= consts.k_max);
    }

    #[test]
    fn lifts_add_up_and_wind_by_the_degree(f in product(), a in turn(), b in turn(), c in turn()) {
        let (a, b, c) = {
            let mut v = [a, b, c];
            v.sort_by(f64::total_cmp);
            (v[0], v[1], v[2])
        };
        let ab = argument_lift(&f, a, b).unwrap();
        let bc = argument_lift(&f, b, c).unwrap();
        let ac = argument_lift(&f, a, c).unwrap();
        prop_assert!((ab + bc - ac).abs() < 1e-10);
        let full = argument_lift(&f, a, a + 1.0).unwrap();
        prop_assert!((full - f.degree() as f64).abs() < 1e-10);
    }

    #[test]
    fn boundary_iteration_matches_stepping(f in product(), t in turn(), n in 1usize..60) {
        let bits = f.required_precision(n, 53) + 8;
        let p = BoundaryPoint::from_f64(t, bits);
        let direct = iterate_boundary(&f, &p, n).unwrap();
        let mut step = p.clone();
        for _ in 0..n {
            step = evaluate_boundary(&f, &step).unwrap();
        }
        prop_assert!(turn_gap(direct.to_f64(), step.to_f64()) < 1e-15);
    }

    #[test]
    fn arc_images_compose(f in product(), t in turn(), log_len in 20.0..80.0f64, n1 in 1usize..15, n2 in 1usize..15) {
        let arc = Arc::new(BoundaryPoint::from_f64(t, DEFAULT_ARC_BITS), ExtF64::exp2(-log_len)).unwrap();
        let whole = arc_image(&f, &arc, n1 + n2).unwrap();
        prop_assume!(whole.injective);
        let first = arc_image(&f, &arc, n1).unwrap();
        let second = arc_image(&f, &first.image, n2).unwrap();
        let rel = (whole.measure.to_f64() / second.measure.to_f64() - 1.0).abs();
        prop_assert!(rel < 1e-6, "{} vs {}", whole.measure, second.measure);
    }

    #[test]
    fn found_subarcs_have_the_requested_image(f in product(), t in turn(), n in 1usize..20, delta in 0.05..0.6f64) {
        let xi = BoundaryPoint::from_f64(t, DEFAULT_ARC_BITS);
        let j = find_subarc_with_image_measure(&f, &Arc::full(), n, &xi, delta).unwrap();
        prop_assert!(j.contains(&xi));
        let m = arc_image(&f, &j, n).unwrap().measure.to_f64();
        prop_assert!((m / delta - 1.0).abs() < 1e-6, "{m} vs {delta}");
    }

    #[test]
    fn block_plans_keep_their_mass(values in prop::collection::vec(0.0..1.0f64, 1..300), m_frac in 0.0..1.0f64, k in 1usize..6, ts in 1usize..4) {
        let n = values.len();
        let m = 1 + ((n - 1) as f64 * m_frac) as usize;
        let a = CoefficientSequence::list(values.iter().map(|&x| Complex64::new(x, 0.0)).collect());
        let (t_short, t) = (ts, ts * (k + 1));
        let plan = build_block_plan(&a, m, n, t, t_short).unwrap();
        let (long, total) = plan.long_and_total_mass(&a);
        prop_assert!(long >= (1.0 - t_short as f64 / t as f64) * total - 1e-12 * total.max(1.0));
        prop_assert!(plan.long_mass_holds(&a));
    }

    #[test]
    fn incremental_sums_equal_one_pass_sums(f in product(), t in turn(), n in 1usize..80, p in 0.5..2.0f64) {
        let a = CoefficientSequence::power(1.0, p).unwrap();
        let point = SeriesPoint::Boundary(BoundaryPoint::from_f64(t, f.required_precision(n, 53)));
        let mut state = PartialSumState::new(point.clone());
        for _ in 0..n {
            state.advance(&f, &a).unwrap();
        }
        let direct = partial_sum(&f, &a, &point, 1, n).unwrap();
        prop_assert!((state.value() - direct).norm() < 1e-12);
    }
}
