use proptest::prelude::*;
use pwlf_core::ect::{quoted_wronskian, wronskian, FunctionFamily};
use pwlf_core::infinity::bendixson_map;
use pwlf_core::melnikov::{m1_constrained, melnikov_roots, MelnikovParams};
use pwlf_core::roots::{find_roots, RootOptions};
use pwlf_core::sigma::{classify_point, sliding_vector, RegionKind};
use pwlf_core::simulate::{half_return, simulate, SimOptions};
use pwlf_core::sliding::{s_maps, SlidingParams};
use pwlf_core::verify;
use pwlf_core::{AffineField, CanonicalParams, Mat2, PwlSystem, Side, Vec2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn canonical() -> impl Strategy<Value = CanonicalParams> {
    (-2.0..2.0f64, 0.2..3.0f64, 0.2..2.0f64, 0.1..3.0f64, 0.1..3.0f64)
        .prop_map(|(a, nb, xi, d, e)| CanonicalParams { a, b: -nb, c: (a * a + xi * xi) / nb, d, e })
}

fn field(scale: f64) -> impl Strategy<Value = AffineField> {
    prop::array::uniform6(-scale..scale).prop_map(|v| AffineField::new(Mat2::new(v[0], v[1], v[2], v[3]), Vec2::new(v[4], v[5])))
}

fn perturbed() -> impl Strategy<Value = PwlSystem> {
    (canonical(), field(1.0), field(1.0), 1e-3..0.1f64).prop_map(|(cp, p1, m1, eps)| {
        let mut s = PwlSystem::canonical(&cp);
        s.order1.plus = p1;
        s.order1.minus = m1;
        s.epsilon = eps;
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bendixson_is_an_involution(x in -1e3..1e3f64, y in -1e3..1e3f64) {
        prop_assume!(x * x + y * y > 1e-6);
        let q = bendixson_map(x, y).unwrap();
        let p = bendixson_map(q.x, q.y).unwrap();
        prop_assert!((p.x - x).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0));
        prop_assert!((p.y - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0));
    }

    #[test]
    fn sliding_vector_is_tangent_convex_combination(sys in perturbed(), t in 0.0..1.0f64) {
        // Between the two folds the line slides or escapes.
        let fold = |side| pwlf_core::sigma::fold_of(&sys, side).ok().flatten().map(|f| f.y);
        let (Some(y1), Some(y2)) = (fold(Side::Minus), fold(Side::Plus)) else { return Ok(()) };
        let y = y2 + (0.05 + 0.9 * t) * (y1 - y2);
        let kind = classify_point(&sys, y);
        prop_assume!(matches!(kind, RegionKind::Sliding | RegionKind::Escaping));
        let v = sliding_vector(&sys, y).unwrap();
        let p = Vec2::new(0.0, y);
        let (zp, zm) = (sys.field(Side::Plus).eval(p), sys.field(Side::Minus).eval(p));
        let lambda = zm.x / (zm.x - zp.x);
        prop_assert!((0.0..=1.0).contains(&lambda));
        let w = lambda * zp + (1.0 - lambda) * zm;
        prop_assert!(v.x.abs() < 1e-12 * (1.0 + v.norm()));
        prop_assert!((v - w).norm() < 1e-12 * (1.0 + v.norm()));
    }

    #[test]
    fn json_round_trip(sys in perturbed()) {
        let back = PwlSystem::from_json(&sys.to_json()).unwrap();
        prop_assert_eq!(back, sys);
    }

    #[test]
    fn unperturbed_half_returns_are_reflections(cp in canonical(), y in 0.01..20.0f64) {
        let sys = PwlSystem::canonical(&cp);
        let hm = half_return(&sys, Side::Minus, y).unwrap();
        let hp = half_return(&sys, Side::Plus, y).unwrap();
        prop_assert!((hm.y_out + y).abs() < 1e-9 * y.max(1.0));
        prop_assert!((hp.y_out + y).abs() < 1e-9 * y.max(1.0));
    }

    #[test]
    fn constrained_melnikov_has_at_most_one_root(cp in canonical(), b11 in -3.0..3.0f64, v1m in -3.0..3.0f64, tp in -3.0..3.0f64, v1p in -3.0..3.0f64) {
        let p = MelnikovParams { b: cp.b, d: cp.d, e: cp.e, xi: cp.xi(), b11m: b11, b22m: -b11, v1m, b11p: tp, b22p: 0.0, v1p };
        let roots = find_roots(|y| m1_constrained(&p, y).unwrap_or(f64::NAN), 1e-3, 1e3, &RootOptions::default());
        prop_assert!(roots.len() <= 1, "{:?}", roots);
        prop_assert!(melnikov_roots(&p, 1e-3, 1e3, &RootOptions::default()).len() <= 1);
    }

    #[test]
    fn general_melnikov_has_at_most_three_roots(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let p = verify::random_params(&mut r, false);
        prop_assert!(melnikov_roots(&p, 1e-3, 1e3, &RootOptions::default()).len() <= 3);
    }

    #[test]
    fn quoted_wronskians_match_determinants(s in 0.05..20.0f64, big in any::<bool>()) {
        let beta = if big { 2.0 } else { 0.5 };
        let fam = FunctionFamily::melnikov(beta, (0.0, f64::INFINITY));
        for k in 0..4 {
            let n = wronskian(&fam, k, s).unwrap();
            let q = quoted_wronskian(beta, k, s);
            prop_assert!((n - q).abs() <= 1e-8 * n.abs().max(1e-6), "k={} {} {}", k, n, q);
        }
    }

    #[test]
    fn canonicalization_commutes_with_flows(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let (sys, _) = verify::random_general_system(&mut r);
        let (err, signs) = verify::conjugacy_check(&sys, &mut r).unwrap();
        prop_assert!(err < 1e-8 && signs);
    }

    #[test]
    fn s_maps_collapse_at_zero_eps(sys in perturbed()) {
        let p = SlidingParams::from_canonical(&sys.with_epsilon(0.0)).unwrap();
        let s = s_maps(&p);
        prop_assert!(s.values.iter().all(|&v| v == -2.0 * p.e));
    }

    #[test]
    fn simulation_is_deterministic(sys in perturbed(), y in 0.2..3.0f64) {
        let a = simulate(&sys, Vec2::new(0.0, y), 20.0, &SimOptions::default()).unwrap();
        let b = simulate(&sys, Vec2::new(0.0, y), 20.0, &SimOptions::default()).unwrap();
        prop_assert_eq!(a.to_csv(), b.to_csv());
    }
}
