//! Independent routes for the closed forms: direct integration, finite
//! differences and hand-derived formulas.

use pwlf_core::examples;
use pwlf_core::flow::AffineFlow;
use pwlf_core::infinity::{infinity_stability, polar_rhs_zone};
use pwlf_core::melnikov::{m1, m1_reduced, MelnikovParams, ReducedParams, Stability};
use pwlf_core::numerics::Dopri;
use pwlf_core::roots::{find_roots, RootOptions};
use pwlf_core::sigma::fold_of;
use pwlf_core::simulate::displacement;
use pwlf_core::sliding::{s_maps, simulated_s_values, SlidingParams};
use pwlf_core::system::canonicalize;
use pwlf_core::verify;
use pwlf_core::{AffineField, CanonicalParams, Mat2, PwlSystem, Side, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Canonical parameters read off by the closed-form reduction of a system
/// whose folds sit at `y = 0`.
fn reduction_formulas(sys: &PwlSystem) -> CanonicalParams {
    let (mp, up) = (sys.order0.plus.matrix, sys.order0.plus.offset);
    let (mm, um) = (sys.order0.minus.matrix, sys.order0.minus.offset);
    let rho = (-(mm.m11 * mm.m11 + mm.m12 * mm.m21)).sqrt();
    CanonicalParams {
        a: (mp.m11 - mp.m12 * mm.m11 / mm.m12) / rho,
        b: -mp.m12 / mm.m12,
        c: (mm.m11 * mm.m11 * mp.m12 / mm.m12 - 2.0 * mm.m11 * mp.m11 - mm.m12 * mp.m21) / (rho * rho),
        d: -mm.m12 * up.y / rho,
        e: -mm.m12 * um.y / rho,
    }
}

#[test]
fn reduction_formulas_agree_with_conjugation() {
    let mut r = rng(1);
    for _ in 0..50 {
        let (mut sys, _) = verify::random_general_system(&mut r);
        // Put both folds at y = 0 so the formulas apply.
        for side in [Side::Plus, Side::Minus] {
            let f = sys.order0.get_mut(side);
            f.offset.y += f.matrix.m22 * (-f.offset.x / f.matrix.m12);
            f.offset.x = 0.0;
        }
        let (got, _) = canonicalize(&sys).unwrap();
        let want = reduction_formulas(&sys);
        for (g, w) in [(got.a, want.a), (got.b, want.b), (got.c, want.c), (got.d, want.d), (got.e, want.e)] {
            assert!((g - w).abs() < 1e-10 * w.abs().max(1.0), "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn closed_form_flow_matches_integration() {
    let mut r = rng(2);
    for _ in 0..60 {
        let f = AffineField::new(
            Mat2::new(r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0), r.gen_range(-2.0..2.0)),
            Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
        );
        let Some(fl) = AffineFlow::new(&f) else { continue };
        let p = Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0));
        let t = r.gen_range(-1.5..1.5);
        let want = Dopri::tight()
            .integrate(
                |_, z: &[f64; 2]| {
                    let v = f.eval(Vec2::new(z[0], z[1]));
                    [v.x, v.y]
                },
                0.0,
                t,
                [p.x, p.y],
            )
            .unwrap();
        let got = fl.state(p, t);
        let err = (got - Vec2::new(want[0], want[1])).norm();
        assert!(err < 1e-9 * (1.0 + got.norm()), "{f:?} t={t}: {err:e}");
    }
}

#[test]
fn parabolic_flow_matches_integration() {
    let f = AffineField::new(Mat2::new(2.0, 1.0, -1.0, 0.0), Vec2::new(0.3, -0.2));
    let fl = AffineFlow::new(&f).unwrap();
    let p = Vec2::new(0.5, -0.25);
    let want = Dopri::tight()
        .integrate(
            |_, z: &[f64; 2]| {
                let v = f.eval(Vec2::new(z[0], z[1]));
                [v.x, v.y]
            },
            0.0,
            2.0,
            [p.x, p.y],
        )
        .unwrap();
    assert!((fl.state(p, 2.0) - Vec2::new(want[0], want[1])).norm() < 1e-10);
}

#[test]
fn fold_series_are_third_order() {
    let sys0 = examples::example2();
    let (b1m, v1m) = (sys0.order1.minus.matrix, sys0.order1.minus.offset);
    let mut sys = sys0;
    sys.order1.minus.matrix.m12 = 0.3;
    sys.order1.plus.matrix.m12 = -0.2;
    sys.order2.minus.offset.x = 0.4;
    sys.order2.plus.offset.x = 0.1;
    let b = sys.order0.plus.matrix.m12;
    let series1 = |eps: f64| v1m.x * eps + (0.4 + v1m.x * 0.3) * eps * eps;
    let v1p = sys.order1.plus.offset.x;
    let series2 = |eps: f64| -v1p * eps / b + (-b * 0.1 + v1p * -0.2) * eps * eps / (b * b);
    let _ = b1m;
    let err = |eps: f64| {
        let s = sys.with_epsilon(eps);
        let y1 = fold_of(&s, Side::Minus).unwrap().unwrap().y;
        let y2 = fold_of(&s, Side::Plus).unwrap().unwrap().y;
        ((y1 - series1(eps)).abs(), (y2 - series2(eps)).abs())
    };
    let (a, b2) = (err(1e-2), err(5e-3));
    assert!((a.0 / b2.0 - 8.0).abs() < 0.5, "{a:?} {b2:?}");
    assert!((a.1 / b2.1 - 8.0).abs() < 0.5, "{a:?} {b2:?}");
}

fn general_melnikov_draw(r: &mut ChaCha8Rng) -> (PwlSystem, MelnikovParams) {
    let b = -r.gen_range(0.5..2.0);
    let xi: f64 = r.gen_range(0.5..1.5);
    let a: f64 = r.gen_range(-1.0..1.0);
    let cp = CanonicalParams { a, b, c: (a * a + xi * xi) / -b, d: r.gen_range(0.3..2.0), e: r.gen_range(0.3..2.0) };
    let mut sys = PwlSystem::canonical(&cp);
    sys.order1.minus = AffineField::new(
        Mat2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
        Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
    );
    sys.order1.plus = AffineField::new(
        Mat2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
        Vec2::new(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)),
    );
    let p = MelnikovParams::from_canonical(&sys).unwrap();
    (sys, p)
}

#[test]
fn melnikov_matches_finite_differences_on_random_systems() {
    let mut r = rng(3);
    for _ in 0..20 {
        let (sys, p) = general_melnikov_draw(&mut r);
        for y0 in [0.7, 1.5, 3.0] {
            let want = m1(&p, y0).unwrap();
            let fd = |eps: f64| displacement(&sys.with_epsilon(eps), y0).unwrap() / eps;
            let (e1, e2) = ((fd(1e-4) - want).abs(), (fd(5e-5) - want).abs());
            assert!(e1 < 1e-2 * want.abs().max(1.0), "{p:?} y0={y0}: {e1:e}");
            assert!(e1 < 1e-9 || (e1 / e2 - 2.0).abs() < 0.3, "{e1:e} {e2:e}");
        }
    }
}

#[test]
fn reduced_form_matches_m1() {
    let mut r = rng(4);
    for _ in 0..100 {
        let p = verify::random_params(&mut r, false);
        let rp = ReducedParams::new(&p);
        for s0 in [0.05, 0.7, 3.0, 40.0] {
            let y0 = rp.amplitude(p.xi, s0);
            let lhs = 2.0 * p.b * rp.beta * p.xi * p.xi * s0 * m1(&p, y0).unwrap();
            let rhs = m1_reduced(&rp, s0).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * lhs.abs().max(rhs.abs()).max(1.0), "{lhs} {rhs}");
        }
    }
}

#[test]
fn reduced_family_never_exceeds_three_roots() {
    let mut r = rng(5);
    let opts = RootOptions { grid: 1024, ..RootOptions::default() };
    let mut worst = 0;
    for i in 0..10_000 {
        let rp = ReducedParams {
            alpha: 1.0,
            beta: if i % 2 == 0 { r.gen_range(0.1..0.95) } else { r.gen_range(1.05..10.0) },
            k_0: r.gen_range(-1.0..1.0),
            k_1: r.gen_range(-1.0..1.0),
            k_2: r.gen_range(-1.0..1.0),
            c_0: 0.0,
            c_1: 0.0,
        };
        let n = find_roots(|s| m1_reduced(&rp, s).unwrap_or(f64::NAN), 1e-3, 1e3, &opts).len();
        worst = worst.max(n);
    }
    assert!(worst <= 3, "{worst}");
}

#[test]
fn large_amplitude_drift_matches_infinity_report() {
    let mut r = rng(6);
    let mut checked = 0;
    while checked < 12 {
        let (sys, p) = general_melnikov_draw(&mut r);
        let rep = infinity_stability(&p);
        if p.infinity_expression().abs() < 0.2 {
            continue;
        }
        let d = displacement(&sys.with_epsilon(1e-3), 1e3).unwrap();
        // A stable infinity attracts large orbits: they grow (inward in
        // Bendixson coordinates).
        let grows = d < 0.0;
        assert_eq!(grows, rep.stability == Stability::Stable, "{p:?}");
        checked += 1;
    }
}

fn integrate_polar(sys: &PwlSystem, side: Side, th0: f64, th1: f64, r0: f64) -> f64 {
    Dopri::tight()
        .integrate(
            |th, r: &[f64; 1]| {
                let (rd, td) = polar_rhs_zone(sys, side, r[0], th);
                [rd / td]
            },
            th0,
            th1,
            [r0],
        )
        .unwrap()[0]
}

/// Leading-order terms of the polar radius near infinity, in the form
/// quoted for the plus and minus zones.
struct QuotedRho {
    a: f64,
    b: f64,
    c: f64,
    xi: f64,
    b11m: f64,
    b12m: f64,
    b21m: f64,
    b22m: f64,
    b11p: f64,
    b12p: f64,
    b21p: f64,
    b22p: f64,
}

impl QuotedRho {
    fn rho0_plus(&self, r0: f64, th: f64) -> f64 {
        let QuotedRho { a, b, c, .. } = *self;
        r0 / 2f64.sqrt() * ((2.0 * a * (2.0 * th).sin() - (b + c) * (2.0 * th).cos() + b - c) / b).sqrt()
    }

    fn rho1_minus(&self, r0: f64, th: f64) -> f64 {
        let (b11, a2, b21, b22) = (self.b11m, self.b12m, self.b21m, self.b22m);
        let (s2, c2) = (2.0 * th).sin_cos();
        r0 / 4.0 * (-2.0 * b11 * th - b11 * s2 + PI * b11 + a2 * c2 + a2 + b21 * c2 + b21 - 2.0 * b22 * th + b22 * s2 + PI * b22)
    }

    fn rho1_plus(&self, r0: f64, th: f64) -> f64 {
        let QuotedRho { a, b, c, xi, .. } = *self;
        let (c2p, d1, tp) = (self.b12p, self.b21p, self.b11p + self.b22p);
        let (s2, k2) = (2.0 * th).sin_cos();
        let q = -2.0 * a * s2 + (b + c) * k2 - b + c;
        let bracket = 2.0 * b * tp * (a / xi + b * th.tan() / xi).atan() * q
            + 2.0 * s2 * (PI * a * b * tp + 2.0 * a * c2p * xi + b * xi * (self.b22p - self.b11p))
            - k2 * (PI * b * (b + c) * tp + 2.0 * xi * (c * c2p - b * d1))
            + PI * b * (b - c) * tp
            + 2.0 * b * d1 * xi
            - 2.0 * c * c2p * xi;
        -r0 / (4.0 * b * xi * (-2.0 * b).sqrt() * q.sqrt()) * bracket
    }
}

fn rho_fixture() -> (PwlSystem, QuotedRho) {
    let cp = CanonicalParams { a: 0.4, b: -1.2, c: 1.1, d: 0.5, e: 0.8 };
    let mut sys = PwlSystem::canonical(&cp);
    sys.order1.minus = AffineField::new(Mat2::new(0.3, -0.2, 0.5, 0.1), Vec2::ZERO);
    sys.order1.plus = AffineField::new(Mat2::new(-0.4, 0.25, 0.15, 0.2), Vec2::ZERO);
    let q = QuotedRho {
        a: cp.a,
        b: cp.b,
        c: cp.c,
        xi: cp.xi(),
        b11m: 0.3,
        b12m: -0.2,
        b21m: 0.5,
        b22m: 0.1,
        b11p: -0.4,
        b12p: 0.25,
        b21p: 0.15,
        b22p: 0.2,
    };
    (sys, q)
}

#[test]
fn quoted_rho0_plus_matches_integration() {
    let (sys, q) = rho_fixture();
    let r0 = 1e-6;
    for th in [-PI / 4.0, 0.0, PI / 4.0, PI / 2.0 - 1e-3] {
        let num = integrate_polar(&sys, Side::Plus, -PI / 2.0, th, r0);
        assert!((num - q.rho0_plus(r0, th)).abs() < 1e-5 * r0, "{th}: {num:e} {:e}", q.rho0_plus(r0, th));
    }
}

/// `d rho / d eps` at `eps = 0` by central differences on the integrated
/// polar equation.
fn rho1_numeric(sys: &PwlSystem, side: Side, th0: f64, th: f64, r0: f64) -> f64 {
    let h = 1e-5;
    (integrate_polar(&sys.with_epsilon(h), side, th0, th, r0) - integrate_polar(&sys.with_epsilon(-h), side, th0, th, r0)) / (2.0 * h)
}

#[test]
fn quoted_rho1_minus_matches_integration() {
    let (sys, q) = rho_fixture();
    let r0 = 1e-6;
    for th in [3.0 * PI / 4.0, PI, 5.0 * PI / 4.0] {
        let num = rho1_numeric(&sys, Side::Minus, PI / 2.0, th, r0);
        assert!((num - q.rho1_minus(r0, th)).abs() < 1e-4 * r0, "{th}: {num:e} {:e}", q.rho1_minus(r0, th));
    }
}

#[test]
fn quoted_rho1_plus_has_flipped_sign() {
    let (sys, q) = rho_fixture();
    let r0 = 1e-6;
    for th in [-PI / 4.0, 0.0, PI / 4.0] {
        let num = rho1_numeric(&sys, Side::Plus, -PI / 2.0, th, r0);
        let quoted = q.rho1_plus(r0, th);
        assert!((num + quoted).abs() < 1e-4 * r0, "{th}: {num:e} {quoted:e}");
    }
}

#[test]
fn bendixson_samples_lie_on_polar_orbit() {
    let (sys, _) = rho_fixture();
    let fl = AffineFlow::new(&sys.field(Side::Plus)).unwrap();
    // A large orbit piece inside x > 0.
    let p0 = Vec2::new(40.0, -30.0);
    let q0 = pwlf_core::infinity::bendixson_map(p0.x, p0.y).unwrap();
    let (r0, th0) = (q0.norm(), q0.y.atan2(q0.x));
    for t in [0.05, 0.1, 0.2] {
        let p = fl.state(p0, t);
        if p.x <= 0.0 {
            break;
        }
        let q = pwlf_core::infinity::bendixson_map(p.x, p.y).unwrap();
        let (r, th) = (q.norm(), q.y.atan2(q.x));
        let along = integrate_polar(&sys, Side::Plus, th0, th, r0);
        assert!((along - r).abs() < 1e-6 * r.max(1e-3), "{t}: {along} {r}");
    }
}

#[test]
fn general_s_series_follow_simulation() {
    // b11- != -b22-: first-order terms split, second order still matches.
    let mut sys = examples::example2();
    sys.order1.minus.matrix = Mat2::new(0.6, 0.3, -0.4, -0.9);
    sys.order1.minus.offset = Vec2::new(0.2, 0.15);
    sys.order2.minus = AffineField::new(Mat2::new(0.03, 0.1, -0.2, 0.02), Vec2::new(0.0, 0.05));
    let err = |eps: f64| {
        let p = SlidingParams::from_canonical(&sys.with_epsilon(eps)).unwrap();
        let (_, sim) = simulated_s_values(&p.system).unwrap();
        let s = s_maps(&p).values;
        [0, 1, 2, 3].map(|i| (sim[i] - s[i]).abs())
    };
    let (e1, e2) = (err(1e-2), err(5e-3));
    for i in 0..4 {
        let ratio = e1[i] / e2[i];
        assert!((6.0..=10.0).contains(&ratio), "S{i}: {ratio}");
    }
}

#[test]
fn ordering_flip_only_swaps_middle_pair() {
    let p = SlidingParams::from_canonical(&examples::example2().with_epsilon(1e-2)).unwrap();
    let t = pwlf_core::sliding::thresholds(&p);
    let mut seen = Vec::new();
    for k in 1..40 {
        let row = pwlf_core::sliding::sweep_point(&p, 4.0 * t * k as f64 / 40.0).unwrap();
        assert!(row.ordering.starts_with("S3<") && row.ordering.ends_with("<S0"), "{}", row.ordering);
        if seen.last() != Some(&row.ordering) {
            seen.push(row.ordering);
        }
    }
    assert_eq!(seen, vec!["S3<S2<S1<S0".to_string(), "S3<S1<S2<S0".to_string()]);
}
