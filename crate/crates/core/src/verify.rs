//! Golden checks on the built-in examples and randomized property checks.
//! Shared by the `verify-examples` command and the acceptance tests.

use crate::ect::{quoted_w3_tilde, quoted_w3_tilde_derivative, quoted_wronskian, wronskian, FunctionFamily};
use crate::error::{Result, Side};
use crate::examples;
use crate::flow::AffineFlow;
use crate::linalg::{AffineField, Mat2, Vec2};
use crate::melnikov::{analyze_melnikov, m1, melnikov_roots, MelnikovParams, Stability};
use crate::numerics::Dopri;
use crate::roots::{bisect, find_roots, log_grid, RootOptions};
use crate::simulate::{displacement, simulate, SegmentKind, SimOptions, Trajectory};
use crate::sliding::{detect_sliding_cycle, s_maps, simulated_s_values, sliding_loop, CycleKind, SlidingParams};
use crate::svg;
use crate::system::{canonicalize, CanonicalParams, PwlSystem, ZonePair};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone)]
pub struct Criterion {
    pub id: u8,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
    pub limit_seconds: f64,
}

impl Criterion {
    pub fn line(&self) -> String {
        format!(
            "criterion {} {} {} ({:.2} s, limit {} s): {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.seconds,
            self.limit_seconds,
            self.detail
        )
    }
}

fn timed(id: u8, name: &'static str, limit_seconds: f64, f: impl FnOnce() -> (bool, String)) -> Criterion {
    let start = Instant::now();
    let (ok, detail) = f();
    let seconds = start.elapsed().as_secs_f64();
    Criterion { id, name, pass: ok && seconds < limit_seconds, detail, seconds, limit_seconds }
}

/// Roots of `(y0 - y_return)/eps` on a log grid over `(lo, hi)`.
pub fn fd_melnikov_roots(sys: &PwlSystem, eps: f64, lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    let s = sys.with_epsilon(eps);
    let g = |y: f64| displacement(&s, y).map(|d| d / eps).unwrap_or(f64::NAN);
    let grid = log_grid(lo, hi, n);
    let vals: Vec<f64> = grid.iter().map(|&y| g(y)).collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        if vals[i] * vals[i + 1] < 0.0 {
            out.push(bisect(&g, grid[i], grid[i + 1], 1e-12));
        }
    }
    Ok(out)
}

pub fn criterion1() -> Criterion {
    timed(1, "example-1 golden", 1.0, || {
        let p = examples::example1_exact_params();
        let (a, b) = (m1(&p, 1.0).unwrap_or(f64::NAN), m1(&p, 2.0).unwrap_or(f64::NAN));
        let roots = melnikov_roots(&p, 0.1, 10.0, &RootOptions::default());
        let third = roots.iter().map(|r| r.0).find(|&y| y > 3.0).unwrap_or(f64::NAN);
        let ok = a.abs() < 1e-9 && b.abs() < 1e-9 && (third - examples::EXAMPLE1_THIRD_ROOT).abs() < 1e-4;
        (ok, format!("M1(1) = {a:.3e}, M1(2) = {b:.3e}, third root {third:.6}"))
    })
}

pub fn criterion2() -> Criterion {
    timed(2, "example-1 stability", 1.0, || {
        let rounded = examples::example1_rounded_params();
        let expr = rounded.infinity_expression();
        let rep = analyze_melnikov(&examples::example1_exact_params(), 0.1, 10.0, &RootOptions::default());
        match rep {
            Ok(r) => {
                let highest = r.roots.last().map(|c| c.stability);
                let ok = (expr - 0.01).abs() < 1e-12
                    && highest == Some(Stability::Unstable)
                    && r.infinity_stability == Stability::Stable;
                (ok, format!("xi T- + T+ = {expr:.15}, highest {highest:?}, infinity {:?}", r.infinity_stability))
            }
            Err(e) => (false, e.to_string()),
        }
    })
}

pub fn criterion3() -> Criterion {
    timed(3, "example-2 golden", 30.0, || {
        let quoted = find_roots(examples::example2_quoted_m1, 0.1, 100.0, &RootOptions::default());
        let q = quoted.first().map(|r| r.0).unwrap_or(f64::NAN);
        let fd = fd_melnikov_roots(&examples::example2(), 1e-4, 0.1, 100.0, 160).unwrap_or_default();
        let ok = quoted.len() == 1 && (q - examples::EXAMPLE2_QUOTED_ROOT).abs() < 1e-3 && fd.len() == 1 && (fd[0] - 2.12883).abs() < 1e-3;
        (ok, format!("quoted root {q:.6}; finite-difference roots {fd:.6?} (pinned 2.12883)"))
    })
}

/// Per-point normalized errors `|D/eps - M1| / max(1, |M1|)`.
pub fn oracle_errors(eps: f64) -> Vec<(f64, f64)> {
    let sys = examples::example1_exact().with_epsilon(eps);
    let p = examples::example1_exact_params();
    (0..10)
        .map(|i| {
            let y = 0.5 + 4.5 * i as f64 / 9.0;
            let want = m1(&p, y).unwrap_or(f64::NAN);
            let got = displacement(&sys, y).map(|d| d / eps).unwrap_or(f64::NAN);
            (y, (got - want).abs() / want.abs().max(1.0))
        })
        .collect()
}

pub fn criterion4() -> Criterion {
    timed(4, "oracle equivalence", 60.0, || {
        let e1 = oracle_errors(1e-4);
        let e2 = oracle_errors(5e-5);
        let worst = e1.iter().cloned().fold((0.0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
        let ratios: Vec<f64> = e1.iter().zip(&e2).map(|(a, b)| a.1 / b.1).collect();
        let halves = ratios.iter().all(|r| (1.8..=2.2).contains(r));
        let ok = worst.1 <= 0.01 && halves;
        (
            ok,
            format!(
                "max error {:.4}% at y0 = {:.2}; halving ratios in [{:.3}, {:.3}]",
                100.0 * worst.1,
                worst.0,
                ratios.iter().cloned().fold(f64::INFINITY, f64::min),
                ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            ),
        )
    })
}

/// Random canonical parameters with random first-order data.
pub fn random_params(rng: &mut impl Rng, constrained: bool) -> MelnikovParams {
    let b = -rng.gen_range(0.2..3.0);
    let xi: f64 = rng.gen_range(0.2..2.0);
    let mut p = MelnikovParams {
        b,
        d: rng.gen_range(0.1..3.0),
        e: rng.gen_range(0.1..3.0),
        xi,
        b11m: rng.gen_range(-3.0..3.0),
        b22m: rng.gen_range(-3.0..3.0),
        v1m: rng.gen_range(-3.0..3.0),
        b11p: rng.gen_range(-3.0..3.0),
        b22p: rng.gen_range(-3.0..3.0),
        v1p: rng.gen_range(-3.0..3.0),
    };
    if constrained {
        p.b22m = -p.b11m;
    }
    p
}

pub fn criterion5() -> Criterion {
    timed(5, "root-count property", 120.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED);
        let opts = RootOptions::default();
        let (mut max_g, mut max_c) = (0, 0);
        for _ in 0..200 {
            let p = random_params(&mut rng, false);
            max_g = max_g.max(melnikov_roots(&p, 1e-3, 1e3, &opts).len());
            let q = random_params(&mut rng, true);
            max_c = max_c.max(melnikov_roots(&q, 1e-3, 1e3, &opts).len());
        }
        (max_g <= 3 && max_c <= 1, format!("max roots: general {max_g}, constrained {max_c} over 200 draws each"))
    })
}

pub fn criterion6() -> Criterion {
    timed(6, "wronskian suite", 10.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
        let mut worst: f64 = 0.0;
        let mut law = true;
        for i in 0..100 {
            let beta = if i % 2 == 0 { 0.5 } else { 2.0 };
            let s: f64 = rng.gen_range((0.05f64).ln()..(20.0f64).ln()).exp();
            let fam = FunctionFamily::melnikov(beta, (0.0, f64::INFINITY));
            for k in 0..4 {
                let n = wronskian(&fam, k, s).unwrap_or(f64::NAN);
                let q = quoted_wronskian(beta, k, s);
                let rel = (q - n).abs() / n.abs().max(1e-300);
                worst = if rel.is_nan() { f64::INFINITY } else { worst.max(rel) };
            }
            let sign = (beta.powi(3) * (beta * beta - 1.0)).signum();
            let h = 1e-4 * s;
            let w3t = |z: f64| wronskian(&fam, 3, z).unwrap_or(f64::NAN) * (beta * beta * z * z + 1.0).powi(2);
            let fd = (w3t(s + h) - w3t(s - h)) / (2.0 * h);
            let quoted_fd = (quoted_w3_tilde(beta, s + h) - quoted_w3_tilde(beta, s - h)) / (2.0 * h);
            law &= fd.signum() == sign && quoted_fd.signum() == sign && quoted_w3_tilde_derivative(beta, s).signum() == sign;
        }
        (worst <= 1e-8 && law, format!("max relative mismatch {worst:.2e}; sign law {}", if law { "holds" } else { "violated" }))
    })
}

/// Series-versus-simulation errors of `S0..S3` on Example 2.
pub fn s_map_errors(eps: f64) -> Result<[f64; 4]> {
    let p = SlidingParams::from_canonical(&examples::example2().with_epsilon(eps))?;
    let (_, sim) = simulated_s_values(&p.system)?;
    let s = s_maps(&p).values;
    Ok([0, 1, 2, 3].map(|i| (sim[i] - s[i]).abs()))
}

pub fn criterion7() -> Criterion {
    timed(7, "sliding s-map suite", 60.0, || {
        let (e1, e2) = match (s_map_errors(1e-2), s_map_errors(5e-3)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return (false, e.to_string()),
        };
        let ratios = [0, 1, 2, 3].map(|i| e1[i] / e2[i]);
        let ratio_ok = ratios.iter().all(|r| (6.0..=10.0).contains(r));
        let p = match SlidingParams::from_canonical(&examples::example2().with_epsilon(1e-2)) {
            Ok(p) => p,
            Err(e) => return (false, e.to_string()),
        };
        let r = detect_sliding_cycle(&p);
        let lp = sliding_loop(&p.system, 8);
        let closure = lp.as_ref().map(|l| l.closure()).unwrap_or(f64::NAN);
        let kinds_ok = lp.as_ref().map(|l| l.kinds == [SegmentKind::ZoneMinus, SegmentKind::Sliding]).unwrap_or(false);
        let ok = ratio_ok && r.ordering == "S3<S2<S1<S0" && r.cycle == CycleKind::SlidingTypeI && closure < 1e-6 * p.e && kinds_ok;
        (ok, format!("error ratios {ratios:.3?}; ordering {}; {:?}; closure {closure:.2e}", r.ordering, r.cycle))
    })
}

/// Epsilon used for the simultaneity portrait.
pub const PORTRAIT_EPS: f64 = 0.05;

/// Example 2 orbits started inside and outside the crossing cycle.
pub struct Portrait {
    pub crossing_cycle: f64,
    pub inner: Trajectory,
    pub outer: Trajectory,
    pub folds: Vec<f64>,
    pub svg: String,
}

pub fn simultaneity_portrait() -> Result<Portrait> {
    let sys = examples::example2().with_epsilon(PORTRAIT_EPS);
    let roots = fd_melnikov_roots(&examples::example2(), PORTRAIT_EPS, 0.1, 100.0, 120)?;
    let yc = *roots.first().ok_or(crate::Error::NoReturn)?;
    let opts = SimOptions { sample_dt: 0.05, ..SimOptions::default() };
    let inner = simulate(&sys, Vec2::new(0.0, 0.8 * yc), 300.0, &opts)?;
    let outer = simulate(&sys, Vec2::new(0.0, 1.05 * yc), 60.0, &opts)?;
    let f = crate::sliding::folds(&sys)?;
    let folds = vec![f.y1, f.y2];
    let trajs = [inner.clone(), outer.clone()];
    let svg = svg::phase_portrait(&trajs, &folds, &svg::Frame::fit(&trajs, 640.0, 640.0));
    Ok(Portrait { crossing_cycle: yc, inner, outer, folds, svg })
}

pub fn criterion8() -> Criterion {
    timed(8, "simultaneity", 60.0, || {
        let mp = examples::example2_params();
        let crossing = match analyze_melnikov(&mp, 0.1, 100.0, &RootOptions::default()) {
            Ok(r) => r,
            Err(e) => return (false, e.to_string()),
        };
        let sp = match SlidingParams::from_canonical(&examples::example2().with_epsilon(PORTRAIT_EPS)) {
            Ok(p) => p,
            Err(e) => return (false, e.to_string()),
        };
        let sliding = detect_sliding_cycle(&sp);
        let portrait = match simultaneity_portrait() {
            Ok(p) => p,
            Err(e) => return (false, e.to_string()),
        };
        let fd = fd_melnikov_roots(&examples::example2(), PORTRAIT_EPS, 0.1, 100.0, 120).unwrap_or_default();
        let tail: Vec<SegmentKind> = portrait.inner.kinds().iter().rev().take(4).rev().cloned().collect();
        let settles = tail.contains(&SegmentKind::Sliding) && !tail.contains(&SegmentKind::ZonePlus);
        let grows = portrait.outer.samples.iter().map(|s| s.2).fold(0.0, f64::max) > 1.05 * portrait.crossing_cycle;
        let svg_ok = portrait.svg.contains("switching-line") && portrait.svg.contains(r#"class="Sliding""#) && portrait.svg.matches(r#"class="fold""#).count() == 2;
        let ok = crossing.roots.len() == 1
            && crossing.roots[0].stability == Stability::Unstable
            && fd.len() == 1
            && sliding.cycle == CycleKind::SlidingTypeI
            && settles
            && grows
            && svg_ok;
        (
            ok,
            format!(
                "M1 roots {:?}; crossing cycle at eps = {PORTRAIT_EPS}: {fd:.5?}; sliding {:?}; inner orbit tail {:?}",
                crossing.roots.iter().map(|r| (r.y0, r.stability)).collect::<Vec<_>>(),
                sliding.cycle,
                tail
            ),
        )
    })
}

/// A random system conjugate to a random canonical one by an affine map
/// that keeps `x = 0` and a positive time rescaling.
pub fn random_general_system(rng: &mut impl Rng) -> (PwlSystem, CanonicalParams) {
    let b = -rng.gen_range(0.2..3.0);
    let xi: f64 = rng.gen_range(0.2..2.0);
    let a: f64 = rng.gen_range(-2.0..2.0);
    let cp = CanonicalParams { a, b, c: (a * a + xi * xi) / -b, d: rng.gen_range(0.1..3.0), e: rng.gen_range(0.1..3.0) };
    let mut sys = PwlSystem::canonical(&cp);
    let rand_field = |rng: &mut ChaCha8Rng| {
        AffineField::new(
            Mat2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            Vec2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        )
    };
    let mut inner = ChaCha8Rng::seed_from_u64(rng.gen());
    sys.order1 = ZonePair { plus: rand_field(&mut inner), minus: rand_field(&mut inner) };
    sys.epsilon = 0.1;
    let k = rng.gen_range(0.3..3.0);
    let a_map = Mat2::new(k, 0.0, rng.gen_range(-2.0..2.0), rng.gen_range(0.3..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
    let shift = Vec2::new(0.0, rng.gen_range(-2.0..2.0));
    let lambda = rng.gen_range(0.3..3.0);
    let ainv = a_map.inverse().expect("invertible");
    // X = A x + shift, t = lambda T: dX/dT = lambda (A M A^-1 (X - shift) + A u).
    let conj = |f: &AffineField| {
        let m = a_map * f.matrix * ainv;
        AffineField::new(lambda * m, lambda * (a_map * f.offset - m * shift))
    };
    let mut out = sys;
    for pair in [&mut out.order0, &mut out.order1, &mut out.order2] {
        pair.plus = conj(&pair.plus);
        pair.minus = conj(&pair.minus);
    }
    (out, cp)
}

/// Worst commutation error between integrating the original system and
/// mapping to the canonical one, plus whether the signs held.
pub fn conjugacy_check(sys: &PwlSystem, rng: &mut impl Rng) -> Result<(f64, bool)> {
    let (params, cov) = canonicalize(sys)?;
    let signs = params.check_signs()?;
    let can = cov.transform_system(sys);
    let mut worst: f64 = 0.0;
    for side in [Side::Plus, Side::Minus] {
        let f = sys.field(side);
        let g = AffineFlow::new(&can.field(side)).ok_or(crate::Error::DegenerateLinearPart(side))?;
        for _ in 0..3 {
            let p = Vec2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let t = rng.gen_range(0.1..1.5);
            let q = Dopri::tight().integrate(
                |_, z: &[f64; 2]| {
                    let v = f.eval(Vec2::new(z[0], z[1]));
                    [v.x, v.y]
                },
                0.0,
                t,
                [p.x, p.y],
            )?;
            let lhs = cov.map_point(Vec2::new(q[0], q[1]));
            let rhs = g.state(cov.map_point(p), cov.map_time(t));
            worst = worst.max((lhs - rhs).norm() / (1.0 + rhs.norm()));
        }
    }
    Ok((worst, signs))
}

pub fn criterion9() -> Criterion {
    timed(9, "canonicalization conjugacy", 10.0, || {
        let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
        let mut worst: f64 = 0.0;
        let mut signs = true;
        for _ in 0..20 {
            let (sys, _) = random_general_system(&mut rng);
            match conjugacy_check(&sys, &mut rng) {
                Ok((w, s)) => {
                    worst = worst.max(w);
                    signs &= s;
                }
                Err(e) => return (false, e.to_string()),
            }
        }
        (worst < 1e-8 && signs, format!("max commutation error {worst:.2e}; sign constraints {}", if signs { "hold" } else { "violated" }))
    })
}

pub fn run_all() -> Vec<Criterion> {
    vec![
        criterion1(),
        criterion2(),
        criterion3(),
        criterion4(),
        criterion5(),
        criterion6(),
        criterion7(),
        criterion8(),
        criterion9(),
    ]
}
