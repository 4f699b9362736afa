//! Built-in example systems.
//!
//! Example 1 is a general perturbation with three crossing cycles. Its
//! first-order data are quoted to two or three digits, which moves the two
//! designed zeros of `M1` off `y0 = 1, 2` by about `1e-3`. The exact variant
//! keeps `T- = -2` and solves for `v1-` and `b11+` so that 1 and 2 are exact
//! zeros. Example 2 satisfies `b11- = -b22-` and shows a crossing cycle
//! together with a sliding cycle.

use crate::linalg::{AffineField, Mat2, Vec2};
use crate::melnikov::{m1, MelnikovParams};
use crate::system::{CanonicalParams, PwlSystem, ZonePair};

pub const EXAMPLE1_CANONICAL: CanonicalParams = CanonicalParams { a: 1.0, b: -1.0, c: 1.01, d: 0.1, e: 0.55 };

/// Example 1 with the first-order data as quoted.
pub fn example1_rounded() -> PwlSystem {
    example1_with(-2.65, 0.21)
}

/// Example 1 with `v1-` and `b11+` adjusted so that `M1(1) = M1(2) = 0`.
pub fn example1_exact() -> PwlSystem {
    let (v1m, b11p) = example1_exact_entries();
    example1_with(v1m, b11p)
}

fn example1_with(v1m: f64, b11p: f64) -> PwlSystem {
    let mut sys = PwlSystem::canonical(&EXAMPLE1_CANONICAL);
    sys.order1 = ZonePair {
        plus: AffineField::new(Mat2::diag(b11p, 0.0), Vec2::ZERO),
        minus: AffineField::new(Mat2::diag(-1.0, -1.0), Vec2::new(v1m, 0.0)),
    };
    sys
}

pub fn example1_rounded_params() -> MelnikovParams {
    MelnikovParams::from_canonical(&example1_rounded()).expect("canonical example")
}

pub fn example1_exact_params() -> MelnikovParams {
    MelnikovParams::from_canonical(&example1_exact()).expect("canonical example")
}

/// `(v1-, b11+)` making 1 and 2 zeros of `M1`; `M1` is affine in both.
pub fn example1_exact_entries() -> (f64, f64) {
    let base = MelnikovParams::from_canonical(&example1_with(0.0, 0.0)).expect("canonical example");
    let eval = |v1m: f64, b11p: f64, y: f64| m1(&MelnikovParams { v1m, b11p, ..base }, y).expect("positive amplitude");
    let mut rows = [[0.0; 3]; 2];
    for (row, y) in rows.iter_mut().zip([1.0, 2.0]) {
        let c = eval(0.0, 0.0, y);
        *row = [eval(1.0, 0.0, y) - c, eval(0.0, 1.0, y) - c, -c];
    }
    let det = rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0];
    let v1m = (rows[0][2] * rows[1][1] - rows[0][1] * rows[1][2]) / det;
    let b11p = (rows[0][0] * rows[1][2] - rows[0][2] * rows[1][0]) / det;
    (v1m, b11p)
}

/// Example 2: `b11- = -b22-`, second-order terms only in the minus zone.
pub fn example2() -> PwlSystem {
    PwlSystem {
        order0: ZonePair {
            plus: AffineField::new(Mat2::new(-1.0, -1.0, 2.0, 1.0), Vec2::new(0.0, 2.0)),
            minus: AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, 1.0)),
        },
        order1: ZonePair {
            plus: AffineField::new(Mat2::diag(1.5, -0.4), Vec2::new(-0.5, 0.0)),
            minus: AffineField::new(Mat2::diag(1.0, -1.0), Vec2::new(0.2, 0.0)),
        },
        order2: ZonePair {
            plus: AffineField::ZERO,
            minus: AffineField::new(Mat2::diag(0.03, 0.02), Vec2::ZERO),
        },
        epsilon: 0.0,
    }
}

pub fn example2_params() -> MelnikovParams {
    MelnikovParams::from_canonical(&example2()).expect("canonical example")
}

/// The Melnikov function of Example 2 in the form quoted alongside the
/// example. It does not follow from the example's data (see
/// [`example2_derived_m1`]); it is kept as a fixture.
pub fn example2_quoted_m1(y0: f64) -> f64 {
    2.2 - (0.1 * y0 + 1.6 / y0) * crate::flow::clamped_acos(8.0 / (0.25 * y0 * y0 + 4.0) - 1.0)
}

/// The Melnikov function that Example 2's data actually produce.
pub fn example2_derived_m1(y0: f64) -> f64 {
    3.6 - (0.55 * y0 + 2.2 / y0) * crate::flow::clamped_acos(8.0 / (4.0 + y0 * y0) - 1.0)
}

/// Root of [`example2_quoted_m1`].
pub const EXAMPLE2_QUOTED_ROOT: f64 = 7.94622;
/// Third zero of Example 1's `M1`.
pub const EXAMPLE1_THIRD_ROOT: f64 = 3.82781;
