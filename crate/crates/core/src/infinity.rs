//! Behaviour at infinity through the Bendixson inversion.

use crate::error::{Error, Result, Side};
use crate::linalg::Vec2;
use crate::melnikov::{MelnikovParams, Stability};
use crate::numerics::Dopri;
use crate::system::PwlSystem;
use serde::Serialize;
use std::f64::consts::PI;

const UNDETERMINED_TOL: f64 = 1e-12;
const THETA_DOT_TOL: f64 = 1e-14;

/// Inversion `(x, y) / (x^2 + y^2)`; an involution of the punctured plane.
pub fn bendixson_map(x: f64, y: f64) -> Result<Vec2> {
    let n = x * x + y * y;
    if n == 0.0 {
        return Err(Error::InvalidDomain("Bendixson map is undefined at the origin".into()));
    }
    Ok(Vec2::new(x / n, y / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfinityReport {
    /// Leading coefficient `c` in `Pi(rho0) - rho0 = c eps rho0 + ...`.
    pub coefficient: f64,
    /// `xi (b11- + b22-) + b11+ + b22+`.
    pub sign_expression: f64,
    pub stability: Stability,
}

/// Stability of the periodic orbit at infinity from the first-order data.
pub fn infinity_stability(p: &MelnikovParams) -> InfinityReport {
    let sign_expression = p.infinity_expression();
    let coefficient = -0.5 * PI * (p.trace_minus() + p.trace_plus() / p.xi);
    let stability = if sign_expression.abs() < UNDETERMINED_TOL {
        Stability::Undetermined
    } else if sign_expression > 0.0 {
        Stability::Stable
    } else {
        Stability::Unstable
    };
    InfinityReport { coefficient, sign_expression, stability }
}

/// `(dr/dt, dtheta/dt)` of one zone's field in polar Bendixson
/// coordinates `x = cos(theta)/r`, `y = sin(theta)/r`.
pub fn polar_rhs_zone(sys: &PwlSystem, side: Side, r: f64, theta: f64) -> (f64, f64) {
    let (s, c) = theta.sin_cos();
    let z = sys.field(side).eval(Vec2::new(c / r, s / r));
    (-r * r * (z.x * c + z.y * s), r * (z.y * c - z.x * s))
}

/// Polar Bendixson field, with the zone chosen by the sign of `cos(theta)`.
pub fn polar_bendixson_rhs(sys: &PwlSystem, r: f64, theta: f64) -> Result<(f64, f64)> {
    if !(r > 0.0) {
        return Err(Error::NonPositiveAmplitude(r));
    }
    let side = if theta.cos() >= 0.0 { Side::Plus } else { Side::Minus };
    let (rd, td) = polar_rhs_zone(sys, side, r, theta);
    if td.abs() < THETA_DOT_TOL {
        return Err(Error::ThetaDotVanishes(theta));
    }
    Ok((rd, td))
}

fn dr_dtheta(sys: &PwlSystem, side: Side, r: f64, theta: f64) -> f64 {
    // Divide through by r once to keep the quotient regular near r = 0.
    let (s, c) = theta.sin_cos();
    let f = sys.field(side);
    let m = f.matrix;
    let u = f.offset;
    let px = m.m11 * c + m.m12 * s + r * u.x;
    let py = m.m21 * c + m.m22 * s + r * u.y;
    let num = -(px * c + py * s);
    let den = py * c - px * s;
    r * num / den
}

/// Polar radius after one turn, starting at `theta = -pi/2` with `rho0`:
/// the plus zone covers `(-pi/2, pi/2)`, the minus zone `(pi/2, 3pi/2)`.
pub fn poincare_map(sys: &PwlSystem, rho0: f64) -> Result<f64> {
    if !(rho0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(rho0));
    }
    let ode = Dopri::tight();
    let half = |side: Side, t0: f64, t1: f64, r0: f64| {
        ode.integrate(|th, r: &[f64; 1]| [dr_dtheta(sys, side, r[0], th)], t0, t1, [r0]).map(|v| v[0])
    };
    let r1 = half(Side::Plus, -0.5 * PI, 0.5 * PI, rho0)?;
    half(Side::Minus, 0.5 * PI, 1.5 * PI, r1)
}

/// `Pi(rho0) - rho0`; negative means orbits near infinity move outward.
pub fn poincare_displacement(sys: &PwlSystem, rho0: f64) -> Result<f64> {
    Ok(poincare_map(sys, rho0)? - rho0)
}
