//! Exact flows of affine planar fields and first-crossing search.
//!
//! A coordinate of an affine flow is one of three scalar signal shapes
//! (oscillatory, two exponentials, or exponential times a linear factor).
//! Their critical points are known analytically, so every level crossing
//! is isolated on a monotone piece and then bisected to machine precision.

use crate::error::{Error, Result};
use crate::linalg::{AffineField, Mat2, Vec2};
use std::f64::consts::PI;

/// Relative threshold below which the discriminant is treated as zero.
const PARABOLIC_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Spectrum {
    /// Eigenvalues `tau +- i omega`.
    Oscillatory { omega: f64 },
    /// Eigenvalues `tau +- mu`.
    Hyperbolic { mu: f64 },
    /// Double eigenvalue `tau`.
    Parabolic,
}

/// Closed-form flow of `z' = M z + u` with invertible `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFlow {
    field: AffineField,
    eq: Vec2,
    tau: f64,
    n: Mat2,
    spectrum: Spectrum,
}

impl AffineFlow {
    /// `None` when the linear part is singular.
    pub fn new(field: &AffineField) -> Option<Self> {
        let m = field.matrix;
        let eq = field.equilibrium()?;
        let tau = 0.5 * m.trace();
        let n = m - tau * Mat2::IDENTITY;
        let half = 0.5 * (m.m11 - m.m22);
        let delta = half * half + m.m12 * m.m21;
        let scale = m.max_abs().max(1e-300);
        let spectrum = if delta.abs() <= PARABOLIC_TOL * scale * scale {
            Spectrum::Parabolic
        } else if delta < 0.0 {
            Spectrum::Oscillatory { omega: (-delta).sqrt() }
        } else {
            Spectrum::Hyperbolic { mu: delta.sqrt() }
        };
        Some(AffineFlow { field: *field, eq, tau, n, spectrum })
    }

    pub fn field(&self) -> &AffineField {
        &self.field
    }

    pub fn equilibrium(&self) -> Vec2 {
        self.eq
    }

    /// Characteristic time scale `1 / max|M_ij|`.
    pub fn time_scale(&self) -> f64 {
        1.0 / self.field.matrix.max_abs().max(1e-300)
    }

    pub fn state(&self, p0: Vec2, t: f64) -> Vec2 {
        let w = p0 - self.eq;
        let nw = self.n * w;
        let (c, s) = match self.spectrum {
            Spectrum::Oscillatory { omega } => ((omega * t).cos(), (omega * t).sin() / omega),
            Spectrum::Hyperbolic { mu } => ((mu * t).cosh(), (mu * t).sinh() / mu),
            Spectrum::Parabolic => (1.0, t),
        };
        let g = (self.tau * t).exp();
        self.eq + g * (c * w + s * nw)
    }

    /// Closed form of one coordinate (`0` for x, `1` for y) along the orbit of `p0`.
    pub fn signal(&self, p0: Vec2, coord: usize) -> Signal {
        let w = p0 - self.eq;
        let nw = self.n * w;
        let pick = |v: Vec2| if coord == 0 { v.x } else { v.y };
        let (c0, wk, nwk) = (pick(self.eq), pick(w), pick(nw));
        match self.spectrum {
            Spectrum::Oscillatory { omega } => {
                Signal::Oscillatory { c0, tau: self.tau, omega, p: wk, q: nwk / omega }
            }
            Spectrum::Hyperbolic { mu } => Signal::Exponential {
                c0,
                l1: self.tau + mu,
                a1: 0.5 * (wk + nwk / mu),
                l2: self.tau - mu,
                a2: 0.5 * (wk - nwk / mu),
            },
            Spectrum::Parabolic => Signal::Parabolic { c0, l: self.tau, p: wk, q: nwk },
        }
    }
}

/// Scalar function of time produced by an affine flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// `c0 + e^{tau t} (p cos(omega t) + q sin(omega t))`
    Oscillatory { c0: f64, tau: f64, omega: f64, p: f64, q: f64 },
    /// `c0 + a1 e^{l1 t} + a2 e^{l2 t}`
    Exponential { c0: f64, l1: f64, a1: f64, l2: f64, a2: f64 },
    /// `c0 + e^{l t} (p + q t)`
    Parabolic { c0: f64, l: f64, p: f64, q: f64 },
}

impl Signal {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Signal::Oscillatory { c0, tau, omega, p, q } => {
                let (s, c) = (omega * t).sin_cos();
                c0 + (tau * t).exp() * (p * c + q * s)
            }
            Signal::Exponential { c0, l1, a1, l2, a2 } => c0 + a1 * (l1 * t).exp() + a2 * (l2 * t).exp(),
            Signal::Parabolic { c0, l, p, q } => c0 + (l * t).exp() * (p + q * t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Signal::Oscillatory { tau, omega, p, q, .. } => {
                let (s, c) = (omega * t).sin_cos();
                (tau * t).exp() * ((tau * p + omega * q) * c + (tau * q - omega * p) * s)
            }
            Signal::Exponential { l1, a1, l2, a2, .. } => a1 * l1 * (l1 * t).exp() + a2 * l2 * (l2 * t).exp(),
            Signal::Parabolic { l, p, q, .. } => (l * t).exp() * (l * p + q + l * q * t),
        }
    }

    /// Smallest critical point strictly beyond `t` in direction `dir` (+1 or -1).
    pub fn next_critical(&self, t: f64, dir: f64) -> Option<f64> {
        match *self {
            Signal::Oscillatory { tau, omega, p, q, .. } => {
                let a = tau * p + omega * q;
                let b = tau * q - omega * p;
                if a == 0.0 && b == 0.0 {
                    return None;
                }
                // Zeros of a cos + b sin: omega t = phi + pi/2 + k pi.
                let base = b.atan2(a) + 0.5 * PI;
                let kf = (omega * t - base) / PI;
                let mut k = if dir > 0.0 { kf.floor() } else { kf.ceil() };
                for _ in 0..4 {
                    let tk = (base + k * PI) / omega;
                    if dir * (tk - t) > 0.0 {
                        return Some(tk);
                    }
                    k += dir;
                }
                None
            }
            Signal::Exponential { l1, a1, l2, a2, .. } => {
                let num = -a2 * l2;
                let den = a1 * l1;
                if den == 0.0 || num == 0.0 || l1 == l2 {
                    return None;
                }
                let ratio = num / den;
                if ratio <= 0.0 {
                    return None;
                }
                let tc = ratio.ln() / (l1 - l2);
                (dir * (tc - t) > 0.0).then_some(tc)
            }
            Signal::Parabolic { l, p, q, .. } => {
                if l * q == 0.0 {
                    return None;
                }
                let tc = -(l * p + q) / (l * q);
                (dir * (tc - t) > 0.0).then_some(tc)
            }
        }
    }

    /// First time `t` (with `t * dir > 0`, `|t| <= t_max`) at which the
    /// signal crosses `level` leaving the side `side` (`+1` above, `-1`
    /// below). Pieces ending before `t_min` are skipped so that a start on a
    /// tangency does not register as an immediate crossing.
    pub fn first_crossing(&self, level: f64, side: f64, dir: f64, t_max: f64, t_min: f64) -> Option<f64> {
        let g = |s: f64| side * (self.eval(dir * s) - level);
        let mut l = 0.0;
        loop {
            let r = self.next_critical(dir * l, dir).map(|t| dir * t).unwrap_or(f64::INFINITY).min(t_max);
            if r > t_min && g(r) < 0.0 {
                let mut lo = l.max(if g(t_min.min(r)) >= 0.0 { t_min.min(r) } else { l });
                let mut hi = r;
                for _ in 0..400 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if g(mid) < 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return Some(dir * hi);
            }
            if r >= t_max {
                return None;
            }
            l = r;
        }
    }
}

fn xi_of(a: f64, b: f64, c: f64) -> Result<f64> {
    let disc = a * a + b * c;
    if disc >= 0.0 {
        return Err(Error::HypothesisViolated(format!("plus zone is not a center (a^2+bc = {disc:e})")));
    }
    Ok((-disc).sqrt())
}

/// Orbit of the canonical minus zone `x' = -y, y' = x + e` through `(0, y0)`.
pub fn flow_minus(e: f64, y0: f64, t: f64) -> Vec2 {
    let (s, c) = t.sin_cos();
    Vec2::new(e * (c - 1.0) - y0 * s, y0 * c + e * s)
}

/// Orbit of the canonical plus zone `x' = a x + b y, y' = c x - a y + d`
/// through `(0, y1)`, valid for every `a` with `a^2 + bc < 0`.
pub fn flow_plus(a: f64, b: f64, c: f64, d: f64, y1: f64, s: f64) -> Result<Vec2> {
    let xi = xi_of(a, b, c)?;
    let (sn, cs) = (xi * s).sin_cos();
    let x = b * (d - d * cs + y1 * xi * sn) / (xi * xi);
    let y = d * sn / xi + y1 * cs - a * (d - d * cs + y1 * xi * sn) / (xi * xi);
    Ok(Vec2::new(x, y))
}

/// Return time of the minus zone from `(0, y0)`, `y0 > 0`, to `(0, -y0)`.
pub fn half_return_time_minus(e: f64, y0: f64) -> Result<f64> {
    if y0 <= 0.0 {
        return Err(Error::NonPositiveAmplitude(y0));
    }
    Ok(2.0 * PI - clamped_acos(2.0 * e * e / (e * e + y0 * y0) - 1.0))
}

/// Backward return time of the plus zone from `(0, y1)`.
///
/// The plus zone rotates clockwise (`x' = b y` with `b < 0`), so the orbit
/// through `(0, y1)` lies in `x > 0` for negative times only when `y1 > 0`.
pub fn half_return_time_plus(a: f64, b: f64, c: f64, d: f64, y1: f64) -> Result<f64> {
    let xi = xi_of(a, b, c)?;
    if y1 <= 0.0 {
        return Err(Error::NonPositiveAmplitude(y1));
    }
    Ok(-clamped_acos(2.0 * d * d / (d * d + xi * xi * y1 * y1) - 1.0) / xi)
}

/// `acos` with arguments within 1e-14 of the interval clamped onto it.
pub fn clamped_acos(v: f64) -> f64 {
    if v > 1.0 && v <= 1.0 + 1e-14 {
        0.0
    } else if v < -1.0 && v >= -1.0 - 1e-14 {
        PI
    } else {
        v.acos()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Vec2, b: Vec2, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn signal_shapes_match_state() {
        let fields = [
            AffineField::new(Mat2::new(0.1, -2.0, 1.0, 0.3), Vec2::new(0.2, 1.0)),
            AffineField::new(Mat2::new(1.0, 2.0, 0.5, -0.3), Vec2::new(-1.0, 0.5)),
            AffineField::new(Mat2::new(1.0, 1.0, 0.0, 1.0), Vec2::new(0.0, 1.0)),
        ];
        for f in fields {
            let fl = AffineFlow::new(&f).unwrap();
            let p0 = Vec2::new(0.3, -0.7);
            for t in [-1.3, 0.0, 0.4, 2.5] {
                let z = fl.state(p0, t);
                assert!((fl.signal(p0, 0).eval(t) - z.x).abs() < 1e-12);
                assert!((fl.signal(p0, 1).eval(t) - z.y).abs() < 1e-12);
                let v = f.eval(z);
                assert!((fl.signal(p0, 0).derivative(t) - v.x).abs() < 1e-9 * (1.0 + v.norm()));
            }
        }
    }

    #[test]
    fn minus_flow_fixed_values() {
        assert!(close(flow_minus(1.0, 1.0, 0.0), Vec2::new(0.0, 1.0), 1e-15));
        assert!(close(flow_minus(1.0, 1.0, PI), Vec2::new(-2.0, -1.0), 1e-14));
    }

    #[test]
    fn plus_flow_fixed_values() {
        let p = flow_plus(0.0, -1.0, 1.0, 1.0, 1.0, -PI).unwrap();
        assert!(close(p, Vec2::new(-2.0, -1.0), 1e-14));
        assert!(close(flow_plus(1.0, -1.0, 1.01, 0.1, 0.7, 0.0).unwrap(), Vec2::new(0.0, 0.7), 1e-15));
        assert!(flow_plus(1.0, 1.0, 1.0, 0.1, 0.7, 0.1).is_err());
    }

    #[test]
    fn return_times() {
        assert!((half_return_time_minus(0.55, 0.55).unwrap() - 1.5 * PI).abs() < 1e-14);
        assert!((half_return_time_minus(0.55, 1e-9).unwrap() - 2.0 * PI).abs() < 1e-8);
        let t = half_return_time_minus(0.55, 2.0).unwrap();
        let p = flow_minus(0.55, 2.0, t);
        assert!(p.x.abs() < 1e-12 && (p.y + 2.0).abs() < 1e-12);
        let (a, b, c, d) = (1.0, -1.0, 1.01, 0.1);
        let xi: f64 = 0.1;
        let tr = half_return_time_plus(a, b, c, d, d / xi).unwrap();
        assert!((tr + PI / (2.0 * xi)).abs() < 1e-10);
        assert!(matches!(half_return_time_minus(1.0, 0.0), Err(Error::NonPositiveAmplitude(_))));
    }

    #[test]
    fn first_crossing_of_rotation() {
        let f = AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, 1.0));
        let fl = AffineFlow::new(&f).unwrap();
        let sig = fl.signal(Vec2::new(0.0, 2.0), 0);
        let t = sig.first_crossing(0.0, -1.0, 1.0, 100.0, 1e-13).unwrap();
        assert!((t - half_return_time_minus(1.0, 2.0).unwrap()).abs() < 1e-13);
    }
}
