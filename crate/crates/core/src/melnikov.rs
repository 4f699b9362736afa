//! First-order Melnikov function of the perturbed canonical system, its
//! reduced forms, root isolation and stability labels.
//!
//! Sign convention: the first-return displacement on the upper half of the
//! switching line is `y0 - y_return = eps * M1(y0) + O(eps^2)`, so `M1 > 0`
//! means orbits shrink.

use crate::error::{Error, Result};
use crate::flow::clamped_acos;
use crate::roots::{find_roots, RootFlag, RootOptions};
use crate::system::{canonicalize, PwlSystem};
use serde::Serialize;
use std::f64::consts::PI;

const UNDETERMINED_TOL: f64 = 1e-12;
const CONSTRAINT_TOL: f64 = 1e-12;

/// Canonical scalars plus the first-order entries that `M1` depends on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MelnikovParams {
    pub b: f64,
    pub d: f64,
    pub e: f64,
    pub xi: f64,
    pub b11m: f64,
    pub b22m: f64,
    pub v1m: f64,
    pub b11p: f64,
    pub b22p: f64,
    pub v1p: f64,
}

impl MelnikovParams {
    /// Read the parameters from a system already in canonical form.
    pub fn from_canonical(sys: &PwlSystem) -> Result<Self> {
        let p = sys.order0.plus;
        let m = sys.order0.minus;
        let a = p.matrix.m11;
        let (b, c) = (p.matrix.m12, p.matrix.m21);
        let xi2 = -(a * a + b * c);
        if xi2 <= 0.0 {
            return Err(Error::HypothesisViolated("plus zone is not a center".into()));
        }
        let (b1p, v1p) = (sys.order1.plus.matrix, sys.order1.plus.offset);
        let (b1m, v1m) = (sys.order1.minus.matrix, sys.order1.minus.offset);
        Ok(MelnikovParams {
            b,
            d: p.offset.y,
            e: m.offset.y,
            xi: xi2.sqrt(),
            b11m: b1m.m11,
            b22m: b1m.m22,
            v1m: v1m.x,
            b11p: b1p.m11,
            b22p: b1p.m22,
            v1p: v1p.x,
        })
    }

    /// Canonicalize a general system, then read the parameters.
    pub fn from_system(sys: &PwlSystem) -> Result<Self> {
        let (_, cov) = canonicalize(sys)?;
        Self::from_canonical(&cov.transform_system(sys))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("-b", -self.b), ("d", self.d), ("e", self.e), ("xi", self.xi)] {
            if !(v > 0.0) {
                return Err(Error::HypothesisViolated(format!("{name} must be positive, got {v:e}")));
            }
        }
        Ok(())
    }

    pub fn trace_minus(&self) -> f64 {
        self.b11m + self.b22m
    }

    pub fn trace_plus(&self) -> f64 {
        self.b11p + self.b22p
    }

    /// `xi T- + T+`; its sign fixes the stability of infinity.
    pub fn infinity_expression(&self) -> f64 {
        self.xi * self.trace_minus() + self.trace_plus()
    }

    pub fn is_constrained(&self) -> bool {
        (self.b11m + self.b22m).abs() <= CONSTRAINT_TOL * self.b11m.abs().max(self.b22m.abs()).max(1.0)
    }

    /// Every first-order entry negated.
    pub fn negated(&self) -> Self {
        MelnikovParams {
            b11m: -self.b11m,
            b22m: -self.b22m,
            v1m: -self.v1m,
            b11p: -self.b11p,
            b22p: -self.b22p,
            v1p: -self.v1p,
            ..*self
        }
    }
}

fn checked_acos(v: f64) -> Result<f64> {
    let r = clamped_acos(v);
    if r.is_nan() {
        Err(Error::InvalidDomain(format!("arccos argument {v:e} outside [-1, 1]")))
    } else {
        Ok(r)
    }
}

/// First-order Melnikov function at amplitude `y0 > 0`.
pub fn m1(p: &MelnikovParams, y0: f64) -> Result<f64> {
    if !(y0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(y0));
    }
    let (b, d, e, xi) = (p.b, p.d, p.e, p.xi);
    let (tm, tp) = (p.trace_minus(), p.trace_plus());
    let r2m = e * e + y0 * y0;
    let r2p = d * d + y0 * y0 * xi * xi;
    let acm = checked_acos(2.0 * e * e / r2m - 1.0)?;
    let acp = checked_acos(2.0 * d * d / r2p - 1.0)?;
    let minus = 4.0 * p.v1m * y0 - 2.0 * tm * (PI * r2m + e * y0) + tm * r2m * acm;
    let plus = (-2.0 * b * d * y0 * xi * tp - 4.0 * p.v1p * y0 * xi.powi(3) + b * tp * r2p * acp) / (b * xi.powi(3));
    Ok((minus - plus) / (2.0 * y0))
}

/// `M1` when `b11- = -b22-`.
pub fn m1_constrained(p: &MelnikovParams, y0: f64) -> Result<f64> {
    if !p.is_constrained() {
        return Err(Error::HypothesisViolated(format!(
            "constrained form needs b11- = -b22- (got {} and {})",
            p.b11m, p.b22m
        )));
    }
    if !(y0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(y0));
    }
    let (b, d, xi, tp) = (p.b, p.d, p.xi, p.trace_plus());
    let r2p = d * d + xi * xi * y0 * y0;
    let acp = checked_acos(2.0 * d * d / r2p - 1.0)?;
    Ok(2.0 * p.v1m + 2.0 * p.v1p / b + d * tp / (xi * xi) - tp * r2p * acp / (2.0 * y0 * xi.powi(3)))
}

/// Coefficients of the rescaled Melnikov function.
///
/// With `alpha = e xi`, `beta = d / alpha` and `y0 = alpha beta s0 / xi`
/// (that is `y0 = d s0 / xi`), the product `2 b beta xi^2 s0 M1(y0)` equals
/// `K0 s0 + K1 (f(beta s0) - 2 pi (beta^2 s0^2 + 1)) + K2 f(s0)` with
/// `f(s) = (s^2 + 1) acos(2/(s^2 + 1) - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedParams {
    pub alpha: f64,
    pub beta: f64,
    pub k_0: f64,
    pub k_1: f64,
    pub k_2: f64,
    /// Constrained case: `y0 M1(y0) = (d/xi) (k0 s0 + k1 f(s0))`.
    pub c_0: f64,
    pub c_1: f64,
}

impl ReducedParams {
    pub fn new(p: &MelnikovParams) -> Self {
        let (b, d, e, xi) = (p.b, p.d, p.e, p.xi);
        let (tm, tp) = (p.trace_minus(), p.trace_plus());
        let alpha = e * xi;
        let beta = d / alpha;
        ReducedParams {
            alpha,
            beta,
            k_0: 2.0 * d / (e * xi) * (xi * xi * (2.0 * p.v1m * b - b * e * tm + 2.0 * p.v1p) + b * d * tp),
            k_1: b * e * xi * xi * tm,
            k_2: -b * d * d * tp / (e * xi),
            c_0: 2.0 * p.v1m + 2.0 * p.v1p / b + d * tp / (xi * xi),
            c_1: -d * tp / (2.0 * xi * xi),
        }
    }

    /// Amplitude on the switching line corresponding to `s0`.
    pub fn amplitude(&self, xi: f64, s0: f64) -> f64 {
        self.alpha * self.beta * s0 / xi
    }
}

/// `(s^2 + 1) acos(2/(s^2 + 1) - 1)`.
pub fn arc_term(s: f64) -> f64 {
    let q = s * s + 1.0;
    q * clamped_acos(2.0 / q - 1.0)
}

pub fn m1_reduced(r: &ReducedParams, s0: f64) -> Result<f64> {
    if !(s0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(s0));
    }
    let bs = r.beta * s0;
    Ok(r.k_0 * s0 + r.k_1 * (arc_term(bs) - 2.0 * PI * (bs * bs + 1.0)) + r.k_2 * arc_term(s0))
}

/// `k0 s0 + k1 f(s0)`, proportional to `y0 M1(y0)` in the constrained case.
pub fn m1_constrained_reduced(r: &ReducedParams, s0: f64) -> Result<f64> {
    if !(s0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(s0));
    }
    Ok(r.c_0 * s0 + r.c_1 * arc_term(s0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Stability {
    Stable,
    Unstable,
    Undetermined,
}

impl Stability {
    fn from_sign(v: f64, positive_is_stable: bool) -> Self {
        if v.abs() < UNDETERMINED_TOL {
            Stability::Undetermined
        } else if (v > 0.0) == positive_is_stable {
            Stability::Stable
        } else {
            Stability::Unstable
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleRoot {
    pub y0: f64,
    pub flag: RootFlag,
    pub stability: Stability,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MelnikovReport {
    pub roots: Vec<CycleRoot>,
    pub infinity_stability: Stability,
    pub bound: usize,
}

impl MelnikovReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn check_bound(&self) -> Result<()> {
        if self.roots.len() > self.bound {
            return Err(Error::BoundViolated(format!("{} roots found, bound is {}", self.roots.len(), self.bound)));
        }
        Ok(())
    }
}

/// Roots of `M1` on `(lo, hi)`.
pub fn melnikov_roots(p: &MelnikovParams, lo: f64, hi: f64, opts: &RootOptions) -> Vec<(f64, RootFlag)> {
    find_roots(|y| m1(p, y).unwrap_or(f64::NAN), lo, hi, opts)
}

/// Stability labels for the roots of `M1` and for infinity.
///
/// The highest cycle and infinity follow the sign of `xi T- + T+`; in the
/// constrained case the single cycle follows the sign of `v1- + v1+/b`.
/// Other roots are labelled from the local sign change of `M1`
/// (stable when `M1` goes from negative to positive).
pub fn classify_stability(p: &MelnikovParams, roots: &[(f64, RootFlag)]) -> MelnikovReport {
    let constrained = p.is_constrained();
    let inf = p.infinity_expression();
    let mut sorted: Vec<(f64, RootFlag)> = roots.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n = sorted.len();
    let local = |y: f64| {
        let h = 1e-6 * y;
        let (l, r) = (m1(p, y - h).unwrap_or(f64::NAN), m1(p, y + h).unwrap_or(f64::NAN));
        if l < 0.0 && r > 0.0 {
            Stability::Stable
        } else if l > 0.0 && r < 0.0 {
            Stability::Unstable
        } else {
            Stability::Undetermined
        }
    };
    let roots = sorted
        .iter()
        .enumerate()
        .map(|(i, &(y0, flag))| {
            let stability = if constrained && n == 1 {
                Stability::from_sign(p.v1m + p.v1p / p.b, false)
            } else if i + 1 == n {
                match Stability::from_sign(inf, false) {
                    Stability::Undetermined => local(y0),
                    s => s,
                }
            } else {
                local(y0)
            };
            CycleRoot { y0, flag, stability }
        })
        .collect();
    MelnikovReport {
        roots,
        infinity_stability: Stability::from_sign(inf, true),
        bound: if constrained { 1 } else { 3 },
    }
}

/// Roots on `(lo, hi)` plus stability labels.
pub fn analyze_melnikov(p: &MelnikovParams, lo: f64, hi: f64, opts: &RootOptions) -> Result<MelnikovReport> {
    p.validate()?;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidDomain(format!("({lo}, {hi})")));
    }
    Ok(classify_stability(p, &melnikov_roots(p, lo, hi, opts)))
}

/// `(y0, M1(y0))` samples on a log grid.
pub fn sample_m1(p: &MelnikovParams, lo: f64, hi: f64, n: usize) -> Result<Vec<(f64, f64)>> {
    crate::roots::log_grid(lo, hi, n).into_iter().map(|y| m1(p, y).map(|v| (y, v))).collect()
}
