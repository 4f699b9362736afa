//! Two-zone piecewise-linear systems, hypothesis checks and reduction to
//! canonical form.
//!
//! The switching line is `x = 0`. Each zone carries an `epsilon` expansion
//! `Z = Z_0 + eps Z_1 + eps^2 Z_2` of affine fields.

use crate::error::{Error, Result, Side};
use crate::linalg::{AffineField, Mat2, Vec2};
use serde::{Deserialize, Serialize};

/// Margin used for every strict sign test.
pub const SIGN_MARGIN: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ZonePair {
    pub plus: AffineField,
    pub minus: AffineField,
}

impl ZonePair {
    pub fn get(&self, side: Side) -> &AffineField {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    pub fn get_mut(&mut self, side: Side) -> &mut AffineField {
        match side {
            Side::Plus => &mut self.plus,
            Side::Minus => &mut self.minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PwlSystem {
    pub order0: ZonePair,
    #[serde(default)]
    pub order1: ZonePair,
    #[serde(default)]
    pub order2: ZonePair,
    #[serde(default)]
    pub epsilon: f64,
}

impl PwlSystem {
    pub fn unperturbed(plus: AffineField, minus: AffineField) -> Self {
        PwlSystem { order0: ZonePair { plus, minus }, ..Default::default() }
    }

    /// Field of one zone at an arbitrary value of the perturbation parameter.
    pub fn field_at(&self, side: Side, eps: f64) -> AffineField {
        let f0 = self.order0.get(side);
        let f1 = self.order1.get(side);
        let f2 = self.order2.get(side);
        AffineField::new(
            f0.matrix + eps * f1.matrix + (eps * eps) * f2.matrix,
            f0.offset + eps * f1.offset + (eps * eps) * f2.offset,
        )
    }

    /// Field of one zone at `self.epsilon`.
    pub fn field(&self, side: Side) -> AffineField {
        self.field_at(side, self.epsilon)
    }

    pub fn with_epsilon(&self, eps: f64) -> Self {
        PwlSystem { epsilon: eps, ..*self }
    }

    /// Reject non-finite entries, naming the offending field.
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() {
            return Err(Error::NonFinite("epsilon".into()));
        }
        for (name, pair) in [("order0", &self.order0), ("order1", &self.order1), ("order2", &self.order2)] {
            for side in [Side::Plus, Side::Minus] {
                let f = pair.get(side);
                if !f.matrix.is_finite() {
                    return Err(Error::NonFinite(format!("{name}.{side}.matrix")));
                }
                if !f.offset.is_finite() {
                    return Err(Error::NonFinite(format!("{name}.{side}.offset")));
                }
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let sys: PwlSystem = serde_path_to_error::deserialize(de).map_err(|e| Error::Parse {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })?;
        sys.validate()?;
        Ok(sys)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("system serializes")
    }

    /// Canonical system built from the five normal-form parameters.
    pub fn canonical(p: &CanonicalParams) -> Self {
        PwlSystem::unperturbed(
            AffineField::new(Mat2::new(p.a, p.b, p.c, -p.a), Vec2::new(0.0, p.d)),
            AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, p.e)),
        )
    }
}

/// Parameters of the canonical unperturbed system
/// `Z- = (-y, x + e)`, `Z+ = (a x + b y, c x - a y + d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
}

impl CanonicalParams {
    /// Frequency of the plus zone: `a^2 + b c = -xi^2`.
    pub fn xi(&self) -> f64 {
        (-(self.a * self.a + self.b * self.c)).sqrt()
    }

    /// The five strict sign conditions of the canonical form.
    pub fn check_signs(&self) -> Result<bool> {
        let disc = self.a * self.a + self.b * self.c;
        let tests = [("b", -self.b), ("c", self.c), ("d", self.d), ("e", self.e), ("a^2+bc", -disc)];
        let mut ok = true;
        for (name, v) in tests {
            strict_sign(name, v)?;
            ok &= v > 0.0;
        }
        Ok(ok)
    }
}

/// Returns `Ok(v > 0)` outside the margin and `BoundaryCase` inside it.
pub(crate) fn strict_sign(name: &str, v: f64) -> Result<bool> {
    if v.abs() <= SIGN_MARGIN {
        Err(Error::BoundaryCase { name: name.to_string(), value: v })
    } else {
        Ok(v > 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// Minus zone is a center whose equilibrium lies in `x < 0`.
    pub h1: bool,
    /// Plus zone is a center whose equilibrium is virtual (`x <= 0`).
    pub h2: bool,
    /// The canonical form exists and satisfies its sign constraints.
    pub h3: bool,
    pub canonical: Option<CanonicalParams>,
    pub notes: Vec<String>,
}

impl HypothesisReport {
    pub fn all(&self) -> bool {
        self.h1 && self.h2 && self.h3
    }
}

fn scale_of(f: &AffineField) -> f64 {
    f.matrix.max_abs().max(f.offset.x.abs()).max(f.offset.y.abs()).max(1.0)
}

/// Trace-free test, then center test: for `tr = 0`, `det > 0` is a center.
fn is_center(f: &AffineField) -> bool {
    let tol = SIGN_MARGIN * scale_of(f);
    f.matrix.trace().abs() <= tol && f.matrix.det() > tol
}

/// Evaluate the three standing hypotheses on the unperturbed system.
pub fn check_hypotheses(sys: &PwlSystem) -> Result<HypothesisReport> {
    sys.validate()?;
    let minus = sys.order0.minus;
    let plus = sys.order0.plus;
    let p_minus = minus.equilibrium().ok_or(Error::DegenerateLinearPart(Side::Minus))?;
    let p_plus = plus.equilibrium().ok_or(Error::DegenerateLinearPart(Side::Plus))?;
    let mut notes = Vec::new();

    let h1 = if is_center(&minus) {
        strict_sign("x of minus equilibrium", -p_minus.x)?
    } else {
        notes.push("minus zone is not a trace-free center".into());
        false
    };
    let h2 = if is_center(&plus) {
        // Virtual means the equilibrium sits in the closed half-plane x <= 0.
        strict_sign("x of plus equilibrium", -p_plus.x)?
    } else {
        notes.push("plus zone is not a trace-free center".into());
        false
    };

    let mut canonical = None;
    let h3 = if h1 {
        match canonicalize(sys) {
            Ok((p, _)) => {
                canonical = Some(p);
                true
            }
            Err(Error::HypothesisViolated(msg)) => {
                notes.push(msg);
                false
            }
            Err(e @ Error::BoundaryCase { .. }) => return Err(e),
            Err(e) => {
                notes.push(e.to_string());
                false
            }
        }
    } else {
        false
    };
    Ok(HypothesisReport { h1, h2, h3, canonical, notes })
}

/// Affine change of coordinates `Z = L (z - shift)` with time rescaled by
/// `rho` (`tau = rho t`). Orientation of the switching line is preserved:
/// the first row of `L` is `(rho, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChangeOfVariables {
    pub l: Mat2,
    pub shift: Vec2,
    pub rho: f64,
}

impl ChangeOfVariables {
    pub fn map_point(&self, p: Vec2) -> Vec2 {
        self.l * (p - self.shift)
    }

    pub fn unmap_point(&self, q: Vec2) -> Vec2 {
        self.l.inverse().expect("invertible change of variables") * q + self.shift
    }

    /// Canonical time corresponding to original time `t`.
    pub fn map_time(&self, t: f64) -> f64 {
        self.rho * t
    }

    pub fn transform_field(&self, f: &AffineField) -> AffineField {
        let linv = self.l.inverse().expect("invertible change of variables");
        let s = 1.0 / self.rho;
        AffineField::new(
            s * (self.l * f.matrix * linv),
            s * (self.l * (f.matrix * self.shift + f.offset)),
        )
    }

    /// Transform every order of a perturbed system (epsilon is kept).
    pub fn transform_system(&self, sys: &PwlSystem) -> PwlSystem {
        let t = |p: &ZonePair| ZonePair {
            plus: self.transform_field(&p.plus),
            minus: self.transform_field(&p.minus),
        };
        PwlSystem { order0: t(&sys.order0), order1: t(&sys.order1), order2: t(&sys.order2), epsilon: sys.epsilon }
    }
}

/// Reduce the unperturbed system to canonical form.
///
/// Both linear parts must be trace-free centers, the minus equilibrium
/// must be real and the plus one virtual, and the two folds must coincide.
pub fn canonicalize(sys: &PwlSystem) -> Result<(CanonicalParams, ChangeOfVariables)> {
    sys.validate()?;
    let minus = sys.order0.minus;
    let plus = sys.order0.plus;
    for (side, f) in [(Side::Minus, &minus), (Side::Plus, &plus)] {
        if f.matrix.det() == 0.0 {
            return Err(Error::DegenerateLinearPart(side));
        }
        let tr = f.matrix.trace();
        if tr.abs() > SIGN_MARGIN * scale_of(f) {
            return Err(Error::NotTraceFree(side, tr));
        }
    }
    let m = minus.matrix;
    let disc = m.m11 * m.m11 + m.m12 * m.m21;
    if disc >= -SIGN_MARGIN * scale_of(&minus) {
        return Err(Error::NonCenterMinus(disc));
    }
    if m.m12.abs() <= SIGN_MARGIN {
        return Err(Error::SwitchingLineNotPreserved);
    }
    let rho = (-disc).sqrt();
    let y_fold = -minus.offset.x / m.m12;
    let gap = plus.offset.x + plus.matrix.m12 * y_fold;
    if gap.abs() > SIGN_MARGIN * scale_of(&plus) {
        return Err(Error::FoldsMisaligned(gap));
    }
    let cov = ChangeOfVariables {
        l: Mat2::new(rho, 0.0, -m.m11, -m.m12),
        shift: Vec2::new(0.0, y_fold),
        rho,
    };
    let zp = cov.transform_field(&plus);
    let zm = cov.transform_field(&minus);
    let params = CanonicalParams {
        a: zp.matrix.m11,
        b: zp.matrix.m12,
        c: zp.matrix.m21,
        d: zp.offset.y,
        e: zm.offset.y,
    };
    if !params.check_signs()? {
        return Err(Error::HypothesisViolated(format!(
            "canonical parameters violate sign constraints: {params:?}"
        )));
    }
    Ok((params, cov))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex1() -> CanonicalParams {
        CanonicalParams { a: 1.0, b: -1.0, c: 1.01, d: 0.1, e: 0.55 }
    }

    #[test]
    fn canonical_example_passes_all() {
        let r = check_hypotheses(&PwlSystem::canonical(&ex1())).unwrap();
        assert!(r.h1 && r.h2 && r.h3);
        let p = r.canonical.unwrap();
        assert!((p.c - 1.01).abs() < 1e-14 && (p.e - 0.55).abs() < 1e-14);
    }

    #[test]
    fn identical_rotations_canonicalize() {
        let f = AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, 1.0));
        let sys = PwlSystem::unperturbed(f, f);
        let r = check_hypotheses(&sys).unwrap();
        // Plus equilibrium (-1, 0) lies in x <= 0: virtual.
        assert!(r.h1 && r.h2 && r.h3);
        let (p, _) = canonicalize(&sys).unwrap();
        for (got, want) in [(p.a, 0.0), (p.b, -1.0), (p.c, 1.0), (p.d, 1.0), (p.e, 1.0)] {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn saddle_plus_zone_fails() {
        let minus = AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, 1.0));
        let plus = AffineField::new(Mat2::new(1.0, -1.0, 0.5, -1.0), Vec2::new(0.0, 1.0));
        let r = check_hypotheses(&PwlSystem::unperturbed(plus, minus)).unwrap();
        assert!(!r.h2 && !r.h3);
    }

    #[test]
    fn vertical_minus_dynamics_rejected() {
        let minus = AffineField::new(Mat2::new(1.0, 0.0, 0.0, -1.0), Vec2::new(0.0, 1.0));
        let plus = AffineField::new(Mat2::new(0.0, -1.0, 1.0, 0.0), Vec2::new(0.0, 1.0));
        assert!(canonicalize(&PwlSystem::unperturbed(plus, minus)).is_err());
        let minus = AffineField::new(Mat2::new(0.0, 0.0, 1.0, 0.0), Vec2::new(0.0, 1.0));
        assert!(matches!(
            canonicalize(&PwlSystem::unperturbed(plus, minus)),
            Err(Error::DegenerateLinearPart(Side::Minus))
        ));
    }

    #[test]
    fn boundary_values_are_flagged() {
        let mut p = ex1();
        p.d = 1e-12;
        assert!(matches!(p.check_signs(), Err(Error::BoundaryCase { .. })));
    }

    #[test]
    fn json_roundtrip_and_diagnostics() {
        let sys = PwlSystem::canonical(&ex1()).with_epsilon(0.01);
        let back = PwlSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(sys, back);
        let bad = r#"{"order0": {"plus": {"matrix": [1, 2, 3], "offset": [0, 1]}}}"#;
        match PwlSystem::from_json(bad) {
            Err(Error::Parse { path, .. }) => assert!(path.contains("order0.plus.matrix"), "{path}"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
