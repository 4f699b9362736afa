//! Filippov classification of the switching line `x = 0`.

use crate::error::{Error, Result, Side};
use crate::linalg::Vec2;
use crate::system::PwlSystem;
use serde::Serialize;

/// Lie derivatives with modulus below this are treated as zero.
pub const TANGENCY_TOL: f64 = 1e-12;
const DENOMINATOR_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RegionKind {
    Crossing,
    Sliding,
    Escaping,
    TangencyPlus,
    TangencyMinus,
    DoubleTangency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Visibility {
    Visible,
    Invisible,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldPoint {
    pub y: f64,
    pub side: Side,
    pub visibility: Visibility,
}

/// `(Z+ h, Z- h)` at `(0, y)`, i.e. the first components of both fields.
pub fn lie_derivatives(sys: &PwlSystem, y: f64) -> (f64, f64) {
    let p = Vec2::new(0.0, y);
    (sys.field(Side::Plus).eval(p).x, sys.field(Side::Minus).eval(p).x)
}

pub fn classify_point(sys: &PwlSystem, y: f64) -> RegionKind {
    let (hp, hm) = lie_derivatives(sys, y);
    let zp = hp.abs() <= TANGENCY_TOL;
    let zm = hm.abs() <= TANGENCY_TOL;
    match (zp, zm) {
        (true, true) => RegionKind::DoubleTangency,
        (true, false) => RegionKind::TangencyPlus,
        (false, true) => RegionKind::TangencyMinus,
        _ if hp * hm > 0.0 => RegionKind::Crossing,
        _ if hp < 0.0 => RegionKind::Sliding,
        _ => RegionKind::Escaping,
    }
}

/// Unnormalised sliding field `Z-h Z+ - Z+h Z-` (second component).
///
/// On the sliding region it is a positive multiple of the Filippov field;
/// it is defined everywhere on the line, which makes it convenient for
/// formal expansions.
pub fn sliding_field_numerator(sys: &PwlSystem, y: f64) -> f64 {
    let p = Vec2::new(0.0, y);
    let zp = sys.field(Side::Plus).eval(p);
    let zm = sys.field(Side::Minus).eval(p);
    zm.x * zp.y - zp.x * zm.y
}

/// Full Filippov sliding field `(Z-h Z+ - Z+h Z-)/(Z-h - Z+h)`, as `(x', y')`.
pub fn sliding_vector(sys: &PwlSystem, y: f64) -> Result<Vec2> {
    let p = Vec2::new(0.0, y);
    let zp = sys.field(Side::Plus).eval(p);
    let zm = sys.field(Side::Minus).eval(p);
    let den = zm.x - zp.x;
    if den.abs() <= DENOMINATOR_TOL {
        return Err(Error::DenominatorVanishes(y));
    }
    Ok((1.0 / den) * (zm.x * zp - zp.x * zm))
}

/// `dy/dt` of the sliding motion at `(0, y)`.
pub fn sliding_field(sys: &PwlSystem, y: f64) -> Result<f64> {
    match classify_point(sys, y) {
        RegionKind::Sliding | RegionKind::Escaping => {}
        _ => return Err(Error::NotSlidingRegion(y)),
    }
    let v = sliding_vector(sys, y)?;
    debug_assert!(v.x.abs() < 1e-12 * (1.0 + v.y.abs()));
    Ok(v.y)
}

/// Fold of one zone: zero of its (affine) first component on `x = 0`.
pub fn fold_of(sys: &PwlSystem, side: Side) -> Result<Option<FoldPoint>> {
    let f = sys.field(side);
    let (m12, u1) = (f.matrix.m12, f.offset.x);
    if m12 == 0.0 {
        return if u1 == 0.0 { Err(Error::LineOfTangency) } else { Ok(None) };
    }
    let y = -u1 / m12;
    // Second Lie derivative at a fold: m12 * (m22 y + u2).
    let second = m12 * (f.matrix.m22 * y + f.offset.y);
    let toward = match side {
        Side::Plus => second > 0.0,
        Side::Minus => second < 0.0,
    };
    let visibility = if toward { Visibility::Visible } else { Visibility::Invisible };
    Ok(Some(FoldPoint { y, side, visibility }))
}

/// Folds of both zones, minus side first.
pub fn find_folds(sys: &PwlSystem) -> Result<Vec<FoldPoint>> {
    let mut out = Vec::new();
    for side in [Side::Minus, Side::Plus] {
        if let Some(f) = fold_of(sys, side)? {
            out.push(f);
        }
    }
    Ok(out)
}
