//! Second-order analysis near the two fold points: the section maps
//! `S0..S3`, the Type I/II sliding and escaping cycle windows, and the
//! bound on crossing cycles that coexist with a sliding cycle.
//!
//! The maps are taken on `Lambda = {x <= 0, y = y_f1}`, where `y_f1` is the
//! visible fold of the minus zone. Starting points are `y_f1` (backward for
//! `S0`, forward for `S1`), the invisible plus fold `y_f2` (backward, `S2`)
//! and `y_f3 < y_f2`, the backward plus-zone image of `y_f1` (`S3`).

use crate::error::{Error, Result, Side};
use crate::linalg::{AffineField, Mat2, Vec2};
use crate::melnikov::{analyze_melnikov, CycleRoot, MelnikovParams, MelnikovReport};
use crate::roots::RootOptions;
use crate::sigma::{fold_of, sliding_field_numerator};
use crate::simulate::{SegmentKind, Stepper};
use crate::system::{canonicalize, PwlSystem};
use serde::Serialize;
use std::f64::consts::PI;

const CONSTRAINT_TOL: f64 = 1e-12;

/// Canonical scalars and the minus-zone entries the section maps use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlidingParams {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub e: f64,
    pub xi: f64,
    pub b11m: f64,
    pub b12m: f64,
    pub b21m: f64,
    pub b22m: f64,
    pub v1m: f64,
    pub v2m: f64,
    pub v1p: f64,
    pub c11m: f64,
    pub c21m: f64,
    pub c22m: f64,
    pub w2m: f64,
    pub epsilon: f64,
    #[serde(skip)]
    pub system: PwlSystem,
}

impl SlidingParams {
    pub fn from_canonical(sys: &PwlSystem) -> Result<Self> {
        let p = sys.order0.plus;
        let a = p.matrix.m11;
        let (b, c) = (p.matrix.m12, p.matrix.m21);
        let xi2 = -(a * a + b * c);
        if xi2 <= 0.0 {
            return Err(Error::HypothesisViolated("plus zone is not a center".into()));
        }
        let (b1, v1) = (sys.order1.minus.matrix, sys.order1.minus.offset);
        let (c2, w2) = (sys.order2.minus.matrix, sys.order2.minus.offset);
        Ok(SlidingParams {
            a,
            b,
            d: p.offset.y,
            e: sys.order0.minus.offset.y,
            xi: xi2.sqrt(),
            b11m: b1.m11,
            b12m: b1.m12,
            b21m: b1.m21,
            b22m: b1.m22,
            v1m: v1.x,
            v2m: v1.y,
            v1p: sys.order1.plus.offset.x,
            c11m: c2.m11,
            c21m: c2.m21,
            c22m: c2.m22,
            w2m: w2.y,
            epsilon: sys.epsilon,
            system: *sys,
        })
    }

    pub fn from_system(sys: &PwlSystem) -> Result<Self> {
        let (_, cov) = canonicalize(sys)?;
        Self::from_canonical(&cov.transform_system(sys))
    }

    pub fn is_constrained(&self) -> bool {
        (self.b11m + self.b22m).abs() <= CONSTRAINT_TOL * self.b11m.abs().max(self.b22m.abs()).max(1.0)
    }

    /// `c11- + c22-`.
    pub fn tau(&self) -> f64 {
        self.c11m + self.c22m
    }

    /// `b v1- + v1+`; negative for a sliding segment, positive for escaping.
    pub fn fold_gap(&self) -> f64 {
        self.b * self.v1m + self.v1p
    }

    /// The same system with time reversed and `y` reflected. The canonical
    /// form is kept with `a -> -a`; escaping segments become sliding ones.
    pub fn time_reversed(&self) -> Result<Self> {
        Self::from_canonical(&time_reversed_system(&self.system))
    }
}

/// `(x, y, t) -> (x, -y, -t)` applied to every order.
pub fn time_reversed_system(sys: &PwlSystem) -> PwlSystem {
    let r = |f: &AffineField| {
        let m = f.matrix;
        AffineField::new(Mat2::new(-m.m11, m.m12, m.m21, -m.m22), Vec2::new(-f.offset.x, f.offset.y))
    };
    let mut out = *sys;
    for pair in [&mut out.order0, &mut out.order1, &mut out.order2] {
        pair.plus = r(&pair.plus);
        pair.minus = r(&pair.minus);
    }
    out
}

/// `T = (v1- b + v1+)^2 / (2 b^2 e^2 pi)`. Type I sliding cycles need
/// `0 < c11- + c22- < T`, Type II need `T < c11- + c22- < 4T`.
pub fn thresholds(p: &SlidingParams) -> f64 {
    let g = p.fold_gap();
    g * g / (2.0 * p.b * p.b * p.e * p.e * PI)
}

/// `c0 + c1 eps + c2 eps^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Series {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Series {
    pub fn eval(&self, eps: f64) -> f64 {
        self.c0 + eps * (self.c1 + eps * self.c2)
    }
}

/// Second-order expansions of `S0..S3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SMaps {
    pub series: [Series; 4],
    /// Values at the parameters' `epsilon`.
    pub values: [f64; 4],
}

/// Expansions of the four section maps. Valid for any first-order minus
/// perturbation; with `b11- = -b22-` the first-order terms coincide.
pub fn s_maps(p: &SlidingParams) -> SMaps {
    let SlidingParams { b, e, b11m: b11, b12m: b12, b21m: b21, b22m: b22, v1m: v1, v2m: v2, c11m: c11, c21m: c21, c22m: c22, w2m: w2, .. } = *p;
    let tr = b11 + b22;
    let first_even = 2.0 * b21 * e - 2.0 * v2;
    let first_odd = 0.5 * PI * e * tr;
    let even = 16.0 * b21 * b21 * e - 16.0 * b21 * v2 + 16.0 * b22 * v1 - 16.0 * c21 * e + 16.0 * w2
        + (PI * PI - 16.0) * b11 * b11 * e
        - 16.0 * b11 * b22 * e
        + 2.0 * PI * PI * b11 * b22 * e
        + PI * PI * b22 * b22 * e;
    let odd = -2.0 * PI * b11 * b12 * e + 6.0 * PI * b11 * b21 * e - 4.0 * PI * b11 * v2 - 2.0 * PI * b12 * b22 * e
        + 6.0 * PI * b21 * b22 * e
        - 4.0 * PI * b22 * v2
        - 4.0 * PI * (c11 + c22) * e;
    let g = p.fold_gap();
    let shift = g * g / (2.0 * b * b * e);
    let s0 = Series { c0: -2.0 * e, c1: first_even + first_odd, c2: -(even + odd) / 8.0 };
    let s1 = Series { c0: -2.0 * e, c1: first_even - first_odd, c2: -(even - odd) / 8.0 };
    let s2 = Series { c2: s0.c2 - shift, ..s0 };
    let s3 = Series { c2: s0.c2 - 4.0 * shift, ..s0 };
    let series = [s0, s1, s2, s3];
    SMaps { series, values: series.map(|s| s.eval(p.epsilon)) }
}

/// Second-order coefficient of `S3` in its quoted form, which carries
/// `c11- + b22-` and `v2-` where `c11- + c22-` and `w2-` belong.
pub fn s3_eps2_as_quoted(p: &SlidingParams) -> f64 {
    let SlidingParams { b, e, b21m: b21, b22m: b22, v1m: v1, v2m: v2, c11m: c11, c21m: c21, .. } = *p;
    let g = p.fold_gap();
    (-4.0 * b * b * e * (v1 * b22 - v2 * b21 + v2) - 4.0 * g * g + PI * b * b * e * e * (c11 + b22)
        + 4.0 * b * b * e * e * (c21 - b21 * b21))
        / (2.0 * b * b * e)
}

/// Fold points on the switching line: visible minus fold, invisible plus
/// fold, and the backward plus-zone image of the former.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Folds {
    pub y1: f64,
    pub y2: f64,
    pub y3: f64,
}

fn fold_y(sys: &PwlSystem, side: Side) -> Result<f64> {
    fold_of(sys, side)?
        .map(|f| f.y)
        .ok_or_else(|| Error::HypothesisViolated(format!("no {side} fold")))
}

fn budget(st: &Stepper) -> f64 {
    1e3 * st.flow(Side::Plus).time_scale().max(st.flow(Side::Minus).time_scale()).max(1.0)
}

/// Folds of a canonical system with `y_f1 > y_f2`.
pub fn folds(sys: &PwlSystem) -> Result<Folds> {
    let st = Stepper::new(sys)?;
    let y1 = fold_y(sys, Side::Minus)?;
    let y2 = fold_y(sys, Side::Plus)?;
    if !(y1 > y2) {
        return Err(Error::HypothesisViolated(format!("minus fold {y1:e} is not above plus fold {y2:e}")));
    }
    let (_, q) = st
        .zone_exit(Side::Plus, Vec2::new(0.0, y1), -1.0, budget(&st))
        .ok_or(Error::NoReturn)?;
    Ok(Folds { y1, y2, y3: q.y })
}

/// Section values `S0..S3` computed with the exact minus-zone flow.
pub fn simulated_s_values(sys: &PwlSystem) -> Result<(Folds, [f64; 4])> {
    let f = folds(sys)?;
    let st = Stepper::new(sys)?;
    let b = budget(&st);
    let hit = |y: f64, side_of_level: f64, dir: f64| -> Result<f64> {
        st.level_crossing(Side::Minus, Vec2::new(0.0, y), f.y1, side_of_level, dir, b)
            .map(|(_, q)| q.x)
            .ok_or(Error::NoReturn)
    };
    let s = [hit(f.y1, -1.0, -1.0)?, hit(f.y1, 1.0, 1.0)?, hit(f.y2, -1.0, -1.0)?, hit(f.y3, -1.0, -1.0)?];
    Ok((f, s))
}

/// Indices of `values` sorted increasingly, written as `S3<S2<S1<S0`.
pub fn ordering_tag(values: &[f64; 4]) -> String {
    let mut idx = [0usize, 1, 2, 3];
    idx.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    idx.iter().map(|i| format!("S{i}")).collect::<Vec<_>>().join("<")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CycleKind {
    SlidingTypeI,
    SlidingTypeII,
    EscapingTypeI,
    EscapingTypeII,
    None,
}

impl CycleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CycleKind::SlidingTypeI => "SlidingTypeI",
            CycleKind::SlidingTypeII => "SlidingTypeII",
            CycleKind::EscapingTypeI => "EscapingTypeI",
            CycleKind::EscapingTypeII => "EscapingTypeII",
            CycleKind::None => "None",
        }
    }

    pub fn exists(&self) -> bool {
        *self != CycleKind::None
    }

    fn expected_ordering(&self) -> Option<&'static str> {
        match self {
            CycleKind::None => None,
            CycleKind::SlidingTypeI | CycleKind::EscapingTypeI => Some("S3<S2<S1<S0"),
            CycleKind::SlidingTypeII | CycleKind::EscapingTypeII => Some("S3<S1<S2<S0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlidingReport {
    /// Folds of the system in which the segment slides (time-reversed for
    /// escaping cases). `None` when `epsilon = 0` or the folds are absent.
    pub fold_y1: Option<f64>,
    pub fold_y2: Option<f64>,
    pub fold_y3: Option<f64>,
    pub s_values: [f64; 4],
    pub ordering: String,
    pub cycle: CycleKind,
    pub extra_crossing_bound: Option<u32>,
    pub threshold_lo: f64,
    pub threshold_hi: f64,
    /// Series ordering differs from the one the cycle type implies.
    pub ordering_disagrees: bool,
    pub reason: String,
}

impl SlidingReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn pseudo_equilibrium_inside(sys: &PwlSystem, lo: f64, hi: f64) -> bool {
    let n = 64;
    let s0 = sliding_field_numerator(sys, lo).signum();
    (1..=n).any(|i| {
        let y = lo + (hi - lo) * i as f64 / n as f64;
        sliding_field_numerator(sys, y).signum() != s0
    })
}

/// Classify the sliding or escaping cycle of a canonical system.
pub fn detect_sliding_cycle(p: &SlidingParams) -> SlidingReport {
    let t = thresholds(p);
    let mut report = SlidingReport {
        fold_y1: None,
        fold_y2: None,
        fold_y3: None,
        s_values: s_maps(p).values,
        ordering: String::new(),
        cycle: CycleKind::None,
        extra_crossing_bound: None,
        threshold_lo: t,
        threshold_hi: 4.0 * t,
        ordering_disagrees: false,
        reason: String::new(),
    };
    report.ordering = ordering_tag(&report.s_values);
    if !p.is_constrained() {
        report.reason = "b11- + b22- != 0: S1 falls outside [S3, S0], no sliding cycle".into();
        return report;
    }
    let gap = p.fold_gap();
    if gap == 0.0 {
        report.reason = "b v1- + v1+ = 0: folds coincide to first order".into();
        return report;
    }
    if !(p.d + p.b * p.e > 0.0) {
        report.reason = "d + b e <= 0".into();
        return report;
    }
    let escaping = gap > 0.0;
    let q = if escaping {
        match p.time_reversed() {
            Ok(q) => q,
            Err(e) => {
                report.reason = e.to_string();
                return report;
            }
        }
    } else {
        *p
    };
    let tau = q.tau();
    let kind = if tau > 0.0 && tau < t {
        1
    } else if tau > t && tau < 4.0 * t {
        2
    } else {
        0
    };
    let sm = s_maps(&q);
    report.s_values = sm.values;
    report.ordering = ordering_tag(&sm.values);
    if p.epsilon != 0.0 {
        if let Ok(f) = folds(&q.system) {
            report.fold_y1 = Some(f.y1);
            report.fold_y2 = Some(f.y2);
            report.fold_y3 = Some(f.y3);
            if pseudo_equilibrium_inside(&q.system, f.y2, f.y1) {
                report.reason = "pseudo-equilibrium inside the sliding segment".into();
                return report;
            }
        }
    }
    report.cycle = match (kind, escaping) {
        (1, false) => CycleKind::SlidingTypeI,
        (2, false) => CycleKind::SlidingTypeII,
        (1, true) => CycleKind::EscapingTypeI,
        (2, true) => CycleKind::EscapingTypeII,
        _ => CycleKind::None,
    };
    if report.cycle.exists() {
        report.extra_crossing_bound = Some(1);
        report.reason = format!("c11- + c22- = {tau:e} inside the Type {} window", if kind == 1 { "I" } else { "II" });
        if p.epsilon != 0.0 {
            report.ordering_disagrees = report.cycle.expected_ordering() != Some(report.ordering.as_str());
        }
    } else {
        report.reason = format!("c11- + c22- = {tau:e} outside (0, {t:e}) and ({t:e}, {:e})", 4.0 * t);
    }
    report
}

/// One loop of the orbit leaving the visible minus fold, followed until a
/// sliding segment brings it back to that fold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlidingLoop {
    pub kinds: Vec<SegmentKind>,
    pub y_start: f64,
    pub y_end: f64,
    pub period: f64,
}

impl SlidingLoop {
    pub fn closure(&self) -> f64 {
        (self.y_end - self.y_start).abs()
    }
}

/// Follow the orbit from `(0, y_f1)` through at most `max_segments`
/// pieces until a sliding segment ends at the minus fold.
pub fn sliding_loop(sys: &PwlSystem, max_segments: usize) -> Result<SlidingLoop> {
    let f = folds(sys)?;
    let st = Stepper::new(sys)?;
    let b = budget(&st);
    let mut y = f.y1;
    let mut side = Side::Minus;
    let mut kinds = Vec::new();
    let mut period = 0.0;
    for _ in 0..max_segments {
        let (dt, q) = st.zone_exit(side, Vec2::new(0.0, y), 1.0, b).ok_or(Error::NoReturn)?;
        kinds.push(match side {
            Side::Plus => SegmentKind::ZonePlus,
            Side::Minus => SegmentKind::ZoneMinus,
        });
        period += dt;
        y = q.y;
        if y > f.y2 && y < f.y1 {
            let s = st.slide(y, b)?;
            kinds.push(SegmentKind::Sliding);
            period += s.dt;
            if s.exit != Some(Side::Minus) {
                return Err(Error::UnexpectedRegion(format!("sliding segment ended at {:e}", s.y)));
            }
            return Ok(SlidingLoop { kinds, y_start: f.y1, y_end: s.y, period });
        }
        side = match side {
            Side::Plus => Side::Minus,
            Side::Minus => Side::Plus,
        };
    }
    Err(Error::MaxSegments(max_segments))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimultaneityReport {
    pub sliding: SlidingReport,
    pub crossing: Vec<CycleRoot>,
    pub verdict: String,
}

impl SimultaneityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Sliding cycle together with the crossing cycles of the constrained
/// Melnikov function on `domain`. More than one crossing root is an error.
pub fn simultaneity_report(sp: &SlidingParams, mp: &MelnikovParams, domain: (f64, f64)) -> Result<SimultaneityReport> {
    if !sp.is_constrained() || !mp.is_constrained() {
        return Err(Error::HypothesisViolated("b11- + b22- != 0".into()));
    }
    let sliding = detect_sliding_cycle(sp);
    let mel: MelnikovReport = analyze_melnikov(mp, domain.0, domain.1, &RootOptions::default())?;
    mel.check_bound()?;
    let verdict = match (sliding.cycle.exists(), mel.roots.len()) {
        (true, 1) => "simultaneous",
        (true, _) => "sliding only",
        (false, 1) => "crossing only",
        (false, _) => "none",
    };
    Ok(SimultaneityReport { sliding, crossing: mel.roots, verdict: verdict.into() })
}

/// One row of a sweep over `c11- + c22-`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub tau: f64,
    pub ordering: String,
    pub cycle: CycleKind,
}

/// Replace `c11-` so that `c11- + c22- = tau`, then classify.
pub fn sweep_point(p: &SlidingParams, tau: f64) -> Result<SweepRow> {
    let mut sys = p.system;
    sys.order2.minus.matrix.m11 = tau - sys.order2.minus.matrix.m22;
    let q = SlidingParams::from_canonical(&sys)?;
    let r = detect_sliding_cycle(&q);
    Ok(SweepRow { tau, ordering: r.ordering, cycle: r.cycle })
}

/// CSV with columns `parameter,ordering,cycle`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("parameter,ordering,cycle\n");
    for r in rows {
        out.push_str(&format!("{},{},{}\n", crate::io::fmt_f64(r.tau), r.ordering, r.cycle.as_str()));
    }
    out
}
