//! Event-driven simulation of the full perturbed Filippov system.
//!
//! Inside a zone the affine flow is evaluated in closed form and the next
//! hit of `x = 0` is isolated exactly. On the switching line the point is
//! classified; crossing points switch zone, sliding points follow the
//! Filippov sliding field up to the end of the sliding segment.

use crate::error::{Error, Result, Side};
use crate::flow::AffineFlow;
use crate::linalg::Vec2;
use crate::numerics::adaptive_simpson;
use crate::sigma::{classify_point, fold_of, lie_derivatives, sliding_vector, RegionKind};
use crate::system::PwlSystem;
use serde::Serialize;

const FOLD_SNAP: f64 = 1e-10;
const STALL_DT: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SegmentKind {
    ZonePlus,
    ZoneMinus,
    Sliding,
}

impl SegmentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SegmentKind::ZonePlus => "ZonePlus",
            SegmentKind::ZoneMinus => "ZoneMinus",
            SegmentKind::Sliding => "Sliding",
        }
    }

    fn zone(side: Side) -> Self {
        match side {
            Side::Plus => SegmentKind::ZonePlus,
            Side::Minus => SegmentKind::ZoneMinus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Segment {
    pub kind: SegmentKind,
    pub t_start: f64,
    pub t_end: f64,
}

/// Why a simulation stopped before or at `t_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EndReason {
    TimeLimit,
    DoubleTangency,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    /// `(t, x, y)`, strictly increasing in `t`.
    pub samples: Vec<(f64, f64, f64)>,
    pub segments: Vec<Segment>,
    pub end: EndReason,
}

impl Trajectory {
    pub fn kinds(&self) -> Vec<SegmentKind> {
        self.segments.iter().map(|s| s.kind).collect()
    }

    fn kind_at(&self, t: f64) -> SegmentKind {
        self.segments
            .iter()
            .find(|s| t <= s.t_end)
            .or(self.segments.last())
            .map(|s| s.kind)
            .unwrap_or(SegmentKind::ZoneMinus)
    }

    /// CSV with columns `t,x,y,segment_kind`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,y,segment_kind\n");
        for &(t, x, y) in &self.samples {
            out.push_str(&format!(
                "{},{},{},{}\n",
                crate::io::fmt_f64(t),
                crate::io::fmt_f64(x),
                crate::io::fmt_f64(y),
                self.kind_at(t).as_str()
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimOptions {
    pub max_segments: usize,
    pub event_tol: f64,
    /// Time between stored samples inside a segment.
    pub sample_dt: f64,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { max_segments: 10_000, event_tol: 1e-12, sample_dt: 0.02 }
    }
}

/// Motion state on or off the switching line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mode {
    Zone(Side),
    Sliding,
}

/// Result of following a sliding segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlideEnd {
    pub dt: f64,
    pub y: f64,
    /// Zone whose field is tangent at the end point, if an end was reached.
    pub exit: Option<Side>,
}

/// Closed-form zone flows of one system, with event helpers.
#[derive(Debug, Clone)]
pub struct Stepper {
    sys: PwlSystem,
    plus: AffineFlow,
    minus: AffineFlow,
    t_min: f64,
}

impl Stepper {
    pub fn new(sys: &PwlSystem) -> Result<Self> {
        sys.validate()?;
        let plus = AffineFlow::new(&sys.field(Side::Plus)).ok_or(Error::DegenerateLinearPart(Side::Plus))?;
        let minus = AffineFlow::new(&sys.field(Side::Minus)).ok_or(Error::DegenerateLinearPart(Side::Minus))?;
        let t_min = 1e-13 * plus.time_scale().min(minus.time_scale());
        Ok(Stepper { sys: *sys, plus, minus, t_min })
    }

    pub fn system(&self) -> &PwlSystem {
        &self.sys
    }

    pub fn flow(&self, side: Side) -> &AffineFlow {
        match side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// First hit of `x = 0` by the zone flow from `p`, running in time
    /// direction `dir` for at most `budget`. Returns the signed time and
    /// the hit point (with `x` set to exactly 0).
    pub fn zone_exit(&self, side: Side, p: Vec2, dir: f64, budget: f64) -> Option<(f64, Vec2)> {
        let fl = self.flow(side);
        let sigma = match side {
            Side::Plus => 1.0,
            Side::Minus => -1.0,
        };
        let t = fl.signal(p, 0).first_crossing(0.0, sigma, dir, budget, self.t_min)?;
        let q = fl.state(p, t);
        Some((t, Vec2::new(0.0, q.y)))
    }

    /// First time (sign `dir`) the zone flow from `p` crosses the level
    /// `y = level`, leaving the side `side_of_level`.
    pub fn level_crossing(&self, side: Side, p: Vec2, level: f64, side_of_level: f64, dir: f64, budget: f64) -> Option<(f64, Vec2)> {
        let fl = self.flow(side);
        let t = fl.signal(p, 1).first_crossing(level, side_of_level, dir, budget, self.t_min)?;
        let q = fl.state(p, t);
        Some((t, Vec2::new(q.x, level)))
    }

    /// How motion continues from `(0, y)` on the switching line.
    pub fn decide(&self, y: f64) -> Result<Mode> {
        let region = classify_point(&self.sys, y);
        if matches!(region, RegionKind::Crossing | RegionKind::TangencyPlus | RegionKind::TangencyMinus) {
            for side in [Side::Plus, Side::Minus] {
                if let Some(f) = fold_of(&self.sys, side).ok().flatten() {
                    if (y - f.y).abs() < FOLD_SNAP && region != RegionKind::Crossing {
                        let dy = 1e-9 * y.abs().max(1.0);
                        let sliding_next = [y - dy, y + dy]
                            .iter()
                            .any(|&z| classify_point(&self.sys, z) == RegionKind::Sliding);
                        let moving_in = sliding_vector(&self.sys, y)
                            .map(|v| {
                                let inward = if classify_point(&self.sys, y - dy) == RegionKind::Sliding { -1.0 } else { 1.0 };
                                v.y * inward > 0.0
                            })
                            .unwrap_or(false);
                        if sliding_next && moving_in {
                            return Ok(Mode::Sliding);
                        }
                    }
                }
            }
        }
        let (hp, hm) = lie_derivatives(&self.sys, y);
        Ok(match region {
            RegionKind::DoubleTangency => return Err(Error::DoubleTangency(y)),
            RegionKind::Sliding | RegionKind::Escaping => Mode::Sliding,
            RegionKind::Crossing => Mode::Zone(if hp > 0.0 { Side::Plus } else { Side::Minus }),
            RegionKind::TangencyPlus => Mode::Zone(if hm > 0.0 { Side::Plus } else { Side::Minus }),
            RegionKind::TangencyMinus => Mode::Zone(if hp > 0.0 { Side::Plus } else { Side::Minus }),
        })
    }

    /// `dy/dt` of the Filippov sliding motion, defined on sliding and
    /// escaping segments.
    pub fn sliding_speed(&self, y: f64) -> Result<f64> {
        Ok(sliding_vector(&self.sys, y)?.y)
    }

    /// Follow the sliding motion from `y` for at most `budget` time.
    pub fn slide(&self, y: f64, budget: f64) -> Result<SlideEnd> {
        let v0 = self.sliding_speed(y)?;
        if v0 == 0.0 {
            return Ok(SlideEnd { dt: budget, y, exit: None });
        }
        let dir = v0.signum();
        // Segment ends: zeros of the affine Lie derivatives ahead of y.
        let mut end: Option<(f64, Side)> = None;
        for side in [Side::Plus, Side::Minus] {
            let f = self.sys.field(side);
            if f.matrix.m12 != 0.0 {
                let yz = -f.offset.x / f.matrix.m12;
                if (yz - y) * dir >= 0.0 && end.map_or(true, |(ye, _)| (yz - y).abs() < (ye - y).abs()) {
                    end = Some((yz, side));
                }
            }
        }
        // Pseudo-equilibria: zeros of the numerator of the sliding field.
        let stop = self.pseudo_equilibrium_between(y, end.map(|e| e.0).unwrap_or(y + dir * 1e6));
        let speed = |z: f64| self.sliding_speed(z).unwrap_or(f64::NAN);
        let time_to = |z: f64| adaptive_simpson(&|s: f64| 1.0 / speed(s), y, z, 1e-13).abs();
        match (stop, end) {
            (None, Some((ye, side))) => {
                let dt = time_to(ye);
                if dt <= budget {
                    return Ok(SlideEnd { dt, y: ye, exit: Some(side) });
                }
                Ok(SlideEnd { dt: budget, y: self.invert_time(y, ye, budget, &time_to), exit: None })
            }
            (Some(ys), _) => {
                // Asymptotic approach: never reaches ys in finite time.
                let target = self.invert_time(y, ys, budget, &time_to);
                Ok(SlideEnd { dt: budget, y: target, exit: None })
            }
            (None, None) => Err(Error::UnexpectedRegion("unbounded sliding segment".into())),
        }
    }

    fn invert_time(&self, y: f64, limit: f64, budget: f64, time_to: &dyn Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (y, limit);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if time_to(mid) < budget {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    fn pseudo_equilibrium_between(&self, y0: f64, y1: f64) -> Option<f64> {
        // Numerator Z-h Z+_y - Z+h Z-_y is quadratic in y.
        let num = |y: f64| crate::sigma::sliding_field_numerator(&self.sys, y);
        let (n0, n1, n2) = (num(0.0), num(1.0), num(-1.0));
        let c2 = 0.5 * (n1 + n2) - n0;
        let c1 = 0.5 * (n1 - n2);
        let c0 = n0;
        let mut cands = Vec::new();
        if c2.abs() > 1e-300 {
            let disc = c1 * c1 - 4.0 * c2 * c0;
            if disc >= 0.0 {
                let q = -0.5 * (c1 + c1.signum() * disc.sqrt());
                if q != 0.0 {
                    cands.push(q / c2);
                    cands.push(c0 / q);
                }
            }
        } else if c1 != 0.0 {
            cands.push(-c0 / c1);
        }
        let (lo, hi) = if y0 < y1 { (y0, y1) } else { (y1, y0) };
        cands
            .into_iter()
            .filter(|&r| r > lo && r < hi)
            .min_by(|a, b| (a - y0).abs().total_cmp(&(b - y0).abs()))
    }
}

fn push_sample(samples: &mut Vec<(f64, f64, f64)>, t: f64, p: Vec2) {
    if samples.last().map_or(true, |s| t > s.0) {
        samples.push((t, p.x, p.y));
    }
}

/// Simulate from `start` for time `t_max`.
pub fn simulate(sys: &PwlSystem, start: Vec2, t_max: f64, opts: &SimOptions) -> Result<Trajectory> {
    if !(t_max > 0.0) {
        return Err(Error::InvalidDomain(format!("t_max = {t_max}")));
    }
    let st = Stepper::new(sys)?;
    let mut samples = Vec::new();
    let mut segments = Vec::new();
    let mut t = 0.0;
    let mut p = start;
    push_sample(&mut samples, t, p);
    let mut mode = if p.x > 0.0 {
        Mode::Zone(Side::Plus)
    } else if p.x < 0.0 {
        Mode::Zone(Side::Minus)
    } else {
        match st.decide(p.y) {
            Ok(m) => m,
            Err(Error::DoubleTangency(_)) => {
                return Ok(Trajectory { samples, segments, end: EndReason::DoubleTangency });
            }
            Err(e) => return Err(e),
        }
    };
    let mut short = 0usize;
    while t < t_max {
        if segments.len() >= opts.max_segments {
            return Err(Error::MaxSegments(opts.max_segments));
        }
        let budget = t_max - t;
        let (dt, next, kind, next_mode) = match mode {
            Mode::Zone(side) => {
                let fl = *st.flow(side);
                match st.zone_exit(side, p, 1.0, budget) {
                    Some((dt, q)) => {
                        let m = st.decide(q.y);
                        sample_zone(&mut samples, &fl, p, t, dt, opts.sample_dt);
                        (dt, q, SegmentKind::zone(side), m)
                    }
                    None => {
                        sample_zone(&mut samples, &fl, p, t, budget, opts.sample_dt);
                        let q = fl.state(p, budget);
                        segments.push(Segment { kind: SegmentKind::zone(side), t_start: t, t_end: t_max });
                        push_sample(&mut samples, t_max, q);
                        return Ok(Trajectory { samples, segments, end: EndReason::TimeLimit });
                    }
                }
            }
            Mode::Sliding => {
                let s = st.slide(p.y, budget)?;
                sample_slide(&st, &mut samples, p.y, s.y, t, opts.sample_dt);
                let q = Vec2::new(0.0, s.y);
                let m = match s.exit {
                    Some(side) => Ok(Mode::Zone(side)),
                    None => Ok(Mode::Sliding),
                };
                (s.dt, q, SegmentKind::Sliding, m)
            }
        };
        segments.push(Segment { kind, t_start: t, t_end: (t + dt).min(t_max) });
        t += dt;
        p = next;
        push_sample(&mut samples, t, p);
        if dt < STALL_DT {
            short += 1;
            if short >= 3 {
                return Err(Error::EventStall(t));
            }
        } else {
            short = 0;
        }
        match next_mode {
            Ok(m) => mode = m,
            Err(Error::DoubleTangency(_)) => {
                return Ok(Trajectory { samples, segments, end: EndReason::DoubleTangency });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Trajectory { samples, segments, end: EndReason::TimeLimit })
}

fn sample_zone(samples: &mut Vec<(f64, f64, f64)>, fl: &AffineFlow, p: Vec2, t0: f64, dt: f64, stride: f64) {
    let n = (dt / stride).ceil().max(1.0) as usize;
    for i in 1..n {
        let s = dt * i as f64 / n as f64;
        push_sample(samples, t0 + s, fl.state(p, s));
    }
}

fn sample_slide(st: &Stepper, samples: &mut Vec<(f64, f64, f64)>, y0: f64, y1: f64, t0: f64, stride: f64) {
    let n = 16usize;
    let speed = |z: f64| st.sliding_speed(z).unwrap_or(f64::NAN);
    let mut t = t0;
    let mut prev = y0;
    for i in 1..n {
        let y = y0 + (y1 - y0) * i as f64 / n as f64;
        t += adaptive_simpson(&|s: f64| 1.0 / speed(s), prev, y, 1e-13).abs();
        prev = y;
        if t.is_finite() && stride > 0.0 {
            push_sample(samples, t, Vec2::new(0.0, y));
        }
    }
}

/// First return of the orbit through `(0, y0)` to the upper half of the
/// switching line, after crossing the lower half.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstReturn {
    pub y: f64,
    pub time: f64,
    pub kinds: Vec<SegmentKind>,
}

pub fn first_return(sys: &PwlSystem, y0: f64) -> Result<FirstReturn> {
    if !(y0 > 0.0) {
        return Err(Error::NonPositiveAmplitude(y0));
    }
    let st = Stepper::new(sys)?;
    let budget = 1e4 * st.flow(Side::Plus).time_scale().max(st.flow(Side::Minus).time_scale()).max(1.0);
    let mut mode = st.decide(y0)?;
    let mut p = Vec2::new(0.0, y0);
    let mut time = 0.0;
    let mut kinds = Vec::new();
    let mut crossed_lower = false;
    for _ in 0..16 {
        let side = match mode {
            Mode::Zone(s) => s,
            Mode::Sliding => return Err(Error::NoReturn),
        };
        let (dt, q) = st.zone_exit(side, p, 1.0, budget).ok_or(Error::NoReturn)?;
        kinds.push(SegmentKind::zone(side));
        time += dt;
        p = q;
        if q.y < 0.0 {
            crossed_lower = true;
        } else if crossed_lower {
            return Ok(FirstReturn { y: q.y, time, kinds });
        }
        mode = st.decide(q.y)?;
    }
    Err(Error::NoReturn)
}

/// First-return displacement `y0 - y_return`; `eps * M1(y0)` to first order.
pub fn displacement(sys: &PwlSystem, y0: f64) -> Result<f64> {
    Ok(y0 - first_return(sys, y0)?.y)
}

/// Half-return through one zone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfReturn {
    pub y_in: f64,
    pub y_out: f64,
    /// Forward (positive) for the minus zone, backward (negative) for the plus zone.
    pub time: f64,
}

/// Minus zone: forward from `(0, y_in)`, `y_in > 0`. Plus zone: backward
/// from `(0, y_in)`, `y_in > 0`.
pub fn half_return(sys: &PwlSystem, side: Side, y_in: f64) -> Result<HalfReturn> {
    if !(y_in > 0.0) {
        return Err(Error::NonPositiveAmplitude(y_in));
    }
    let st = Stepper::new(sys)?;
    let dir = match side {
        Side::Minus => 1.0,
        Side::Plus => -1.0,
    };
    let budget = 1e4 * st.flow(side).time_scale().max(1.0);
    let (time, q) = st.zone_exit(side, Vec2::new(0.0, y_in), dir, budget).ok_or(Error::NoReturn)?;
    Ok(HalfReturn { y_in, y_out: q.y, time })
}
