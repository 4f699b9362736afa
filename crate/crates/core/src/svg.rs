//! Phase portraits as plain SVG.

use crate::simulate::{SegmentKind, Trajectory};
use std::fmt::Write;

#[derive(Debug, Clone, Copy)]
pub struct Frame {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub width: f64,
    pub height: f64,
}

impl Frame {
    /// Bounding box of all samples, padded by 5%.
    pub fn fit(trajs: &[Trajectory], width: f64, height: f64) -> Self {
        let (mut x0, mut x1, mut y0, mut y1) = (-1e-3, 1e-3, -1e-3, 1e-3);
        for t in trajs {
            for &(_, x, y) in &t.samples {
                x0 = f64::min(x0, x);
                x1 = f64::max(x1, x);
                y0 = f64::min(y0, y);
                y1 = f64::max(y1, y);
            }
        }
        let (px, py) = (0.05 * (x1 - x0), 0.05 * (y1 - y0));
        Frame { x_min: x0 - px, x_max: x1 + px, y_min: y0 - py, y_max: y1 + py, width, height }
    }

    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        (
            (x - self.x_min) / (self.x_max - self.x_min) * self.width,
            (self.y_max - y) / (self.y_max - self.y_min) * self.height,
        )
    }
}

fn colour(kind: SegmentKind) -> &'static str {
    match kind {
        SegmentKind::ZonePlus => "#c0392b",
        SegmentKind::ZoneMinus => "#2471a3",
        SegmentKind::Sliding => "#1e8449",
    }
}

/// One polyline per trajectory segment, the switching line `x = 0`, and a
/// marker at each fold ordinate in `folds`.
pub fn phase_portrait(trajs: &[Trajectory], folds: &[f64], frame: &Frame) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#,
        w = frame.width,
        h = frame.height
    );
    let _ = writeln!(s, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let (sx, _) = frame.map(0.0, 0.0);
    let _ = writeln!(
        s,
        r##"<line class="switching-line" x1="{sx:.3}" y1="0" x2="{sx:.3}" y2="{:.3}" stroke="#555555" stroke-dasharray="4 3"/>"##,
        frame.height
    );
    for traj in trajs {
        for seg in &traj.segments {
            let pts: Vec<String> = traj
                .samples
                .iter()
                .filter(|&&(t, _, _)| t >= seg.t_start && t <= seg.t_end)
                .map(|&(_, x, y)| {
                    let (u, v) = frame.map(x, y);
                    format!("{u:.3},{v:.3}")
                })
                .collect();
            if pts.len() < 2 {
                continue;
            }
            let _ = writeln!(
                s,
                r#"<polyline class="{}" fill="none" stroke="{}" stroke-width="1" points="{}"/>"#,
                seg.kind.as_str(),
                colour(seg.kind),
                pts.join(" ")
            );
        }
    }
    for &y in folds {
        let (u, v) = frame.map(0.0, y);
        let _ = writeln!(s, r##"<circle class="fold" cx="{u:.3}" cy="{v:.3}" r="3" fill="#000000"/>"##);
    }
    s.push_str("</svg>\n");
    s
}
