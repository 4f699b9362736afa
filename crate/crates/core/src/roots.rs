//! Bracketing root search on log-spaced grids.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RootFlag {
    Simple,
    /// Derivative too small to rule out a multiple root.
    Suspect,
}

#[derive(Debug, Clone, Copy)]
pub struct RootOptions {
    pub grid: usize,
    pub tol: f64,
    /// `|f'|` below `suspect_rel * scale` marks a root as suspect.
    pub suspect_rel: f64,
}

impl Default for RootOptions {
    fn default() -> Self {
        RootOptions { grid: 4096, tol: 1e-12, suspect_rel: 1e-6 }
    }
}

/// `n` points geometrically spaced on `[lo, hi]`, endpoints included.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Bisection on a bracket `f(lo) f(hi) < 0`, down to `tol * max(1, |x|)`
/// or machine resolution.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= tol * mid.abs().max(1.0) * 1e-3 {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (flo < 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All sign changes of `f` on a log grid over `[lo, hi]`, refined by bisection.
pub fn find_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: &RootOptions) -> Vec<(f64, RootFlag)> {
    let xs = log_grid(lo, hi, opts.grid);
    let fs: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut mags: Vec<f64> = fs.iter().filter(|v| v.is_finite()).map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let scale = mags.get(mags.len() / 2).copied().unwrap_or(1.0).max(1.0);
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        let (f0, f1) = (fs[i], fs[i + 1]);
        if !(f0.is_finite() && f1.is_finite()) {
            continue;
        }
        let r = if f0 == 0.0 {
            if i > 0 && fs[i - 1] != 0.0 && (fs[i - 1] < 0.0) != (f1 < 0.0) {
                xs[i]
            } else {
                continue;
            }
        } else if f1 != 0.0 && (f0 < 0.0) != (f1 < 0.0) {
            bisect(&f, xs[i], xs[i + 1], opts.tol)
        } else {
            continue;
        };
        let h = 1e-6 * r.max(1e-3);
        let slope = (f(r + h) - f(r - h)) / (2.0 * h);
        let flag = if slope.abs() * r.max(1.0) < opts.suspect_rel * scale {
            RootFlag::Suspect
        } else {
            RootFlag::Simple
        };
        out.push((r, flag));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_root() {
        let r = find_roots(|y| y - 5.0, 1.0, 10.0, &RootOptions::default());
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - 5.0).abs() < 1e-12);
        assert_eq!(r[0].1, RootFlag::Simple);
    }

    #[test]
    fn grid_endpoints() {
        let g = log_grid(1e-3, 1e3, 7);
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!((g[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn flat_crossing_is_suspect() {
        let r = find_roots(|y| (y - 2.0).powi(3), 1.0, 10.0, &RootOptions { grid: 101, ..Default::default() });
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].1, RootFlag::Suspect);
    }
}
