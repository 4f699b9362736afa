//! Wronskians of ordered function families and numeric ECT checks.

use crate::error::{Error, Result};
use crate::roots::log_grid;
use serde::Serialize;
use std::f64::consts::PI;
use std::sync::Arc;

type Analytic = Arc<dyn Fn(f64, usize) -> Option<f64> + Send + Sync>;
type Plain = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// One member: either with analytic derivatives (`None` past the highest
/// available order) or value-only.
#[derive(Clone)]
pub enum Member {
    Analytic(Analytic),
    Plain(Plain),
}

#[derive(Clone)]
pub struct FunctionFamily {
    pub members: Vec<Member>,
    pub interval: (f64, f64),
}

impl std::fmt::Debug for FunctionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionFamily")
            .field("members", &self.members.len())
            .field("interval", &self.interval)
            .finish()
    }
}

/// `2 (s^2 + 1) atan(s)`, which equals `(s^2+1) acos(2/(s^2+1) - 1)` for
/// `s >= 0`, and its derivatives up to order four.
fn arc_derivative(s: f64, k: usize) -> Option<f64> {
    let q = 1.0 + s * s;
    Some(match k {
        0 => 2.0 * q * s.atan(),
        1 => 4.0 * s * s.atan() + 2.0,
        2 => 4.0 * s.atan() + 4.0 * s / q,
        3 => 8.0 / (q * q),
        4 => -32.0 * s / (q * q * q),
        _ => return None,
    })
}

impl FunctionFamily {
    pub fn new(interval: (f64, f64)) -> Self {
        FunctionFamily { members: Vec::new(), interval }
    }

    pub fn with_analytic(mut self, f: impl Fn(f64, usize) -> Option<f64> + Send + Sync + 'static) -> Self {
        self.members.push(Member::Analytic(Arc::new(f)));
        self
    }

    pub fn with_plain(mut self, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.members.push(Member::Plain(Arc::new(f)));
        self
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `1, s, ..., s^deg`.
    pub fn monomials(deg: usize, interval: (f64, f64)) -> Self {
        let mut fam = FunctionFamily::new(interval);
        for n in 0..=deg {
            fam = fam.with_analytic(move |s, k| {
                if k > n {
                    return Some(0.0);
                }
                let falling: f64 = (0..k).map(|i| (n - i) as f64).product();
                Some(falling * s.powi((n - k) as i32))
            });
        }
        fam
    }

    /// `f0 = s`, `f1 = 1 + beta^2 s^2`, `f2 = F(s)`, `f3 = F(beta s)` with
    /// `F(s) = (s^2+1) acos(2/(s^2+1) - 1)`: the span containing the
    /// rescaled Melnikov function.
    pub fn melnikov(beta: f64, interval: (f64, f64)) -> Self {
        FunctionFamily::new(interval)
            .with_analytic(|s, k| Some(match k {
                0 => s,
                1 => 1.0,
                _ => 0.0,
            }))
            .with_analytic(move |s, k| Some(match k {
                0 => 1.0 + beta * beta * s * s,
                1 => 2.0 * beta * beta * s,
                2 => 2.0 * beta * beta,
                _ => 0.0,
            }))
            .with_analytic(arc_derivative)
            .with_analytic(move |s, k| arc_derivative(beta * s, k).map(|v| v * beta.powi(k as i32)))
    }

    /// Constrained case: `s` and `F(s)`.
    pub fn constrained(interval: (f64, f64)) -> Self {
        FunctionFamily::new(interval)
            .with_analytic(|s, k| Some(match k {
                0 => s,
                1 => 1.0,
                _ => 0.0,
            }))
            .with_analytic(arc_derivative)
    }

    /// Constrained pair in the form quoted with its Wronskian:
    /// `s` and `(s^2+1) acos(1 - 2/(s^2+1))`, the latter equal to
    /// `(s^2+1) (pi - 2 atan s)` for `s >= 0`.
    pub fn constrained_quoted(interval: (f64, f64)) -> Self {
        FunctionFamily::new(interval)
            .with_analytic(|s, k| Some(match k {
                0 => s,
                1 => 1.0,
                _ => 0.0,
            }))
            .with_analytic(|s, k| {
                let poly = match k {
                    0 => PI * (1.0 + s * s),
                    1 => 2.0 * PI * s,
                    2 => 2.0 * PI,
                    _ => 0.0,
                };
                arc_derivative(s, k).map(|a| poly - a)
            })
    }

    /// `k`-th derivative of member `j`; analytic if available, otherwise a
    /// fourth-order central difference.
    pub fn derivative(&self, j: usize, k: usize, s: f64) -> Result<f64> {
        match &self.members[j] {
            Member::Analytic(f) => match f(s, k) {
                Some(v) => Ok(v),
                None => Err(Error::DerivativeUnavailable(k, j)),
            },
            Member::Plain(f) => self.numeric_derivative(&|x| f(x), j, k, s),
        }
    }

    /// Central-difference derivative of the member's value function.
    pub fn numeric_member_derivative(&self, j: usize, k: usize, s: f64) -> Result<f64> {
        match &self.members[j] {
            Member::Analytic(f) => {
                let g = |x: f64| f(x, 0).unwrap_or(f64::NAN);
                self.numeric_derivative(&g, j, k, s)
            }
            Member::Plain(f) => self.numeric_derivative(&|x| f(x), j, k, s),
        }
    }

    fn numeric_derivative(&self, f: &dyn Fn(f64) -> f64, j: usize, k: usize, s: f64) -> Result<f64> {
        if k == 0 {
            return Ok(f(s));
        }
        if k > 4 {
            return Err(Error::DerivativeUnavailable(k, j));
        }
        // Step balancing truncation O(h^4) against rounding O(u / h^k).
        let mut h = f64::EPSILON.powf(1.0 / (4.0 + k as f64)) * s.abs().max(1.0);
        let (lo, hi) = self.interval;
        h = h.min((s - lo) / 4.0).min((hi - s) / 4.0);
        if !(h > 0.0) {
            return Err(Error::DerivativeUnavailable(k, j));
        }
        let v = |i: i32| f(s + i as f64 * h);
        let d = match k {
            1 => (v(-2) - 8.0 * v(-1) + 8.0 * v(1) - v(2)) / (12.0 * h),
            2 => (-v(-2) + 16.0 * v(-1) - 30.0 * v(0) + 16.0 * v(1) - v(2)) / (12.0 * h * h),
            3 => (v(-3) - 8.0 * v(-2) + 13.0 * v(-1) - 13.0 * v(1) + 8.0 * v(2) - v(3)) / (8.0 * h.powi(3)),
            _ => (-v(-3) + 12.0 * v(-2) - 39.0 * v(-1) + 56.0 * v(0) - 39.0 * v(1) + 12.0 * v(2) - v(3)) / (6.0 * h.powi(4)),
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::DerivativeUnavailable(k, j))
        }
    }
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant(mut m: Vec<Vec<f64>>) -> f64 {
    let n = m.len();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap_or(c);
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}

fn check_order(fam: &FunctionFamily, order: usize) -> Result<()> {
    if order >= fam.len() {
        return Err(Error::InvalidDomain(format!("order {order} needs {} members", order + 1)));
    }
    Ok(())
}

/// `W(f_0, ..., f_order)(s)`.
pub fn wronskian(fam: &FunctionFamily, order: usize, s: f64) -> Result<f64> {
    check_order(fam, order)?;
    let mut m = vec![vec![0.0; order + 1]; order + 1];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = fam.derivative(j, i, s)?;
        }
    }
    Ok(determinant(m))
}

/// Same determinant with every derivative taken by finite differences.
pub fn wronskian_numeric(fam: &FunctionFamily, order: usize, s: f64) -> Result<f64> {
    check_order(fam, order)?;
    let mut m = vec![vec![0.0; order + 1]; order + 1];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = fam.numeric_member_derivative(j, i, s)?;
        }
    }
    Ok(determinant(m))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EctVerdict {
    /// Every Wronskian stays away from zero on the grid.
    Ect,
    /// Only the last Wronskian changes sign, exactly once.
    EtWithAccuracy,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WronskianProfile {
    pub grid: Vec<f64>,
    /// `values[k][i] = W_k(grid[i])`.
    pub values: Vec<Vec<f64>>,
    pub sign_changes: Vec<usize>,
    /// Midpoints of the grid cells where `W_k` changes sign.
    pub zero_candidates: Vec<Vec<f64>>,
    pub verdict: EctVerdict,
}

impl WronskianProfile {
    /// CSV with columns `s0,W0,...,Wn`.
    pub fn to_csv(&self) -> String {
        let n = self.values.len();
        let mut out = String::from("s0");
        for k in 0..n {
            out.push_str(&format!(",W{k}"));
        }
        out.push('\n');
        for (i, s) in self.grid.iter().enumerate() {
            out.push_str(&crate::io::fmt_f64(*s));
            for k in 0..n {
                out.push(',');
                out.push_str(&crate::io::fmt_f64(self.values[k][i]));
            }
            out.push('\n');
        }
        out
    }
}

/// Sample every Wronskian on a log grid (points within `1e-6` of a
/// puncture are dropped) and classify the family.
pub fn check_ect(fam: &FunctionFamily, interval: (f64, f64), grid_size: usize, punctures: &[f64]) -> Result<WronskianProfile> {
    if grid_size < 256 {
        return Err(Error::InvalidDomain(format!("grid size {grid_size} < 256")));
    }
    let (lo, hi) = interval;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::InvalidDomain(format!("({lo}, {hi}) must be a positive interval")));
    }
    let grid: Vec<f64> = log_grid(lo, hi, grid_size)
        .into_iter()
        .filter(|s| punctures.iter().all(|p| (s - p).abs() > 1e-6))
        .collect();
    let n = fam.len();
    let mut values = Vec::with_capacity(n);
    let mut sign_changes = Vec::with_capacity(n);
    let mut zero_candidates = Vec::with_capacity(n);
    let mut bounded_away = true;
    for k in 0..n {
        let w: Vec<f64> = grid.iter().map(|&s| wronskian(fam, k, s)).collect::<Result<_>>()?;
        let scale = w.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        if w.iter().any(|v| v.abs() <= 1e-8 * scale) {
            bounded_away = false;
        }
        let mut last: Option<(usize, bool)> = None;
        let mut zeros = Vec::new();
        for (i, v) in w.iter().enumerate() {
            if v.abs() <= 1e-10 * scale {
                continue;
            }
            let pos = *v > 0.0;
            if let Some((j, p)) = last {
                if p != pos {
                    zeros.push(0.5 * (grid[j] + grid[i]));
                    bounded_away = false;
                }
            }
            last = Some((i, pos));
        }
        sign_changes.push(zeros.len());
        zero_candidates.push(zeros);
        values.push(w);
    }
    let verdict = if bounded_away {
        EctVerdict::Ect
    } else if sign_changes[..n - 1].iter().all(|&c| c == 0) && sign_changes[n - 1] == 1 {
        EctVerdict::EtWithAccuracy
    } else {
        EctVerdict::Inconclusive
    };
    Ok(WronskianProfile { grid, values, sign_changes, zero_candidates, verdict })
}

/// Quoted closed forms of the Wronskians of [`FunctionFamily::melnikov`].
pub fn quoted_wronskian(beta: f64, order: usize, s: f64) -> f64 {
    let q = s * s + 1.0;
    let ac = crate::flow::clamped_acos(2.0 / q - 1.0);
    let b2 = beta * beta;
    match order {
        0 => s,
        1 => b2 * s * s - 1.0,
        2 => 2.0 * (b2 - 1.0) * ac - 4.0 * (b2 + 1.0) * s / q,
        3 => 16.0 * beta.powi(3) * (b2 - 1.0) * (2.0 * s * (s * s - 1.0) + q * q * ac) / (q * q * (b2 * s * s + 1.0).powi(2)),
        _ => f64::NAN,
    }
}

/// `W3 (beta^2 s^2 + 1)^2`.
pub fn quoted_w3_tilde(beta: f64, s: f64) -> f64 {
    quoted_wronskian(beta, 3, s) * (beta * beta * s * s + 1.0).powi(2)
}

/// Quoted derivative of [`quoted_w3_tilde`].
pub fn quoted_w3_tilde_derivative(beta: f64, s: f64) -> f64 {
    256.0 * beta.powi(3) * (beta * beta - 1.0) * s * s / (s * s + 1.0).powi(3)
}

/// Quoted Wronskian of [`FunctionFamily::constrained_quoted`].
pub fn quoted_constrained_w1(s: f64) -> f64 {
    -2.0 * s + (s * s - 1.0) * crate::flow::clamped_acos(1.0 - 2.0 / (s * s + 1.0))
}

/// Quoted derivative of `W1 / (s^2 - 1)` for the constrained pair.
pub fn quoted_constrained_w1_tilde_derivative(s: f64) -> f64 {
    8.0 * s * s / ((s * s - 1.0).powi(2) * (s * s + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_values() {
        let fam = FunctionFamily::melnikov(2.0, (0.0, f64::INFINITY));
        assert!((wronskian(&fam, 0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((wronskian(&fam, 1, 1.0).unwrap() - 3.0).abs() < 1e-14);
        let w3 = wronskian(&fam, 3, 2.0).unwrap();
        let q = quoted_wronskian(2.0, 3, 2.0);
        assert!((w3 - q).abs() < 1e-8 * q.abs(), "{w3} {q}");
        let one = FunctionFamily::new((0.0, 1.0)).with_analytic(|_, k| Some(if k == 0 { 1.0 } else { 0.0 }));
        assert_eq!(wronskian(&one, 0, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn monomials_are_ect() {
        let fam = FunctionFamily::monomials(2, (0.0, 10.0));
        assert!((wronskian(&fam, 2, 3.7).unwrap() - 2.0).abs() < 1e-12);
        let prof = check_ect(&fam, (1e-3, 10.0), 256, &[]).unwrap();
        assert_eq!(prof.verdict, EctVerdict::Ect);
    }

    #[test]
    fn melnikov_family_wronskian_zeros() {
        // W1 vanishes at 1/beta and W2 once more, so the numeric check
        // cannot certify the ECT property on (0.01, 100).
        let fam = FunctionFamily::melnikov(2.0, (0.0, f64::INFINITY));
        let prof = check_ect(&fam, (0.01, 100.0), 1024, &[0.5, 1.0]).unwrap();
        assert_eq!(prof.sign_changes, vec![0, 1, 1, 0]);
        assert!((prof.zero_candidates[1][0] - 0.5).abs() < 0.01);
        assert_eq!(prof.verdict, EctVerdict::Inconclusive);
    }

    #[test]
    fn constrained_pairs_are_ect() {
        // W1 of the exact pair grows like s^3 near 0 and like s^2 at
        // infinity, so the relative floor needs a slightly shorter range.
        let exact = FunctionFamily::constrained((0.0, f64::INFINITY));
        assert_eq!(check_ect(&exact, (0.1, 100.0), 512, &[1.0]).unwrap().verdict, EctVerdict::Ect);
        assert_eq!(check_ect(&exact, (0.01, 100.0), 512, &[1.0]).unwrap().sign_changes, vec![0, 0]);
        let quoted = FunctionFamily::constrained_quoted((0.0, f64::INFINITY));
        assert_eq!(check_ect(&quoted, (0.01, 100.0), 512, &[1.0]).unwrap().verdict, EctVerdict::Ect);
        let fam = FunctionFamily::constrained_quoted((0.0, f64::INFINITY));
        for s in [0.1, 0.7, 1.5, 8.0] {
            let w = wronskian(&fam, 1, s).unwrap();
            assert!((w - quoted_constrained_w1(s)).abs() < 1e-12 * w.abs().max(1.0));
        }
    }

    #[test]
    fn numeric_derivatives_fallback() {
        let fam = FunctionFamily::new((0.0, 10.0)).with_plain(|s| s.exp()).with_plain(|s| s.sin());
        let w = wronskian(&fam, 1, 1.3).unwrap();
        let want = 1.3f64.exp() * (1.3f64.cos() - 1.3f64.sin());
        assert!((w - want).abs() < 1e-8 * want.abs());
        assert!(matches!(fam.derivative(0, 5, 1.0), Err(Error::DerivativeUnavailable(5, 0))));
    }
}
