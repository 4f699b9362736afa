//! Quadrature and an adaptive Dormand-Prince integrator.

use crate::error::{Error, Result};

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            left + right + diff / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 40)
}

/// Step-size controlled Dormand-Prince 5(4) integration of `y' = f(t, y)`.
#[derive(Debug, Clone, Copy)]
pub struct Dopri {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for Dopri {
    fn default() -> Self {
        Dopri { rtol: 1e-12, atol: 1e-14, max_steps: 1_000_000 }
    }
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

impl Dopri {
    pub fn tight() -> Self {
        Dopri { rtol: 1e-13, atol: 1e-15, ..Default::default() }
    }

    /// Integrate from `t0` to `t1` (either direction).
    pub fn integrate<const N: usize, F>(&self, f: F, t0: f64, t1: f64, y0: [f64; N]) -> Result<[f64; N]>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let span = t1 - t0;
        if span == 0.0 {
            return Ok(y0);
        }
        let dir = span.signum();
        let mut t = t0;
        let mut y = y0;
        let mut h = dir * span.abs().min(1e-2).max(1e-12 * span.abs());
        let mut k = [[0.0; N]; 7];
        for _ in 0..self.max_steps {
            if (t1 - t) * dir <= 0.0 {
                return Ok(y);
            }
            if (t + h - t1) * dir > 0.0 {
                h = t1 - t;
            }
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    for j in 0..s {
                        *yi += h * A[s][j] * k[j][i];
                    }
                }
                k[s] = f(t + C[s] * h, &ys);
            }
            let mut y5 = y;
            let mut err = 0.0f64;
            for i in 0..N {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += h * d5;
                let sc = self.atol + self.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((h * (d5 - d4)).abs() / sc);
            }
            if !err.is_finite() {
                return Err(Error::Integrator(format!("non-finite state at t = {t:e}")));
            }
            if err <= 1.0 {
                t += h;
                y = y5;
            }
            let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= fac;
            if h.abs() < 1e-15 * t.abs().max(1.0) {
                return Err(Error::Integrator(format!("step size underflow at t = {t:e}")));
            }
        }
        Err(Error::Integrator("step budget exhausted".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_polynomial_and_log() {
        let v = adaptive_simpson(&|x: f64| x * x, 0.0, 3.0, 1e-13);
        assert!((v - 9.0).abs() < 1e-12);
        let v = adaptive_simpson(&|x: f64| 1.0 / x, 1.0, 10.0, 1e-13);
        assert!((v - 10f64.ln()).abs() < 1e-11);
    }

    #[test]
    fn dopri_rotation() {
        let y = Dopri::tight()
            .integrate(|_, y: &[f64; 2]| [-y[1], y[0]], 0.0, 2.0 * std::f64::consts::PI, [1.0, 0.0])
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-11 && y[1].abs() < 1e-11);
        let y = Dopri::tight().integrate(|_, y: &[f64; 1]| [y[0]], 0.0, -1.0, [1.0]).unwrap();
        assert!((y[0] - (-1f64).exp()).abs() < 1e-12);
    }
}
