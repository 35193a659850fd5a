//! Adaptive Dormand-Prince 5(4) for complex state vectors.

use crate::error::{Error, Result};
use crate::hilbert::C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_min: 1e-12,
            h_max: 5.0,
        }
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
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Reusable integrator workspace. `rhs(t, y, dy)` must overwrite `dy`.
pub struct Dopri5 {
    tol: Tolerances,
    k: [Vec<C64>; 7],
    stage: Vec<C64>,
    y_new: Vec<C64>,
    /// Step size carried over between calls.
    pub h: f64,
    pub accepted: usize,
    pub rejected: usize,
}

impl Dopri5 {
    pub fn new(n: usize, tol: Tolerances) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            tol,
            k: [z(), z(), z(), z(), z(), z(), z()],
            stage: z(),
            y_new: z(),
            h: 0.0,
            accepted: 0,
            rejected: 0,
        }
    }

    pub fn tolerances(&self) -> Tolerances {
        self.tol
    }

    /// Advances `y` from `t0` to exactly `t1`. The right-hand side must be
    /// smooth on (t0, t1); callers split at kinks of the time dependence.
    pub fn integrate<F>(&mut self, rhs: &mut F, y: &mut [C64], t0: f64, t1: f64) -> Result<()>
    where
        F: FnMut(f64, &[C64], &mut [C64]),
    {
        let span = t1 - t0;
        if span <= 0.0 {
            return Ok(());
        }
        let n = y.len();
        let mut t = t0;
        rhs(t, y, &mut self.k[0]);
        if self.h <= 0.0 {
            self.h = self.initial_step(y, span);
        }
        let mut h = self.h.min(self.tol.h_max);
        loop {
            let remaining = t1 - t;
            let planned = h;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            for s in 1..7 {
                let buf = if s < 6 { &mut self.stage } else { &mut self.y_new };
                for i in 0..n {
                    let mut acc = y[i];
                    for (j, a) in A[s][..s].iter().enumerate() {
                        if *a != 0.0 {
                            acc += self.k[j][i] * (h * a);
                        }
                    }
                    buf[i] = acc;
                }
                let arg = if s < 6 { &self.stage } else { &self.y_new };
                rhs(t + C[s] * h, arg, &mut self.k[s]);
            }
            let mut err = 0.0;
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (j, w) in E.iter().enumerate() {
                    if *w != 0.0 {
                        e += self.k[j][i] * w;
                    }
                }
                let scale = self.tol.atol + self.tol.rtol * y[i].norm().max(self.y_new[i].norm());
                let r = (e * h).norm() / scale;
                err += r * r;
            }
            let err = (err / n as f64).sqrt();
            if !err.is_finite() {
                return Err(Error::Integration {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            if err <= 1.0 {
                t = if last { t1 } else { t + h };
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                self.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                let next = (h * factor).min(self.tol.h_max);
                if last {
                    // A step shortened to hit t1 says little about the next one.
                    self.h = next.max(planned.min(self.tol.h_max));
                    return Ok(());
                }
                h = next;
                self.h = h;
            } else {
                self.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < self.tol.h_min {
                    return Err(Error::Integration {
                        time: t,
                        reason: format!("step size underflow (h = {h:.3e})"),
                    });
                }
            }
        }
    }

    fn initial_step(&self, y: &[C64], span: f64) -> f64 {
        let n = y.len() as f64;
        let scale = |v: &C64| self.tol.atol + self.tol.rtol * v.norm();
        let d0 = (y.iter().map(|v| (v.norm() / scale(v)).powi(2)).sum::<f64>() / n).sqrt();
        let d1 = (y
            .iter()
            .zip(&self.k[0])
            .map(|(v, f)| (f.norm() / scale(v)).powi(2))
            .sum::<f64>()
            / n)
            .sqrt();
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-3 } else { 0.01 * d0 / d1 };
        h.min(span).min(self.tol.h_max)
    }
}
