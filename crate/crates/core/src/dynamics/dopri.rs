//! Dormand-Prince 5(4) stepper over complex state vectors.
//!
//! Error control follows Hairer, Norsett & Wanner with PI stabilization.
//! Real and imaginary parts are weighted as independent components.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Right-hand side `dy/dt = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[Complex64], dy: &mut [Complex64]);
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepperOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for StepperOptions {
    fn default() -> Self {
        StepperOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 2_000_000,
        }
    }
}

/// Adaptive stepper that keeps its step-size history between calls to
/// [`advance`](Dopri5::advance).
pub struct Dopri5 {
    opts: StepperOptions,
    k: [Vec<Complex64>; 7],
    y_stage: Vec<Complex64>,
    y_new: Vec<Complex64>,
    h: Option<f64>,
    fsal_valid: bool,
    facold: f64,
    steps: usize,
    rejected: usize,
}

const SAFE: f64 = 0.9;
const BETA: f64 = 0.04;
const FACC1: f64 = 1.0 / 0.2;
const FACC2: f64 = 1.0 / 10.0;

impl Dopri5 {
    pub fn new(dim: usize, opts: StepperOptions) -> Self {
        let z = || vec![Complex64::new(0.0, 0.0); dim];
        Dopri5 {
            opts,
            k: [z(), z(), z(), z(), z(), z(), z()],
            y_stage: z(),
            y_new: z(),
            h: None,
            fsal_valid: false,
            facold: 1e-4,
            steps: 0,
            rejected: 0,
        }
    }

    /// Must be called when the right-hand side changes (e.g. a new control
    /// segment starts), so the first-same-as-last stage is recomputed.
    pub fn invalidate(&mut self) {
        self.fsal_valid = false;
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn rejected(&self) -> usize {
        self.rejected
    }

    fn err_norm(&self, y: &[Complex64], err: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for ((yo, yn), e) in y.iter().zip(&self.y_new).zip(err) {
            let sre = self.opts.atol + self.opts.rtol * yo.re.abs().max(yn.re.abs());
            let sim = self.opts.atol + self.opts.rtol * yo.im.abs().max(yn.im.abs());
            acc += (e.re / sre).powi(2) + (e.im / sim).powi(2);
        }
        (acc / (2 * y.len()) as f64).sqrt()
    }

    fn initial_step<S: OdeSystem>(&mut self, sys: &S, t: f64, y: &[Complex64], span: f64) -> f64 {
        let scale = |v: Complex64, y: Complex64| {
            (
                v.re / (self.opts.atol + self.opts.rtol * y.re.abs()),
                v.im / (self.opts.atol + self.opts.rtol * y.im.abs()),
            )
        };
        let n2 = 2.0 * y.len() as f64;
        let norm = |xs: &mut dyn Iterator<Item = (f64, f64)>| {
            (xs.map(|(a, b)| a * a + b * b).sum::<f64>() / n2).sqrt()
        };
        let d0 = norm(&mut y.iter().map(|&v| scale(v, v)));
        let d1 = norm(&mut self.k[0].iter().zip(y).map(|(&f, &v)| scale(f, v)));
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        let h0 = h0.min(span);
        for ((ys, &v), &f) in self.y_stage.iter_mut().zip(y.iter()).zip(&self.k[0]) {
            *ys = v + f * h0;
        }
        let mut f1 = vec![Complex64::new(0.0, 0.0); y.len()];
        sys.rhs(t + h0, &self.y_stage, &mut f1);
        let d2 = norm(
            &mut f1
                .iter()
                .zip(&self.k[0])
                .zip(y)
                .map(|((&a, &b), &v)| scale(a - b, v)),
        ) / h0;
        let dm = d1.max(d2);
        let h1 = if dm <= 1e-15 {
            (h0 * 1e-3).max(1e-6)
        } else {
            (0.01 / dm).powf(0.2)
        };
        (100.0 * h0).min(h1).min(span)
    }

    /// Integrates `y` in place from `t0` to exactly `t1 > t0`.
    pub fn advance<S: OdeSystem>(&mut self, sys: &S, t0: f64, t1: f64, y: &mut [Complex64]) -> Result<()> {
        let n = y.len();
        debug_assert_eq!(n, sys.dim());
        if t1 <= t0 {
            return Ok(());
        }
        if !self.fsal_valid {
            sys.rhs(t0, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(sys, t0, y, t1 - t0),
        };
        let mut t = t0;
        let mut last_rejected = false;
        let expo1 = 0.2 - BETA * 0.75;
        loop {
            if self.steps >= self.opts.max_steps {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: format!("exceeded {} steps", self.opts.max_steps),
                });
            }
            if h < 1e-14 * t.abs().max(1.0) {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: format!("step size underflow (h = {h:e})"),
                });
            }
            let remaining = t1 - t;
            let proposal = h;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            self.stage_all(sys, t, h, y);
            let err = {
                let mut e = std::mem::take(&mut self.y_stage);
                for (i, ei) in e.iter_mut().enumerate().take(n) {
                    *ei = (self.k[0][i] * E1
                        + self.k[2][i] * E3
                        + self.k[3][i] * E4
                        + self.k[4][i] * E5
                        + self.k[5][i] * E6
                        + self.k[6][i] * E7)
                        * h;
                }
                let v = self.err_norm(y, &e);
                self.y_stage = e;
                v
            };
            self.steps += 1;
            if !err.is_finite() {
                return Err(Error::IntegrationFailure {
                    time: t,
                    reason: "non-finite error estimate".into(),
                });
            }
            let fac11 = err.powf(expo1);
            if err <= 1.0 {
                let fac = (fac11 / self.facold.powf(BETA) / SAFE).clamp(FACC2, FACC1);
                let mut h_new = h / fac;
                self.facold = err.max(1e-4);
                if last_rejected {
                    h_new = h_new.min(h);
                }
                y.copy_from_slice(&self.y_new);
                self.k.swap(0, 6);
                if last {
                    // Do not let a clipped final step shrink the next call's step.
                    self.h = Some(h_new.max(proposal));
                    return Ok(());
                }
                t += h;
                h = h_new;
                last_rejected = false;
            } else {
                h /= (fac11 / SAFE).min(FACC1);
                last_rejected = true;
                self.rejected += 1;
            }
        }
    }

    fn stage_all<S: OdeSystem>(&mut self, sys: &S, t: f64, h: f64, y: &[Complex64]) {
        let n = y.len();
        let [k1, k2, k3, k4, k5, k6, k7] = &mut self.k;
        let ys = &mut self.y_stage;
        for i in 0..n {
            ys[i] = y[i] + k1[i] * (h * A21);
        }
        sys.rhs(t + C2 * h, ys, k2);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A31 + k2[i] * A32) * h;
        }
        sys.rhs(t + C3 * h, ys, k3);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A41 + k2[i] * A42 + k3[i] * A43) * h;
        }
        sys.rhs(t + C4 * h, ys, k4);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A51 + k2[i] * A52 + k3[i] * A53 + k4[i] * A54) * h;
        }
        sys.rhs(t + C5 * h, ys, k5);
        for i in 0..n {
            ys[i] = y[i] + (k1[i] * A61 + k2[i] * A62 + k3[i] * A63 + k4[i] * A64 + k5[i] * A65) * h;
        }
        sys.rhs(t + h, ys, k6);
        let yn = &mut self.y_new;
        for i in 0..n {
            yn[i] = y[i] + (k1[i] * A71 + k3[i] * A73 + k4[i] * A74 + k5[i] * A75 + k6[i] * A76) * h;
        }
        sys.rhs(t + h, yn, k7);
    }
}
