//! Explicit Runge–Kutta integration of complex ODE systems `y' = f(t, y)`.
//!
//! [`Stepper`] advances one accepted step at a time, never stepping past a
//! caller-supplied stop time, so observation grids are hit exactly. All work
//! vectors are allocated once in [`Stepper::new`].

use num_complex::Complex64 as C64;

use super::Method;
use crate::error::{QsimError, Result};

pub(crate) trait Rhs {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()>;
}

impl Rhs for super::td::LinearGenerator {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        self.apply(t, y, dy)
    }
}

/// Counters accumulated over a solve.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub steps: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

impl SolverStats {
    pub fn merge(&mut self, other: &SolverStats) {
        self.steps += other.steps;
        self.rejected += other.rejected;
        self.rhs_evals += other.rhs_evals;
    }
}

// Dormand–Prince 5(4) tableau.
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
// Continuous extension of order 4.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

// PI step-size control.
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

pub(crate) struct Stepper {
    method: Method,
    abstol: f64,
    reltol: f64,
    dt_fixed: f64,
    max_steps: usize,
    pub t: f64,
    pub y: Vec<C64>,
    t_prev: f64,
    y_prev: Vec<C64>,
    y_new: Vec<C64>,
    ytmp: Vec<C64>,
    k: [Vec<C64>; 7],
    h: f64,
    fsal_valid: bool,
    last_rejected: bool,
    err_old: f64,
    pub stats: SolverStats,
}

fn axpy_into(out: &mut [C64], y: &[C64], h: f64, terms: &[(f64, &[C64])]) {
    for i in 0..out.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        out[i] = y[i] + acc * h;
    }
}

impl Stepper {
    pub fn new(n: usize, method: Method, abstol: f64, reltol: f64, dt_fixed: f64, max_steps: usize) -> Self {
        let z = || vec![C64::new(0.0, 0.0); n];
        Self {
            method,
            abstol,
            reltol,
            dt_fixed,
            max_steps,
            t: 0.0,
            y: z(),
            t_prev: 0.0,
            y_prev: z(),
            y_new: z(),
            ytmp: z(),
            k: [z(), z(), z(), z(), z(), z(), z()],
            h: 0.0,
            fsal_valid: false,
            last_rejected: false,
            err_old: 1e-4,
            stats: SolverStats::default(),
        }
    }

    pub fn from_options(n: usize, opts: &super::SolveOptions) -> Self {
        Self::new(
            n,
            opts.method,
            opts.abstol,
            opts.reltol,
            opts.dt_fixed,
            opts.max_steps,
        )
    }

    /// Starts a fresh integration; the step size is re-estimated.
    pub fn reset(&mut self, t0: f64, y0: &[C64]) {
        self.t = t0;
        self.y.copy_from_slice(y0);
        self.h = 0.0;
        self.fsal_valid = false;
        self.last_rejected = false;
        self.err_old = 1e-4;
    }

    /// Replaces the state (after a jump or frame change) but keeps the
    /// current step-size proposal.
    pub fn restart(&mut self, t: f64, y: &[C64]) {
        self.t = t;
        self.y.copy_from_slice(y);
        self.fsal_valid = false;
    }

    /// State at the start of the last accepted step.
    pub fn prev(&self) -> (f64, &[C64]) {
        (self.t_prev, &self.y_prev)
    }

    fn eval(&mut self, rhs: &mut impl Rhs, t: f64, which: Which) -> Result<()> {
        self.stats.rhs_evals += 1;
        let (src, dst): (&[C64], &mut [C64]) = match which {
            Which::YToK0 => (&self.y, &mut self.k[0]),
            Which::TmpTo(i) => (&self.ytmp, &mut self.k[i]),
            Which::NewTo(i) => (&self.y_new, &mut self.k[i]),
        };
        rhs.eval(t, src, dst)
    }

    fn ensure_fsal(&mut self, rhs: &mut impl Rhs) -> Result<()> {
        if !self.fsal_valid {
            self.eval(rhs, self.t, Which::YToK0)?;
            self.fsal_valid = true;
        } else {
            let (head, tail) = self.k.split_at_mut(6);
            head[0].copy_from_slice(&tail[0]);
        }
        Ok(())
    }

    fn weighted_rms(&self, v: &[C64], y0: &[C64], y1: &[C64]) -> f64 {
        let n = v.len().max(1);
        let s: f64 = v
            .iter()
            .zip(y0.iter().zip(y1))
            .map(|(e, (a, b))| {
                let sk = self.abstol + self.reltol * a.norm().max(b.norm());
                (e.norm() / sk).powi(2)
            })
            .sum();
        (s / n as f64).sqrt()
    }

    fn initial_step(&mut self, rhs: &mut impl Rhs, span: f64) -> Result<f64> {
        let n = self.y.len().max(1) as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for (y, f) in self.y.iter().zip(&self.k[0]) {
            let sk = self.abstol + self.reltol * y.norm();
            dnf += (f.norm() / sk).powi(2);
            dny += (y.norm() / sk).powi(2);
        }
        dnf /= n;
        dny /= n;
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(span);
        for i in 0..self.y.len() {
            self.ytmp[i] = self.y[i] + self.k[0][i] * h;
        }
        self.eval(rhs, self.t + h, Which::TmpTo(1))?;
        let mut der2 = 0.0;
        for i in 0..self.y.len() {
            let sk = self.abstol + self.reltol * self.y[i].norm();
            der2 += ((self.k[1][i] - self.k[0][i]).norm() / sk).powi(2);
        }
        let der2 = (der2 / n).sqrt() / h;
        let der12 = der2.max(dnf.sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(0.2)
        };
        Ok((100.0 * h).min(h1).min(span))
    }

    /// Takes one accepted step ending at or before `t_stop`.
    pub fn step(&mut self, rhs: &mut impl Rhs, t_stop: f64) -> Result<()> {
        let remaining = t_stop - self.t;
        if remaining <= 0.0 {
            return Ok(());
        }
        if self.stats.steps >= self.max_steps {
            return Err(QsimError::IntegrationFailure {
                last_good_time: self.t,
                reason: format!("maximum number of steps ({}) reached", self.max_steps),
            });
        }
        self.ensure_fsal(rhs)?;
        match self.method {
            Method::FixedRK4 => self.step_rk4(rhs, t_stop),
            Method::AdaptiveRK45 => self.step_dp5(rhs, t_stop),
        }
    }

    /// Steps until `t == t_target` exactly.
    pub fn advance_to(&mut self, rhs: &mut impl Rhs, t_target: f64) -> Result<()> {
        while self.t < t_target {
            self.step(rhs, t_target)?;
        }
        Ok(())
    }

    fn clip(&self, h: f64, t_stop: f64) -> (f64, f64, bool) {
        let remaining = t_stop - self.t;
        // absorb a sliver so the grid is hit without a follow-up micro-step
        if h >= remaining * (1.0 - 1e-10) {
            (remaining, t_stop, true)
        } else {
            (h, self.t + h, false)
        }
    }

    fn accept(&mut self, t_new: f64) {
        self.t_prev = self.t;
        std::mem::swap(&mut self.y_prev, &mut self.y);
        std::mem::swap(&mut self.y, &mut self.y_new);
        self.t = t_new;
        self.stats.steps += 1;
    }

    fn step_rk4(&mut self, rhs: &mut impl Rhs, t_stop: f64) -> Result<()> {
        let (h, t_new, _) = self.clip(self.dt_fixed, t_stop);
        let t = self.t;
        axpy_into(&mut self.ytmp, &self.y, h, &[(0.5, &self.k[0])]);
        self.eval(rhs, t + 0.5 * h, Which::TmpTo(1))?;
        axpy_into(&mut self.ytmp, &self.y, h, &[(0.5, &self.k[1])]);
        self.eval(rhs, t + 0.5 * h, Which::TmpTo(2))?;
        axpy_into(&mut self.ytmp, &self.y, h, &[(1.0, &self.k[2])]);
        self.eval(rhs, t + h, Which::TmpTo(3))?;
        axpy_into(
            &mut self.y_new,
            &self.y,
            h,
            &[
                (1.0 / 6.0, &self.k[0]),
                (1.0 / 3.0, &self.k[1]),
                (1.0 / 3.0, &self.k[2]),
                (1.0 / 6.0, &self.k[3]),
            ],
        );
        if self.y_new.iter().any(|v| !v.is_finite()) {
            return Err(QsimError::IntegrationFailure {
                last_good_time: t,
                reason: "state became non-finite with the fixed step".into(),
            });
        }
        self.eval(rhs, t_new, Which::NewTo(6))?;
        self.h = h;
        self.accept(t_new);
        Ok(())
    }

    fn step_dp5(&mut self, rhs: &mut impl Rhs, t_stop: f64) -> Result<()> {
        if self.h <= 0.0 {
            self.h = self.initial_step(rhs, t_stop - self.t)?;
        }
        loop {
            let (h, t_new, clipped) = self.clip(self.h, t_stop);
            let t = self.t;
            let min_h = 1e-14 * t.abs().max(1.0);
            if h < min_h && !clipped {
                return Err(QsimError::IntegrationFailure {
                    last_good_time: t,
                    reason: format!("step size underflow (h = {h:.3e})"),
                });
            }
            axpy_into(&mut self.ytmp, &self.y, h, &[(A21, &self.k[0])]);
            self.eval(rhs, t + C2 * h, Which::TmpTo(1))?;
            axpy_into(&mut self.ytmp, &self.y, h, &[(A31, &self.k[0]), (A32, &self.k[1])]);
            self.eval(rhs, t + C3 * h, Which::TmpTo(2))?;
            axpy_into(
                &mut self.ytmp,
                &self.y,
                h,
                &[(A41, &self.k[0]), (A42, &self.k[1]), (A43, &self.k[2])],
            );
            self.eval(rhs, t + C4 * h, Which::TmpTo(3))?;
            axpy_into(
                &mut self.ytmp,
                &self.y,
                h,
                &[(A51, &self.k[0]), (A52, &self.k[1]), (A53, &self.k[2]), (A54, &self.k[3])],
            );
            self.eval(rhs, t + C5 * h, Which::TmpTo(4))?;
            axpy_into(
                &mut self.ytmp,
                &self.y,
                h,
                &[
                    (A61, &self.k[0]),
                    (A62, &self.k[1]),
                    (A63, &self.k[2]),
                    (A64, &self.k[3]),
                    (A65, &self.k[4]),
                ],
            );
            self.eval(rhs, t + h, Which::TmpTo(5))?;
            axpy_into(
                &mut self.y_new,
                &self.y,
                h,
                &[
                    (A71, &self.k[0]),
                    (A73, &self.k[2]),
                    (A74, &self.k[3]),
                    (A75, &self.k[4]),
                    (A76, &self.k[5]),
                ],
            );
            self.eval(rhs, t_new, Which::NewTo(6))?;
            // error estimate, reusing ytmp
            for i in 0..self.ytmp.len() {
                self.ytmp[i] = (self.k[0][i] * E1
                    + self.k[2][i] * E3
                    + self.k[3][i] * E4
                    + self.k[4][i] * E5
                    + self.k[5][i] * E6
                    + self.k[6][i] * E7)
                    * h;
            }
            let err = self.weighted_rms(&self.ytmp, &self.y, &self.y_new);
            if !err.is_finite() {
                self.stats.rejected += 1;
                self.h = h * 0.1;
                self.last_rejected = true;
                continue;
            }
            let fac11 = err.powf(EXPO1);
            if err <= 1.0 {
                let mut fac = fac11 / self.err_old.powf(BETA);
                fac = (fac / SAFETY).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
                let mut h_new = h / fac;
                if self.last_rejected {
                    h_new = h_new.min(h);
                }
                if clipped {
                    // a clipped step says nothing against the earlier proposal
                    h_new = h_new.max(self.h);
                }
                self.err_old = err.max(1e-4);
                self.last_rejected = false;
                self.h = h_new;
                self.accept(t_new);
                return Ok(());
            }
            self.stats.rejected += 1;
            self.h = h / (fac11 / SAFETY).min(1.0 / FAC_MIN);
            self.last_rejected = true;
        }
    }

    /// Interpolated state at `t` within the last accepted step.
    pub fn dense_output(&self, t: f64, out: &mut [C64]) {
        let h = self.t - self.t_prev;
        if h <= 0.0 {
            out.copy_from_slice(&self.y);
            return;
        }
        let th = ((t - self.t_prev) / h).clamp(0.0, 1.0);
        let th1 = 1.0 - th;
        let k = &self.k;
        match self.method {
            Method::AdaptiveRK45 => {
                for i in 0..out.len() {
                    let y0 = self.y_prev[i];
                    let ydiff = self.y[i] - y0;
                    let bspl = k[0][i] * h - ydiff;
                    let r4 = ydiff - k[6][i] * h - bspl;
                    let r5 = (k[0][i] * D1
                        + k[2][i] * D3
                        + k[3][i] * D4
                        + k[4][i] * D5
                        + k[5][i] * D6
                        + k[6][i] * D7)
                        * h;
                    out[i] = y0 + (ydiff + (bspl + (r4 + r5 * th1) * th) * th1) * th;
                }
            }
            Method::FixedRK4 => {
                // cubic Hermite on endpoint values and slopes
                let h00 = (1.0 + 2.0 * th) * th1 * th1;
                let h10 = th * th1 * th1;
                let h01 = th * th * (3.0 - 2.0 * th);
                let h11 = -th * th * th1;
                for i in 0..out.len() {
                    out[i] = self.y_prev[i] * h00
                        + k[0][i] * (h10 * h)
                        + self.y[i] * h01
                        + k[6][i] * (h11 * h);
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Which {
    YToK0,
    TmpTo(usize),
    NewTo(usize),
}
