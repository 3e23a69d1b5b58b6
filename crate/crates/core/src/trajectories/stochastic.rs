//! Homodyne-detection unravelings in Itô form.
//!
//! Each `tlist` interval is split into equal steps no longer than `dt_max`.
//! A step first adds the Euler–Maruyama noise increment, evaluated on the
//! state at the start of the step, and then carries the deterministic drift
//! across the step with the ODE stepper at the solver tolerances. The scheme
//! keeps weak order one. Integrating the drift to tolerance removes the
//! instability of an explicit Euler drift on strongly oscillating cavity
//! generators, and applying the noise before the drift keeps a coherent
//! state under homodyne detection coherent, so its ensemble carries no
//! spurious spread.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand_distr::{Distribution, Normal};

use super::{assemble, run_ensemble, TrajectoryEnsembleResult, TrajectoryOutput, WienerRecord};
use crate::error::{QsimError, Result};
use crate::evolve::ode::{Rhs, Stepper};
use crate::evolve::td::LinearGenerator;
use crate::evolve::{
    check_dims, check_e_ops, hermitize_vec, initial_density_vec, liouvillian_td,
    validate_tlist, SolveOptions, TimeDependentOperator,
};
use crate::linalg::CscMatrix;
use crate::qobj::{expect_ket_slice, expect_vec_slice, Kind, QuantumObject};
use crate::rng::StreamRng;
use crate::superop;

/// Stochastic collapse operators: a single operator selects the scalar-noise
/// path, a list the general path. Both compute the same equations.
#[derive(Debug, Clone)]
pub enum StochasticOps {
    Single(QuantumObject),
    List(Vec<QuantumObject>),
}

impl StochasticOps {
    pub fn as_slice(&self) -> &[QuantumObject] {
        match self {
            StochasticOps::Single(op) => std::slice::from_ref(op),
            StochasticOps::List(ops) => ops,
        }
    }
}

impl From<QuantumObject> for StochasticOps {
    fn from(q: QuantumObject) -> Self {
        StochasticOps::Single(q)
    }
}

impl From<&QuantumObject> for StochasticOps {
    fn from(q: &QuantumObject) -> Self {
        StochasticOps::Single(q.clone())
    }
}

impl From<Vec<QuantumObject>> for StochasticOps {
    fn from(v: Vec<QuantumObject>) -> Self {
        StochasticOps::List(v)
    }
}

impl From<&[QuantumObject]> for StochasticOps {
    fn from(v: &[QuantumObject]) -> Self {
        StochasticOps::List(v.to_vec())
    }
}

/// `ℋ[O]ρ = Oρ + ρO† − tr(Oρ + ρO†) ρ`.
pub fn measurement_backaction(o: &QuantumObject, rho: &QuantumObject) -> Result<QuantumObject> {
    let orho = o.try_matmul(rho)?;
    let rhood = rho.try_matmul(&o.dag())?;
    let sum = orho.try_add(&rhood)?;
    let tr = sum.tr();
    sum.lin_comb(C64::new(1.0, 0.0), rho, -tr)
}

/// Substeps per interval and the resulting step for each interval.
fn substeps(tlist: &[f64], dt_max: f64) -> Vec<(usize, f64)> {
    tlist
        .windows(2)
        .map(|w| {
            let span = w[1] - w[0];
            let n = ((span / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            (n, span / n as f64)
        })
        .collect()
}

fn record_dt(tlist: &[f64], steps: &[(usize, f64)]) -> Result<f64> {
    let dt0 = steps[0].1;
    let uniform = steps
        .iter()
        .all(|&(_, dt)| (dt - dt0).abs() <= 1e-9 * dt0);
    if !uniform {
        return Err(QsimError::InvalidGrid(format!(
            "measurement records need equal integration steps; tlist from {} to {} \
             yields unequal steps",
            tlist[0],
            tlist[tlist.len() - 1]
        )));
    }
    Ok(dt0)
}

struct Recorder {
    dt: f64,
    times: Vec<f64>,
    increments: Array2<f64>,
    current: Array2<f64>,
    col: usize,
}

impl Recorder {
    fn new(n_ch: usize, n_steps: usize, dt: f64) -> Self {
        Self {
            dt,
            times: Vec::with_capacity(n_steps),
            increments: Array2::zeros((n_ch, n_steps)),
            current: Array2::zeros((n_ch, n_steps)),
            col: 0,
        }
    }

    fn push(&mut self, t: f64, e: &[f64], dw: &[f64]) {
        self.times.push(t);
        for n in 0..e.len() {
            self.increments[[n, self.col]] = dw[n];
            self.current[[n, self.col]] = e[n] + dw[n] / self.dt;
        }
        self.col += 1;
    }

    fn finish(self) -> WienerRecord {
        WienerRecord {
            dt: self.dt,
            times: self.times,
            increments: self.increments,
            current: self.current,
        }
    }
}

fn normalize(v: &mut [C64]) {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= n;
    }
}

// ---------------------------------------------------------------------------
// Stochastic Schrödinger equation

/// SSE drift `−iKψ` with `K = H + i Σₙ (eₙ/2 Sₙ − ½ Sₙ†Sₙ − eₙ²/8)`, where
/// `eₙ = ⟨Sₙ + Sₙ†⟩` on the normalized argument. `lin` holds the linear part
/// `−iH − ½ Σ Sₙ†Sₙ`.
struct SseDrift {
    lin: LinearGenerator,
    s: Vec<CscMatrix>,
    sbuf: Vec<Vec<C64>>,
}

impl Rhs for SseDrift {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        self.lin.apply(t, y, dy)?;
        let norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        let mut e2 = 0.0;
        for (s, buf) in self.s.iter().zip(self.sbuf.iter_mut()) {
            buf.fill(C64::new(0.0, 0.0));
            s.mul_vec_acc(C64::new(1.0, 0.0), y, buf);
            let e = 2.0 * y.iter().zip(buf.iter()).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / norm2;
            for (d, b) in dy.iter_mut().zip(buf.iter()) {
                *d += b * (0.5 * e);
            }
            e2 += e * e;
        }
        for (d, v) in dy.iter_mut().zip(y) {
            *d -= v * (e2 / 8.0);
        }
        Ok(())
    }
}

/// Single-channel drift with scalar bookkeeping.
struct SseDriftSingle {
    lin: LinearGenerator,
    s: CscMatrix,
    sbuf: Vec<C64>,
}

impl Rhs for SseDriftSingle {
    fn eval(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        self.lin.apply(t, y, dy)?;
        let norm2: f64 = y.iter().map(|z| z.norm_sqr()).sum();
        self.sbuf.fill(C64::new(0.0, 0.0));
        self.s.mul_vec_acc(C64::new(1.0, 0.0), y, &mut self.sbuf);
        let e = 2.0 * y.iter().zip(&self.sbuf).map(|(a, b)| (a.conj() * b).re).sum::<f64>() / norm2;
        for (d, b) in dy.iter_mut().zip(&self.sbuf) {
            *d += b * (0.5 * e);
        }
        let q = e * e / 8.0;
        for (d, v) in dy.iter_mut().zip(y) {
            *d -= v * q;
        }
        Ok(())
    }
}

struct SseSetup<'a> {
    lin: &'a LinearGenerator,
    opts: &'a SolveOptions,
    s: &'a [CscMatrix],
    single: bool,
    y0: &'a [C64],
    tlist: &'a [f64],
    steps: &'a [(usize, f64)],
    e_ops: &'a [QuantumObject],
    record: Option<f64>,
}

fn sse_trajectory(cfg: &SseSetup<'_>, rng: &mut StreamRng) -> Result<TrajectoryOutput> {
    let n = cfg.y0.len();
    let nch = cfg.s.len();
    let mut y = cfg.y0.to_vec();
    normalize(&mut y);
    let mut stepper = Stepper::from_options(n, cfg.opts);
    let mut noise_buf: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; nch];
    let mut e = vec![0.0; nch];
    let mut dw = vec![0.0; nch];
    let mut expect = Array2::zeros((cfg.e_ops.len(), cfg.tlist.len()));
    let total_steps: usize = cfg.steps.iter().map(|s| s.0).sum();
    let mut rec = cfg.record.map(|dt| Recorder::new(nch, total_steps, dt));

    enum Drift {
        Single(SseDriftSingle),
        Multi(SseDrift),
    }
    let mut drift = if cfg.single {
        Drift::Single(SseDriftSingle {
            lin: cfg.lin.clone(),
            s: cfg.s[0].clone(),
            sbuf: vec![C64::new(0.0, 0.0); n],
        })
    } else {
        Drift::Multi(SseDrift {
            lin: cfg.lin.clone(),
            s: cfg.s.to_vec(),
            sbuf: vec![vec![C64::new(0.0, 0.0); n]; nch],
        })
    };

    let mut y_start = vec![C64::new(0.0, 0.0); n];
    let observe = |expect: &mut Array2<C64>, k: usize, y: &[C64]| {
        for (j, op) in cfg.e_ops.iter().enumerate() {
            expect[[j, k]] = expect_ket_slice(op, y);
        }
    };
    observe(&mut expect, 0, &y);
    for (k, &(nsub, dt)) in cfg.steps.iter().enumerate() {
        let normal = Normal::new(0.0, dt.sqrt()).expect("positive step");
        for s in 0..nsub {
            let t_step = cfg.tlist[k] + s as f64 * dt;
            y_start.copy_from_slice(&y);
            // Mₙψ dWₙ is evaluated on the state at the start of the step
            let active = if cfg.single { 1 } else { nch };
            for ch in 0..active {
                let buf = &mut noise_buf[ch];
                buf.fill(C64::new(0.0, 0.0));
                cfg.s[ch].mul_vec_acc(C64::new(1.0, 0.0), &y_start, buf);
                e[ch] = 2.0
                    * y_start
                        .iter()
                        .zip(buf.iter())
                        .map(|(a, b)| (a.conj() * b).re)
                        .sum::<f64>();
                dw[ch] = normal.sample(rng);
            }
            if let Some(r) = rec.as_mut() {
                r.push(t_step, &e, &dw);
            }
            for ch in 0..active {
                let buf = &noise_buf[ch];
                let half_e = 0.5 * e[ch];
                for i in 0..n {
                    y[i] += (buf[i] - y_start[i] * half_e) * dw[ch];
                }
            }
            stepper.restart(t_step, &y);
            match &mut drift {
                Drift::Single(d) => stepper.advance_to(d, t_step + dt)?,
                Drift::Multi(d) => stepper.advance_to(d, t_step + dt)?,
            }
            y.copy_from_slice(&stepper.y);
            normalize(&mut y);
            if y.iter().any(|z| !z.is_finite()) {
                return Err(QsimError::IntegrationFailure {
                    last_good_time: t_step,
                    reason: "stochastic state became non-finite".into(),
                });
            }
        }
        observe(&mut expect, k + 1, &y);
    }
    Ok(TrajectoryOutput {
        expect,
        jumps: Vec::new(),
        measurement: rec.map(Recorder::finish),
        stats: stepper.stats,
    })
}

fn stochastic_dt_max(tlist: &[f64], opts: &SolveOptions) -> f64 {
    opts.dt_max
        .unwrap_or((tlist[tlist.len() - 1] - tlist[0]) / 1e4)
}

/// Stochastic Schrödinger equation under homodyne detection of `sc_ops`.
///
/// Expectations are taken on the normalized state.
#[allow(clippy::too_many_arguments)]
pub fn ssesolve(
    h: impl Into<TimeDependentOperator>,
    psi0: &QuantumObject,
    tlist: &[f64],
    sc_ops: impl Into<StochasticOps>,
    e_ops: &[QuantumObject],
    ntraj: usize,
    seed: u64,
    store_measurement: bool,
    params: &[f64],
    opts: &SolveOptions,
) -> Result<TrajectoryEnsembleResult> {
    let h = h.into();
    let sc_ops = sc_ops.into();
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    if psi0.kind() != Kind::Ket {
        return Err(QsimError::KindMismatch(format!(
            "ssesolve needs a Ket initial state, got {:?}",
            psi0.kind()
        )));
    }
    check_dims("initial state", h.dims(), psi0)?;
    check_e_ops(e_ops, h.dims())?;
    for s in sc_ops.as_slice() {
        check_dims("stochastic collapse operator", h.dims(), s)?;
    }
    let s: Vec<CscMatrix> = sc_ops.as_slice().iter().map(|s| s.sparse().into_owned()).collect();
    let mut lin = LinearGenerator::from_td(&h, C64::new(0.0, -1.0), params);
    for sm in &s {
        let sds = sm.adjoint().matmul(sm);
        lin.constant = lin.constant.lin_comb(C64::new(1.0, 0.0), &sds, C64::new(-0.5, 0.0));
    }
    let steps = substeps(tlist, stochastic_dt_max(tlist, opts));
    let record = if store_measurement {
        Some(record_dt(tlist, &steps)?)
    } else {
        None
    };
    let y0 = psi0.to_vec();
    let cfg = SseSetup {
        lin: &lin,
        opts,
        s: &s,
        single: matches!(sc_ops, StochasticOps::Single(_)),
        y0: &y0,
        tlist,
        steps: &steps,
        e_ops,
        record,
    };
    let outputs = run_ensemble(ntraj, seed, opts.n_threads, |_, mut rng| {
        sse_trajectory(&cfg, &mut rng)
    })?;
    assemble(tlist, e_ops.len(), outputs, seed, opts.store_trajectories)
}

// ---------------------------------------------------------------------------
// Stochastic master equation

struct SmeSetup<'a> {
    lin: &'a LinearGenerator,
    opts: &'a SolveOptions,
    /// `spre(Sₙ)` acting on vectorized ρ.
    s_pre: &'a [CscMatrix],
    single: bool,
    y0: &'a [C64],
    d: usize,
    tlist: &'a [f64],
    steps: &'a [(usize, f64)],
    e_ops: &'a [QuantumObject],
    record: Option<f64>,
}

/// `X = Sρ` into `x`; returns `eₙ = tr(Sρ + ρS†) = 2 Re tr(Sρ)`.
fn apply_pre(s_pre: &CscMatrix, rho: &[C64], d: usize, x: &mut [C64]) -> f64 {
    x.fill(C64::new(0.0, 0.0));
    s_pre.mul_vec_acc(C64::new(1.0, 0.0), rho, x);
    2.0 * (0..d).map(|i| x[i * (d + 1)].re).sum::<f64>()
}

/// `y += (X + X† − e ρ) dW` for Hermitian `ρ`, using `ρS† = (Sρ)†`.
fn add_backaction(y: &mut [C64], x: &[C64], rho: &[C64], e: f64, dw: f64, d: usize) {
    for c in 0..d {
        for r in 0..d {
            let i = r + c * d;
            y[i] += (x[i] + x[c + r * d].conj() - rho[i] * e) * dw;
        }
    }
}

fn sme_trajectory(cfg: &SmeSetup<'_>, rng: &mut StreamRng) -> Result<TrajectoryOutput> {
    let len = cfg.y0.len();
    let d = cfg.d;
    let nch = cfg.s_pre.len();
    let mut lin = cfg.lin.clone();
    let mut y = cfg.y0.to_vec();
    let mut start = vec![C64::new(0.0, 0.0); len];
    let mut herm = vec![C64::new(0.0, 0.0); len];
    let mut stepper = Stepper::from_options(len, cfg.opts);
    let mut xbuf: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); len]; nch];
    let mut e = vec![0.0; nch];
    let mut dw = vec![0.0; nch];
    let mut expect = Array2::zeros((cfg.e_ops.len(), cfg.tlist.len()));
    let total_steps: usize = cfg.steps.iter().map(|s| s.0).sum();
    let mut rec = cfg.record.map(|dt| Recorder::new(nch, total_steps, dt));

    for (j, op) in cfg.e_ops.iter().enumerate() {
        expect[[j, 0]] = expect_vec_slice(op, &y);
    }
    for (k, &(nsub, dt)) in cfg.steps.iter().enumerate() {
        let normal = Normal::new(0.0, dt.sqrt()).expect("positive step");
        for s in 0..nsub {
            let t_step = cfg.tlist[k] + s as f64 * dt;
            start.copy_from_slice(&y);
            if cfg.single {
                e[0] = apply_pre(&cfg.s_pre[0], &start, d, &mut xbuf[0]);
                dw[0] = normal.sample(rng);
            } else {
                for ch in 0..nch {
                    e[ch] = apply_pre(&cfg.s_pre[ch], &start, d, &mut xbuf[ch]);
                    dw[ch] = normal.sample(rng);
                }
            }
            if let Some(r) = rec.as_mut() {
                r.push(t_step, &e, &dw);
            }
            for ch in 0..nch {
                add_backaction(&mut y, &xbuf[ch], &start, e[ch], dw[ch], d);
            }
            stepper.restart(t_step, &y);
            stepper.advance_to(&mut lin, t_step + dt)?;
            y.copy_from_slice(&stepper.y);
            hermitize_vec(&y, d, &mut herm);
            let tr: f64 = (0..d).map(|i| herm[i * (d + 1)].re).sum();
            if !(tr.is_finite() && tr > 0.0) {
                return Err(QsimError::IntegrationFailure {
                    last_good_time: t_step,
                    reason: format!("stochastic density matrix has trace {tr}"),
                });
            }
            for (a, b) in y.iter_mut().zip(&herm) {
                *a = b / tr;
            }
        }
        for (j, op) in cfg.e_ops.iter().enumerate() {
            expect[[j, k + 1]] = expect_vec_slice(op, &y);
        }
    }
    Ok(TrajectoryOutput {
        expect,
        jumps: Vec::new(),
        measurement: rec.map(Recorder::finish),
        stats: stepper.stats,
    })
}

/// Stochastic master equation with unmonitored losses `c_ops` and homodyne
/// channels `sc_ops`.
#[allow(clippy::too_many_arguments)]
pub fn smesolve(
    h: impl Into<TimeDependentOperator>,
    rho0: &QuantumObject,
    tlist: &[f64],
    c_ops: &[QuantumObject],
    sc_ops: impl Into<StochasticOps>,
    e_ops: &[QuantumObject],
    ntraj: usize,
    seed: u64,
    store_measurement: bool,
    params: &[f64],
    opts: &SolveOptions,
) -> Result<TrajectoryEnsembleResult> {
    let h = h.into();
    let sc_ops = sc_ops.into();
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    if h.constant().kind() != Kind::Operator {
        return Err(QsimError::KindMismatch(format!(
            "smesolve needs an Operator Hamiltonian, got {:?}",
            h.constant().kind()
        )));
    }
    check_dims("initial state", h.dims(), rho0)?;
    check_e_ops(e_ops, h.dims())?;
    for c in c_ops.iter().chain(sc_ops.as_slice()) {
        check_dims("collapse operator", h.dims(), c)?;
    }
    let all_c: Vec<QuantumObject> = c_ops.iter().chain(sc_ops.as_slice()).cloned().collect();
    let l = liouvillian_td(&h, &all_c)?;
    let lin = LinearGenerator::from_td(&l, C64::new(1.0, 0.0), params);
    let s_pre: Vec<CscMatrix> = sc_ops
        .as_slice()
        .iter()
        .map(|s| Ok(superop::spre(s)?.sparse().into_owned()))
        .collect::<Result<_>>()?;
    let steps = substeps(tlist, stochastic_dt_max(tlist, opts));
    let record = if store_measurement {
        Some(record_dt(tlist, &steps)?)
    } else {
        None
    };
    let y0 = initial_density_vec(rho0)?;
    let cfg = SmeSetup {
        lin: &lin,
        opts,
        s_pre: &s_pre,
        single: matches!(sc_ops, StochasticOps::Single(_)),
        y0: &y0,
        d: rho0.hilbert_dim(),
        tlist,
        steps: &steps,
        e_ops,
        record,
    };
    let outputs = run_ensemble(ntraj, seed, opts.n_threads, |_, mut rng| {
        sme_trajectory(&cfg, &mut rng)
    })?;
    assemble(tlist, e_ops.len(), outputs, seed, opts.store_trajectories)
}
