//! Monte-Carlo wave-function trajectories.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::Rng;

use super::{assemble, run_ensemble, TrajectoryEnsembleResult, TrajectoryOutput};
use crate::error::{QsimError, Result};
use crate::evolve::ode::Stepper;
use crate::evolve::td::LinearGenerator;
use crate::evolve::{
    check_dims, check_e_ops, sesolve, validate_tlist, SolveOptions, TimeDependentOperator,
};
use crate::linalg::CscMatrix;
use crate::qobj::{expect_ket_slice, Kind, QuantumObject};
use crate::rng::StreamRng;

const CROSSING_TOL: f64 = 1e-10;

fn norm_sqr(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Uniform draw in the open interval (0, 1).
fn open_unit(rng: &mut StreamRng) -> f64 {
    loop {
        let r: f64 = rng.random();
        if r > 0.0 {
            return r;
        }
    }
}

/// Generator `−i H_eff(t) = −i H(t) − ½ Σ Cₖ†Cₖ`.
pub(crate) fn effective_generator(
    h: &TimeDependentOperator,
    c_ops: &[CscMatrix],
    params: &[f64],
) -> LinearGenerator {
    let mut gen = LinearGenerator::from_td(h, C64::new(0.0, -1.0), params);
    for c in c_ops {
        let cdc = c.adjoint().matmul(c);
        gen.constant = gen.constant.lin_comb(C64::new(1.0, 0.0), &cdc, C64::new(-0.5, 0.0));
    }
    gen
}

/// Pure-state evolution under `H_eff` interrupted by quantum jumps.
///
/// A jump fires when `‖ψ‖²` falls to the pre-drawn threshold `r`; the
/// crossing time is located by bisection on the integrator's dense output.
pub(crate) struct JumpEvolver {
    gen: LinearGenerator,
    c_ops: Vec<CscMatrix>,
    stepper: Stepper,
    threshold: f64,
    buf: Vec<C64>,
    cbuf: Vec<C64>,
    weights: Vec<f64>,
    pub jumps: Vec<(f64, usize)>,
}

impl JumpEvolver {
    pub fn new(
        gen: LinearGenerator,
        c_ops: Vec<CscMatrix>,
        opts: &SolveOptions,
        t0: f64,
        psi0: &[C64],
        rng: &mut StreamRng,
    ) -> Self {
        let n = gen.dim();
        let mut stepper = Stepper::from_options(n, opts);
        stepper.reset(t0, psi0);
        let nc = c_ops.len();
        Self {
            gen,
            c_ops,
            stepper,
            threshold: open_unit(rng),
            buf: vec![C64::new(0.0, 0.0); n],
            cbuf: vec![C64::new(0.0, 0.0); n],
            weights: vec![0.0; nc],
            jumps: Vec::new(),
        }
    }

    /// Unnormalized current state.
    pub fn state(&self) -> &[C64] {
        &self.stepper.y
    }

    pub fn stats(&self) -> crate::evolve::SolverStats {
        self.stepper.stats
    }

    /// Swaps in a new generator, collapse set and state (a change of frame),
    /// keeping the jump threshold.
    pub fn replace_system(&mut self, gen: LinearGenerator, c_ops: Vec<CscMatrix>, psi: &[C64]) {
        self.weights = vec![0.0; c_ops.len()];
        self.gen = gen;
        self.c_ops = c_ops;
        let t = self.stepper.t;
        self.stepper.restart(t, psi);
    }

    pub fn advance_to(&mut self, target: f64, rng: &mut StreamRng) -> Result<()> {
        while self.stepper.t < target {
            self.stepper.step(&mut self.gen, target)?;
            if !self.c_ops.is_empty() && norm_sqr(&self.stepper.y) <= self.threshold {
                self.jump(rng)?;
            }
        }
        Ok(())
    }

    fn jump(&mut self, rng: &mut StreamRng) -> Result<()> {
        let r = self.threshold;
        let (mut ta, _) = self.stepper.prev();
        let mut tb = self.stepper.t;
        self.buf.copy_from_slice(&self.stepper.y);
        let mut t_jump = tb;
        // f(ta) > 0 ≥ f(tb) for f = ‖ψ‖² − r
        if norm_sqr(&self.buf) - r < -CROSSING_TOL {
            for _ in 0..200 {
                let mid = 0.5 * (ta + tb);
                self.stepper.dense_output(mid, &mut self.buf);
                let f = norm_sqr(&self.buf) - r;
                t_jump = mid;
                if f.abs() < CROSSING_TOL || tb - ta <= 4.0 * f64::EPSILON * tb.abs().max(1.0) {
                    break;
                }
                if f > 0.0 {
                    ta = mid;
                } else {
                    tb = mid;
                }
            }
        }
        // channel k with probability ‖Cₖψ‖² / Σⱼ‖Cⱼψ‖²
        let mut total = 0.0;
        for (w, c) in self.weights.iter_mut().zip(&self.c_ops) {
            self.cbuf.fill(C64::new(0.0, 0.0));
            c.mul_vec_acc(C64::new(1.0, 0.0), &self.buf, &mut self.cbuf);
            *w = norm_sqr(&self.cbuf);
            total += *w;
        }
        if !(total > 0.0) {
            return Err(QsimError::IntegrationFailure {
                last_good_time: t_jump,
                reason: "norm decayed but every collapse operator annihilates the state".into(),
            });
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut channel = self.weights.len() - 1;
        let mut acc = 0.0;
        for (k, w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc && *w > 0.0 {
                channel = k;
                break;
            }
        }
        self.cbuf.fill(C64::new(0.0, 0.0));
        self.c_ops[channel].mul_vec_acc(C64::new(1.0, 0.0), &self.buf, &mut self.cbuf);
        let norm = norm_sqr(&self.cbuf).sqrt();
        for v in self.cbuf.iter_mut() {
            *v /= norm;
        }
        self.jumps.push((t_jump, channel));
        self.threshold = open_unit(rng);
        self.stepper.restart(t_jump, &self.cbuf);
        Ok(())
    }
}

/// Expectation of `op` in the normalized version of `psi`.
pub(crate) fn normalized_expect(op: &QuantumObject, psi: &[C64]) -> C64 {
    expect_ket_slice(op, psi) / norm_sqr(psi)
}

/// Monte-Carlo wave-function ensemble.
///
/// With no collapse operators, or only zero ones, every trajectory is the
/// deterministic [`sesolve`] solution and no jumps are recorded.
#[allow(clippy::too_many_arguments)]
pub fn mcsolve(
    h: impl Into<TimeDependentOperator>,
    psi0: &QuantumObject,
    tlist: &[f64],
    c_ops: &[QuantumObject],
    e_ops: &[QuantumObject],
    ntraj: usize,
    seed: u64,
    params: &[f64],
    opts: &SolveOptions,
) -> Result<TrajectoryEnsembleResult> {
    let h = h.into();
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    if psi0.kind() != Kind::Ket {
        return Err(QsimError::KindMismatch(format!(
            "mcsolve needs a Ket initial state, got {:?}",
            psi0.kind()
        )));
    }
    if ntraj == 0 {
        return Err(QsimError::InvalidOptions("ntraj must be at least 1".into()));
    }
    check_dims("initial state", h.dims(), psi0)?;
    check_e_ops(e_ops, h.dims())?;
    for c in c_ops {
        check_dims("collapse operator", h.dims(), c)?;
    }

    if c_ops.iter().all(|c| c.frobenius_norm() == 0.0) {
        let det = sesolve(h, psi0, tlist, e_ops, params, &SolveOptions {
            saveat: None,
            store_states: false,
            ..opts.clone()
        })?;
        let outputs = (0..ntraj)
            .map(|_| {
                Ok(TrajectoryOutput {
                    expect: det.expect.clone(),
                    jumps: Vec::new(),
                    measurement: None,
                    stats: det.stats,
                })
            })
            .collect();
        return assemble(tlist, e_ops.len(), outputs, seed, opts.store_trajectories);
    }

    let cs: Vec<CscMatrix> = c_ops.iter().map(|c| c.sparse().into_owned()).collect();
    let gen = effective_generator(&h, &cs, params);
    let y0 = psi0.to_vec();
    let outputs = run_ensemble(ntraj, seed, opts.n_threads, |_, mut rng| {
        let mut ev = JumpEvolver::new(gen.clone(), cs.clone(), opts, tlist[0], &y0, &mut rng);
        let mut expect = Array2::zeros((e_ops.len(), tlist.len()));
        for (k, &t) in tlist.iter().enumerate() {
            ev.advance_to(t, &mut rng)?;
            for (j, e) in e_ops.iter().enumerate() {
                expect[[j, k]] = normalized_expect(e, ev.state());
            }
        }
        Ok(TrajectoryOutput {
            expect,
            jumps: std::mem::take(&mut ev.jumps),
            measurement: None,
            stats: ev.stats(),
        })
    })?;
    assemble(tlist, e_ops.len(), outputs, seed, opts.store_trajectories)
}
