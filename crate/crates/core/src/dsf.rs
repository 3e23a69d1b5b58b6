//! Adaptive-basis solvers.
//!
//! The dynamical shifted Fock (DSF) solvers keep each tracked bosonic mode in
//! a frame displaced by its reference coherence `α_ref`: the laboratory
//! annihilation operator is `a + α_ref`. Whenever the in-frame coherence
//! `δα = ⟨a⟩` exceeds the threshold at an observation point, the state is
//! displaced by `D(−δα)`, `α_ref += δα`, and all operators are rebuilt from
//! the builder functions evaluated at the new `a + α_ref`. This matches the
//! conjugation `D(−δα) X D(δα)` exactly for polynomial builders.
//!
//! The dynamical Fock dimension (DFD) solver instead grows or shrinks the
//! truncation of monitored modes from their tail populations.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::evolve::ode::Stepper;
use crate::evolve::td::LinearGenerator;
use crate::evolve::{
    hermitize_vec, initial_density_vec, validate_tlist, SolveOptions, SolveResult, SolverStats,
    TimeDependentOperator,
};
use crate::linalg::{dense, CscMatrix};
use crate::qobj::{expect_vec_slice, Kind, QuantumObject};
use crate::superop;
use crate::trajectories::{
    assemble, effective_generator, normalized_expect, run_ensemble, JumpEvolver,
    TrajectoryEnsembleResult, TrajectoryOutput,
};

pub const DEFAULT_DSF_THRESHOLD: f64 = 0.1;
/// Population of the two highest Fock levels above which a shifted state is
/// flagged as poorly represented.
pub const DSF_TAIL_WARNING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftEvent {
    pub time: f64,
    pub mode: usize,
    pub delta: C64,
}

/// A shift that left the reduced space poorly resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct DsfAccuracyWarning {
    pub time: f64,
    pub mode: usize,
    /// Population of the two highest levels of the mode after the shift.
    pub tail_population: f64,
}

/// Frame bookkeeping of one DSF evolution.
#[derive(Debug, Clone)]
pub struct DsfState {
    /// Reference coherence `α_ref` per tracked mode.
    pub alphas: Vec<C64>,
    pub threshold: f64,
    /// Annihilation operators in the reduced space.
    pub local_ops: Vec<QuantumObject>,
    pub shift_log: Vec<ShiftEvent>,
    /// Fock level of every basis state for each mode, when `a†a` is diagonal.
    levels: Vec<Option<Vec<f64>>>,
}

impl DsfState {
    pub fn new(local_ops: Vec<QuantumObject>, alphas: Vec<C64>, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(QsimError::InvalidOptions(format!(
                "DSF threshold must be positive, got {threshold}"
            )));
        }
        if local_ops.len() != alphas.len() {
            return Err(QsimError::InvalidOptions(format!(
                "{} tracked operators but {} initial coherences",
                local_ops.len(),
                alphas.len()
            )));
        }
        if local_ops.is_empty() {
            return Err(QsimError::InvalidOptions("DSF needs at least one tracked mode".into()));
        }
        let dims = local_ops[0].dims().to_vec();
        for a in &local_ops {
            if a.kind() != Kind::Operator || a.dims() != dims.as_slice() {
                return Err(QsimError::DimsMismatch(format!(
                    "tracked operators must be Operators with common dims {dims:?}"
                )));
            }
        }
        let levels = local_ops.iter().map(fock_levels).collect();
        Ok(Self {
            alphas,
            threshold,
            local_ops,
            shift_log: Vec::new(),
            levels,
        })
    }

    pub fn dims(&self) -> &[usize] {
        self.local_ops[0].dims()
    }

    /// Laboratory-frame operators `aᵢ + α_ref,ᵢ·I`.
    pub fn shifted_ops(&self) -> Result<Vec<QuantumObject>> {
        let d = self.local_ops[0].hilbert_dim();
        let eye = QuantumObject::from_sparse(CscMatrix::identity(d), Kind::Operator, self.dims().to_vec())?;
        self.local_ops
            .iter()
            .zip(&self.alphas)
            .map(|(a, &al)| a.lin_comb(C64::new(1.0, 0.0), &eye, al))
            .collect()
    }

    /// Modes whose in-frame coherence exceeds the threshold.
    fn due(&self, coherences: &[C64]) -> Vec<(usize, C64)> {
        coherences
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() > self.threshold)
            .map(|(i, &c)| (i, c))
            .collect()
    }

    /// `D(β) = exp(β aᵢ† − β* aᵢ)` in the reduced space (dense).
    fn displacement(&self, mode: usize, beta: C64) -> Result<Array2<C64>> {
        let a = self.local_ops[mode].dense();
        let g = dense::adjoint(&a).mapv(|z| z * beta) - a.mapv(|z| z * beta.conj());
        dense::expm(&g)
    }

    fn record(&mut self, time: f64, mode: usize, delta: C64) {
        self.alphas[mode] += delta;
        self.shift_log.push(ShiftEvent { time, mode, delta });
    }

    /// Population of the two highest Fock levels of `mode`, from diagonal
    /// populations of the state.
    fn tail(&self, mode: usize, populations: impl Fn(usize) -> f64) -> Option<f64> {
        let lv = self.levels[mode].as_ref()?;
        let top = lv.iter().cloned().fold(0.0, f64::max);
        Some(
            lv.iter()
                .enumerate()
                .filter(|(_, &n)| n > top - 1.5)
                .map(|(k, _)| populations(k))
                .sum(),
        )
    }
}

fn fock_levels(a: &QuantumObject) -> Option<Vec<f64>> {
    let n = a.dag().try_matmul(a).ok()?;
    let s = n.sparse();
    if s.iter().any(|(r, c, v)| r != c && v.norm() > 1e-12) {
        return None;
    }
    Some((0..s.nrows()).map(|k| s.get(k, k).re.round()).collect())
}

/// Builds an operator from the laboratory-frame operators and `params`.
pub trait OperatorBuilder: Fn(&[QuantumObject], &[f64]) -> Result<QuantumObject> + Sync {}
impl<T: Fn(&[QuantumObject], &[f64]) -> Result<QuantumObject> + Sync> OperatorBuilder for T {}

/// Builds a list of operators from the laboratory-frame operators and `params`.
pub trait OperatorListBuilder: Fn(&[QuantumObject], &[f64]) -> Result<Vec<QuantumObject>> + Sync {}
impl<T: Fn(&[QuantumObject], &[f64]) -> Result<Vec<QuantumObject>> + Sync> OperatorListBuilder for T {}

#[derive(Debug, Clone)]
pub struct DsfResult {
    pub result: SolveResult,
    pub shift_log: Vec<ShiftEvent>,
    pub final_alphas: Vec<C64>,
    pub warnings: Vec<DsfAccuracyWarning>,
}

#[derive(Debug, Clone)]
pub struct DsfEnsembleResult {
    pub result: TrajectoryEnsembleResult,
    /// One log per contributing trajectory, aligned with `trajectory_ids`.
    pub shift_logs: Vec<Vec<ShiftEvent>>,
    pub warnings: Vec<DsfAccuracyWarning>,
}

fn check_state(state0: &QuantumObject, dims: &[usize], kinds: &[Kind]) -> Result<()> {
    if !kinds.contains(&state0.kind()) {
        return Err(QsimError::KindMismatch(format!(
            "initial state of kind {:?} not accepted here",
            state0.kind()
        )));
    }
    if state0.dims() != dims {
        return Err(QsimError::DimsMismatch(format!(
            "initial state dims {:?} differ from the operator dims {dims:?}",
            state0.dims()
        )));
    }
    Ok(())
}

/// Master-equation DSF with shift checks at the `tlist` points.
#[allow(clippy::too_many_arguments)]
pub fn dsf_mesolve(
    h_fn: impl OperatorBuilder,
    state0: &QuantumObject,
    tlist: &[f64],
    c_ops_fn: impl OperatorListBuilder,
    op_list: &[QuantumObject],
    alpha0: &[C64],
    e_ops_fn: impl OperatorListBuilder,
    threshold: f64,
    params: &[f64],
    opts: &SolveOptions,
) -> Result<DsfResult> {
    validate_tlist(tlist)?;
    let mut st = DsfState::new(op_list.to_vec(), alpha0.to_vec(), threshold)?;
    check_state(state0, st.dims(), &[Kind::Ket, Kind::Operator])?;
    let d = state0.hilbert_dim();
    let build = |st: &DsfState| -> Result<(LinearGenerator, Vec<QuantumObject>)> {
        let ops = st.shifted_ops()?;
        let h = h_fn(&ops, params)?;
        let c = c_ops_fn(&ops, params)?;
        let l = superop::liouvillian(&h, &c)?;
        let e = e_ops_fn(&ops, params)?;
        Ok((LinearGenerator::new(l.sparse().into_owned(), Vec::new(), params), e))
    };
    let (mut gen, mut e_ops) = build(&st)?;
    let mut stepper = Stepper::from_options(d * d, opts);
    stepper.reset(tlist[0], &initial_density_vec(state0)?);
    let mut expect = Array2::zeros((e_ops.len(), tlist.len()));
    let mut herm = vec![C64::new(0.0, 0.0); d * d];
    let mut warnings = Vec::new();
    for (k, &t) in tlist.iter().enumerate() {
        stepper.advance_to(&mut gen, t)?;
        hermitize_vec(&stepper.y, d, &mut herm);
        if e_ops.len() != expect.nrows() {
            return Err(QsimError::InvalidOptions(
                "e_ops builder returned a different number of operators after a shift".into(),
            ));
        }
        for (j, e) in e_ops.iter().enumerate() {
            expect[[j, k]] = expect_vec_slice(e, &herm);
        }
        let coherences: Vec<C64> = st.local_ops.iter().map(|a| expect_vec_slice(a, &herm)).collect();
        let due = st.due(&coherences);
        if due.is_empty() {
            continue;
        }
        let mut rho = superop::vec_to_dense(&herm, d);
        for &(mode, delta) in &due {
            let dm = st.displacement(mode, -delta)?;
            rho = dm.dot(&rho).dot(&dense::adjoint(&dm));
            st.record(t, mode, delta);
            if let Some(tail) = st.tail(mode, |i| rho[[i, i]].re) {
                if tail > DSF_TAIL_WARNING {
                    log::warn!("DSF: mode {mode} has tail population {tail:.3e} at t = {t}");
                    warnings.push(DsfAccuracyWarning { time: t, mode, tail_population: tail });
                }
            }
        }
        (gen, e_ops) = build(&st)?;
        let v: Vec<C64> = (0..d * d).map(|i| rho[[i % d, i / d]]).collect();
        stepper.restart(t, &v);
    }
    Ok(DsfResult {
        result: SolveResult {
            times: tlist.to_vec(),
            expect,
            states: None,
            state_times: Vec::new(),
            stats: stepper.stats,
        },
        shift_log: st.shift_log,
        final_alphas: st.alphas,
        warnings,
    })
}

/// Monte-Carlo DSF: each trajectory carries its own frame, displaces its
/// (unnormalized) state vector by `D(−δα)` and jumps with the current-frame
/// collapse operators.
#[allow(clippy::too_many_arguments)]
pub fn dsf_mcsolve(
    h_fn: impl OperatorBuilder,
    psi0: &QuantumObject,
    tlist: &[f64],
    c_ops_fn: impl OperatorListBuilder,
    op_list: &[QuantumObject],
    alpha0: &[C64],
    e_ops_fn: impl OperatorListBuilder,
    threshold: f64,
    ntraj: usize,
    seed: u64,
    params: &[f64],
    opts: &SolveOptions,
) -> Result<DsfEnsembleResult> {
    validate_tlist(tlist)?;
    let st0 = DsfState::new(op_list.to_vec(), alpha0.to_vec(), threshold)?;
    check_state(psi0, st0.dims(), &[Kind::Ket])?;
    let build = |st: &DsfState| -> Result<(LinearGenerator, Vec<CscMatrix>, Vec<QuantumObject>)> {
        let ops = st.shifted_ops()?;
        let h = TimeDependentOperator::from(h_fn(&ops, params)?);
        let c: Vec<CscMatrix> = c_ops_fn(&ops, params)?
            .iter()
            .map(|c| c.sparse().into_owned())
            .collect();
        let e = e_ops_fn(&ops, params)?;
        Ok((effective_generator(&h, &c, params), c, e))
    };
    let n_e = build(&st0)?.2.len();
    let y0 = psi0.to_vec();
    type Traj = (Result<TrajectoryOutput>, Vec<ShiftEvent>, Vec<DsfAccuracyWarning>);
    let runs: Vec<Traj> = run_ensemble(ntraj, seed, opts.n_threads, |_, mut rng| {
        let mut st = st0.clone();
        let mut warnings = Vec::new();
        let mut body = || -> Result<TrajectoryOutput> {
            let (gen, cs, mut e_ops) = build(&st)?;
            let mut ev = JumpEvolver::new(gen, cs, opts, tlist[0], &y0, &mut rng);
            let mut expect = Array2::zeros((n_e, tlist.len()));
            for (k, &t) in tlist.iter().enumerate() {
                ev.advance_to(t, &mut rng)?;
                for (j, e) in e_ops.iter().enumerate() {
                    expect[[j, k]] = normalized_expect(e, ev.state());
                }
                let coherences: Vec<C64> =
                    st.local_ops.iter().map(|a| normalized_expect(a, ev.state())).collect();
                let due = st.due(&coherences);
                if due.is_empty() {
                    continue;
                }
                let mut psi = Array2::from_shape_vec((y0.len(), 1), ev.state().to_vec())
                    .expect("state length matches its dimension");
                for &(mode, delta) in &due {
                    psi = st.displacement(mode, -delta)?.dot(&psi);
                    st.record(t, mode, delta);
                    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                    if let Some(tail) = st.tail(mode, |i| psi[[i, 0]].norm_sqr() / norm2) {
                        if tail > DSF_TAIL_WARNING {
                            warnings.push(DsfAccuracyWarning { time: t, mode, tail_population: tail });
                        }
                    }
                }
                let (gen, cs, e) = build(&st)?;
                e_ops = e;
                let v: Vec<C64> = psi.iter().copied().collect();
                ev.replace_system(gen, cs, &v);
            }
            Ok(TrajectoryOutput {
                expect,
                jumps: std::mem::take(&mut ev.jumps),
                measurement: None,
                stats: ev.stats(),
            })
        };
        let out = body();
        (out, st.shift_log, warnings)
    })?;
    let mut outputs = Vec::with_capacity(ntraj);
    let mut logs = Vec::with_capacity(ntraj);
    let mut warnings = Vec::new();
    for (out, log, w) in runs {
        if out.is_ok() {
            logs.push(log);
        }
        outputs.push(out);
        warnings.extend(w);
    }
    Ok(DsfEnsembleResult {
        result: assemble(tlist, n_e, outputs, seed, opts.store_trajectories)?,
        shift_logs: logs,
        warnings,
    })
}

// ---------------------------------------------------------------------------
// Dynamical Fock dimension

/// Resize rules for [`dfd_mesolve`].
#[derive(Debug, Clone, PartialEq)]
pub struct DfdPolicy {
    /// Subsystems whose truncation may change; `None` monitors all of them.
    pub monitored: Option<Vec<usize>>,
    /// Number of top levels forming the tail.
    pub m: usize,
    pub tau_up: f64,
    pub tau_down: f64,
    pub grow: usize,
    pub shrink: usize,
    pub dim_min: usize,
    pub dim_max: usize,
}

impl Default for DfdPolicy {
    fn default() -> Self {
        Self {
            monitored: None,
            m: 2,
            tau_up: 1e-4,
            tau_down: 1e-6,
            grow: 4,
            shrink: 4,
            dim_min: 4,
            dim_max: 256,
        }
    }
}

impl DfdPolicy {
    fn validate(&self) -> Result<()> {
        if self.m == 0 || self.grow == 0 || self.shrink == 0 || self.dim_min < self.m + 1 {
            return Err(QsimError::InvalidOptions(format!(
                "DFD policy needs m, grow, shrink ≥ 1 and dim_min > m: {self:?}"
            )));
        }
        if !(self.tau_up > 0.0 && self.tau_down > 0.0 && self.tau_down <= self.tau_up) {
            return Err(QsimError::InvalidOptions(format!(
                "DFD thresholds need 0 < tau_down ≤ tau_up: {self:?}"
            )));
        }
        Ok(())
    }

    /// New dimension of a mode with level populations `pops`, if it changes.
    fn decide(&self, pops: &[f64]) -> Result<Option<usize>> {
        let dim = pops.len();
        let tail: f64 = pops[dim.saturating_sub(self.m)..].iter().sum();
        if tail > self.tau_up {
            let new = dim + self.grow;
            if new > self.dim_max {
                return Err(QsimError::DfdOverflow { dim_max: self.dim_max });
            }
            return Ok(Some(new));
        }
        if dim > self.dim_min {
            // levels that would be removed plus the tail of the smaller space
            let upper: f64 = pops[dim.saturating_sub(self.m + self.shrink)..].iter().sum();
            if upper < self.tau_down {
                return Ok(Some(dim.saturating_sub(self.shrink).max(self.dim_min)));
            }
        }
        Ok(None)
    }
}

#[derive(Debug, Clone)]
pub struct DfdResult {
    pub result: SolveResult,
    /// `(time, dims)` after every resize.
    pub dim_log: Vec<(f64, Vec<usize>)>,
    /// Largest dimension reached per subsystem.
    pub max_dims: Vec<usize>,
}

/// Builds an operator for the given subsystem dimensions and `params`.
pub trait DimsBuilder: Fn(&[usize], &[f64]) -> Result<QuantumObject> {}
impl<T: Fn(&[usize], &[f64]) -> Result<QuantumObject>> DimsBuilder for T {}

/// Builds a list of operators for the given subsystem dimensions and `params`.
pub trait DimsListBuilder: Fn(&[usize], &[f64]) -> Result<Vec<QuantumObject>> {}
impl<T: Fn(&[usize], &[f64]) -> Result<Vec<QuantumObject>>> DimsListBuilder for T {}

/// Populations of each level of subsystem `s` (row-major composite index).
fn level_populations(diag: impl Fn(usize) -> f64, dims: &[usize], s: usize) -> Vec<f64> {
    let stride: usize = dims[s + 1..].iter().product();
    let d: usize = dims.iter().product();
    let mut pops = vec![0.0; dims[s]];
    for k in 0..d {
        pops[(k / stride) % dims[s]] += diag(k);
    }
    pops
}

/// Index map from the new basis to the old one (`None` for padded levels).
fn basis_map(old: &[usize], new: &[usize]) -> Vec<Option<usize>> {
    let dn: usize = new.iter().product();
    (0..dn)
        .map(|mut k| {
            let mut idx = vec![0; new.len()];
            for s in (0..new.len()).rev() {
                idx[s] = k % new[s];
                k /= new[s];
            }
            let mut o = 0;
            for s in 0..old.len() {
                if idx[s] >= old[s] {
                    return None;
                }
                o = o * old[s] + idx[s];
            }
            Some(o)
        })
        .collect()
}

/// Zero-pads or truncates a column-stacked density matrix and restores
/// unit trace.
fn resize_density(v: &[C64], old: &[usize], new: &[usize]) -> Vec<C64> {
    let d_old: usize = old.iter().product();
    let d_new: usize = new.iter().product();
    let map = basis_map(old, new);
    let mut out = vec![C64::new(0.0, 0.0); d_new * d_new];
    for c in 0..d_new {
        for r in 0..d_new {
            if let (Some(ro), Some(co)) = (map[r], map[c]) {
                out[r + c * d_new] = v[ro + co * d_old];
            }
        }
    }
    let tr: f64 = (0..d_new).map(|i| out[i * (d_new + 1)].re).sum();
    for z in out.iter_mut() {
        *z /= tr;
    }
    out
}

/// Master equation with truncations adapted at every `tlist` point.
#[allow(clippy::too_many_arguments)]
pub fn dfd_mesolve(
    h_fn: impl DimsBuilder,
    state0: &QuantumObject,
    tlist: &[f64],
    c_ops_fn: impl DimsListBuilder,
    e_ops_fn: impl DimsListBuilder,
    params: &[f64],
    opts: &SolveOptions,
    policy: &DfdPolicy,
) -> Result<DfdResult> {
    validate_tlist(tlist)?;
    policy.validate()?;
    let mut dims = state0.dims().to_vec();
    let monitored: Vec<usize> = policy.monitored.clone().unwrap_or_else(|| (0..dims.len()).collect());
    if let Some(&s) = monitored.iter().find(|&&s| s >= dims.len()) {
        return Err(QsimError::InvalidSubsystem(format!(
            "monitored subsystem {s} out of range for dims {dims:?}"
        )));
    }
    let build = |dims: &[usize]| -> Result<(LinearGenerator, Vec<QuantumObject>)> {
        let h = h_fn(dims, params)?;
        let c = c_ops_fn(dims, params)?;
        let e = e_ops_fn(dims, params)?;
        for x in std::iter::once(&h).chain(&c).chain(&e) {
            if x.dims() != dims {
                return Err(QsimError::DimsMismatch(format!(
                    "builder returned dims {:?} for requested {dims:?}",
                    x.dims()
                )));
            }
        }
        let l = superop::liouvillian(&h, &c)?;
        Ok((LinearGenerator::new(l.sparse().into_owned(), Vec::new(), params), e))
    };
    let (mut gen, mut e_ops) = build(&dims)?;
    let n_e = e_ops.len();
    let mut d: usize = dims.iter().product();
    let mut stepper = Stepper::from_options(d * d, opts);
    stepper.reset(tlist[0], &initial_density_vec(state0)?);
    let mut stats = SolverStats::default();
    let mut expect = Array2::zeros((n_e, tlist.len()));
    let mut dim_log = Vec::new();
    let mut max_dims = dims.clone();
    for (k, &t) in tlist.iter().enumerate() {
        stepper.advance_to(&mut gen, t)?;
        let mut herm = vec![C64::new(0.0, 0.0); d * d];
        hermitize_vec(&stepper.y, d, &mut herm);
        for (j, e) in e_ops.iter().enumerate() {
            expect[[j, k]] = expect_vec_slice(e, &herm);
        }
        if k + 1 == tlist.len() {
            break;
        }
        let mut new_dims = dims.clone();
        for &s in &monitored {
            let pops = level_populations(|i| herm[i * (d + 1)].re, &dims, s);
            if let Some(n) = policy.decide(&pops)? {
                new_dims[s] = n;
            }
        }
        if new_dims == dims {
            continue;
        }
        let v = resize_density(&herm, &dims, &new_dims);
        dims = new_dims;
        for (m, &n) in max_dims.iter_mut().zip(&dims) {
            *m = (*m).max(n);
        }
        dim_log.push((t, dims.clone()));
        (gen, e_ops) = build(&dims)?;
        if e_ops.len() != n_e {
            return Err(QsimError::InvalidOptions(
                "e_ops builder returned a different number of operators after a resize".into(),
            ));
        }
        d = dims.iter().product();
        stats.merge(&stepper.stats);
        stepper = Stepper::from_options(d * d, opts);
        stepper.reset(t, &v);
    }
    stats.merge(&stepper.stats);
    Ok(DfdResult {
        result: SolveResult {
            times: tlist.to_vec(),
            expect,
            states: None,
            state_times: Vec::new(),
            stats,
        },
        dim_log,
        max_dims,
    })
}
