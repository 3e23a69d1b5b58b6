//! Deterministic time evolution: the Schrödinger equation ([`sesolve`]) and
//! the Lindblad master equation ([`mesolve`]).
//!
//! Integration steps are clipped so that every `tlist` (and `saveat`) point is
//! an exact step boundary. Default tolerances are this crate's own choice:
//! `abstol = 1e-8`, `reltol = 1e-6`.

pub mod ode;
pub mod td;

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::linalg::CscMatrix;
use crate::qobj::{expect_ket_slice, expect_vec_slice, Kind, QuantumObject};
use crate::superop;

pub use ode::SolverStats;
pub use td::{evaluate_td, CoeffFn, TimeDependentOperator};

use ode::Stepper;
use td::LinearGenerator;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Dormand–Prince 5(4) with PI step control.
    AdaptiveRK45,
    /// Classical fourth-order Runge–Kutta with step `dt_fixed`.
    FixedRK4,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub method: Method,
    pub abstol: f64,
    pub reltol: f64,
    pub dt_fixed: f64,
    pub store_states: bool,
    pub saveat: Option<Vec<f64>>,
    pub max_steps: usize,
    /// Largest stochastic step; `None` means `(t_f − t_0)/10⁴`.
    pub dt_max: Option<f64>,
    /// Worker threads for trajectory ensembles; `None` uses the global pool.
    pub n_threads: Option<usize>,
    /// Keep per-trajectory expectation traces in ensemble results.
    pub store_trajectories: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRK45,
            abstol: 1e-8,
            reltol: 1e-6,
            dt_fixed: 1e-3,
            store_states: false,
            saveat: None,
            max_steps: 10_000_000,
            dt_max: None,
            n_threads: None,
            store_trajectories: false,
        }
    }
}

impl SolveOptions {
    pub fn with_tolerances(mut self, abstol: f64, reltol: f64) -> Self {
        self.abstol = abstol;
        self.reltol = reltol;
        self
    }

    pub fn fixed_rk4(mut self, dt: f64) -> Self {
        self.method = Method::FixedRK4;
        self.dt_fixed = dt;
        self
    }

    pub(crate) fn validate(&self, tlist: &[f64]) -> Result<()> {
        if !(self.abstol > 0.0) || !(self.reltol > 0.0) {
            return Err(QsimError::InvalidOptions(format!(
                "tolerances must be positive (abstol = {}, reltol = {})",
                self.abstol, self.reltol
            )));
        }
        if self.method == Method::FixedRK4 && !(self.dt_fixed > 0.0) {
            return Err(QsimError::InvalidOptions(format!(
                "fixed step must be positive, got {}",
                self.dt_fixed
            )));
        }
        if let Some(dt) = self.dt_max {
            if !(dt > 0.0) {
                return Err(QsimError::InvalidOptions(format!(
                    "dt_max must be positive, got {dt}"
                )));
            }
        }
        if let Some(s) = &self.saveat {
            let (t0, tf) = (tlist[0], tlist[tlist.len() - 1]);
            if s.iter().any(|&t| !(t >= t0 && t <= tf)) {
                return Err(QsimError::InvalidOptions(format!(
                    "saveat points must lie within [{t0}, {tf}]"
                )));
            }
        }
        if self.n_threads == Some(0) {
            return Err(QsimError::InvalidOptions("n_threads must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub times: Vec<f64>,
    /// `n_e_ops × n_times`.
    pub expect: Array2<C64>,
    pub states: Option<Vec<QuantumObject>>,
    /// Times of the stored states.
    pub state_times: Vec<f64>,
    pub stats: SolverStats,
}

pub(crate) fn validate_tlist(tlist: &[f64]) -> Result<()> {
    if tlist.len() < 2 {
        return Err(QsimError::InvalidGrid(format!(
            "tlist needs at least 2 points, got {}",
            tlist.len()
        )));
    }
    if tlist.iter().any(|t| !t.is_finite()) {
        return Err(QsimError::InvalidGrid("tlist contains non-finite times".into()));
    }
    if tlist.windows(2).any(|w| w[1] <= w[0]) {
        return Err(QsimError::InvalidGrid("tlist must be strictly increasing".into()));
    }
    Ok(())
}

pub(crate) fn check_dims(what: &str, expected: &[usize], got: &QuantumObject) -> Result<()> {
    if got.dims() != expected {
        return Err(QsimError::DimsMismatch(format!(
            "{what} has dims {:?}, expected {expected:?}",
            got.dims()
        )));
    }
    Ok(())
}

pub(crate) fn check_e_ops(e_ops: &[QuantumObject], dims: &[usize]) -> Result<()> {
    for e in e_ops {
        if e.kind() != Kind::Operator {
            return Err(QsimError::KindMismatch(format!(
                "expectation operators must be Operators, got {:?}",
                e.kind()
            )));
        }
        check_dims("expectation operator", dims, e)?;
    }
    Ok(())
}

/// Observation schedule: the sorted union of `tlist` and `saveat`, each point
/// tagged with its `tlist` index (if any) and whether a state is stored there.
/// Points are produced lazily so the schedule costs `O(|saveat|)` memory.
pub(crate) struct Schedule<'a> {
    tlist: &'a [f64],
    /// Sorted, deduplicated `saveat`.
    extra: Vec<f64>,
    store_on_grid: bool,
}

impl<'a> Schedule<'a> {
    pub fn new(tlist: &'a [f64], opts: &SolveOptions, store_default: bool) -> Self {
        let store_on_grid = opts.saveat.is_none() && (opts.store_states || store_default);
        let mut extra = opts.saveat.clone().unwrap_or_default();
        extra.sort_by(f64::total_cmp);
        extra.dedup();
        Self { tlist, extra, store_on_grid }
    }

    pub fn n_stored(&self) -> usize {
        if self.store_on_grid {
            self.tlist.len()
        } else {
            self.extra.len()
        }
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, Option<usize>, bool)> + '_ {
        let (mut i, mut j) = (0, 0);
        std::iter::from_fn(move || {
            let t = self.tlist.get(i).copied();
            let s = self.extra.get(j).copied();
            match (t, s) {
                (Some(t), Some(s)) if s == t => {
                    i += 1;
                    j += 1;
                    Some((t, Some(i - 1), true))
                }
                (Some(t), Some(s)) if s < t => {
                    j += 1;
                    Some((s, None, true))
                }
                (None, Some(s)) => {
                    j += 1;
                    Some((s, None, true))
                }
                (Some(t), _) => {
                    i += 1;
                    Some((t, Some(i - 1), self.store_on_grid))
                }
                (None, None) => None,
            }
        })
    }
}

/// Integrates `y' = G(t) y` and calls `observe(tlist_index, t, y, store)` at
/// every schedule point.
pub(crate) fn integrate_linear(
    gen: &mut LinearGenerator,
    y0: &[C64],
    schedule: &Schedule,
    opts: &SolveOptions,
    mut observe: impl FnMut(Option<usize>, f64, &[C64], bool) -> Result<()>,
) -> Result<SolverStats> {
    let mut stepper = Stepper::from_options(gen.dim(), opts);
    let mut points = schedule.points().peekable();
    let t0 = points.peek().map_or(0.0, |p| p.0);
    stepper.reset(t0, y0);
    for (t, idx, store) in points {
        stepper.advance_to(gen, t)?;
        observe(idx, t, &stepper.y, store)?;
    }
    Ok(stepper.stats)
}

/// Solves `dψ/dt = −i H(t) ψ`.
///
/// Without `e_ops` the states at `tlist` are stored.
pub fn sesolve(
    h: impl Into<TimeDependentOperator>,
    psi0: &QuantumObject,
    tlist: &[f64],
    e_ops: &[QuantumObject],
    params: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let h = h.into();
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    if h.constant().kind() != Kind::Operator {
        return Err(QsimError::KindMismatch(format!(
            "sesolve needs an Operator Hamiltonian, got {:?}",
            h.constant().kind()
        )));
    }
    if psi0.kind() != Kind::Ket {
        return Err(QsimError::KindMismatch(format!(
            "sesolve needs a Ket initial state, got {:?}",
            psi0.kind()
        )));
    }
    check_dims("initial state", h.dims(), psi0)?;
    check_e_ops(e_ops, h.dims())?;
    let norm = psi0.frobenius_norm();
    if (norm - 1.0).abs() > 1e-10 {
        log::warn!("sesolve: initial state has norm {norm}, not 1");
    }

    let dims = h.dims().to_vec();
    let mut gen = LinearGenerator::from_td(&h, C64::new(0.0, -1.0), params);
    let schedule = Schedule::new(tlist, opts, e_ops.is_empty());
    let mut expect = Array2::zeros((e_ops.len(), tlist.len()));
    let n_stored = schedule.n_stored();
    let mut states = Vec::with_capacity(n_stored);
    let mut state_times = Vec::with_capacity(n_stored);
    let y0 = psi0.to_vec();
    let stats = integrate_linear(&mut gen, &y0, &schedule, opts, |idx, t, y, store| {
        if let Some(k) = idx {
            for (j, e) in e_ops.iter().enumerate() {
                expect[[j, k]] = expect_ket_slice(e, y);
            }
        }
        if store {
            let a = Array2::from_shape_vec((y.len(), 1), y.to_vec())
                .expect("state length matches its dimension");
            states.push(QuantumObject::from_dense(a, Kind::Ket, dims.clone())?);
            state_times.push(t);
        }
        Ok(())
    })?;
    Ok(SolveResult {
        times: tlist.to_vec(),
        expect,
        states: (n_stored > 0).then_some(states),
        state_times,
        stats,
    })
}

/// Time-dependent Liouvillian: the constant part carries all dissipators,
/// each Hamiltonian term becomes `−i(spre − spost)` with its coefficient.
pub fn liouvillian_td(
    h: &TimeDependentOperator,
    c_ops: &[QuantumObject],
) -> Result<TimeDependentOperator> {
    let mut l = TimeDependentOperator::new(superop::liouvillian(h.constant(), c_ops)?);
    for (op, f) in h.terms() {
        let term = match op.kind() {
            Kind::Operator => superop::hamiltonian_superop(op)?,
            _ => op.clone(),
        };
        l.push_term(term, f.clone())?;
    }
    Ok(l)
}

pub(crate) fn initial_density_vec(rho0: &QuantumObject) -> Result<Vec<C64>> {
    let rho = match rho0.kind() {
        Kind::Ket | Kind::Operator => rho0.to_density()?,
        k => {
            return Err(QsimError::KindMismatch(format!(
                "initial state must be a Ket or density Operator, got {k:?}"
            )))
        }
    };
    Ok(superop::mat2vec(&rho.into_dense())?.to_vec())
}

/// Hermitian part of a column-stacked density matrix, written into `out`.
pub(crate) fn hermitize_vec(v: &[C64], d: usize, out: &mut [C64]) {
    for c in 0..d {
        for r in 0..d {
            out[r + c * d] = (v[r + c * d] + v[c + r * d].conj()) * 0.5;
        }
    }
}

/// Solves `dρ/dt = 𝓛(t) ρ` for `𝓛 = −i[H(t), ·] + Σ 𝒟[Cₖ]`.
///
/// `h` may also be a (time-dependent) SuperOperator, in which case `c_ops`
/// are added as extra dissipators. Reported states are Hermitized copies;
/// the integrated state is left untouched.
pub fn mesolve(
    h: impl Into<TimeDependentOperator>,
    rho0: &QuantumObject,
    tlist: &[f64],
    c_ops: &[QuantumObject],
    e_ops: &[QuantumObject],
    params: &[f64],
    opts: &SolveOptions,
) -> Result<SolveResult> {
    let h = h.into();
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    if !matches!(h.constant().kind(), Kind::Operator | Kind::SuperOperator) {
        return Err(QsimError::KindMismatch(format!(
            "mesolve needs an Operator or SuperOperator generator, got {:?}",
            h.constant().kind()
        )));
    }
    check_dims("initial state", h.dims(), rho0)?;
    check_e_ops(e_ops, h.dims())?;
    for c in c_ops {
        check_dims("collapse operator", h.dims(), c)?;
    }
    let l = liouvillian_td(&h, c_ops)?;
    let dims = h.dims().to_vec();
    let d: usize = dims.iter().product();
    let mut gen = LinearGenerator::from_td(&l, C64::new(1.0, 0.0), params);
    let y0 = initial_density_vec(rho0)?;

    let schedule = Schedule::new(tlist, opts, e_ops.is_empty());
    let mut expect = Array2::zeros((e_ops.len(), tlist.len()));
    let n_stored = schedule.n_stored();
    let mut states = Vec::with_capacity(n_stored);
    let mut state_times = Vec::with_capacity(n_stored);
    let mut herm = vec![C64::new(0.0, 0.0); d * d];
    let trace_tol = 10.0 * opts.reltol;
    let stats = integrate_linear(&mut gen, &y0, &schedule, opts, |idx, t, y, store| {
        hermitize_vec(y, d, &mut herm);
        let tr: f64 = (0..d).map(|i| herm[i * (d + 1)].re).sum();
        if (tr - 1.0).abs() > trace_tol {
            log::warn!("mesolve: trace {tr} at t = {t} deviates from 1");
        }
        if let Some(k) = idx {
            for (j, e) in e_ops.iter().enumerate() {
                expect[[j, k]] = expect_vec_slice(e, &herm);
            }
        }
        if store {
            states.push(QuantumObject::from_dense(
                superop::vec_to_dense(&herm, d),
                Kind::Operator,
                dims.clone(),
            )?);
            state_times.push(t);
        }
        Ok(())
    })?;
    Ok(SolveResult {
        times: tlist.to_vec(),
        expect,
        states: (n_stored > 0).then_some(states),
        state_times,
        stats,
    })
}

/// Propagates an arbitrary (not necessarily Hermitian or normalized) operator
/// `x` under `𝓛` and evaluates `tr(A x(t))` at each time.
pub(crate) fn propagate_operator(
    l: &CscMatrix,
    x0: &QuantumObject,
    tlist: &[f64],
    a: &QuantumObject,
    opts: &SolveOptions,
) -> Result<Vec<C64>> {
    validate_tlist(tlist)?;
    opts.validate(tlist)?;
    let mut gen = LinearGenerator::new(l.clone(), Vec::new(), &[]);
    let y0 = superop::mat2vec(&x0.clone().into_dense())?.to_vec();
    let schedule = Schedule::new(tlist, &SolveOptions { saveat: None, ..opts.clone() }, false);
    let mut out = vec![C64::new(0.0, 0.0); tlist.len()];
    integrate_linear(&mut gen, &y0, &schedule, opts, |idx, _, y, _| {
        if let Some(k) = idx {
            out[k] = expect_vec_slice(a, y);
        }
        Ok(())
    })?;
    Ok(out)
}
