//! Executes validated scenarios and writes their outputs.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use ndarray::Array2;
use qsim_core::dsf::{dfd_mesolve, dsf_mcsolve, dsf_mesolve, DfdPolicy};
use qsim_core::evolve::{mesolve, sesolve, SolveOptions, SolveResult, SolverStats};
use qsim_core::factories::destroy;
use qsim_core::steadystate::{steadystate, steadystate_detuning_gradient, steadystate_fourier, SteadyStateMethod};
use qsim_core::trajectories::{mcsolve, smesolve, ssesolve, StochasticOps, TrajectoryEnsembleResult};
use qsim_core::{expect, QsimError, QuantumObject, C64};
use serde_json::{json, Value};

use crate::models::{self, DrivenCavity, KerrJc, Optomech};
use crate::observables::{self, ModeOps};
use crate::scenario::{Diagnostic, ModelKind, ScenarioSpec, SolverKind};

/// Seed used when neither the scenario nor the command line gives one.
pub const DEFAULT_SEED: u64 = 0;

/// Environment variable holding the default worker count.
pub const THREADS_ENV: &str = "QSIM_THREADS";

/// Time series written to the CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
}

/// Shortest exact round-trip representation is not fixed-width, so floats are
/// written with 17 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    fn from_expect(times: &[f64], names: &[String], expect: &Array2<C64>) -> Self {
        let mut columns = Vec::with_capacity(2 * names.len());
        for (j, name) in names.iter().enumerate() {
            columns.push((format!("{name}_re"), expect.row(j).iter().map(|z| z.re).collect()));
            columns.push((format!("{name}_im"), expect.row(j).iter().map(|z| z.im).collect()));
        }
        Self { times: times.to_vec(), columns }
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for (name, _) in &self.columns {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for (k, &t) in self.times.iter().enumerate() {
            out.push_str(&format_float(t));
            for (_, col) in &self.columns {
                out.push(',');
                out.push_str(&format_float(col[k]));
            }
            out.push('\n');
        }
        out
    }
}

/// In-memory result of a scenario.
#[derive(Debug, Clone)]
pub struct Execution {
    pub table: Table,
    pub trajectories_csv: Option<String>,
    /// Scalar results worth printing, e.g. steady-state values.
    pub derived: Vec<(String, f64)>,
    pub stats: Value,
    pub states: Option<Value>,
    pub seed: Option<u64>,
}

/// Command-line overrides of scenario fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ntraj: Option<usize>,
    pub threads: Option<usize>,
}

/// Reads the default worker count from [`THREADS_ENV`].
pub fn env_threads() -> Result<Option<usize>, Diagnostic> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Diagnostic {
                code: "invalid_n_threads",
                message: format!("{THREADS_ENV}={v:?} is not a positive integer"),
            }),
        },
    }
}

/// Applies overrides; the thread count resolves as flag, then scenario, then
/// environment.
pub fn apply_overrides(
    spec: &mut ScenarioSpec,
    ov: &Overrides,
    env_threads: Option<usize>,
) -> Result<(), Vec<Diagnostic>> {
    let mut diags = Vec::new();
    if ov.ntraj == Some(0) {
        diags.push(Diagnostic { code: "invalid_ntraj", message: "ntraj must be at least 1".into() });
    }
    if ov.threads == Some(0) {
        diags.push(Diagnostic { code: "invalid_n_threads", message: "threads must be at least 1".into() });
    }
    if !diags.is_empty() {
        return Err(diags);
    }
    if ov.seed.is_some() {
        spec.seed = ov.seed;
    }
    if ov.ntraj.is_some() && spec.solver.is_stochastic() {
        spec.ntraj = ov.ntraj;
    }
    spec.n_threads = ov.threads.or(spec.n_threads).or(env_threads);
    Ok(())
}

pub fn solve_options(spec: &ScenarioSpec) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(v) = spec.opt_param("abstol") {
        opts.abstol = v;
    }
    if let Some(v) = spec.opt_param("reltol") {
        opts.reltol = v;
    }
    opts.dt_max = spec.opt_param("dt_max");
    opts.n_threads = spec.n_threads;
    opts.store_states = spec.output.store_states;
    opts.store_trajectories = spec.output.trajectories_path.is_some();
    opts
}

fn stats_json(s: &SolverStats) -> Value {
    json!({ "steps": s.steps, "rejected": s.rejected, "rhs_evals": s.rhs_evals })
}

fn deterministic(spec: &ScenarioSpec, r: SolveResult, extra: Value) -> Execution {
    let states = r.states.as_ref().map(|states| states_json(&r.state_times, states));
    let mut stats = stats_json(&r.stats);
    merge(&mut stats, extra);
    Execution {
        table: Table::from_expect(&r.times, &spec.e_ops, &r.expect),
        trajectories_csv: None,
        derived: Vec::new(),
        stats,
        states,
        seed: None,
    }
}

fn merge(target: &mut Value, extra: Value) {
    if let (Value::Object(t), Value::Object(e)) = (target, extra) {
        t.extend(e);
    }
}

fn states_json(times: &[f64], states: &[QuantumObject]) -> Value {
    let entries: Vec<Value> = times
        .iter()
        .zip(states)
        .map(|(&t, s)| {
            let m = s.to_dense();
            json!({
                "t": t,
                "kind": format!("{:?}", s.kind()),
                "dims": s.dims(),
                "shape": [m.nrows(), m.ncols()],
                "re": m.iter().map(|z| z.re).collect::<Vec<_>>(),
                "im": m.iter().map(|z| z.im).collect::<Vec<_>>(),
            })
        })
        .collect();
    Value::Array(entries)
}

fn ensemble(spec: &ScenarioSpec, seed: u64, r: &TrajectoryEnsembleResult, extra: Value) -> Execution {
    let mut table = Table::from_expect(&r.times, &spec.e_ops, &r.mean_expect);
    if let Some(records) = &r.measurement {
        for (name, col) in mean_currents(&r.times, records) {
            table.columns.push((name, col));
        }
    }
    let trajectories_csv = r.per_traj_expect.as_ref().map(|per| {
        let mut out = String::from("traj,t");
        for name in &spec.e_ops {
            let _ = write!(out, ",{name}_re,{name}_im");
        }
        out.push('\n');
        for (i, &id) in r.trajectory_ids.iter().enumerate() {
            for (k, &t) in r.times.iter().enumerate() {
                let _ = write!(out, "{id},{}", format_float(t));
                for j in 0..spec.e_ops.len() {
                    let z = per[[i, j, k]];
                    let _ = write!(out, ",{},{}", format_float(z.re), format_float(z.im));
                }
                out.push('\n');
            }
        }
        out
    });
    let jumps: usize = r.jump_records.iter().map(Vec::len).sum();
    let mut stats = json!({
        "ntraj": r.ntraj,
        "successful": r.trajectory_ids.len(),
        "failed": r.stats.failed,
        "jumps": jumps,
        "solver": stats_json(&r.stats.solver),
    });
    merge(&mut stats, extra);
    let mut derived = vec![("trajectories".to_string(), r.trajectory_ids.len() as f64)];
    if spec.solver == SolverKind::Mcsolve || spec.solver == SolverKind::DsfMcsolve {
        derived.push(("jumps".to_string(), jumps as f64));
    }
    Execution { table, trajectories_csv, derived, stats, states: None, seed: Some(seed) }
}

/// Ensemble-mean homodyne current per channel. Row `k ≥ 1` averages the
/// steps in `[t_{k−1}, t_k)`; row 0 precedes any measurement and is NaN.
fn mean_currents(times: &[f64], records: &[qsim_core::trajectories::WienerRecord]) -> Vec<(String, Vec<f64>)> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let nch = first.current.nrows();
    let mut out = Vec::with_capacity(nch);
    for ch in 0..nch {
        let mut sum = vec![0.0; times.len()];
        let mut count = vec![0usize; times.len()];
        for rec in records {
            let mut k = 1;
            for (s, &tau) in rec.times.iter().enumerate() {
                while k + 1 < times.len() && tau >= times[k] {
                    k += 1;
                }
                sum[k] += rec.current[[ch, s]];
                count[k] += 1;
            }
        }
        let col = sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| if c == 0 { f64::NAN } else { s / c as f64 })
            .collect();
        out.push((format!("J_{}", ch + 1), col));
    }
    out
}

fn steady_row(spec: &ScenarioSpec, rho: &QuantumObject, e_ops: &[QuantumObject]) -> qsim_core::Result<(Table, Vec<(String, f64)>)> {
    let mut expect_m = Array2::zeros((e_ops.len(), 1));
    let mut derived = Vec::new();
    for (j, e) in e_ops.iter().enumerate() {
        let v = expect(e, rho)?;
        expect_m[[j, 0]] = v;
        derived.push((format!("{}_ss", spec.e_ops[j]), v.re));
    }
    Ok((Table::from_expect(&[spec.tlist.tf], &spec.e_ops, &expect_m), derived))
}

/// Runs the solver of `spec` without touching the file system.
pub fn execute(spec: &ScenarioSpec) -> qsim_core::Result<Execution> {
    let tlist = spec.tlist.points();
    let opts = solve_options(spec);
    let seed = spec.seed.unwrap_or(DEFAULT_SEED);
    let ntraj = spec.ntraj.unwrap_or(1);
    match spec.solver {
        SolverKind::Sesolve => {
            let m = models::build(spec)?;
            let e = observables::build_all(&spec.e_ops, &m.ops)?;
            let r = sesolve(m.h, &m.psi0, &tlist, &e, &m.td_params, &opts)?;
            Ok(deterministic(spec, r, json!({})))
        }
        SolverKind::Mesolve => {
            let m = models::build(spec)?;
            let e = observables::build_all(&spec.e_ops, &m.ops)?;
            let c = m.all_losses();
            let r = mesolve(m.h, &m.psi0, &tlist, &c, &e, &m.td_params, &opts)?;
            Ok(deterministic(spec, r, json!({})))
        }
        SolverKind::Mcsolve => {
            let m = models::build(spec)?;
            let e = observables::build_all(&spec.e_ops, &m.ops)?;
            let c = m.all_losses();
            let r = mcsolve(m.h, &m.psi0, &tlist, &c, &e, ntraj, seed, &m.td_params, &opts)?;
            Ok(ensemble(spec, seed, &r, json!({})))
        }
        SolverKind::Ssesolve | SolverKind::Smesolve => {
            let m = models::build(spec)?;
            let e = observables::build_all(&spec.e_ops, &m.ops)?;
            let sc: StochasticOps = match m.sc_ops.as_slice() {
                [single] => single.into(),
                many => many.into(),
            };
            let r = if spec.solver == SolverKind::Ssesolve {
                ssesolve(m.h, &m.psi0, &tlist, sc, &e, ntraj, seed, true, &m.td_params, &opts)?
            } else {
                smesolve(m.h, &m.psi0, &tlist, &m.c_ops, sc, &e, ntraj, seed, true, &m.td_params, &opts)?
            };
            let dt = r.measurement.as_ref().and_then(|m| m.first()).map(|w| w.dt);
            Ok(ensemble(spec, seed, &r, json!({ "dt": dt })))
        }
        SolverKind::DsfMesolve => execute_dsf_mesolve(spec, &tlist, &opts),
        SolverKind::DsfMcsolve => {
            let k = KerrJc::from_spec(spec)?;
            let threshold = spec.param("threshold");
            let r = dsf_mcsolve(
                |ops: &[QuantumObject], _: &[f64]| k.hamiltonian(&ops[0]),
                &k.psi0()?,
                &tlist,
                |ops: &[QuantumObject], _: &[f64]| Ok(k.c_ops(&ops[0])),
                &[k.a.clone()],
                &[C64::new(0.0, 0.0)],
                |ops: &[QuantumObject], _: &[f64]| observables::build_all(&spec.e_ops, &k.mode_ops(ops[0].clone())),
                threshold,
                ntraj,
                seed,
                &[],
                &opts,
            )?;
            let shifts: usize = r.shift_logs.iter().map(Vec::len).sum();
            Ok(ensemble(spec, seed, &r.result, json!({ "shifts": shifts, "accuracy_warnings": r.warnings.len() })))
        }
        SolverKind::DfdMesolve => {
            let dc = DrivenCavity::from_spec(spec);
            let policy = DfdPolicy {
                monitored: None,
                m: spec.param_usize("dfd_m"),
                tau_up: spec.param("dfd_tau_up"),
                tau_down: spec.param("dfd_tau_down"),
                grow: spec.param_usize("dfd_grow"),
                shrink: spec.param_usize("dfd_shrink"),
                dim_min: spec.param_usize("dfd_dim_min"),
                dim_max: spec.param_usize("dfd_dim_max"),
            };
            let psi0 = qsim_core::factories::fock(spec.param_usize("N"), 0)?;
            let r = dfd_mesolve(
                |dims: &[usize], _: &[f64]| Ok(dc.hamiltonian(&destroy(dims[0])?)),
                &psi0,
                &tlist,
                |dims: &[usize], _: &[f64]| Ok(dc.c_ops(&destroy(dims[0])?)),
                |dims: &[usize], _: &[f64]| {
                    let ops = ModeOps { a: Some(destroy(dims[0])?), ..Default::default() };
                    observables::build_all(&spec.e_ops, &ops)
                },
                &[],
                &opts,
                &policy,
            )?;
            let mut exec = deterministic(
                spec,
                r.result,
                json!({ "resizes": r.dim_log.len(), "max_dims": r.max_dims }),
            );
            exec.derived.push(("max_dim".into(), r.max_dims[0] as f64));
            Ok(exec)
        }
        SolverKind::Steadystate => {
            let m = models::build(spec)?;
            let e = observables::build_all(&spec.e_ops, &m.ops)?;
            let rho = steadystate(m.h.constant(), &m.all_losses(), SteadyStateMethod::Direct)?;
            let (table, mut derived) = steady_row(spec, &rho, &e)?;
            let mut stats = json!({ "method": "direct" });
            if spec.model == ModelKind::DrivenCavity && spec.param("gradient_step") > 0.0 {
                let dc = DrivenCavity::from_spec(spec);
                let grad = steadystate_detuning_gradient(
                    dc.delta,
                    dc.f,
                    dc.gamma,
                    spec.param_usize("N"),
                    spec.param("gradient_step"),
                )?;
                derived.push(("dn_ddelta".into(), grad));
                derived.push(("dn_ddelta_closed_form".into(), dc.photon_number_gradient()));
                merge(&mut stats, json!({ "gradient": "central difference", "step": spec.param("gradient_step") }));
            }
            if spec.model == ModelKind::DrivenCavity {
                derived.push(("n_ss_closed_form".into(), DrivenCavity::from_spec(spec).photon_number()));
            }
            Ok(Execution { table, trajectories_csv: None, derived, stats, states: None, seed: None })
        }
        SolverKind::SteadystateFourier => {
            let om = Optomech::from_spec(spec)?;
            let (l0, l1, lm1) = om.fourier_parts()?;
            let n_max = spec.param_usize("n_max");
            let fs = steadystate_fourier(&l0, &l1, &lm1, om.wd, n_max)?;
            let ops = ModeOps { a: Some(om.a.clone()), b: Some(om.b.clone()), ..Default::default() };
            let e = observables::build_all(&spec.e_ops, &ops)?;
            let (table, mut derived) = steady_row(spec, fs.rho0(), &e)?;
            let residual = fs.recursion_residuals(&l0, &l1, &lm1)?.into_iter().fold(0.0, f64::max);
            derived.push(("recursion_residual_max".into(), residual));
            Ok(Execution {
                table,
                trajectories_csv: None,
                derived,
                stats: json!({ "n_max": n_max, "blocks": 2 * n_max + 1 }),
                states: None,
                seed: None,
            })
        }
    }
}

fn execute_dsf_mesolve(spec: &ScenarioSpec, tlist: &[f64], opts: &SolveOptions) -> qsim_core::Result<Execution> {
    let threshold = spec.param("threshold");
    let zero = [C64::new(0.0, 0.0)];
    let r = match spec.model {
        ModelKind::KerrJc => {
            let k = KerrJc::from_spec(spec)?;
            dsf_mesolve(
                |ops: &[QuantumObject], _: &[f64]| k.hamiltonian(&ops[0]),
                &k.psi0()?,
                tlist,
                |ops: &[QuantumObject], _: &[f64]| Ok(k.c_ops(&ops[0])),
                &[k.a.clone()],
                &zero,
                |ops: &[QuantumObject], _: &[f64]| observables::build_all(&spec.e_ops, &k.mode_ops(ops[0].clone())),
                threshold,
                &[],
                opts,
            )?
        }
        _ => {
            let dc = DrivenCavity::from_spec(spec);
            let n = spec.param_usize("N");
            dsf_mesolve(
                |ops: &[QuantumObject], _: &[f64]| Ok(dc.hamiltonian(&ops[0])),
                &qsim_core::factories::fock(n, 0)?,
                tlist,
                |ops: &[QuantumObject], _: &[f64]| Ok(dc.c_ops(&ops[0])),
                &[destroy(n)?],
                &zero,
                |ops: &[QuantumObject], _: &[f64]| {
                    observables::build_all(&spec.e_ops, &ModeOps { a: Some(ops[0].clone()), ..Default::default() })
                },
                threshold,
                &[],
                opts,
            )?
        }
    };
    let alphas: Vec<[f64; 2]> = r.final_alphas.iter().map(|z| [z.re, z.im]).collect();
    let mut exec = deterministic(
        spec,
        r.result,
        json!({
            "shifts": r.shift_log.len(),
            "final_alphas": alphas,
            "accuracy_warnings": r.warnings.len(),
        }),
    );
    exec.derived.push(("shifts".into(), r.shift_log.len() as f64));
    Ok(exec)
}

#[derive(Debug)]
pub enum RunError {
    Invalid(Vec<Diagnostic>),
    Solver(QsimError),
    Io { path: PathBuf, source: std::io::Error },
}

impl RunError {
    /// 2 for invalid input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Invalid(_) => 2,
            RunError::Solver(_) | RunError::Io { .. } => 3,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            RunError::Invalid(diags) => json!({
                "error": diags.first().map(|d| d.code).unwrap_or("invalid_spec"),
                "diagnostics": diags,
            }),
            RunError::Solver(e) => json!({ "error": "solver_failure", "message": e.to_string() }),
            RunError::Io { path, source } => json!({
                "error": "io_failure",
                "path": path.display().to_string(),
                "message": source.to_string(),
            }),
        }
    }
}

impl From<Vec<Diagnostic>> for RunError {
    fn from(d: Vec<Diagnostic>) -> Self {
        RunError::Invalid(d)
    }
}

impl From<QsimError> for RunError {
    fn from(e: QsimError) -> Self {
        RunError::Solver(e)
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
    pub trajectories_path: Option<PathBuf>,
    pub derived: Vec<(String, f64)>,
    pub rows: usize,
    pub wall_time: f64,
}

fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

/// Executes `spec` and writes the CSV, the JSON sidecar and, when requested,
/// the per-trajectory file below `out_dir`.
pub fn run(spec: &ScenarioSpec, out_dir: &Path) -> Result<RunReport, RunError> {
    let start = Instant::now();
    let exec = execute(spec)?;
    let wall_time = start.elapsed().as_secs_f64();
    let csv_path = out_dir.join(&spec.output.csv_path);
    let json_path = out_dir.join(&spec.output.json_path);
    write_file(&csv_path, &exec.table.to_csv())?;
    let trajectories_path = match (&spec.output.trajectories_path, &exec.trajectories_csv) {
        (Some(p), Some(text)) => {
            let path = out_dir.join(p);
            write_file(&path, text)?;
            Some(path)
        }
        _ => None,
    };
    let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
    let derived: serde_json::Map<String, Value> =
        exec.derived.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let mut sidecar = json!({
        "spec": spec,
        "library_version": env!("CARGO_PKG_VERSION"),
        "seed": exec.seed,
        "n_threads": spec.n_threads,
        "wall_time_s": wall_time,
        "timestamp_unix_s": timestamp,
        "rows": exec.table.times.len(),
        "stats": exec.stats,
        "derived": derived,
    });
    if let Some(states) = exec.states {
        merge(&mut sidecar, json!({ "states": states }));
    }
    let text = serde_json::to_string_pretty(&sidecar).expect("JSON values serialize");
    write_file(&json_path, &text)?;
    Ok(RunReport {
        csv_path,
        json_path,
        trajectories_path,
        derived: exec.derived,
        rows: exec.table.times.len(),
        wall_time,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn csv_layout() {
        let t = Table {
            times: vec![0.0, 1.0],
            columns: vec![("n_re".into(), vec![1.0, 2.0]), ("n_im".into(), vec![0.0, 0.0])],
        };
        let csv = t.to_csv();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "t,n_re,n_im");
        assert_eq!(lines.len(), 3);
        assert!(lines[2].starts_with("1.0000000000000000e0,2.0000000000000000e0"));
    }

    #[test]
    fn thread_count_precedence() {
        let mut spec = builtins::load("jc_mcsolve").unwrap();
        apply_overrides(&mut spec, &Overrides::default(), Some(3)).unwrap();
        assert_eq!(spec.n_threads, Some(3));
        spec.n_threads = Some(2);
        apply_overrides(&mut spec, &Overrides::default(), Some(3)).unwrap();
        assert_eq!(spec.n_threads, Some(2));
        apply_overrides(&mut spec, &Overrides { threads: Some(5), ..Default::default() }, Some(3)).unwrap();
        assert_eq!(spec.n_threads, Some(5));
        let err = apply_overrides(&mut spec, &Overrides { ntraj: Some(0), ..Default::default() }, None);
        assert_eq!(err.unwrap_err()[0].code, "invalid_ntraj");
    }

    #[test]
    fn deterministic_rows_match_grid() {
        let mut spec = builtins::load("jc_sesolve").unwrap();
        spec.tlist.n_points = 37;
        let exec = execute(&spec).unwrap();
        assert_eq!(exec.table.times.len(), 37);
        assert_eq!(exec.table.columns.len(), 4);
    }

    #[test]
    fn steady_state_reports_the_closed_form() {
        let exec = execute(&builtins::load("gradient_check").unwrap()).unwrap();
        let get = |k: &str| exec.derived.iter().find(|(n, _)| n == k).unwrap().1;
        assert!((get("n_cavity_ss") - 0.8).abs() < 1e-8);
        assert!((get("dn_ddelta") + 1.28).abs() < 1e-5);
        assert_eq!(exec.table.times.len(), 1);
    }

    #[test]
    fn currents_are_binned_per_interval() {
        use qsim_core::trajectories::WienerRecord;
        let rec = WienerRecord {
            dt: 0.5,
            times: vec![0.0, 0.5, 1.0, 1.5],
            increments: Array2::zeros((1, 4)),
            current: Array2::from_shape_vec((1, 4), vec![1.0, 3.0, 5.0, 7.0]).unwrap(),
        };
        let cols = mean_currents(&[0.0, 1.0, 2.0], &[rec.clone(), rec]);
        assert_eq!(cols[0].0, "J_1");
        assert!(cols[0].1[0].is_nan());
        assert_eq!(&cols[0].1[1..], &[2.0, 6.0]);
    }
}
