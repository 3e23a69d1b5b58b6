//! Declarative scenario documents and their validation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::observables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Jc,
    OptomechDriven,
    KerrJc,
    DrivenCavity,
    Ising,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Jc,
        ModelKind::OptomechDriven,
        ModelKind::KerrJc,
        ModelKind::DrivenCavity,
        ModelKind::Ising,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Jc => "jc",
            ModelKind::OptomechDriven => "optomech_driven",
            ModelKind::KerrJc => "kerr_jc",
            ModelKind::DrivenCavity => "driven_cavity",
            ModelKind::Ising => "ising",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn solvers(self) -> &'static [SolverKind] {
        use SolverKind::*;
        match self {
            ModelKind::Jc => &[Sesolve, Mesolve, Mcsolve, Ssesolve, Smesolve, Steadystate],
            ModelKind::OptomechDriven => &[Sesolve, Mesolve, Mcsolve, SteadystateFourier],
            ModelKind::KerrJc => &[Mesolve, Mcsolve, DsfMesolve, DsfMcsolve, Steadystate],
            ModelKind::DrivenCavity => &[Mesolve, Mcsolve, DsfMesolve, DfdMesolve, Steadystate],
            ModelKind::Ising => &[Sesolve, Mesolve, Mcsolve, Steadystate],
        }
    }

    /// Required parameters.
    pub fn required_params(self) -> &'static [&'static str] {
        match self {
            ModelKind::Jc => &["N", "wc", "wa", "g"],
            ModelKind::OptomechDriven => &["Nc", "Nm", "wc", "wm", "g", "kappa", "gamma", "F", "wd"],
            ModelKind::KerrJc => &["N", "Dc", "Da", "U", "g", "F", "gamma"],
            ModelKind::DrivenCavity => &["N", "Delta", "F", "gamma"],
            ModelKind::Ising => &["nx", "ny", "jz", "hx", "gamma"],
        }
    }

    /// Optional parameters with their defaults.
    pub fn optional_params(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelKind::Jc => &[("kappa", 0.0), ("gamma", 0.0), ("kappa_phi", 0.0), ("alpha", 0.0)],
            ModelKind::OptomechDriven => &[("n_max", 2.0)],
            ModelKind::KerrJc => &[("threshold", qsim_core::dsf::DEFAULT_DSF_THRESHOLD)],
            ModelKind::DrivenCavity => &[
                ("threshold", qsim_core::dsf::DEFAULT_DSF_THRESHOLD),
                ("gradient_step", 0.0),
                ("dfd_m", 2.0),
                ("dfd_tau_up", 1e-4),
                ("dfd_tau_down", 1e-6),
                ("dfd_grow", 4.0),
                ("dfd_shrink", 4.0),
                ("dfd_dim_min", 4.0),
                ("dfd_dim_max", 256.0),
            ],
            ModelKind::Ising => &[("periodic", 1.0)],
        }
    }

    /// Parameters that must be integers, with their lower bound.
    fn integer_params(self) -> &'static [(&'static str, f64)] {
        match self {
            ModelKind::Jc => &[("N", 2.0)],
            ModelKind::OptomechDriven => &[("Nc", 2.0), ("Nm", 2.0), ("n_max", 0.0)],
            ModelKind::KerrJc => &[("N", 2.0)],
            ModelKind::DrivenCavity => &[
                ("N", 2.0),
                ("dfd_m", 1.0),
                ("dfd_grow", 1.0),
                ("dfd_shrink", 1.0),
                ("dfd_dim_min", 2.0),
                ("dfd_dim_max", 2.0),
            ],
            ModelKind::Ising => &[("nx", 1.0), ("ny", 1.0), ("periodic", 0.0)],
        }
    }

    /// Parameters that must be non-negative.
    fn nonnegative_params(self) -> &'static [&'static str] {
        match self {
            ModelKind::Jc => &["kappa", "gamma", "kappa_phi"],
            ModelKind::OptomechDriven => &["kappa", "gamma"],
            ModelKind::KerrJc => &["gamma", "threshold"],
            ModelKind::DrivenCavity => &["gamma", "threshold", "gradient_step", "dfd_tau_up", "dfd_tau_down"],
            ModelKind::Ising => &["gamma"],
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Sesolve,
    Mesolve,
    Mcsolve,
    Ssesolve,
    Smesolve,
    DsfMesolve,
    DsfMcsolve,
    DfdMesolve,
    Steadystate,
    SteadystateFourier,
}

impl SolverKind {
    pub const ALL: [SolverKind; 10] = [
        SolverKind::Sesolve,
        SolverKind::Mesolve,
        SolverKind::Mcsolve,
        SolverKind::Ssesolve,
        SolverKind::Smesolve,
        SolverKind::DsfMesolve,
        SolverKind::DsfMcsolve,
        SolverKind::DfdMesolve,
        SolverKind::Steadystate,
        SolverKind::SteadystateFourier,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SolverKind::Sesolve => "sesolve",
            SolverKind::Mesolve => "mesolve",
            SolverKind::Mcsolve => "mcsolve",
            SolverKind::Ssesolve => "ssesolve",
            SolverKind::Smesolve => "smesolve",
            SolverKind::DsfMesolve => "dsf_mesolve",
            SolverKind::DsfMcsolve => "dsf_mcsolve",
            SolverKind::DfdMesolve => "dfd_mesolve",
            SolverKind::Steadystate => "steadystate",
            SolverKind::SteadystateFourier => "steadystate_fourier",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    /// Solvers that sample random trajectories.
    pub fn is_stochastic(self) -> bool {
        matches!(
            self,
            SolverKind::Mcsolve | SolverKind::Ssesolve | SolverKind::Smesolve | SolverKind::DsfMcsolve
        )
    }

    /// Solvers that report a single long-time row instead of a time series.
    pub fn is_steady(self) -> bool {
        matches!(self, SolverKind::Steadystate | SolverKind::SteadystateFourier)
    }

    fn stores_states(self) -> bool {
        matches!(self, SolverKind::Sesolve | SolverKind::Mesolve)
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Solver-option parameters accepted by every model.
pub const COMMON_PARAMS: [&str; 3] = ["abstol", "reltol", "dt_max"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub csv_path: String,
    pub json_path: String,
    #[serde(default)]
    pub store_states: bool,
    /// Per-trajectory expectation file for stochastic solvers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectories_path: Option<String>,
}

/// Scenario document as written on disk; names are checked by [`validate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawScenario {
    pub name: String,
    pub model: String,
    pub solver: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    /// `(t0, tf, n_points)`.
    pub tlist: (f64, f64, u64),
    #[serde(default)]
    pub e_ops: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ntraj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_threads: Option<usize>,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub n_points: usize,
}

impl TimeGrid {
    /// Evenly spaced points with both ends exact.
    pub fn points(&self) -> Vec<f64> {
        let n = self.n_points;
        let step = (self.tf - self.t0) / (n - 1) as f64;
        (0..n)
            .map(|i| if i + 1 == n { self.tf } else { self.t0 + step * i as f64 })
            .collect()
    }
}

/// A validated scenario. Every parameter of the model is present, defaults
/// filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioSpec {
    pub name: String,
    pub model: ModelKind,
    pub solver: SolverKind,
    pub params: BTreeMap<String, f64>,
    pub tlist: TimeGrid,
    pub e_ops: Vec<String>,
    pub ntraj: Option<usize>,
    pub seed: Option<u64>,
    pub n_threads: Option<usize>,
    pub output: OutputSpec,
}

impl ScenarioSpec {
    pub fn param(&self, name: &str) -> f64 {
        self.params[name]
    }

    pub fn param_usize(&self, name: &str) -> usize {
        self.params[name] as usize
    }

    pub fn opt_param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Diagnostic {
    pub code: &'static str,
    pub message: String,
}

impl Diagnostic {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// Parses a scenario document; syntax errors become an `invalid_json`
/// diagnostic.
pub fn parse(text: &str) -> Result<RawScenario, Vec<Diagnostic>> {
    serde_json::from_str(text).map_err(|e| vec![Diagnostic::new("invalid_json", e.to_string())])
}

/// Checks a document and returns every problem found.
pub fn diagnostics(raw: &RawScenario) -> Vec<Diagnostic> {
    match validate(raw) {
        Ok(_) => Vec::new(),
        Err(d) => d,
    }
}

pub fn parse_and_validate(text: &str) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    validate(&parse(text)?)
}

pub fn validate(raw: &RawScenario) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    let mut diags = Vec::new();
    if raw.name.trim().is_empty() {
        diags.push(Diagnostic::new("invalid_name", "scenario name is empty"));
    }
    let model = ModelKind::parse(&raw.model);
    if model.is_none() {
        let known: Vec<_> = ModelKind::ALL.iter().map(|m| m.name()).collect();
        diags.push(Diagnostic::new(
            "unknown_model",
            format!("unknown model {:?}; expected one of {known:?}", raw.model),
        ));
    }
    let solver = SolverKind::parse(&raw.solver);
    if solver.is_none() {
        let known: Vec<_> = SolverKind::ALL.iter().map(|s| s.name()).collect();
        diags.push(Diagnostic::new(
            "unknown_solver",
            format!("unknown solver {:?}; expected one of {known:?}", raw.solver),
        ));
    }

    let (t0, tf, n_points) = raw.tlist;
    if !t0.is_finite() || !tf.is_finite() {
        diags.push(Diagnostic::new("invalid_time_grid", format!("non-finite time bounds ({t0}, {tf})")));
    } else if tf <= t0 {
        diags.push(Diagnostic::new(
            "nonpositive_time_span",
            format!("tf = {tf} must exceed t0 = {t0}"),
        ));
    }
    if n_points < 2 {
        diags.push(Diagnostic::new("invalid_n_points", format!("n_points = {n_points} must be at least 2")));
    }
    if raw.n_threads == Some(0) {
        diags.push(Diagnostic::new("invalid_n_threads", "n_threads must be at least 1"));
    }
    if raw.output.csv_path.trim().is_empty() || raw.output.json_path.trim().is_empty() {
        diags.push(Diagnostic::new("invalid_output", "csv_path and json_path must be non-empty"));
    } else if raw.output.csv_path == raw.output.json_path {
        diags.push(Diagnostic::new("invalid_output", "csv_path and json_path must differ"));
    }

    let (Some(model), Some(solver)) = (model, solver) else {
        return Err(diags);
    };
    if !model.solvers().contains(&solver) {
        let supported: Vec<_> = model.solvers().iter().map(|s| s.name()).collect();
        diags.push(Diagnostic::new(
            "unsupported_solver",
            format!("model {model} does not support solver {solver}; supported: {supported:?}"),
        ));
    }

    let params = check_params(model, &raw.params, &mut diags);
    if let Some(p) = &params {
        check_model_constraints(model, solver, p, &mut diags);
    }

    if raw.e_ops.is_empty() {
        diags.push(Diagnostic::new("empty_e_ops", "at least one observable is required"));
    }
    for name in &raw.e_ops {
        match observables::lookup(name) {
            None => diags.push(Diagnostic::new(
                "unknown_observable",
                format!("unknown observable {name:?}; see `qsim list` for the registry"),
            )),
            Some(info) if !info.models.contains(&model) => diags.push(Diagnostic::new(
                "unknown_observable",
                format!("observable {name:?} is not defined for model {model}"),
            )),
            Some(_) => {}
        }
    }

    if solver.is_stochastic() {
        match raw.ntraj {
            None => diags.push(Diagnostic::new("missing_ntraj", format!("{solver} needs ntraj"))),
            Some(0) => diags.push(Diagnostic::new("invalid_ntraj", "ntraj must be at least 1")),
            Some(_) => {}
        }
    } else if raw.output.trajectories_path.is_some() {
        diags.push(Diagnostic::new(
            "invalid_output",
            format!("trajectories_path needs a stochastic solver, not {solver}"),
        ));
    }
    if raw.output.store_states && !solver.stores_states() {
        diags.push(Diagnostic::new(
            "invalid_output",
            format!("store_states is supported by sesolve and mesolve, not {solver}"),
        ));
    }

    if !diags.is_empty() {
        return Err(diags);
    }
    Ok(ScenarioSpec {
        name: raw.name.clone(),
        model,
        solver,
        params: params.expect("checked above"),
        tlist: TimeGrid { t0, tf, n_points: n_points as usize },
        e_ops: raw.e_ops.clone(),
        ntraj: raw.ntraj,
        seed: raw.seed,
        n_threads: raw.n_threads,
        output: raw.output.clone(),
    })
}

fn check_params(
    model: ModelKind,
    given: &BTreeMap<String, f64>,
    diags: &mut Vec<Diagnostic>,
) -> Option<BTreeMap<String, f64>> {
    let start = diags.len();
    let mut params = BTreeMap::new();
    for &name in model.required_params() {
        match given.get(name) {
            Some(&v) => {
                params.insert(name.to_string(), v);
            }
            None => diags.push(Diagnostic::new(
                "missing_param",
                format!("model {model} needs parameter {name:?}"),
            )),
        }
    }
    for &(name, default) in model.optional_params() {
        params.insert(name.to_string(), given.get(name).copied().unwrap_or(default));
    }
    for (name, &v) in given {
        let known = model.required_params().contains(&name.as_str())
            || model.optional_params().iter().any(|(n, _)| n == name)
            || COMMON_PARAMS.contains(&name.as_str());
        if !known {
            diags.push(Diagnostic::new(
                "unknown_param",
                format!("model {model} has no parameter {name:?}"),
            ));
            continue;
        }
        if !v.is_finite() {
            diags.push(Diagnostic::new("invalid_param", format!("{name} = {v} is not finite")));
        }
        if COMMON_PARAMS.contains(&name.as_str()) {
            if !(v > 0.0) {
                diags.push(Diagnostic::new("invalid_param", format!("{name} = {v} must be positive")));
            }
            params.insert(name.clone(), v);
        }
    }
    for &(name, min) in model.integer_params() {
        if let Some(&v) = params.get(name) {
            if v.fract() != 0.0 || v < min {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    format!("{name} = {v} must be an integer ≥ {min}"),
                ));
            }
        }
    }
    for &name in model.nonnegative_params() {
        if let Some(&v) = params.get(name) {
            if v < 0.0 {
                diags.push(Diagnostic::new("invalid_param", format!("{name} = {v} must be non-negative")));
            }
        }
    }
    (diags.len() == start).then_some(params)
}

fn check_model_constraints(
    model: ModelKind,
    solver: SolverKind,
    p: &BTreeMap<String, f64>,
    diags: &mut Vec<Diagnostic>,
) {
    match model {
        ModelKind::Jc => {
            if matches!(solver, SolverKind::Ssesolve | SolverKind::Smesolve) && !(p["kappa"] > 0.0) {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    "homodyne detection monitors the cavity loss, so kappa must be positive",
                ));
            }
            if solver == SolverKind::Ssesolve && (p["gamma"] > 0.0 || p["kappa_phi"] > 0.0) {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    "ssesolve has no unmonitored channels; set gamma and kappa_phi to 0 or use smesolve",
                ));
            }
        }
        ModelKind::Ising => {
            let n = p["nx"] * p["ny"];
            if n > qsim_core::factories::ISING_MAX_SITES as f64 {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    format!(
                        "{} sites exceed the limit of {}",
                        n,
                        qsim_core::factories::ISING_MAX_SITES
                    ),
                ));
            }
            if p["periodic"] > 1.0 {
                diags.push(Diagnostic::new("invalid_param", "periodic must be 0 or 1"));
            }
        }
        ModelKind::DrivenCavity if solver == SolverKind::DfdMesolve => {
            if p["dfd_dim_min"] <= p["dfd_m"] || p["dfd_dim_max"] < p["dfd_dim_min"] {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    "DFD needs dfd_m < dfd_dim_min ≤ dfd_dim_max",
                ));
            }
            if !(p["dfd_tau_down"] > 0.0 && p["dfd_tau_down"] <= p["dfd_tau_up"]) {
                diags.push(Diagnostic::new(
                    "invalid_param",
                    "DFD needs 0 < dfd_tau_down ≤ dfd_tau_up",
                ));
            }
            if p["N"] > p["dfd_dim_max"] {
                diags.push(Diagnostic::new("invalid_param", "initial N exceeds dfd_dim_max"));
            }
        }
        _ => {}
    }
}
