//! Scenario documents shipped with the binary.

use crate::scenario::{self, Diagnostic, ScenarioSpec};

macro_rules! builtin {
    ($name:literal) => {
        ($name, include_str!(concat!("../scenarios/", $name, ".json")))
    };
}

/// `(name, document)` pairs in listing order.
pub const BUILTINS: &[(&str, &str)] = &[
    builtin!("jc_sesolve"),
    builtin!("jc_mesolve"),
    builtin!("jc_mcsolve"),
    builtin!("optomech_td"),
    builtin!("optomech_fourier"),
    builtin!("sse_homodyne"),
    builtin!("sme_homodyne"),
    builtin!("dsf_kerr"),
    builtin!("dfd_ramp"),
    builtin!("ising_mc_2x3"),
    builtin!("driven_cavity_ss"),
    builtin!("gradient_check"),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    BUILTINS.iter().map(|(n, _)| *n)
}

/// Document of a built-in, accepting an optional `.json` suffix.
pub fn document(name: &str) -> Option<&'static str> {
    let stem = name.strip_suffix(".json").unwrap_or(name);
    BUILTINS.iter().find(|(n, _)| *n == stem).map(|(_, d)| *d)
}

/// Parses and validates a built-in.
pub fn load(name: &str) -> Result<ScenarioSpec, Vec<Diagnostic>> {
    let doc = document(name).ok_or_else(|| {
        vec![Diagnostic { code: "unknown_scenario", message: format!("no built-in scenario {name:?}") }]
    })?;
    scenario::parse_and_validate(doc)
}
