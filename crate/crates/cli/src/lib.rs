//! Declarative scenario runner for `qsim-core`.
//!
//! A scenario is one JSON document naming a model, a solver, parameters, a
//! time grid and observables from a fixed registry. [`scenario`] validates
//! documents, [`models`] and [`observables`] turn them into operators and
//! [`runner`] executes them and writes CSV plus a JSON sidecar.

pub mod builtins;
pub mod models;
pub mod observables;
pub mod runner;
pub mod scenario;
