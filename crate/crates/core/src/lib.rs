//! Simulation of closed and open quantum systems on truncated Hilbert spaces.
//!
//! The crate is organised bottom-up: [`qobj`] and [`linalg`] form the data
//! model, [`factories`] and [`superop`] build operators, [`evolve`] and
//! [`trajectories`] integrate dynamics, [`steadystate`] and [`dsf`] provide
//! specialised solvers and [`analysis`] post-processes results.

pub mod analysis;
pub mod dsf;
pub mod error;
pub mod evolve;
pub mod factories;
pub mod linalg;
pub mod qobj;
pub mod rng;
pub mod steadystate;
pub mod superop;
pub mod trajectories;

pub use error::{QsimError, Result};
pub use num_complex::Complex64 as C64;
pub use qobj::{expect, ptrace, tensor, tensor_all, Data, Kind, QuantumObject};
