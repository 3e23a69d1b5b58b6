//! Stochastic unravelings: quantum jumps ([`mcsolve`]), the stochastic
//! Schrödinger equation ([`ssesolve`]) and the stochastic master equation
//! ([`smesolve`]).
//!
//! Trajectory `i` of an ensemble with master seed `s` draws all of its random
//! numbers from [`crate::rng::stream`]`(s, i)`. Ensemble statistics are
//! reduced by pairwise summation in trajectory order after all trajectories
//! have finished, so results do not depend on the thread count.

mod mc;
mod stochastic;

use ndarray::{Array2, Array3};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{QsimError, Result};
use crate::evolve::SolverStats;
use crate::rng::{self, StreamRng};

pub use mc::mcsolve;
pub(crate) use mc::{effective_generator, normalized_expect, JumpEvolver};
pub use stochastic::{measurement_backaction, smesolve, ssesolve, StochasticOps};

/// Homodyne record of one trajectory. Column `k` belongs to the integration
/// step starting at `times[k]`; `current = e + increments / dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerRecord {
    pub dt: f64,
    pub times: Vec<f64>,
    /// `n_channels × n_steps`.
    pub increments: Array2<f64>,
    /// `n_channels × n_steps`.
    pub current: Array2<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EnsembleStats {
    /// Trajectories dropped after an integration failure.
    pub failed: usize,
    pub solver: SolverStats,
}

#[derive(Debug, Clone)]
pub struct TrajectoryEnsembleResult {
    pub times: Vec<f64>,
    /// `n_e_ops × n_times`.
    pub mean_expect: Array2<C64>,
    /// Sample standard deviation `√(Σ|x − x̄|²/(n − 1))` per entry (zero for a
    /// single trajectory).
    pub std_expect: Array2<f64>,
    /// `ntraj × n_e_ops × n_times` when trajectories are stored.
    pub per_traj_expect: Option<Array3<C64>>,
    /// Per successful trajectory: `(time, channel)` of every jump.
    pub jump_records: Vec<Vec<(f64, usize)>>,
    pub measurement: Option<Vec<WienerRecord>>,
    /// Indices of the trajectories that contributed.
    pub trajectory_ids: Vec<usize>,
    pub ntraj: usize,
    pub master_seed: u64,
    pub stats: EnsembleStats,
}

/// Output of one trajectory.
#[derive(Debug, Clone)]
pub(crate) struct TrajectoryOutput {
    pub expect: Array2<C64>,
    pub jumps: Vec<(f64, usize)>,
    pub measurement: Option<WienerRecord>,
    pub stats: SolverStats,
}

/// Runs `simulate_one(i, stream(seed, i))` for `i in 0..ntraj`, in parallel
/// on `n_threads` workers (or the global pool), returning results in
/// trajectory order.
pub fn run_ensemble<T, F>(ntraj: usize, seed: u64, n_threads: Option<usize>, simulate_one: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, StreamRng) -> T + Sync + Send,
{
    if ntraj == 0 {
        return Err(QsimError::InvalidOptions("ntraj must be at least 1".into()));
    }
    let work = || -> Vec<T> {
        (0..ntraj)
            .into_par_iter()
            .map(|i| simulate_one(i, rng::stream(seed, i as u64)))
            .collect()
    };
    match n_threads {
        None => Ok(work()),
        Some(0) => Err(QsimError::InvalidOptions("n_threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| QsimError::InvalidOptions(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
    }
}

/// Pairwise (cascade) sum in index order; the association pattern depends
/// only on `items.len()`.
pub fn pairwise_sum<T: Clone>(items: &[T], add: &impl Fn(&T, &T) -> T) -> Option<T> {
    match items.len() {
        0 => None,
        1 => Some(items[0].clone()),
        n => {
            let (l, r) = items.split_at(n / 2);
            Some(add(&pairwise_sum(l, add)?, &pairwise_sum(r, add)?))
        }
    }
}

/// Arithmetic mean with pairwise summation.
pub fn pairwise_mean(items: &[Array2<C64>]) -> Option<Array2<C64>> {
    let n = items.len() as f64;
    pairwise_sum(items, &|a: &Array2<C64>, b: &Array2<C64>| a + b).map(|s| s.mapv(|v| v / n))
}

pub(crate) fn assemble(
    times: &[f64],
    n_e: usize,
    outputs: Vec<Result<TrajectoryOutput>>,
    seed: u64,
    store_trajectories: bool,
) -> Result<TrajectoryEnsembleResult> {
    let ntraj = outputs.len();
    let mut stats = EnsembleStats::default();
    let mut ids = Vec::with_capacity(ntraj);
    let mut good = Vec::with_capacity(ntraj);
    let mut last_err = None;
    for (i, out) in outputs.into_iter().enumerate() {
        match out {
            Ok(o) => {
                stats.solver.merge(&o.stats);
                ids.push(i);
                good.push(o);
            }
            Err(e) => {
                log::warn!("trajectory {i} failed: {e}");
                stats.failed += 1;
                last_err = Some(e);
            }
        }
    }
    if good.is_empty() {
        if let Some(e) = last_err {
            log::error!("last trajectory error: {e}");
        }
        return Err(QsimError::EnsembleFailure { ntraj });
    }
    let expects: Vec<Array2<C64>> = good.iter().map(|o| o.expect.clone()).collect();
    let mean = pairwise_mean(&expects).expect("non-empty ensemble");
    let n = expects.len();
    let std = if n > 1 {
        let sq: Vec<Array2<f64>> = expects
            .iter()
            .map(|x| (x - &mean).mapv(|v| v.norm_sqr()))
            .collect();
        pairwise_sum(&sq, &|a: &Array2<f64>, b: &Array2<f64>| a + b)
            .expect("non-empty ensemble")
            .mapv(|v| (v / (n - 1) as f64).sqrt())
    } else {
        Array2::zeros((n_e, times.len()))
    };
    let per_traj = store_trajectories.then(|| {
        let mut a = Array3::zeros((n, n_e, times.len()));
        for (i, x) in expects.iter().enumerate() {
            a.index_axis_mut(ndarray::Axis(0), i).assign(x);
        }
        a
    });
    let has_measurement = good.iter().any(|o| o.measurement.is_some());
    let mut jump_records = Vec::with_capacity(n);
    let mut measurement = Vec::new();
    for o in good {
        jump_records.push(o.jumps);
        if let Some(m) = o.measurement {
            measurement.push(m);
        }
    }
    Ok(TrajectoryEnsembleResult {
        times: times.to_vec(),
        mean_expect: mean,
        std_expect: std,
        per_traj_expect: per_traj,
        jump_records,
        measurement: has_measurement.then_some(measurement),
        trajectory_ids: ids,
        ntraj,
        master_seed: seed,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ensemble_is_thread_count_independent() {
        let f = |i: usize, mut r: StreamRng| -> f64 { i as f64 + r.random::<f64>() };
        let a = run_ensemble(37, 5, Some(1), f).unwrap();
        let b = run_ensemble(37, 5, Some(4), f).unwrap();
        assert_eq!(a, b);
        assert!(run_ensemble(0, 5, None, f).is_err());
    }

    #[test]
    fn single_trajectory_mean_is_itself() {
        let x = Array2::from_elem((1, 3), C64::new(0.1, 0.2));
        assert_eq!(pairwise_mean(std::slice::from_ref(&x)).unwrap(), x);
    }

    #[test]
    fn pairwise_order_is_fixed() {
        let v: Vec<f64> = (0..10).map(|i| 0.1 * i as f64).collect();
        let s = pairwise_sum(&v, &|a: &f64, b: &f64| a + b).unwrap();
        let expected = ((v[0] + v[1]) + (v[2] + (v[3] + v[4]))) + ((v[5] + v[6]) + (v[7] + (v[8] + v[9])));
        assert_eq!(s, expected);
    }
}
