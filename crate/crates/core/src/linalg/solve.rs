//! Square linear solves `A x = b`.
//!
//! Systems with at most [`DENSE_CUTOFF`] unknowns are solved by dense LU with
//! partial pivoting; larger ones by sparse LU.

use num_complex::Complex64 as C64;

use faer::linalg::solvers::Solve;

use super::sparse::CscMatrix;
use crate::error::{QsimError, Result};

pub const DENSE_CUTOFF: usize = 400;

/// Solves `a x = b`. Failures (structurally singular matrices, non-finite or
/// inaccurate solutions) are reported with a lower bound on the condition
/// number, `‖A‖₁‖x‖₁/‖b‖₁`.
pub fn solve(a: &CscMatrix, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.nrows();
    if n != a.ncols() || b.len() != n {
        return Err(QsimError::DimsMismatch(format!(
            "linear solve: matrix {}x{} with rhs of length {}",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let mut rhs = faer::Mat::from_fn(n, 1, |i, _| b[i]);
    if n <= DENSE_CUTOFF {
        let dense = super::dense::to_faer(&a.to_dense());
        dense.partial_piv_lu().solve_in_place(rhs.as_mut());
    } else {
        let lu = a
            .to_faer()
            .sp_lu()
            .map_err(|e| QsimError::SteadyStateFailure {
                condition: f64::INFINITY,
                reason: format!("sparse LU failed: {e:?}"),
            })?;
        lu.solve_in_place(rhs.as_mut());
    }
    let x: Vec<C64> = (0..n).map(|i| rhs[(i, 0)]).collect();

    let norm1 = |v: &[C64]| v.iter().map(|z| z.norm()).sum::<f64>();
    let a_norm = column_one_norm(a);
    let condition = a_norm * norm1(&x) / norm1(b).max(f64::MIN_POSITIVE);
    if x.iter().any(|z| !z.is_finite()) {
        return Err(QsimError::SteadyStateFailure {
            condition: f64::INFINITY,
            reason: "solution is not finite (singular matrix)".into(),
        });
    }
    let mut resid = b.to_vec();
    a.mul_vec_acc(C64::new(-1.0, 0.0), &x, &mut resid);
    let rel = norm1(&resid) / (a_norm * norm1(&x) + norm1(b)).max(f64::MIN_POSITIVE);
    if rel > 1e-8 {
        return Err(QsimError::SteadyStateFailure {
            condition,
            reason: format!("relative residual {rel:.3e} after solve"),
        });
    }
    Ok(x)
}

fn column_one_norm(a: &CscMatrix) -> f64 {
    (0..a.ncols())
        .map(|c| {
            (a.colptr()[c]..a.colptr()[c + 1])
                .map(|k| a.values()[k].norm())
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}
