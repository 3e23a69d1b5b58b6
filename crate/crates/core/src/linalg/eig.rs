//! Dense eigendecompositions.
//!
//! Hermitian input goes through the self-adjoint (tridiagonal) path and yields
//! exactly real eigenvalues; everything else uses the general Hessenberg-QR
//! path.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use super::dense::{from_faer, is_hermitian, to_faer};
use crate::error::{QsimError, Result};

/// Eigenvalues sorted by real part (ties by imaginary part), with the matching
/// eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub values: Vec<C64>,
    pub vectors: Array2<C64>,
}

pub fn eigen_dense(a: &Array2<C64>) -> Result<EigenDecomposition> {
    let (n, m) = a.dim();
    if n != m {
        return Err(QsimError::KindMismatch(format!(
            "eigen needs a square matrix, got {n}x{m}"
        )));
    }
    if n == 0 {
        return Ok(EigenDecomposition {
            values: vec![],
            vectors: Array2::zeros((0, 0)),
        });
    }
    let fa = to_faer(a);
    let (values, vectors) = if is_hermitian(a, 1e-14) {
        let evd = fa
            .self_adjoint_eigen(faer::Side::Lower)
            .map_err(|_| QsimError::EigenFailure)?;
        let s = evd.S();
        let vals: Vec<C64> = (0..n).map(|i| C64::new(s[i].re, 0.0)).collect();
        (vals, from_faer(evd.U()))
    } else {
        let evd = fa.eigen().map_err(|_| QsimError::EigenFailure)?;
        let s = evd.S();
        let vals: Vec<C64> = (0..n).map(|i| s[i]).collect();
        (vals, from_faer(evd.U()))
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .re
            .total_cmp(&values[j].re)
            .then(values[i].im.total_cmp(&values[j].im))
    });
    let sorted_values = order.iter().map(|&i| values[i]).collect();
    let sorted_vectors = Array2::from_shape_fn((n, n), |(r, c)| vectors[[r, order[c]]]);
    Ok(EigenDecomposition {
        values: sorted_values,
        vectors: sorted_vectors,
    })
}

/// Real eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh(a: &Array2<C64>) -> Result<Vec<f64>> {
    let fa = to_faer(a);
    fa.self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|_| QsimError::EigenFailure)
}

/// Hermitian matrix function `V f(Λ) V†`.
pub fn hermitian_map(a: &Array2<C64>, f: impl Fn(f64) -> f64) -> Result<Array2<C64>> {
    let n = a.nrows();
    let evd = to_faer(a)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| QsimError::EigenFailure)?;
    let u = from_faer(evd.U());
    let s = evd.S();
    let mut scaled = u.clone();
    for j in 0..n {
        let fj = f(s[j].re);
        scaled.column_mut(j).mapv_inplace(|v| v * fj);
    }
    Ok(scaled.dot(&super::dense::adjoint(&u)))
}
