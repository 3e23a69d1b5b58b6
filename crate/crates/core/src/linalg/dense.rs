//! Dense complex matrix helpers on top of `ndarray`.

use ndarray::{Array2, Zip};
use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};

pub fn adjoint(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|v| v.conj())
}

pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (m, n) = a.dim();
    let (p, q) = b.dim();
    let mut out = Array2::zeros((m * p, n * q));
    for i in 0..m {
        for j in 0..n {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            let mut block = out.slice_mut(ndarray::s![i * p..(i + 1) * p, j * q..(j + 1) * q]);
            Zip::from(&mut block).and(b).for_each(|o, &bv| *o = aij * bv);
        }
    }
    out
}

pub fn identity(n: usize) -> Array2<C64> {
    Array2::from_diag_elem(n, C64::new(1.0, 0.0))
}

pub fn frobenius_norm(a: &Array2<C64>) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Maximum absolute column sum.
pub fn one_norm(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|v| v.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn trace(a: &Array2<C64>) -> C64 {
    a.diag().sum()
}

pub fn is_hermitian(a: &Array2<C64>, tol: f64) -> bool {
    let n = a.nrows();
    if n != a.ncols() {
        return false;
    }
    let scale = 1.0 + frobenius_norm(a);
    for i in 0..n {
        for j in i..n {
            if (a[[i, j]] - a[[j, i]].conj()).norm() > tol * scale {
                return false;
            }
        }
    }
    true
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
///
/// The input is scaled by `2^-s` so its 1-norm is at most 0.5; at that norm an
/// 18-term series has a relative remainder below 1e-22.
pub fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let (n, m) = a.dim();
    if n != m {
        return Err(QsimError::KindMismatch(format!(
            "expm needs a square matrix, got {n}x{m}"
        )));
    }
    const TERMS: usize = 18;
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(QsimError::InvalidOptions("expm of non-finite matrix".into()));
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|v| v * 0.5f64.powi(squarings));
    // Horner: I + A(I + A/2(I + A/3(...)))
    let eye = identity(n);
    let mut result = eye.clone();
    for k in (1..=TERMS).rev() {
        result = &eye + &scaled.dot(&result).mapv(|v| v / k as f64);
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

pub(crate) fn to_faer(a: &Array2<C64>) -> faer::Mat<C64> {
    faer::Mat::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

pub(crate) fn from_faer(a: faer::MatRef<'_, C64>) -> Array2<C64> {
    Array2::from_shape_fn((a.nrows(), a.ncols()), |(i, j)| a[(i, j)])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let z = Array2::<C64>::zeros((4, 4));
        assert_eq!(expm(&z).unwrap(), identity(4));
    }

    #[test]
    fn expm_of_diagonal() {
        let mut d = Array2::<C64>::zeros((2, 2));
        d[[0, 0]] = C64::new(3.0, 0.0);
        d[[1, 1]] = C64::new(0.0, 2.0);
        let e = expm(&d).unwrap();
        assert!((e[[0, 0]] - C64::new(3f64.exp(), 0.0)).norm() < 1e-12 * 3f64.exp());
        assert!((e[[1, 1]] - C64::new(0.0, 2.0).exp()).norm() < 1e-13);
    }

    #[test]
    fn kron_block_structure() {
        let a = ndarray::array![[C64::new(1.0, 0.0), C64::new(2.0, 0.0)]];
        let b = identity(2);
        let k = kron(&a, &b);
        assert_eq!(k.dim(), (2, 4));
        assert_eq!(k[[1, 3]], C64::new(2.0, 0.0));
        assert_eq!(k[[0, 1]], C64::new(0.0, 0.0));
    }
}
