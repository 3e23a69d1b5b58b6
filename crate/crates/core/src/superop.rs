//! Vectorization and superoperators.
//!
//! Vectorization is column stacking throughout the crate:
//! `vec(ρ)[r + c·d] = ρ[r, c]`, so `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.

use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::linalg::CscMatrix;
use crate::qobj::{Data, Kind, QuantumObject};

fn require_operator(x: &QuantumObject, what: &str) -> Result<()> {
    if x.kind() != Kind::Operator {
        return Err(QsimError::KindMismatch(format!(
            "{what} needs an Operator, got {:?}",
            x.kind()
        )));
    }
    Ok(())
}

fn same_dims(a: &QuantumObject, b: &QuantumObject, what: &str) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(QsimError::DimsMismatch(format!(
            "{what}: {:?} vs {:?}",
            a.dims(),
            b.dims()
        )));
    }
    Ok(())
}

fn superop(s: CscMatrix, dims: &[usize]) -> QuantumObject {
    QuantumObject::from_sparse(s, Kind::SuperOperator, dims.to_vec())
        .expect("superoperator shapes are consistent")
}

pub fn mat2vec(rho: &QuantumObject) -> Result<QuantumObject> {
    require_operator(rho, "mat2vec")?;
    let d = rho.hilbert_dim();
    let data = match rho.data() {
        Data::Dense(a) => {
            let v = ndarray::Array2::from_shape_fn((d * d, 1), |(k, _)| a[[k % d, k / d]]);
            Data::Dense(v)
        }
        Data::Sparse(s) => Data::Sparse(CscMatrix::from_triplets(
            d * d,
            1,
            s.iter().map(|(r, c, v)| (r + c * d, 0, v)),
        )),
    };
    QuantumObject::new(data, Kind::OperatorKet, rho.dims().to_vec())
}

pub fn vec2mat(v: &QuantumObject) -> Result<QuantumObject> {
    if v.kind() != Kind::OperatorKet {
        return Err(QsimError::KindMismatch(format!(
            "vec2mat needs an OperatorKet, got {:?}",
            v.kind()
        )));
    }
    let d = v.hilbert_dim();
    let data = match v.data() {
        Data::Dense(a) => Data::Dense(ndarray::Array2::from_shape_fn((d, d), |(r, c)| {
            a[[r + c * d, 0]]
        })),
        Data::Sparse(s) => Data::Sparse(CscMatrix::from_triplets(
            d,
            d,
            s.iter().map(|(k, _, val)| (k % d, k / d, val)),
        )),
    };
    QuantumObject::new(data, Kind::Operator, v.dims().to_vec())
}

/// Reshape a raw column-stacked vector into a dense `d × d` matrix.
pub fn vec_to_dense(v: &[C64], d: usize) -> ndarray::Array2<C64> {
    ndarray::Array2::from_shape_fn((d, d), |(r, c)| v[r + c * d])
}

/// `I ⊗ A`: left multiplication.
pub fn spre(a: &QuantumObject) -> Result<QuantumObject> {
    require_operator(a, "spre")?;
    let d = a.hilbert_dim();
    Ok(superop(CscMatrix::identity(d).kron(&a.sparse()), a.dims()))
}

/// `Bᵀ ⊗ I`: right multiplication.
pub fn spost(b: &QuantumObject) -> Result<QuantumObject> {
    require_operator(b, "spost")?;
    let d = b.hilbert_dim();
    Ok(superop(b.sparse().transpose().kron(&CscMatrix::identity(d)), b.dims()))
}

/// `Bᵀ ⊗ A`: `X ↦ A X B`.
pub fn sprepost(a: &QuantumObject, b: &QuantumObject) -> Result<QuantumObject> {
    require_operator(a, "sprepost")?;
    require_operator(b, "sprepost")?;
    same_dims(a, b, "sprepost")?;
    Ok(superop(b.sparse().transpose().kron(&a.sparse()), a.dims()))
}

/// `𝒟[C]ρ = CρC† − ½{C†C, ρ}`.
pub fn lindblad_dissipator(c: &QuantumObject) -> Result<QuantumObject> {
    require_operator(c, "lindblad_dissipator")?;
    let cd = c.dag();
    let cdc = cd.try_matmul(c)?;
    let half = C64::new(-0.5, 0.0);
    sprepost(c, &cd)?
        .lin_comb(C64::new(1.0, 0.0), &spre(&cdc)?, half)?
        .lin_comb(C64::new(1.0, 0.0), &spost(&cdc)?, half)
}

/// `−i(spre(H) − spost(H))`.
pub fn hamiltonian_superop(h: &QuantumObject) -> Result<QuantumObject> {
    spre(h)?.lin_comb(C64::new(0.0, -1.0), &spost(h)?, C64::new(0.0, 1.0))
}

/// `𝓛 = −i[H, ·] + Σₖ 𝒟[Cₖ]`. A SuperOperator `h` is taken as the coherent
/// part directly.
pub fn liouvillian(h: &QuantumObject, c_ops: &[QuantumObject]) -> Result<QuantumObject> {
    let mut l = match h.kind() {
        Kind::Operator => hamiltonian_superop(h)?,
        Kind::SuperOperator => h.clone().into_sparse(),
        k => {
            return Err(QsimError::KindMismatch(format!(
                "liouvillian needs an Operator or SuperOperator, got {k:?}"
            )))
        }
    };
    for c in c_ops {
        same_dims(h, c, "liouvillian collapse operator")?;
        l = l.try_add(&lindblad_dissipator(c)?)?;
    }
    Ok(l)
}

/// Row vector `vec(I)†`: the trace functional on vectorized operators.
pub fn trace_functional(d: usize) -> Vec<usize> {
    (0..d).map(|i| i * (d + 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factories::*;
    use ndarray::Array2;

    fn max_diff(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn column_stacking_convention() {
        let m = QuantumObject::operator(ndarray::array![
            [C64::new(1.0, 0.0), C64::new(3.0, 0.0)],
            [C64::new(2.0, 0.0), C64::new(4.0, 0.0)]
        ])
        .unwrap();
        let v = mat2vec(&m).unwrap();
        let expected: Vec<C64> = (1..=4).map(|k| C64::new(k as f64, 0.0)).collect();
        assert_eq!(v.to_vec(), expected);
        assert_eq!(vec2mat(&v).unwrap(), m);
        let ms = m.clone().into_sparse();
        assert_eq!(vec2mat(&mat2vec(&ms).unwrap()).unwrap().to_dense(), m.to_dense());
        assert!(matches!(
            mat2vec(&fock(2, 0).unwrap()),
            Err(QsimError::KindMismatch(_))
        ));
    }

    #[test]
    fn identity_superoperators() {
        let id = qeye(3).unwrap();
        let eye9 = crate::linalg::dense::identity(9);
        assert_eq!(spre(&id).unwrap().to_dense(), eye9);
        assert_eq!(spost(&id).unwrap().to_dense(), eye9);
    }

    #[test]
    fn vec_identity_for_products() {
        let a = rand_unitary(4, 1).unwrap();
        let x = rand_dm(4, 2).unwrap();
        let b = rand_unitary(4, 3).unwrap();
        let lhs = mat2vec(&(&(&a * &x) * &b)).unwrap();
        let rhs = &sprepost(&a, &b).unwrap() * &mat2vec(&x).unwrap();
        assert!(max_diff(&lhs.to_dense(), &rhs.to_dense()) < 1e-13);
        let fact = &spre(&a).unwrap() * &spost(&b).unwrap();
        assert!(max_diff(&fact.to_dense(), &sprepost(&a, &b).unwrap().to_dense()) < 1e-14);
    }

    #[test]
    fn dissipator_on_excited_state() {
        let gamma: f64 = 0.3;
        let c = sigmam() * gamma.sqrt();
        let rho = fock_dm(2, 0).unwrap();
        let out = vec2mat(&(&lindblad_dissipator(&c).unwrap() * &mat2vec(&rho).unwrap())).unwrap();
        let expected = (fock_dm(2, 1).unwrap() - fock_dm(2, 0).unwrap()) * gamma;
        assert!(max_diff(&out.to_dense(), &expected.to_dense()) < 1e-15);
        let zero = sigmam() * 0.0;
        assert!(lindblad_dissipator(&zero).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn decaying_qubit_spectrum() {
        let gamma: f64 = 0.4;
        let l = liouvillian(&(sigmaz() * 0.0), &[sigmam() * gamma.sqrt()]).unwrap();
        let mut ev: Vec<f64> = l.eigen().unwrap().values.iter().map(|v| v.re).collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-gamma, -gamma / 2.0, -gamma / 2.0, 0.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_system_spectrum_is_imaginary() {
        let h = rand_dm(4, 5).unwrap();
        let l = liouvillian(&h, &[]).unwrap();
        assert!(l.eigen().unwrap().values.iter().all(|v| v.re.abs() < 1e-10));
    }

    #[test]
    fn trace_functional_is_left_null() {
        let d = 3;
        let h = rand_dm(d, 8).unwrap();
        let c = rand_unitary(d, 9).unwrap();
        let l = liouvillian(&h, &[c]).unwrap().to_dense();
        for col in 0..d * d {
            let s: C64 = trace_functional(d).iter().map(|&r| l[[r, col]]).sum();
            assert!(s.norm() < 1e-12);
        }
    }
}
