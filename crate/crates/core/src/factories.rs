//! Standard states and operators.
//!
//! Operators are built sparse and kets dense, except where the construction
//! is inherently dense (`displace`, `rand_dm`, `rand_unitary`).

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{QsimError, Result};
use crate::linalg::{dense, CscMatrix};
use crate::qobj::{tensor_all, Kind, QuantumObject};
use crate::rng;

const ONE: C64 = C64::new(1.0, 0.0);

fn check_dim(n: usize) -> Result<()> {
    if n < 1 {
        return Err(QsimError::InvalidDimension(format!(
            "dimension must be at least 1, got {n}"
        )));
    }
    Ok(())
}

fn check_index(i: usize, n: usize) -> Result<()> {
    if i >= n {
        return Err(QsimError::InvalidIndex { index: i, dim: n });
    }
    Ok(())
}

fn sparse_op(n: usize, triplets: Vec<(usize, usize, C64)>) -> QuantumObject {
    QuantumObject::from_sparse(CscMatrix::from_triplets(n, n, triplets), Kind::Operator, vec![n])
        .expect("factory shapes are consistent")
}

fn dense_op(a: Array2<C64>) -> QuantumObject {
    QuantumObject::operator(a).expect("factory shapes are consistent")
}

/// Annihilation operator: `a[n-1, n] = √n`.
pub fn destroy(n: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    Ok(sparse_op(
        n,
        (1..n).map(|k| (k - 1, k, C64::new((k as f64).sqrt(), 0.0))).collect(),
    ))
}

pub fn create(n: usize) -> Result<QuantumObject> {
    Ok(destroy(n)?.dag())
}

pub fn num(n: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    Ok(sparse_op(
        n,
        (1..n).map(|k| (k, k, C64::new(k as f64, 0.0))).collect(),
    ))
}

pub fn qeye(n: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    Ok(sparse_op(n, (0..n).map(|k| (k, k, ONE)).collect()))
}

/// `(a + a†)/√2`.
pub fn position(n: usize) -> Result<QuantumObject> {
    let a = destroy(n)?;
    Ok((&a + &a.dag()) * std::f64::consts::FRAC_1_SQRT_2)
}

/// `i(a† − a)/√2`.
pub fn momentum(n: usize) -> Result<QuantumObject> {
    let a = destroy(n)?;
    Ok((&a.dag() - &a) * C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2))
}

fn pauli(entries: [(usize, usize, C64); 2]) -> QuantumObject {
    sparse_op(2, entries.to_vec())
}

pub fn sigmax() -> QuantumObject {
    pauli([(0, 1, ONE), (1, 0, ONE)])
}

pub fn sigmay() -> QuantumObject {
    pauli([(0, 1, C64::new(0.0, -1.0)), (1, 0, C64::new(0.0, 1.0))])
}

pub fn sigmaz() -> QuantumObject {
    pauli([(0, 0, ONE), (1, 1, -ONE)])
}

/// `(σx + iσy)/2 = |0⟩⟨1|`; raises `basis(2,1)` to `basis(2,0)`.
pub fn sigmap() -> QuantumObject {
    sparse_op(2, vec![(0, 1, ONE)])
}

pub fn sigmam() -> QuantumObject {
    sigmap().dag()
}

pub fn basis(n: usize, i: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    check_index(i, n)?;
    let mut a = Array2::zeros((n, 1));
    a[[i, 0]] = ONE;
    QuantumObject::from_dense(a, Kind::Ket, vec![n])
}

pub fn fock(n: usize, i: usize) -> Result<QuantumObject> {
    basis(n, i)
}

pub fn fock_dm(n: usize, i: usize) -> Result<QuantumObject> {
    projection(n, i, i)
}

/// `|i⟩⟨j|`.
pub fn projection(n: usize, i: usize, j: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    check_index(i, n)?;
    check_index(j, n)?;
    Ok(sparse_op(n, vec![(i, j, ONE)]))
}

/// Thermal state with `p_k ∝ (n̄/(1+n̄))^k`, normalized over the truncated
/// space.
pub fn thermal_dm(n: usize, nbar: f64) -> Result<QuantumObject> {
    check_dim(n)?;
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(QsimError::InvalidOptions(format!(
            "mean occupation must be finite and non-negative, got {nbar}"
        )));
    }
    if nbar == 0.0 {
        return fock_dm(n, 0);
    }
    let ratio = nbar / (1.0 + nbar);
    let weights: Vec<f64> = (0..n).map(|k| ratio.powi(k as i32)).collect();
    let total: f64 = weights.iter().sum();
    Ok(sparse_op(
        n,
        weights
            .iter()
            .enumerate()
            .map(|(k, w)| (k, k, C64::new(w / total, 0.0)))
            .collect(),
    ))
}

pub fn maximally_mixed_dm(n: usize) -> Result<QuantumObject> {
    check_dim(n)?;
    let p = C64::new(1.0 / n as f64, 0.0);
    Ok(sparse_op(n, (0..n).map(|k| (k, k, p)).collect()))
}

/// Coherent state from the series `e^{-|α|²/2} Σ αⁿ/√n! |n⟩`, renormalized
/// after truncation.
pub fn coherent(n: usize, alpha: C64) -> Result<QuantumObject> {
    if n < 2 {
        return Err(QsimError::InvalidDimension(format!(
            "coherent states need at least 2 levels, got {n}"
        )));
    }
    let mut amps = Vec::with_capacity(n);
    let mut c = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(c);
    for k in 1..n {
        c = c * alpha / (k as f64).sqrt();
        amps.push(c);
    }
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    // underflow of e^{-|α|²/2} for very large α leaves nothing to normalize
    if !(norm > 0.0) {
        return Err(QsimError::InvalidOptions(format!(
            "coherent amplitude {alpha} is not representable with {n} levels"
        )));
    }
    let a = Array2::from_shape_fn((n, 1), |(k, _)| amps[k] / norm);
    QuantumObject::from_dense(a, Kind::Ket, vec![n])
}

pub fn coherent_dm(n: usize, alpha: C64) -> Result<QuantumObject> {
    coherent(n, alpha)?.to_density()
}

/// `exp(α a† − α* a)` (dense).
pub fn displace(n: usize, alpha: C64) -> Result<QuantumObject> {
    let a = destroy(n)?;
    let gen = a.dag().scale(alpha).try_sub(&a.scale(alpha.conj()))?;
    Ok(dense_op(dense::expm(&gen.dense())?))
}

fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Array2<C64> {
    let mut r = rng::stream(seed, 0);
    Array2::from_shape_simple_fn((rows, cols), || {
        let re: f64 = StandardNormal.sample(&mut r);
        let im: f64 = StandardNormal.sample(&mut r);
        C64::new(re, im)
    })
}

pub fn rand_ket(n: usize, seed: u64) -> Result<QuantumObject> {
    check_dim(n)?;
    let g = gaussian_matrix(n, 1, seed);
    let norm = dense::frobenius_norm(&g);
    QuantumObject::from_dense(g.mapv(|v| v / norm), Kind::Ket, vec![n])
}

/// `G G† / tr(G G†)` for a complex Gaussian `G`.
pub fn rand_dm(n: usize, seed: u64) -> Result<QuantumObject> {
    check_dim(n)?;
    let g = gaussian_matrix(n, n, seed);
    let mut rho = g.dot(&dense::adjoint(&g));
    let tr = dense::trace(&rho).re;
    rho.mapv_inplace(|v| v / tr);
    // exact Hermiticity
    let rho = (&rho + &dense::adjoint(&rho)).mapv(|v| v * 0.5);
    Ok(dense_op(rho))
}

/// Haar-random unitary: QR of a complex Gaussian matrix with the diagonal of
/// `R` made real and positive.
pub fn rand_unitary(n: usize, seed: u64) -> Result<QuantumObject> {
    check_dim(n)?;
    let mut q = gaussian_matrix(n, n, seed);
    // Gram-Schmidt with one reorthogonalization pass yields R with a positive
    // real diagonal, which is exactly the phase-fixing condition.
    for j in 0..n {
        for _pass in 0..2 {
            for k in 0..j {
                let proj: C64 = (0..n).map(|i| q[[i, k]].conj() * q[[i, j]]).sum();
                for i in 0..n {
                    let qik = q[[i, k]];
                    q[[i, j]] -= proj * qik;
                }
            }
        }
        let norm = (0..n).map(|i| q[[i, j]].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..n {
            q[[i, j]] /= norm;
        }
    }
    Ok(dense_op(q))
}

/// `I ⊗ … ⊗ op ⊗ … ⊗ I` with `op` at position `site`.
pub fn embed_site(dims: &[usize], site: usize, op: &QuantumObject) -> Result<QuantumObject> {
    if site >= dims.len() {
        return Err(QsimError::InvalidSubsystem(format!(
            "site {site} out of range for {} subsystems",
            dims.len()
        )));
    }
    if op.kind() != Kind::Operator || op.dims() != [dims[site]] {
        return Err(QsimError::DimsMismatch(format!(
            "operator with dims {:?} cannot act on subsystem of size {}",
            op.dims(),
            dims[site]
        )));
    }
    let parts = dims
        .iter()
        .enumerate()
        .map(|(i, &d)| if i == site { Ok(op.clone()) } else { qeye(d) })
        .collect::<Result<Vec<_>>>()?;
    tensor_all(&parts)
}

pub const ISING_MAX_SITES: usize = 12;

/// Nearest-neighbour bonds of an `nx × ny` lattice with row-major site
/// numbering. With periodic wrap every site contributes a right and a down
/// bond, so a wrap bond on a length-2 axis is counted separately from the
/// open bond between the same sites.
pub fn lattice_bonds(nx: usize, ny: usize, periodic: bool) -> Vec<(usize, usize)> {
    let site = |x: usize, y: usize| y * nx + x;
    let mut bonds = Vec::new();
    for y in 0..ny {
        for x in 0..nx {
            if x + 1 < nx {
                bonds.push((site(x, y), site(x + 1, y)));
            } else if periodic && nx > 1 {
                bonds.push((site(x, y), site(0, y)));
            }
            if y + 1 < ny {
                bonds.push((site(x, y), site(x, y + 1)));
            } else if periodic && ny > 1 {
                bonds.push((site(x, y), site(x, 0)));
            }
        }
    }
    bonds
}

/// Dissipative transverse-field Ising model
/// `H = Jz Σ⟨ij⟩ σᶻᵢσᶻⱼ + hx Σᵢ σˣᵢ` with collapse operators `√γ σ⁻ᵢ`.
pub fn ising_model(
    nx: usize,
    ny: usize,
    jz: f64,
    hx: f64,
    gamma: f64,
    periodic: bool,
) -> Result<(QuantumObject, Vec<QuantumObject>)> {
    let nsites = nx * ny;
    if nsites == 0 {
        return Err(QsimError::InvalidDimension("empty lattice".into()));
    }
    if nsites > ISING_MAX_SITES {
        return Err(QsimError::TooLarge(format!(
            "{nx}x{ny} lattice has {nsites} sites, the limit is {ISING_MAX_SITES}"
        )));
    }
    let dims = vec![2; nsites];
    let sz: Vec<QuantumObject> = (0..nsites)
        .map(|i| embed_site(&dims, i, &sigmaz()))
        .collect::<Result<_>>()?;
    let mut h = QuantumObject::from_sparse(
        CscMatrix::zeros(1 << nsites, 1 << nsites),
        Kind::Operator,
        dims.clone(),
    )?;
    for (i, j) in lattice_bonds(nx, ny, periodic) {
        h = h.lin_comb(ONE, &sz[i].try_matmul(&sz[j])?, C64::new(jz, 0.0))?;
    }
    let mut c_ops = Vec::with_capacity(nsites);
    for i in 0..nsites {
        h = h.lin_comb(ONE, &embed_site(&dims, i, &sigmax())?, C64::new(hx, 0.0))?;
        c_ops.push(embed_site(&dims, i, &sigmam())? * gamma.sqrt());
    }
    Ok((h, c_ops))
}
