//! Steady states of time-independent Liouvillians and Fourier-resolved
//! steady states of periodically driven ones.
//!
//! Normalization is imposed by replacing row 0 of the (centre block of the)
//! linear system with the trace functional `vec(I)†` and setting the matching
//! right-hand side entry to 1.

use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::factories::destroy;
use crate::linalg::{eig, solve, CscMatrix};
use crate::qobj::{Kind, QuantumObject};
use crate::superop::{self, trace_functional};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SteadyStateMethod {
    /// Sparse (or small dense) LU with trace-row replacement.
    #[default]
    Direct,
    /// Eigenvector of the eigenvalue of smallest modulus (dense).
    Eigen,
}

/// Steady state of `𝓛 = −i[H, ·] + Σ 𝒟[Cₖ]`.
pub fn steadystate(
    h: &QuantumObject,
    c_ops: &[QuantumObject],
    method: SteadyStateMethod,
) -> Result<QuantumObject> {
    let l = superop::liouvillian(h, c_ops)?;
    steadystate_liouvillian(&l, method)
}

/// Steady state of a given Liouvillian SuperOperator.
pub fn steadystate_liouvillian(l: &QuantumObject, method: SteadyStateMethod) -> Result<QuantumObject> {
    if l.kind() != Kind::SuperOperator {
        return Err(QsimError::KindMismatch(format!(
            "steady state needs a SuperOperator, got {:?}",
            l.kind()
        )));
    }
    let d = l.hilbert_dim();
    let v = match method {
        SteadyStateMethod::Direct => direct_null_vector(&l.sparse(), d)?,
        SteadyStateMethod::Eigen => eigen_null_vector(&l.dense(), d)?,
    };
    finish_density(&v, d, l.dims())
}

fn replace_row_with_trace(l: &CscMatrix, row: usize, col_offset: usize, d: usize) -> CscMatrix {
    let n = l.nrows();
    let triplets = l
        .iter()
        .filter(|&(r, _, _)| r != row)
        .chain(
            trace_functional(d)
                .into_iter()
                .map(|c| (row, c + col_offset, C64::new(1.0, 0.0))),
        );
    CscMatrix::from_triplets(n, l.ncols(), triplets)
}

fn direct_null_vector(l: &CscMatrix, d: usize) -> Result<Vec<C64>> {
    let a = replace_row_with_trace(l, 0, 0, d);
    let mut b = vec![C64::new(0.0, 0.0); d * d];
    b[0] = C64::new(1.0, 0.0);
    let x = solve::solve(&a, &b)?;
    let resid: f64 = l.mul_vec(&x).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let scale = l.frobenius_norm() * x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if resid > 1e-9 * scale.max(1.0) {
        log::warn!("steady state residual {resid:.3e} relative to ‖𝓛‖‖x‖ = {scale:.3e}");
    }
    Ok(x)
}

fn eigen_null_vector(l: &ndarray::Array2<C64>, d: usize) -> Result<Vec<C64>> {
    let evd = eig::eigen_dense(l)?;
    let mut order: Vec<usize> = (0..evd.values.len()).collect();
    order.sort_by(|&i, &j| evd.values[i].norm().total_cmp(&evd.values[j].norm()));
    let k = order[0];
    if order.len() > 1 && evd.values[order[1]].norm() < 1e-10 * (1.0 + d as f64) {
        log::warn!("Liouvillian null space appears degenerate; returning one element");
    }
    Ok(evd.vectors.column(k).to_vec())
}

/// Reshapes, Hermitizes and divides by the trace.
fn finish_density(v: &[C64], d: usize, dims: &[usize]) -> Result<QuantumObject> {
    let m = superop::vec_to_dense(v, d);
    let herm = (&m + &crate::linalg::dense::adjoint(&m)).mapv(|z| z * 0.5);
    let tr = crate::linalg::dense::trace(&herm).re;
    if !(tr.abs() > 0.0) || !tr.is_finite() {
        return Err(QsimError::SteadyStateFailure {
            condition: f64::INFINITY,
            reason: format!("null vector has trace {tr}"),
        });
    }
    let rho = herm.mapv(|z| z / tr);
    if let Ok(ev) = eig::eigvalsh(&rho) {
        if ev[0] < -1e-8 {
            log::warn!("steady state has negative eigenvalue {:.3e}", ev[0]);
        }
    }
    QuantumObject::from_dense(rho, Kind::Operator, dims.to_vec())
}

/// Fourier components `ρₙ`, `n ∈ [−n_max, n_max]`, of the long-time state
/// `ρ(t) = Σ ρₙ e^{inω_d t}`.
#[derive(Debug, Clone)]
pub struct FourierSteadyState {
    /// `components[n + n_max] = ρₙ`.
    pub components: Vec<QuantumObject>,
    pub drive_frequency: f64,
    pub n_max: usize,
}

impl FourierSteadyState {
    pub fn component(&self, n: i64) -> Option<&QuantumObject> {
        let idx = n + self.n_max as i64;
        (idx >= 0).then(|| self.components.get(idx as usize)).flatten()
    }

    /// The time-averaged state `ρ₀`.
    pub fn rho0(&self) -> &QuantumObject {
        &self.components[self.n_max]
    }

    /// `‖(𝓛₀ − inω_d)ρₙ + 𝓛₁ρₙ₋₁ + 𝓛₋₁ρₙ₊₁‖₂` for every interior `n`
    /// (`|n| < n_max`), in increasing `n`.
    pub fn recursion_residuals(
        &self,
        l0: &QuantumObject,
        l1: &QuantumObject,
        lm1: &QuantumObject,
    ) -> Result<Vec<f64>> {
        let vecs: Vec<Vec<C64>> = self
            .components
            .iter()
            .map(|c| Ok(superop::mat2vec(c)?.to_vec()))
            .collect::<Result<_>>()?;
        let (s0, s1, sm1) = (l0.sparse(), l1.sparse(), lm1.sparse());
        let nm = self.n_max as i64;
        let mut out = Vec::new();
        for n in (-nm + 1)..nm {
            let j = (n + nm) as usize;
            let mut r = s0.mul_vec(&vecs[j]);
            let shift = C64::new(0.0, -(n as f64) * self.drive_frequency);
            for (ri, xi) in r.iter_mut().zip(&vecs[j]) {
                *ri += shift * xi;
            }
            s1.mul_vec_acc(C64::new(1.0, 0.0), &vecs[j - 1], &mut r);
            sm1.mul_vec_acc(C64::new(1.0, 0.0), &vecs[j + 1], &mut r);
            out.push(r.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
        }
        Ok(out)
    }
}

/// Solves the block-tridiagonal system
/// `(𝓛₀ − inω_d)ρₙ + 𝓛₁ρₙ₋₁ + 𝓛₋₁ρₙ₊₁ = 0` with `ρ_{±(n_max+1)} = 0`
/// for `d/dt ρ = (𝓛₀ + 𝓛₁e^{iω_d t} + 𝓛₋₁e^{−iω_d t})ρ`.
pub fn steadystate_fourier(
    l0: &QuantumObject,
    l1: &QuantumObject,
    lm1: &QuantumObject,
    drive_frequency: f64,
    n_max: usize,
) -> Result<FourierSteadyState> {
    for (name, l) in [("L0", l0), ("L1", l1), ("L-1", lm1)] {
        if l.kind() != Kind::SuperOperator {
            return Err(QsimError::KindMismatch(format!(
                "{name} must be a SuperOperator, got {:?}",
                l.kind()
            )));
        }
        if l.dims() != l0.dims() {
            return Err(QsimError::DimsMismatch(format!(
                "{name} has dims {:?}, L0 has {:?}",
                l.dims(),
                l0.dims()
            )));
        }
    }
    let d = l0.hilbert_dim();
    let b = d * d;
    let nb = 2 * n_max + 1;
    let (s0, s1, sm1) = (l0.sparse(), l1.sparse(), lm1.sparse());
    let mut triplets = Vec::with_capacity(nb * (s0.nnz() + s1.nnz() + sm1.nnz() + b));
    for j in 0..nb {
        let n = j as f64 - n_max as f64;
        let off = j * b;
        triplets.extend(s0.iter().map(|(r, c, v)| (off + r, off + c, v)));
        for i in 0..b {
            triplets.push((off + i, off + i, C64::new(0.0, -n * drive_frequency)));
        }
        if j > 0 {
            triplets.extend(s1.iter().map(|(r, c, v)| (off + r, off - b + c, v)));
        }
        if j + 1 < nb {
            triplets.extend(sm1.iter().map(|(r, c, v)| (off + r, off + b + c, v)));
        }
    }
    let a = CscMatrix::from_triplets(nb * b, nb * b, triplets);
    let centre = n_max * b;
    let a = replace_row_with_trace(&a, centre, centre, d);
    let mut rhs = vec![C64::new(0.0, 0.0); nb * b];
    rhs[centre] = C64::new(1.0, 0.0);
    let x = solve::solve(&a, &rhs)?;
    let components = (0..nb)
        .map(|j| {
            QuantumObject::from_dense(
                superop::vec_to_dense(&x[j * b..(j + 1) * b], d),
                Kind::Operator,
                l0.dims().to_vec(),
            )
        })
        .collect::<Result<_>>()?;
    Ok(FourierSteadyState {
        components,
        drive_frequency,
        n_max,
    })
}

/// Steady-state photon number of the coherently driven damped cavity
/// `H = Δa†a + F(a + a†)`, `C = √γ a`, truncated at `n` levels.
pub fn driven_cavity_photon_number(delta: f64, f: f64, gamma: f64, n: usize) -> Result<f64> {
    let a = destroy(n)?;
    let ad = a.dag();
    let h = (&ad * &a) * delta + (&a + &ad) * f;
    let rho = steadystate(&h, &[&a * gamma.sqrt()], SteadyStateMethod::Direct)?;
    Ok(crate::qobj::expect(&(&ad * &a), &rho)?.re)
}

/// `∂n_ss/∂Δ` by the central difference `(n_ss(Δ+h) − n_ss(Δ−h))/(2h)`.
pub fn steadystate_detuning_gradient(delta: f64, f: f64, gamma: f64, n: usize, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(QsimError::InvalidOptions(format!("step h must be positive, got {h}")));
    }
    let plus = driven_cavity_photon_number(delta + h, f, gamma, n)?;
    let minus = driven_cavity_photon_number(delta - h, f, gamma, n)?;
    Ok((plus - minus) / (2.0 * h))
}
