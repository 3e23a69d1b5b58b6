//! Post-processing: Wigner functions, entropies, fidelity, two-operator
//! correlation functions and their spectra.
//!
//! Phase-space convention: `x` and `p` satisfy `[x, p] = i`, the grid point
//! `(x, p)` corresponds to `α = (x + ip)/√2`, and `∬ W dx dp = 1`. The vacuum
//! is `W(x, p) = e^{−x²−p²}/π`.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::error::{QsimError, Result};
use crate::evolve::{propagate_operator, SolveOptions};
use crate::linalg::{dense, eig};
use crate::qobj::{Kind, QuantumObject};
use crate::steadystate::{steadystate, SteadyStateMethod};
use crate::superop;

/// `W` sampled on `yvec × xvec` (rows follow `p`, columns follow `x`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceGrid {
    pub xvec: Vec<f64>,
    pub yvec: Vec<f64>,
    pub values: Array2<f64>,
}

fn check_increasing(v: &[f64], name: &str) -> Result<()> {
    if v.is_empty() || v.windows(2).any(|w| !(w[1] > w[0])) || v.iter().any(|x| !x.is_finite()) {
        return Err(QsimError::InvalidGrid(format!(
            "{name} must be non-empty, finite and strictly increasing"
        )));
    }
    Ok(())
}

/// Wigner function of a single-mode Ket or density operator by Clenshaw
/// summation of the Laguerre series over the diagonals of `ρ`.
pub fn wigner(state: &QuantumObject, xvec: &[f64], yvec: &[f64]) -> Result<PhaseSpaceGrid> {
    if state.dims().len() != 1 {
        return Err(QsimError::InvalidSubsystem(format!(
            "wigner needs a single mode, got dims {:?}",
            state.dims()
        )));
    }
    check_increasing(xvec, "xvec")?;
    check_increasing(yvec, "yvec")?;
    let rho = match state.kind() {
        Kind::Ket | Kind::Operator => state.to_density()?.to_dense(),
        k => {
            return Err(QsimError::KindMismatch(format!(
                "wigner needs a Ket or Operator, got {k:?}"
            )))
        }
    };
    let m = rho.nrows();
    // off-diagonals enter twice: ρ_{ij} and ρ_{ji} = ρ_{ij}*
    let diagonals: Vec<Vec<C64>> = (0..m)
        .map(|l| {
            (0..m - l)
                .map(|i| if l == 0 { rho[[i, i]] } else { rho[[i, i + l]] * 2.0 })
                .collect()
        })
        .collect();
    let rows: Vec<Vec<f64>> = yvec
        .par_iter()
        .map(|&p| {
            xvec.iter()
                .map(|&x| wigner_point(&diagonals, x, p))
                .collect()
        })
        .collect();
    let values = Array2::from_shape_fn((yvec.len(), xvec.len()), |(i, j)| rows[i][j]);
    Ok(PhaseSpaceGrid {
        xvec: xvec.to_vec(),
        yvec: yvec.to_vec(),
        values,
    })
}

/// `W = Re[Σ_L (2α)^L/√(L!) Σ_i c^L_i …] e^{−2|α|²}/π`, with the outer sum by
/// Horner's rule and each inner Laguerre sum by Clenshaw's recurrence.
fn wigner_point(diagonals: &[Vec<C64>], x: f64, p: f64) -> f64 {
    let two_alpha = C64::new(x, p) * std::f64::consts::SQRT_2;
    let b = two_alpha.norm_sqr();
    let m = diagonals.len();
    let mut w = diagonals[m - 1][0];
    for l in (0..m - 1).rev() {
        w = laguerre_clenshaw(l, b, &diagonals[l]) + w * two_alpha / ((l + 1) as f64).sqrt();
    }
    w.re * (-0.5 * b).exp() / std::f64::consts::PI
}

/// `Σ_k c_k (−1)^k √(k!/(k+L)!) L_k^{(L)}(x)` up to the normalization folded
/// into the outer Horner loop.
fn laguerre_clenshaw(l: usize, x: f64, c: &[C64]) -> C64 {
    let lf = l as f64;
    let (y0, y1) = match c.len() {
        1 => (c[0], C64::new(0.0, 0.0)),
        2 => (c[0], c[1]),
        n => {
            let mut k = n as f64;
            let mut y0 = c[n - 2];
            let mut y1 = c[n - 1];
            for i in 3..=n {
                k -= 1.0;
                let t = y0;
                y0 = c[n - i] - y1 * (((k - 1.0) * (lf + k - 1.0)) / ((lf + k) * k)).sqrt();
                y1 = t - y1 * ((lf + 2.0 * k - 1.0) - x) / ((lf + k) * k).sqrt();
            }
            (y0, y1)
        }
    };
    y0 - y1 * ((lf + 1.0) - x) / (lf + 1.0).sqrt()
}

fn density_matrix(x: &QuantumObject, what: &str) -> Result<Array2<C64>> {
    match x.kind() {
        Kind::Ket | Kind::Bra => Ok(x.to_density()?.to_dense()),
        Kind::Operator => Ok(x.to_dense()),
        k => Err(QsimError::KindMismatch(format!(
            "{what} needs a state (Ket or density Operator), got {k:?}"
        ))),
    }
}

/// `S = −Σ λ ln λ` over eigenvalues `λ > 1e-15`.
pub fn entropy_vn(rho: &QuantumObject) -> Result<f64> {
    let r = density_matrix(rho, "entropy_vn")?;
    let ev = eig::eigvalsh(&r)?;
    Ok(-ev
        .into_iter()
        .filter(|&l| l > 1e-15)
        .map(|l| l * l.ln())
        .sum::<f64>())
}

/// `F = tr√(√ρ σ √ρ)`; for a pure argument `|ψ⟩`, `F = √⟨ψ|σ|ψ⟩`.
pub fn fidelity(rho: &QuantumObject, sigma: &QuantumObject) -> Result<f64> {
    if rho.dims() != sigma.dims() {
        return Err(QsimError::DimsMismatch(format!(
            "fidelity of states with dims {:?} and {:?}",
            rho.dims(),
            sigma.dims()
        )));
    }
    match (rho.kind(), sigma.kind()) {
        (Kind::Ket, Kind::Ket) => Ok(rho.overlap(sigma)?.norm()),
        (Kind::Ket, _) => pure_fidelity(rho, sigma),
        (_, Kind::Ket) => pure_fidelity(sigma, rho),
        _ => {
            let r = density_matrix(rho, "fidelity")?;
            let s = density_matrix(sigma, "fidelity")?;
            let sqrt_r = eig::hermitian_map(&r, |l| l.max(0.0).sqrt())?;
            let inner = sqrt_r.dot(&s).dot(&sqrt_r);
            let inner = (&inner + &dense::adjoint(&inner)).mapv(|z| z * 0.5);
            Ok(eig::eigvalsh(&inner)?.into_iter().map(|l| l.max(0.0).sqrt()).sum())
        }
    }
}

fn pure_fidelity(psi: &QuantumObject, sigma: &QuantumObject) -> Result<f64> {
    let s = density_matrix(sigma, "fidelity")?;
    let v = psi.to_vec();
    let n = v.len();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += v[i].conj() * s[[i, j]] * v[j];
        }
    }
    Ok(acc.re.max(0.0).sqrt())
}

/// `⟨A(τ)B(0)⟩ = tr[A e^{𝓛τ}(Bρ)]` by quantum regression. Without `state0`
/// the steady state of `𝓛` is used.
pub fn correlation_2op_1t(
    h: &QuantumObject,
    state0: Option<&QuantumObject>,
    taulist: &[f64],
    c_ops: &[QuantumObject],
    a: &QuantumObject,
    b: &QuantumObject,
    opts: &SolveOptions,
) -> Result<Vec<C64>> {
    let rho = match state0 {
        Some(s) => density_matrix(s, "correlation_2op_1t")
            .and_then(|m| QuantumObject::from_dense(m, Kind::Operator, s.dims().to_vec()))?,
        None => steadystate(h, c_ops, SteadyStateMethod::Direct)?,
    };
    let l = superop::liouvillian(h, c_ops)?;
    let x0 = b.try_matmul(&rho)?;
    if taulist.first() == Some(&0.0) {
        return propagate_operator(&l.sparse(), &x0, taulist, a, opts);
    }
    let mut tl = Vec::with_capacity(taulist.len() + 1);
    tl.push(0.0);
    tl.extend_from_slice(taulist);
    let mut out = propagate_operator(&l.sparse(), &x0, &tl, a, opts)?;
    out.remove(0);
    Ok(out)
}

fn uniform_spacing(tau: &[f64]) -> Result<f64> {
    if tau.len() < 2 {
        return Err(QsimError::InvalidGrid("need at least two delay points".into()));
    }
    let dt = tau[1] - tau[0];
    let uniform = dt > 0.0
        && tau
            .windows(2)
            .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1e-300));
    if !uniform {
        return Err(QsimError::InvalidGrid(
            "FFT of a correlation function needs uniformly spaced delays".into(),
        ));
    }
    Ok(dt)
}

/// Discrete approximation of `∫ c(τ) e^{−iωτ} dτ` on the sampling-theorem
/// frequency axis, sorted by ascending `ω`.
pub fn correlation_fft(taulist: &[f64], corr: &[C64]) -> Result<(Vec<f64>, Vec<C64>)> {
    if taulist.len() != corr.len() {
        return Err(QsimError::DimsMismatch(format!(
            "{} delays but {} correlation samples",
            taulist.len(),
            corr.len()
        )));
    }
    let dt = uniform_spacing(taulist)?;
    let n = corr.len();
    let mut buf = corr.to_vec();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // k ≥ ⌈n/2⌉ are the negative frequencies
    let first_negative = n.div_ceil(2);
    let order: Vec<usize> = (first_negative..n).chain(0..first_negative).collect();
    let freq = |k: usize| {
        let kk = if k >= first_negative { k as f64 - n as f64 } else { k as f64 };
        2.0 * std::f64::consts::PI * kk / (n as f64 * dt)
    };
    let omega = order.iter().map(|&k| freq(k)).collect();
    let ft = order.iter().map(|&k| buf[k] * dt).collect();
    Ok((omega, ft))
}

/// `S(ω) = 2 Re ∫₀ c(τ) e^{−iωτ} dτ`.
pub fn spectrum_correlation_fft(taulist: &[f64], corr: &[C64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let (omega, ft) = correlation_fft(taulist, corr)?;
    Ok((omega, ft.into_iter().map(|z| 2.0 * z.re).collect()))
}
