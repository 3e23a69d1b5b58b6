//! Model Hamiltonians, loss channels and initial states.

use qsim_core::evolve::TimeDependentOperator;
use qsim_core::factories::{
    basis, coherent, destroy, embed_site, fock, ising_model, qeye, sigmam, sigmax, sigmay, sigmaz,
};
use qsim_core::superop::{hamiltonian_superop, liouvillian};
use qsim_core::{tensor, tensor_all, QuantumObject, Result, C64};

use crate::observables::ModeOps;
use crate::scenario::{ModelKind, ScenarioSpec};

/// A model at fixed truncation.
#[derive(Debug, Clone)]
pub struct Model {
    pub h: TimeDependentOperator,
    /// Arguments of the coefficient functions in `h`.
    pub td_params: Vec<f64>,
    pub psi0: QuantumObject,
    /// Unmonitored loss channels.
    pub c_ops: Vec<QuantumObject>,
    /// Homodyne-monitored channels.
    pub sc_ops: Vec<QuantumObject>,
    pub ops: ModeOps,
}

impl Model {
    /// Every loss channel, monitored or not.
    pub fn all_losses(&self) -> Vec<QuantumObject> {
        self.c_ops.iter().chain(&self.sc_ops).cloned().collect()
    }
}

fn push_rate(c_ops: &mut Vec<QuantumObject>, rate: f64, op: &QuantumObject) {
    if rate > 0.0 {
        c_ops.push(op * rate.sqrt());
    }
}

pub fn build(spec: &ScenarioSpec) -> Result<Model> {
    match spec.model {
        ModelKind::Jc => jc(spec),
        ModelKind::OptomechDriven => optomech(spec),
        ModelKind::KerrJc => {
            let k = KerrJc::from_spec(spec)?;
            Ok(Model {
                h: k.hamiltonian(&k.a)?.into(),
                td_params: Vec::new(),
                psi0: k.psi0()?,
                c_ops: k.c_ops(&k.a),
                sc_ops: Vec::new(),
                ops: k.mode_ops(k.a.clone()),
            })
        }
        ModelKind::DrivenCavity => {
            let dc = DrivenCavity::from_spec(spec);
            let a = destroy(spec.param_usize("N"))?;
            Ok(Model {
                h: dc.hamiltonian(&a).into(),
                td_params: Vec::new(),
                psi0: fock(spec.param_usize("N"), 0)?,
                c_ops: dc.c_ops(&a),
                sc_ops: Vec::new(),
                ops: ModeOps { a: Some(a), ..Default::default() },
            })
        }
        ModelKind::Ising => ising(spec),
    }
}

/// Jaynes–Cummings model `ωc a†a + ωa/2 σz + g(aσ₊ + a†σ₋)`, starting from
/// `|α⟩ ⊗ |e⟩` with `|e⟩ = basis(2, 0)`. The cavity loss `√κ a` is the
/// monitored channel.
fn jc(spec: &ScenarioSpec) -> Result<Model> {
    let n = spec.param_usize("N");
    let (wc, wa, g) = (spec.param("wc"), spec.param("wa"), spec.param("g"));
    let a = tensor(&destroy(n)?, &qeye(2)?)?;
    let sm = tensor(&qeye(n)?, &sigmam())?;
    let sz = tensor(&qeye(n)?, &sigmaz())?;
    let h = &a.dag() * &a * wc + &sz * (wa / 2.0) + (&a * &sm.dag() + &a.dag() * &sm) * g;
    let alpha = spec.param("alpha");
    let cavity = if alpha == 0.0 { fock(n, 0)? } else { coherent(n, C64::new(alpha, 0.0))? };
    let psi0 = tensor(&cavity, &basis(2, 0)?)?;
    let mut c_ops = Vec::new();
    push_rate(&mut c_ops, spec.param("gamma"), &sm);
    push_rate(&mut c_ops, spec.param("kappa_phi"), &(&a.dag() * &a));
    let mut sc_ops = Vec::new();
    push_rate(&mut sc_ops, spec.param("kappa"), &a);
    let homodyne = Some(&a * spec.param("kappa").sqrt());
    Ok(Model {
        h: h.into(),
        td_params: Vec::new(),
        psi0,
        c_ops,
        sc_ops,
        ops: ModeOps { a: Some(a), sm: Some(sm), sz: Some(sz), homodyne, ..Default::default() },
    })
}

/// Static part and drive operator of the driven optomechanical model.
pub struct Optomech {
    pub h0: QuantumObject,
    /// `a + a†`, driven with `F cos(ωd t)`.
    pub x: QuantumObject,
    pub c_ops: Vec<QuantumObject>,
    pub a: QuantumObject,
    pub b: QuantumObject,
    pub f: f64,
    pub wd: f64,
}

impl Optomech {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        Self::new(
            spec.param_usize("Nc"),
            spec.param_usize("Nm"),
            [spec.param("wc"), spec.param("wm"), spec.param("g")],
            spec.param("kappa"),
            spec.param("gamma"),
            spec.param("F"),
            spec.param("wd"),
        )
    }

    /// `ωc a†a + ωm b†b + g/2 (a + a†)²(b + b†)` with losses `√κ a`, `√γ b`.
    pub fn new(nc: usize, nm: usize, [wc, wm, g]: [f64; 3], kappa: f64, gamma: f64, f: f64, wd: f64) -> Result<Self> {
        let a = tensor(&destroy(nc)?, &qeye(nm)?)?;
        let b = tensor(&qeye(nc)?, &destroy(nm)?)?;
        let x = &a + &a.dag();
        let h0 = &a.dag() * &a * wc + &b.dag() * &b * wm + &x * &x * (&b + &b.dag()) * (g / 2.0);
        let mut c_ops = Vec::new();
        push_rate(&mut c_ops, kappa, &a);
        push_rate(&mut c_ops, gamma, &b);
        Ok(Self { h0, x, c_ops, a, b, f, wd })
    }

    pub fn td_hamiltonian(&self) -> Result<TimeDependentOperator> {
        TimeDependentOperator::new(self.h0.clone())
            .with_term(self.x.clone(), |p: &[f64], t: f64| C64::new(p[0] * (p[1] * t).cos(), 0.0))
    }

    /// `(𝓛₀, 𝓛₁, 𝓛₋₁)` of the drive `F cos(ωd t)(a + a†) = F/2 (e^{iωd t} + e^{−iωd t})(a + a†)`.
    pub fn fourier_parts(&self) -> Result<(QuantumObject, QuantumObject, QuantumObject)> {
        let l0 = liouvillian(&self.h0, &self.c_ops)?;
        let l1 = hamiltonian_superop(&(&self.x * (self.f / 2.0)))?;
        Ok((l0, l1.clone(), l1))
    }
}

fn optomech(spec: &ScenarioSpec) -> Result<Model> {
    let om = Optomech::from_spec(spec)?;
    let psi0 = tensor(&fock(spec.param_usize("Nc"), 0)?, &fock(spec.param_usize("Nm"), 0)?)?;
    Ok(Model {
        h: om.td_hamiltonian()?,
        td_params: vec![om.f, om.wd],
        psi0,
        c_ops: om.c_ops.clone(),
        sc_ops: Vec::new(),
        ops: ModeOps { a: Some(om.a.clone()), b: Some(om.b.clone()), ..Default::default() },
    })
}

/// Driven Kerr Jaynes–Cummings model in the drive frame, written in terms of
/// the cavity operator so that shifted-frame solvers can rebuild it.
#[derive(Debug, Clone)]
pub struct KerrJc {
    pub n: usize,
    pub dc: f64,
    pub da: f64,
    pub u: f64,
    pub g: f64,
    pub f: f64,
    pub gamma: f64,
    /// Unshifted `a ⊗ I`.
    pub a: QuantumObject,
    pub sm: QuantumObject,
    pub sz: QuantumObject,
}

impl KerrJc {
    pub fn from_spec(spec: &ScenarioSpec) -> Result<Self> {
        Self::new(
            spec.param_usize("N"),
            [spec.param("Dc"), spec.param("Da"), spec.param("U"), spec.param("g"), spec.param("F")],
            spec.param("gamma"),
        )
    }

    pub fn new(n: usize, [dc, da, u, g, f]: [f64; 5], gamma: f64) -> Result<Self> {
        Ok(Self {
            n,
            dc,
            da,
            u,
            g,
            f,
            gamma,
            a: tensor(&destroy(n)?, &qeye(2)?)?,
            sm: tensor(&qeye(n)?, &sigmam())?,
            sz: tensor(&qeye(n)?, &sigmaz())?,
        })
    }

    /// `Δc a†a + Δa/2 σz + U a†²a² + g(aσ₊ + a†σ₋) + F(a + a†)`.
    pub fn hamiltonian(&self, a: &QuantumObject) -> Result<QuantumObject> {
        let ad = a.dag();
        let kerr = (&ad * &ad).try_matmul(&(a * a))?;
        Ok(&ad * a * self.dc
            + &self.sz * (self.da / 2.0)
            + kerr * self.u
            + (a * &self.sm.dag() + &ad * &self.sm) * self.g
            + (a + &ad) * self.f)
    }

    /// `[√γ a, √γ σ₋]`.
    pub fn c_ops(&self, a: &QuantumObject) -> Vec<QuantumObject> {
        let mut c = Vec::new();
        push_rate(&mut c, self.gamma, a);
        push_rate(&mut c, self.gamma, &self.sm);
        c
    }

    /// Cavity vacuum with the atom in its ground state `basis(2, 1)`.
    pub fn psi0(&self) -> Result<QuantumObject> {
        tensor(&fock(self.n, 0)?, &basis(2, 1)?)
    }

    pub fn mode_ops(&self, a: QuantumObject) -> ModeOps {
        ModeOps { a: Some(a), sm: Some(self.sm.clone()), sz: Some(self.sz.clone()), ..Default::default() }
    }
}

/// Coherently driven lossy cavity `Δ a†a + F(a + a†)` with loss `√γ a`.
#[derive(Debug, Clone, Copy)]
pub struct DrivenCavity {
    pub delta: f64,
    pub f: f64,
    pub gamma: f64,
}

impl DrivenCavity {
    pub fn from_spec(spec: &ScenarioSpec) -> Self {
        Self { delta: spec.param("Delta"), f: spec.param("F"), gamma: spec.param("gamma") }
    }

    pub fn hamiltonian(&self, a: &QuantumObject) -> QuantumObject {
        &a.dag() * a * self.delta + (a + &a.dag()) * self.f
    }

    pub fn c_ops(&self, a: &QuantumObject) -> Vec<QuantumObject> {
        let mut c = Vec::new();
        push_rate(&mut c, self.gamma, a);
        c
    }

    /// `F²/(Δ² + γ²/4)`.
    pub fn photon_number(&self) -> f64 {
        self.f * self.f / (self.delta * self.delta + self.gamma * self.gamma / 4.0)
    }

    /// `−2F²Δ/(Δ² + γ²/4)²`.
    pub fn photon_number_gradient(&self) -> f64 {
        let den = self.delta * self.delta + self.gamma * self.gamma / 4.0;
        -2.0 * self.f * self.f * self.delta / (den * den)
    }
}

/// Dissipative transverse-field Ising lattice, all spins up (`basis(2, 0)`).
fn ising(spec: &ScenarioSpec) -> Result<Model> {
    let (nx, ny) = (spec.param_usize("nx"), spec.param_usize("ny"));
    let periodic = spec.param("periodic") != 0.0;
    let (h, c_ops) = ising_model(nx, ny, spec.param("jz"), spec.param("hx"), spec.param("gamma"), periodic)?;
    let nsites = nx * ny;
    let dims = vec![2; nsites];
    let up = basis(2, 0)?;
    let psi0 = tensor_all(&vec![up; nsites])?;
    let spins = (0..nsites)
        .map(|i| {
            Ok([
                embed_site(&dims, i, &sigmax())?,
                embed_site(&dims, i, &sigmay())?,
                embed_site(&dims, i, &sigmaz())?,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let c_ops = if spec.param("gamma") > 0.0 { c_ops } else { Vec::new() };
    Ok(Model {
        h: h.into(),
        td_params: Vec::new(),
        psi0,
        c_ops,
        sc_ops: Vec::new(),
        ops: ModeOps { spins, ..Default::default() },
    })
}
