//! Named observables available to scenarios.

use qsim_core::{QsimError, QuantumObject, Result};

use crate::scenario::ModelKind;

/// Operators a model exposes to the registry. For shifted-frame solvers `a`
/// is the lab-frame operator `a + α`.
#[derive(Debug, Clone, Default)]
pub struct ModeOps {
    pub a: Option<QuantumObject>,
    pub b: Option<QuantumObject>,
    pub sm: Option<QuantumObject>,
    pub sz: Option<QuantumObject>,
    /// Monitored homodyne channel `S`.
    pub homodyne: Option<QuantumObject>,
    /// Per site `[σˣ, σʸ, σᶻ]`.
    pub spins: Vec<[QuantumObject; 3]>,
}

#[derive(Debug, Clone, Copy)]
pub struct ObservableInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub models: &'static [ModelKind],
}

const CAVITY_MODELS: &[ModelKind] = &[
    ModelKind::Jc,
    ModelKind::OptomechDriven,
    ModelKind::KerrJc,
    ModelKind::DrivenCavity,
];
const ATOM_MODELS: &[ModelKind] = &[ModelKind::Jc, ModelKind::KerrJc];

pub const REGISTRY: &[ObservableInfo] = &[
    ObservableInfo { name: "n_cavity", description: "cavity photon number a†a", models: CAVITY_MODELS },
    ObservableInfo { name: "a_cavity", description: "cavity field a", models: CAVITY_MODELS },
    ObservableInfo { name: "X_quadrature", description: "cavity quadrature a + a†", models: CAVITY_MODELS },
    ObservableInfo {
        name: "X_homodyne",
        description: "homodyne quadrature S + S† with S = √κ a",
        models: &[ModelKind::Jc],
    },
    ObservableInfo { name: "n_mech", description: "phonon number b†b", models: &[ModelKind::OptomechDriven] },
    ObservableInfo { name: "X_mech", description: "mechanical quadrature b + b†", models: &[ModelKind::OptomechDriven] },
    ObservableInfo { name: "sz_atom", description: "atomic inversion σz", models: ATOM_MODELS },
    ObservableInfo { name: "pe_atom", description: "excited-state population σ+σ−", models: ATOM_MODELS },
    ObservableInfo { name: "Sx_total", description: "Σᵢ σˣᵢ", models: &[ModelKind::Ising] },
    ObservableInfo { name: "Sy_total", description: "Σᵢ σʸᵢ", models: &[ModelKind::Ising] },
    ObservableInfo { name: "Sz_total", description: "Σᵢ σᶻᵢ", models: &[ModelKind::Ising] },
];

pub fn lookup(name: &str) -> Option<&'static ObservableInfo> {
    REGISTRY.iter().find(|o| o.name == name)
}

fn need<'a>(op: &'a Option<QuantumObject>, name: &str) -> Result<&'a QuantumObject> {
    op.as_ref()
        .ok_or_else(|| QsimError::InvalidOptions(format!("observable {name} is not available for this model")))
}

fn spin_sum(ops: &ModeOps, axis: usize, name: &str) -> Result<QuantumObject> {
    let mut it = ops.spins.iter().map(|s| &s[axis]);
    let first = it
        .next()
        .ok_or_else(|| QsimError::InvalidOptions(format!("observable {name} needs spin sites")))?;
    it.try_fold(first.clone(), |acc, s| acc.try_add(s))
}

/// Builds the named observable from `ops`.
pub fn build(name: &str, ops: &ModeOps) -> Result<QuantumObject> {
    match name {
        "n_cavity" => {
            let a = need(&ops.a, name)?;
            a.dag().try_matmul(a)
        }
        "a_cavity" => Ok(need(&ops.a, name)?.clone()),
        "X_quadrature" => {
            let a = need(&ops.a, name)?;
            a.try_add(&a.dag())
        }
        "X_homodyne" => {
            let s = need(&ops.homodyne, name)?;
            s.try_add(&s.dag())
        }
        "n_mech" => {
            let b = need(&ops.b, name)?;
            b.dag().try_matmul(b)
        }
        "X_mech" => {
            let b = need(&ops.b, name)?;
            b.try_add(&b.dag())
        }
        "sz_atom" => Ok(need(&ops.sz, name)?.clone()),
        "pe_atom" => {
            let sm = need(&ops.sm, name)?;
            sm.dag().try_matmul(sm)
        }
        "Sx_total" => spin_sum(ops, 0, name),
        "Sy_total" => spin_sum(ops, 1, name),
        "Sz_total" => spin_sum(ops, 2, name),
        _ => Err(QsimError::InvalidOptions(format!("unknown observable {name:?}"))),
    }
}

pub fn build_all(names: &[String], ops: &ModeOps) -> Result<Vec<QuantumObject>> {
    names.iter().map(|n| build(n, ops)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use qsim_core::factories::{destroy, sigmam, sigmaz};
    use qsim_core::{expect, factories::fock};

    #[test]
    fn every_entry_builds_for_its_models() {
        let ops = ModeOps {
            a: Some(destroy(3).unwrap()),
            b: Some(destroy(3).unwrap()),
            sm: Some(sigmam()),
            sz: Some(sigmaz()),
            homodyne: Some(destroy(3).unwrap()),
            spins: vec![[
                qsim_core::factories::sigmax(),
                qsim_core::factories::sigmay(),
                sigmaz(),
            ]],
        };
        for o in REGISTRY {
            build(o.name, &ops).unwrap();
        }
        assert!(build("n_cavity", &ModeOps::default()).is_err());
        assert!(lookup("energy").is_none());
    }

    #[test]
    fn photon_number_of_a_fock_state() {
        let ops = ModeOps { a: Some(destroy(5).unwrap()), ..Default::default() };
        let n = build("n_cavity", &ops).unwrap();
        assert!((expect(&n, &fock(5, 3).unwrap()).unwrap().re - 3.0).abs() < 1e-14);
    }
}
