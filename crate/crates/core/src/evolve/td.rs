//! Time-dependent operators `A(t) = A₀ + Σⱼ fⱼ(p, t) Aⱼ`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::linalg::CscMatrix;
use crate::qobj::QuantumObject;

/// Scalar coefficient `f(params, t)`.
pub type CoeffFn = Arc<dyn Fn(&[f64], f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct TimeDependentOperator {
    constant: QuantumObject,
    terms: Vec<(QuantumObject, CoeffFn)>,
}

impl fmt::Debug for TimeDependentOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentOperator")
            .field("kind", &self.constant.kind())
            .field("dims", &self.constant.dims())
            .field("n_terms", &self.terms.len())
            .finish()
    }
}

impl TimeDependentOperator {
    pub fn new(constant: QuantumObject) -> Self {
        Self {
            constant,
            terms: Vec::new(),
        }
    }

    /// Adds `coeff(p, t) · op`; `op` must share kind and dims with the
    /// constant part.
    pub fn with_term(
        mut self,
        op: QuantumObject,
        coeff: impl Fn(&[f64], f64) -> C64 + Send + Sync + 'static,
    ) -> Result<Self> {
        self.push_term(op, Arc::new(coeff))?;
        Ok(self)
    }

    pub fn push_term(&mut self, op: QuantumObject, coeff: CoeffFn) -> Result<()> {
        if op.kind() != self.constant.kind() {
            return Err(QsimError::KindMismatch(format!(
                "time-dependent term of kind {:?} added to {:?}",
                op.kind(),
                self.constant.kind()
            )));
        }
        if op.dims() != self.constant.dims() {
            return Err(QsimError::DimsMismatch(format!(
                "time-dependent term dims {:?} vs {:?}",
                op.dims(),
                self.constant.dims()
            )));
        }
        self.terms.push((op, coeff));
        Ok(())
    }

    pub fn constant(&self) -> &QuantumObject {
        &self.constant
    }

    pub fn terms(&self) -> &[(QuantumObject, CoeffFn)] {
        &self.terms
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn dims(&self) -> &[usize] {
        self.constant.dims()
    }

    /// Applies `f` to the constant part and to every term operator, keeping the
    /// coefficients.
    pub fn try_map(&self, f: impl Fn(&QuantumObject) -> Result<QuantumObject>) -> Result<Self> {
        Ok(Self {
            constant: f(&self.constant)?,
            terms: self
                .terms
                .iter()
                .map(|(op, c)| Ok((f(op)?, c.clone())))
                .collect::<Result<_>>()?,
        })
    }
}

impl From<QuantumObject> for TimeDependentOperator {
    fn from(q: QuantumObject) -> Self {
        Self::new(q)
    }
}

impl From<&QuantumObject> for TimeDependentOperator {
    fn from(q: &QuantumObject) -> Self {
        Self::new(q.clone())
    }
}

impl From<&TimeDependentOperator> for TimeDependentOperator {
    fn from(q: &TimeDependentOperator) -> Self {
        q.clone()
    }
}

pub(crate) fn eval_coeff(f: &CoeffFn, params: &[f64], t: f64) -> Result<C64> {
    let v = f(params, t);
    if !v.is_finite() {
        return Err(QsimError::Coefficient(format!(
            "coefficient returned {v} at t = {t}"
        )));
    }
    Ok(v)
}

/// Materializes the operator at time `t`.
pub fn evaluate_td(op: &TimeDependentOperator, params: &[f64], t: f64) -> Result<QuantumObject> {
    let one = C64::new(1.0, 0.0);
    op.terms.iter().try_fold(op.constant.clone(), |acc, (term, f)| {
        acc.lin_comb(one, term, eval_coeff(f, params, t)?)
    })
}

/// Sparse linear generator `G(t) = G₀ + Σⱼ fⱼ(p, t) Gⱼ` applied to raw state
/// vectors without allocation.
#[derive(Clone)]
pub(crate) struct LinearGenerator {
    pub constant: CscMatrix,
    pub terms: Vec<(CscMatrix, CoeffFn)>,
    pub params: Vec<f64>,
    coeffs: Vec<C64>,
}

impl LinearGenerator {
    pub fn new(constant: CscMatrix, terms: Vec<(CscMatrix, CoeffFn)>, params: &[f64]) -> Self {
        let n = terms.len();
        Self {
            constant,
            terms,
            params: params.to_vec(),
            coeffs: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Builds `scale · A(t)` from a time-dependent operator.
    pub fn from_td(op: &TimeDependentOperator, scale: C64, params: &[f64]) -> Self {
        Self::new(
            op.constant.sparse().scale(scale),
            op.terms
                .iter()
                .map(|(o, f)| (o.sparse().scale(scale), f.clone()))
                .collect(),
            params,
        )
    }

    pub fn dim(&self) -> usize {
        self.constant.nrows()
    }

    /// `dy = G(t) y`.
    pub fn apply(&mut self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        for (c, (_, f)) in self.coeffs.iter_mut().zip(&self.terms) {
            *c = eval_coeff(f, &self.params, t)?;
        }
        dy.fill(C64::new(0.0, 0.0));
        self.constant.mul_vec_acc(C64::new(1.0, 0.0), y, dy);
        for (c, (m, _)) in self.coeffs.iter().zip(&self.terms) {
            m.mul_vec_acc(*c, y, dy);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factories::{sigmax, sigmaz};

    fn spin_hamiltonian() -> TimeDependentOperator {
        TimeDependentOperator::new(sigmaz() * 0.0)
            .with_term(sigmaz(), |p: &[f64], t| C64::new((p[0] * t).cos(), 0.0))
            .unwrap()
            .with_term(sigmax(), |p: &[f64], t| C64::new((p[1] * t).sin(), 0.0))
            .unwrap()
    }

    #[test]
    fn evaluation_at_zero() {
        let h = spin_hamiltonian();
        let h0 = evaluate_td(&h, &[1.0, 2.0], 0.0).unwrap();
        assert_eq!(h0.to_dense(), sigmaz().to_dense());
        let h1 = evaluate_td(&h, &[1.0, 2.0], 0.3).unwrap();
        let manual = sigmaz() * 0.3f64.cos() + sigmax() * 0.6f64.sin();
        let diff = h1.try_sub(&manual).unwrap().frobenius_norm();
        assert!(diff < 1e-15);
    }

    #[test]
    fn constant_only() {
        let h = TimeDependentOperator::from(sigmax());
        assert_eq!(evaluate_td(&h, &[], 5.0).unwrap(), sigmax());
    }

    #[test]
    fn bad_terms_are_rejected() {
        let h = TimeDependentOperator::new(sigmax());
        let r = h.with_term(crate::factories::qeye(3).unwrap(), |_: &[f64], _| C64::new(1.0, 0.0));
        assert!(matches!(r, Err(QsimError::DimsMismatch(_))));
        let nan = TimeDependentOperator::new(sigmax())
            .with_term(sigmaz(), |_: &[f64], _| C64::new(f64::NAN, 0.0))
            .unwrap();
        assert!(matches!(evaluate_td(&nan, &[], 0.0), Err(QsimError::Coefficient(_))));
    }
}
