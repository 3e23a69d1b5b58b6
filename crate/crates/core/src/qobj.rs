//! The quantum-object data model.
//!
//! A [`QuantumObject`] pairs a complex matrix (dense or compressed-sparse
//! column) with a [`Kind`] tag and the list of subsystem dimensions. Kets are
//! column vectors, bras row vectors; superoperators act on column-stacked
//! vectorized operators (see [`crate::superop`]).

use std::borrow::Cow;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{QsimError, Result};
use crate::linalg::{dense, eig, CscMatrix, EigenDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind {
    Ket,
    Bra,
    Operator,
    SuperOperator,
    OperatorKet,
    OperatorBra,
}

impl Kind {
    fn adjoint(self) -> Kind {
        match self {
            Kind::Ket => Kind::Bra,
            Kind::Bra => Kind::Ket,
            Kind::OperatorKet => Kind::OperatorBra,
            Kind::OperatorBra => Kind::OperatorKet,
            k => k,
        }
    }

    /// Expected `(rows, cols)` for a Hilbert-space dimension `n`.
    fn shape_for(self, n: usize) -> (usize, usize) {
        match self {
            Kind::Ket => (n, 1),
            Kind::Bra => (1, n),
            Kind::Operator => (n, n),
            Kind::SuperOperator => (n * n, n * n),
            Kind::OperatorKet => (n * n, 1),
            Kind::OperatorBra => (1, n * n),
        }
    }
}

/// Matrix payload.
#[derive(Debug, Clone, PartialEq)]
pub enum Data {
    Dense(Array2<C64>),
    Sparse(CscMatrix),
}

impl Data {
    pub fn shape(&self) -> (usize, usize) {
        match self {
            Data::Dense(a) => a.dim(),
            Data::Sparse(s) => s.shape(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Data::Sparse(_))
    }

    pub fn to_dense(&self) -> Cow<'_, Array2<C64>> {
        match self {
            Data::Dense(a) => Cow::Borrowed(a),
            Data::Sparse(s) => Cow::Owned(s.to_dense()),
        }
    }

    pub fn to_sparse(&self) -> Cow<'_, CscMatrix> {
        match self {
            Data::Dense(a) => Cow::Owned(CscMatrix::from_dense(a)),
            Data::Sparse(s) => Cow::Borrowed(s),
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        match self {
            Data::Dense(a) => a[[r, c]],
            Data::Sparse(s) => s.get(r, c),
        }
    }

    fn adjoint(&self) -> Data {
        match self {
            Data::Dense(a) => Data::Dense(dense::adjoint(a)),
            Data::Sparse(s) => Data::Sparse(s.adjoint()),
        }
    }

    fn transpose(&self) -> Data {
        match self {
            Data::Dense(a) => Data::Dense(a.t().to_owned()),
            Data::Sparse(s) => Data::Sparse(s.transpose()),
        }
    }

    fn conj(&self) -> Data {
        match self {
            Data::Dense(a) => Data::Dense(a.mapv(|v| v.conj())),
            Data::Sparse(s) => Data::Sparse(s.conj()),
        }
    }

    fn scale(&self, alpha: C64) -> Data {
        match self {
            Data::Dense(a) => Data::Dense(a.mapv(|v| v * alpha)),
            Data::Sparse(s) => Data::Sparse(s.scale(alpha)),
        }
    }

    fn lin_comb(&self, alpha: C64, other: &Data, beta: C64) -> Data {
        match (self, other) {
            (Data::Sparse(a), Data::Sparse(b)) => Data::Sparse(a.lin_comb(alpha, b, beta)),
            _ => {
                let a = self.to_dense();
                let b = other.to_dense();
                let mut out = a.mapv(|v| v * alpha);
                out.scaled_add(beta, &*b);
                Data::Dense(out)
            }
        }
    }

    fn matmul(&self, other: &Data) -> Data {
        match (self, other) {
            (Data::Sparse(a), Data::Sparse(b)) => Data::Sparse(a.matmul(b)),
            (Data::Sparse(a), Data::Dense(b)) => Data::Dense(a.mul_dense(b)),
            (Data::Dense(a), Data::Sparse(b)) => Data::Dense(CscMatrix::dense_mul(a, b)),
            (Data::Dense(a), Data::Dense(b)) => Data::Dense(a.dot(b)),
        }
    }

    fn kron(&self, other: &Data) -> Data {
        match (self, other) {
            (Data::Sparse(a), Data::Sparse(b)) => Data::Sparse(a.kron(b)),
            _ => Data::Dense(dense::kron(&self.to_dense(), &other.to_dense())),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct QuantumObject {
    data: Data,
    kind: Kind,
    dims: Vec<usize>,
}

impl fmt::Debug for QuantumObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (r, c) = self.shape();
        writeln!(
            f,
            "QuantumObject {{ kind: {:?}, dims: {:?}, shape: {r}x{c}, sparse: {} }}",
            self.kind,
            self.dims,
            self.data.is_sparse()
        )?;
        if r * c <= 64 {
            write!(f, "{}", self.data.to_dense())?;
        }
        Ok(())
    }
}

impl QuantumObject {
    pub fn new(data: Data, kind: Kind, dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.contains(&0) {
            return Err(QsimError::InvalidDimension(format!(
                "dims must be a non-empty list of positive integers, got {dims:?}"
            )));
        }
        let n: usize = dims.iter().product();
        let (rows, cols) = data.shape();
        if kind.shape_for(n) != (rows, cols) {
            return Err(QsimError::Shape {
                kind,
                rows,
                cols,
                dims,
            });
        }
        Ok(Self { data, kind, dims })
    }

    pub fn from_dense(a: Array2<C64>, kind: Kind, dims: Vec<usize>) -> Result<Self> {
        Self::new(Data::Dense(a), kind, dims)
    }

    pub fn from_sparse(s: CscMatrix, kind: Kind, dims: Vec<usize>) -> Result<Self> {
        Self::new(Data::Sparse(s), kind, dims)
    }

    /// Dense operator with a single subsystem of size `a.nrows()`.
    pub fn operator(a: Array2<C64>) -> Result<Self> {
        let n = a.nrows();
        Self::from_dense(a, Kind::Operator, vec![n])
    }

    /// Dense ket over a single subsystem.
    pub fn ket(amplitudes: &[C64]) -> Result<Self> {
        let n = amplitudes.len();
        let a = Array2::from_shape_vec((n, 1), amplitudes.to_vec())
            .map_err(|e| QsimError::InvalidDimension(e.to_string()))?;
        Self::from_dense(a, Kind::Ket, vec![n])
    }

    pub fn kind(&self) -> Kind {
        self.kind
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &Data {
        &self.data
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.shape()
    }

    /// Product of the subsystem dimensions.
    pub fn hilbert_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_ket(&self) -> bool {
        self.kind == Kind::Ket
    }

    pub fn is_operator(&self) -> bool {
        self.kind == Kind::Operator
    }

    pub fn is_sparse(&self) -> bool {
        self.data.is_sparse()
    }

    pub fn to_dense(&self) -> Array2<C64> {
        self.data.to_dense().into_owned()
    }

    pub fn dense(&self) -> Cow<'_, Array2<C64>> {
        self.data.to_dense()
    }

    pub fn sparse(&self) -> Cow<'_, CscMatrix> {
        self.data.to_sparse()
    }

    pub fn into_dense(self) -> Self {
        match self.data {
            Data::Dense(_) => self,
            Data::Sparse(s) => Self {
                data: Data::Dense(s.to_dense()),
                ..self
            },
        }
    }

    pub fn into_sparse(self) -> Self {
        match self.data {
            Data::Sparse(_) => self,
            Data::Dense(a) => Self {
                data: Data::Sparse(CscMatrix::from_dense(&a)),
                ..self
            },
        }
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        self.data.get(r, c)
    }

    /// Ket/bra amplitudes as a flat vector.
    pub fn to_vec(&self) -> Vec<C64> {
        self.dense().iter().copied().collect()
    }

    pub fn dag(&self) -> Self {
        Self {
            data: self.data.adjoint(),
            kind: self.kind.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn trans(&self) -> Self {
        Self {
            data: self.data.transpose(),
            kind: self.kind.adjoint(),
            dims: self.dims.clone(),
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.conj(),
            kind: self.kind,
            dims: self.dims.clone(),
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            data: self.data.scale(alpha),
            kind: self.kind,
            dims: self.dims.clone(),
        }
    }

    fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self.kind != other.kind {
            return Err(QsimError::KindMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.kind, other.kind
            )));
        }
        if self.dims != other.dims {
            return Err(QsimError::DimsMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }

    /// `alpha * self + beta * other`.
    pub fn lin_comb(&self, alpha: C64, other: &Self, beta: C64) -> Result<Self> {
        self.check_same(other, "addition")?;
        Ok(Self {
            data: self.data.lin_comb(alpha, &other.data, beta),
            kind: self.kind,
            dims: self.dims.clone(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0))
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0))
    }

    /// Matrix product with kind bookkeeping (Operator·Ket → Ket, Ket·Bra →
    /// Operator, SuperOperator·OperatorKet → OperatorKet, ...).
    pub fn try_matmul(&self, other: &Self) -> Result<Self> {
        use Kind::*;
        let kind = match (self.kind, other.kind) {
            (Operator, Operator) => Operator,
            (Operator, Ket) => Ket,
            (Bra, Operator) => Bra,
            (Ket, Bra) => Operator,
            (SuperOperator, SuperOperator) => SuperOperator,
            (SuperOperator, OperatorKet) => OperatorKet,
            (OperatorBra, SuperOperator) => OperatorBra,
            (OperatorKet, OperatorBra) => SuperOperator,
            (a, b) => {
                return Err(QsimError::KindMismatch(format!(
                    "cannot multiply {a:?} by {b:?}"
                )))
            }
        };
        if self.dims != other.dims {
            return Err(QsimError::DimsMismatch(format!(
                "product: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(Self {
            data: self.data.matmul(&other.data),
            kind,
            dims: self.dims.clone(),
        })
    }

    /// Inner product `⟨self|other⟩` of two kets.
    pub fn overlap(&self, other: &Self) -> Result<C64> {
        if self.kind != Kind::Ket || other.kind != Kind::Ket {
            return Err(QsimError::KindMismatch("overlap needs two kets".into()));
        }
        if self.dims != other.dims {
            return Err(QsimError::DimsMismatch(format!(
                "overlap: {:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        let a = self.dense();
        let b = other.dense();
        Ok(a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum())
    }

    pub fn tr(&self) -> C64 {
        match &self.data {
            Data::Dense(a) => dense::trace(a),
            Data::Sparse(s) => s.trace(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.data {
            Data::Dense(a) => dense::frobenius_norm(a),
            Data::Sparse(s) => s.frobenius_norm(),
        }
    }

    /// L2 norm for kets and bras; trace norm for operators.
    pub fn norm(&self) -> f64 {
        match self.kind {
            Kind::Ket | Kind::Bra | Kind::OperatorKet | Kind::OperatorBra => self.frobenius_norm(),
            _ => self.trace_norm(),
        }
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> f64 {
        let a = self.dense();
        if dense::is_hermitian(&a, 1e-14) {
            return eig::eigvalsh(&a)
                .map(|v| v.iter().map(|x| x.abs()).sum())
                .unwrap_or(f64::NAN);
        }
        match dense::to_faer(&a).singular_values() {
            Ok(s) => s.iter().sum(),
            Err(_) => f64::NAN,
        }
    }

    /// Kets and bras are scaled to unit L2 norm, operators to unit trace.
    pub fn normalize(&self) -> Self {
        match self.kind {
            Kind::Operator => self.scale(C64::new(1.0, 0.0) / self.tr()),
            _ => self.scale(C64::new(1.0 / self.frobenius_norm(), 0.0)),
        }
    }

    /// `tr(ρ²)` of a density operator; kets are treated as pure states.
    pub fn purity(&self) -> Result<f64> {
        match self.kind {
            Kind::Ket | Kind::Bra => {
                let n = self.frobenius_norm();
                Ok(n.powi(4))
            }
            Kind::Operator => {
                let a = self.dense();
                // tr(ρρ) = Σ_ij ρ_ij ρ_ji
                let n = a.nrows();
                let mut acc = C64::new(0.0, 0.0);
                for i in 0..n {
                    for j in 0..n {
                        acc += a[[i, j]] * a[[j, i]];
                    }
                }
                Ok(acc.re)
            }
            k => Err(QsimError::KindMismatch(format!("purity of {k:?}"))),
        }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        matches!(self.kind, Kind::Operator | Kind::SuperOperator)
            && dense::is_hermitian(&self.dense(), tol)
    }

    /// Projector `|ψ⟩⟨ψ|` of a ket; operators are returned unchanged.
    pub fn to_density(&self) -> Result<Self> {
        match self.kind {
            Kind::Ket => self.try_matmul(&self.dag()),
            Kind::Operator => Ok(self.clone()),
            k => Err(QsimError::KindMismatch(format!(
                "cannot build a density matrix from {k:?}"
            ))),
        }
    }

    pub fn expm(&self) -> Result<Self> {
        match self.kind {
            Kind::Operator | Kind::SuperOperator => Ok(Self {
                data: Data::Dense(dense::expm(&self.dense())?),
                kind: self.kind,
                dims: self.dims.clone(),
            }),
            k => Err(QsimError::KindMismatch(format!("expm of {k:?}"))),
        }
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        match self.kind {
            Kind::Operator | Kind::SuperOperator => eig::eigen_dense(&self.dense()),
            k => Err(QsimError::KindMismatch(format!("eigen of {k:?}"))),
        }
    }

    pub fn eigenenergies(&self) -> Result<Vec<C64>> {
        Ok(self.eigen()?.values)
    }

    /// Expectation value `⟨ψ|op|ψ⟩` (ket) or `tr(op ρ)` (density operator).
    pub fn expect(&self, state: &Self) -> Result<C64> {
        expect(self, state)
    }

    pub fn ptrace(&self, keep: &[usize]) -> Result<Self> {
        ptrace(self, keep)
    }

    pub fn tensor(&self, other: &Self) -> Result<Self> {
        tensor(self, other)
    }
}

/// Kronecker product; dims are concatenated.
pub fn tensor(a: &QuantumObject, b: &QuantumObject) -> Result<QuantumObject> {
    use Kind::*;
    match (a.kind, b.kind) {
        (Ket, Ket) | (Bra, Bra) | (Operator, Operator) => {}
        (x, y) => {
            return Err(QsimError::KindMismatch(format!(
                "tensor of {x:?} and {y:?}"
            )))
        }
    }
    let mut dims = a.dims.clone();
    dims.extend_from_slice(&b.dims);
    Ok(QuantumObject {
        data: a.data.kron(&b.data),
        kind: a.kind,
        dims,
    })
}

/// Left-to-right tensor product of a non-empty list.
pub fn tensor_all(parts: &[QuantumObject]) -> Result<QuantumObject> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| QsimError::InvalidDimension("tensor of an empty list".into()))?;
    rest.iter().try_fold(first.clone(), |acc, p| tensor(&acc, p))
}

pub fn expect(op: &QuantumObject, state: &QuantumObject) -> Result<C64> {
    if op.kind != Kind::Operator {
        return Err(QsimError::KindMismatch(format!(
            "expectation operator must be an Operator, got {:?}",
            op.kind
        )));
    }
    if op.dims != state.dims {
        return Err(QsimError::DimsMismatch(format!(
            "expect: operator {:?} vs state {:?}",
            op.dims, state.dims
        )));
    }
    match state.kind {
        Kind::Ket => {
            let psi: Vec<C64> = state.to_vec();
            Ok(expect_ket_slice(op, &psi))
        }
        Kind::Operator => {
            let rho = state.dense();
            let n = rho.nrows();
            Ok(match &op.data {
                Data::Sparse(s) => s.iter().map(|(r, c, v)| v * rho[[c, r]]).sum(),
                Data::Dense(a) => {
                    let mut acc = C64::new(0.0, 0.0);
                    for i in 0..n {
                        for j in 0..n {
                            acc += a[[i, j]] * rho[[j, i]];
                        }
                    }
                    acc
                }
            })
        }
        k => Err(QsimError::KindMismatch(format!("expect on {k:?}"))),
    }
}

/// `⟨ψ|op|ψ⟩` for a raw amplitude slice (not normalized).
pub(crate) fn expect_ket_slice(op: &QuantumObject, psi: &[C64]) -> C64 {
    match &op.data {
        Data::Sparse(s) => s.iter().map(|(r, c, v)| psi[r].conj() * v * psi[c]).sum(),
        Data::Dense(a) => {
            let n = psi.len();
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                let mut row = C64::new(0.0, 0.0);
                for c in 0..n {
                    row += a[[r, c]] * psi[c];
                }
                acc += psi[r].conj() * row;
            }
            acc
        }
    }
}

/// `tr(op ρ)` where `ρ` is column-stacked in `vec_rho` (length n²).
pub(crate) fn expect_vec_slice(op: &QuantumObject, vec_rho: &[C64]) -> C64 {
    let n = op.hilbert_dim();
    match &op.data {
        Data::Sparse(s) => s.iter().map(|(r, c, v)| v * vec_rho[r * n + c]).sum(),
        Data::Dense(a) => {
            let mut acc = C64::new(0.0, 0.0);
            for r in 0..n {
                for c in 0..n {
                    // ρ[c, r] lives at index c + r n
                    acc += a[[r, c]] * vec_rho[c + r * n];
                }
            }
            acc
        }
    }
}

pub fn ptrace(x: &QuantumObject, keep: &[usize]) -> Result<QuantumObject> {
    let nsub = x.dims.len();
    if keep.iter().any(|&k| k >= nsub) {
        return Err(QsimError::InvalidSubsystem(format!(
            "keep {keep:?} out of range for {nsub} subsystems"
        )));
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) {
        return Err(QsimError::InvalidSubsystem(format!(
            "keep {keep:?} must be strictly increasing"
        )));
    }
    if !matches!(x.kind, Kind::Ket | Kind::Operator) {
        return Err(QsimError::KindMismatch(format!("ptrace of {:?}", x.kind)));
    }
    let traced: Vec<usize> = (0..nsub).filter(|i| !keep.contains(i)).collect();
    let kept_dims: Vec<usize> = keep.iter().map(|&i| x.dims[i]).collect();
    let kdim: usize = kept_dims.iter().product();
    let tdim: usize = traced.iter().map(|&i| x.dims[i]).product();

    // strides of each subsystem in the full (row-major over subsystems) index
    let mut strides = vec![1usize; nsub];
    for i in (0..nsub.saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * x.dims[i + 1];
    }
    let offsets = |subs: &[usize], count: usize| -> Vec<usize> {
        (0..count)
            .map(|mut idx| {
                let mut off = 0;
                for &s in subs.iter().rev() {
                    let d = x.dims[s];
                    off += (idx % d) * strides[s];
                    idx /= d;
                }
                off
            })
            .collect()
    };
    let koff = offsets(keep, kdim);
    let toff = offsets(&traced, tdim);

    let mut out = Array2::<C64>::zeros((kdim, kdim));
    match x.kind {
        Kind::Ket => {
            let psi = x.to_vec();
            for i in 0..kdim {
                for j in 0..kdim {
                    out[[i, j]] = toff
                        .iter()
                        .map(|&t| psi[koff[i] + t] * psi[koff[j] + t].conj())
                        .sum();
                }
            }
        }
        _ => {
            let rho = x.dense();
            for i in 0..kdim {
                for j in 0..kdim {
                    out[[i, j]] = toff.iter().map(|&t| rho[[koff[i] + t, koff[j] + t]]).sum();
                }
            }
        }
    }
    let dims = if kept_dims.is_empty() { vec![1] } else { kept_dims };
    QuantumObject::from_dense(out, Kind::Operator, dims)
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait<&QuantumObject> for &QuantumObject {
            type Output = QuantumObject;
            fn $method(self, rhs: &QuantumObject) -> QuantumObject {
                self.$inner(rhs).unwrap_or_else(|e| panic!("{}", e))
            }
        }
        impl $trait<QuantumObject> for QuantumObject {
            type Output = QuantumObject;
            fn $method(self, rhs: QuantumObject) -> QuantumObject {
                (&self).$method(&rhs)
            }
        }
        impl $trait<&QuantumObject> for QuantumObject {
            type Output = QuantumObject;
            fn $method(self, rhs: &QuantumObject) -> QuantumObject {
                (&self).$method(rhs)
            }
        }
        impl $trait<QuantumObject> for &QuantumObject {
            type Output = QuantumObject;
            fn $method(self, rhs: QuantumObject) -> QuantumObject {
                self.$method(&rhs)
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_matmul);

macro_rules! scalar_mul {
    ($scalar:ty, $conv:expr) => {
        impl Mul<&QuantumObject> for $scalar {
            type Output = QuantumObject;
            fn mul(self, rhs: &QuantumObject) -> QuantumObject {
                rhs.scale($conv(self))
            }
        }
        impl Mul<QuantumObject> for $scalar {
            type Output = QuantumObject;
            fn mul(self, rhs: QuantumObject) -> QuantumObject {
                rhs.scale($conv(self))
            }
        }
        impl Mul<$scalar> for &QuantumObject {
            type Output = QuantumObject;
            fn mul(self, rhs: $scalar) -> QuantumObject {
                self.scale($conv(rhs))
            }
        }
        impl Mul<$scalar> for QuantumObject {
            type Output = QuantumObject;
            fn mul(self, rhs: $scalar) -> QuantumObject {
                self.scale($conv(rhs))
            }
        }
    };
}

scalar_mul!(f64, |x: f64| C64::new(x, 0.0));
scalar_mul!(C64, |x: C64| x);

impl Neg for &QuantumObject {
    type Output = QuantumObject;
    fn neg(self) -> QuantumObject {
        self.scale(C64::new(-1.0, 0.0))
    }
}

impl Neg for QuantumObject {
    type Output = QuantumObject;
    fn neg(self) -> QuantumObject {
        self.scale(C64::new(-1.0, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factories::*;

    #[test]
    fn invariants_are_enforced() {
        let a = Array2::<C64>::zeros((3, 1));
        assert!(QuantumObject::from_dense(a.clone(), Kind::Ket, vec![3]).is_ok());
        assert!(matches!(
            QuantumObject::from_dense(a.clone(), Kind::Ket, vec![2]),
            Err(QsimError::Shape { .. })
        ));
        assert!(QuantumObject::from_dense(a.clone(), Kind::Ket, vec![]).is_err());
        let s = Array2::<C64>::zeros((4, 4));
        assert!(QuantumObject::from_dense(s.clone(), Kind::SuperOperator, vec![2]).is_ok());
        assert!(QuantumObject::from_dense(s, Kind::Operator, vec![2, 2]).is_ok());
    }

    #[test]
    fn tensor_of_identities() {
        let t = tensor(&qeye(2).unwrap(), &qeye(3).unwrap()).unwrap();
        assert_eq!(t.dims(), &[2, 3]);
        assert_eq!(t.to_dense(), dense::identity(6));
    }

    #[test]
    fn tensor_of_basis_kets() {
        let t = tensor(&fock(2, 0).unwrap(), &fock(2, 1).unwrap()).unwrap();
        assert_eq!(t.dims(), &[2, 2]);
        let v = t.to_vec();
        assert_eq!(v[1], C64::new(1.0, 0.0));
        assert_eq!(v.iter().filter(|z| z.norm() > 0.0).count(), 1);
    }

    #[test]
    fn tensor_rejects_mixed_kinds() {
        let err = tensor(&fock(2, 0).unwrap(), &qeye(2).unwrap()).unwrap_err();
        assert!(matches!(err, QsimError::KindMismatch(_)));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let s = 1.0 / 2f64.sqrt();
        let bell = (tensor(&fock(2, 0).unwrap(), &fock(2, 0).unwrap()).unwrap()
            + tensor(&fock(2, 1).unwrap(), &fock(2, 1).unwrap()).unwrap())
            * s;
        let proj = bell.to_density().unwrap();
        let r = ptrace(&proj, &[0]).unwrap();
        let expected = dense::identity(2).mapv(|v| v * 0.5);
        for (a, b) in r.to_dense().iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
        // kets are promoted to projectors
        let rk = ptrace(&bell, &[1]).unwrap();
        for (a, b) in rk.to_dense().iter().zip(expected.iter()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn ptrace_rejects_bad_indices() {
        let x = tensor(&qeye(2).unwrap(), &qeye(2).unwrap()).unwrap();
        assert!(matches!(ptrace(&x, &[2]), Err(QsimError::InvalidSubsystem(_))));
        assert!(matches!(ptrace(&x, &[1, 1]), Err(QsimError::InvalidSubsystem(_))));
        assert!(matches!(ptrace(&x, &[1, 0]), Err(QsimError::InvalidSubsystem(_))));
    }

    #[test]
    fn dag_of_destroy_is_create() {
        assert_eq!(
            destroy(5).unwrap().dag().to_dense(),
            create(5).unwrap().to_dense()
        );
        let k = fock(3, 1).unwrap();
        assert_eq!(k.dag().kind(), Kind::Bra);
        assert_eq!(k.dag().dag(), k);
    }

    #[test]
    fn number_operator_from_ladder() {
        let a = destroy(4).unwrap();
        let n = &a.dag() * &a;
        for i in 0..4 {
            assert!((n.get(i, i) - C64::new(i as f64, 0.0)).norm() < 1e-14);
        }
        let sx = sigmax();
        assert_eq!(&sx + &sx, 2.0 * &sx);
    }

    #[test]
    fn expect_number_state() {
        let v = expect(&num(10).unwrap(), &fock(10, 3).unwrap()).unwrap();
        assert_eq!(v, C64::new(3.0, 0.0));
        let dm = fock_dm(10, 3).unwrap();
        assert_eq!(expect(&num(10).unwrap(), &dm).unwrap(), C64::new(3.0, 0.0));
        assert!(matches!(
            expect(&num(4).unwrap(), &dm),
            Err(QsimError::DimsMismatch(_))
        ));
    }

    #[test]
    fn expm_inverse_pair() {
        let gen = sigmax().scale(C64::new(0.0, std::f64::consts::PI / 2.0));
        let u = gen.expm().unwrap();
        let v = (-&gen).expm().unwrap();
        let p = &u * &v;
        let err = dense::frobenius_norm(&(p.to_dense() - dense::identity(2)));
        assert!(err < 1e-12);
        assert!(matches!(
            fock(2, 0).unwrap().expm(),
            Err(QsimError::KindMismatch(_))
        ));
    }

    #[test]
    fn eigen_and_purity() {
        let e = sigmaz().eigen().unwrap();
        assert_eq!(e.values[0], C64::new(-1.0, 0.0));
        assert_eq!(e.values[1], C64::new(1.0, 0.0));
        assert!((fock_dm(5, 2).unwrap().purity().unwrap() - 1.0).abs() < 1e-15);
        assert!((maximally_mixed_dm(4).unwrap().purity().unwrap() - 0.25).abs() < 1e-15);
        assert!(matches!(
            fock(3, 0).unwrap().eigen(),
            Err(QsimError::KindMismatch(_))
        ));
    }

    #[test]
    fn matmul_kind_rules() {
        let op = sigmax();
        let k = fock(2, 0).unwrap();
        assert_eq!((&op * &k).kind(), Kind::Ket);
        assert_eq!((&k * &k.dag()).kind(), Kind::Operator);
        assert!(k.try_matmul(&op).is_err());
        assert!(op.try_matmul(&qeye(3).unwrap()).is_err());
    }

    #[test]
    fn trace_norm_of_density_is_one() {
        let r = rand_dm(5, 3).unwrap();
        assert!((r.norm() - 1.0).abs() < 1e-12);
        assert!((fock(4, 1).unwrap().norm() - 1.0).abs() < 1e-15);
    }
}
