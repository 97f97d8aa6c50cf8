//! Tensor-product operator algebra over qubit and truncated-cavity factors.
//!
//! Basis convention, fixed throughout the crate:
//! - each factor has basis `|0⟩, |1⟩, …` with `|0⟩` first;
//! - `σ^z|0⟩ = +|0⟩`, `σ^z|1⟩ = −|1⟩`, `σ^− = |0⟩⟨1|`, `σ^+ = |1⟩⟨0|`;
//! - composite indices are row-major with the first factor most significant,
//!   so for three qubits `|q1 q2 q3⟩` has index `4·q1 + 2·q2 + q3`.

mod operator;
pub mod sparse;
mod state;
mod superop;

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub use operator::Operator;
pub use sparse::CsrMatrix;
pub use state::{hermiticity_error, DensityMatrix, PureState};
pub use superop::{apply_dissipator, partial_trace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FactorKind {
    Qubit,
    Cavity,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
    pub kind: FactorKind,
}

impl Factor {
    pub fn qubit(label: impl Into<String>) -> Self {
        Self { label: label.into(), dim: 2, kind: FactorKind::Qubit }
    }

    pub fn cavity(label: impl Into<String>, dim: usize) -> Self {
        Self { label: label.into(), dim, kind: FactorKind::Cavity }
    }
}

#[derive(Debug, PartialEq, Eq, Hash)]
struct SpaceInner {
    factors: Vec<Factor>,
    total_dim: usize,
}

/// Ordered list of factors. Cheap to clone; compares by content.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TensorSpace(Arc<SpaceInner>);

impl fmt::Debug for TensorSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<_> = self.0.factors.iter().map(|x| format!("{}:{}", x.label, x.dim)).collect();
        write!(f, "TensorSpace[{}]", labels.join(" ⊗ "))
    }
}

impl TensorSpace {
    pub fn new(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParameter("a tensor space needs at least one factor".into()));
        }
        let mut seen = HashSet::new();
        for f in &factors {
            if f.dim < 2 {
                return Err(Error::FactorTooSmall { label: f.label.clone(), dim: f.dim });
            }
            if !seen.insert(f.label.as_str()) {
                return Err(Error::DuplicateLabel(f.label.clone()));
            }
        }
        let total_dim = factors.iter().map(|f| f.dim).product();
        Ok(Self(Arc::new(SpaceInner { factors, total_dim })))
    }

    /// `n` qubits labelled `q1 … qn`.
    pub fn qubits(n: usize) -> Self {
        Self::new((1..=n).map(|i| Factor::qubit(format!("q{i}"))).collect())
            .expect("qubit labels are unique")
    }

    pub fn factors(&self) -> &[Factor] {
        &self.0.factors
    }

    pub fn total_dim(&self) -> usize {
        self.0.total_dim
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.0
            .factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    pub fn factor(&self, label: &str) -> Result<&Factor> {
        Ok(&self.0.factors[self.position(label)?])
    }

    /// Product of the dimensions of factors after position `pos`.
    pub fn stride(&self, pos: usize) -> usize {
        self.0.factors[pos + 1..].iter().map(|f| f.dim).product()
    }

    /// Per-factor digits of a composite index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.0.factors.len()];
        for (k, f) in self.0.factors.iter().enumerate().rev() {
            out[k] = index % f.dim;
            index /= f.dim;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> Result<usize> {
        if digits.len() != self.0.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.0.factors.len(), got: digits.len() });
        }
        let mut idx = 0;
        for (f, &d) in self.0.factors.iter().zip(digits) {
            if d >= f.dim {
                return Err(Error::BasisValueOutOfRange { label: f.label.clone(), value: d, dim: f.dim });
            }
            idx = idx * f.dim + d;
        }
        Ok(idx)
    }

    pub fn qubit_labels(&self) -> Vec<&str> {
        self.labels_of(FactorKind::Qubit)
    }

    pub fn cavity_labels(&self) -> Vec<&str> {
        self.labels_of(FactorKind::Cavity)
    }

    fn labels_of(&self, kind: FactorKind) -> Vec<&str> {
        self.0.factors.iter().filter(|f| f.kind == kind).map(|f| f.label.as_str()).collect()
    }

    pub fn is_all_qubits(&self) -> bool {
        self.0.factors.iter().all(|f| f.kind == FactorKind::Qubit)
    }

    /// Sub-space made of the listed factors, in this space's order.
    pub fn subspace(&self, labels: &[&str]) -> Result<Self> {
        for l in labels {
            self.position(l)?;
        }
        Self::new(self.0.factors.iter().filter(|f| labels.contains(&f.label.as_str())).cloned().collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Z,
    Plus,
    Minus,
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Single-qubit Pauli and ladder matrices.
pub fn pauli(kind: Pauli) -> DMatrix<Complex64> {
    let (a, b, cc, d) = match kind {
        Pauli::X => (0.0, 1.0, 1.0, 0.0),
        Pauli::Z => (1.0, 0.0, 0.0, -1.0),
        // σ^+ = |1⟩⟨0|
        Pauli::Plus => (0.0, 0.0, 1.0, 0.0),
        // σ^− = |0⟩⟨1|
        Pauli::Minus => (0.0, 1.0, 0.0, 0.0),
    };
    DMatrix::from_row_slice(2, 2, &[c(a), c(b), c(cc), c(d)])
}

/// Truncated bosonic annihilation operator, `a|n⟩ = √n |n−1⟩`.
pub fn annihilator(dim: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = c((n as f64).sqrt());
    }
    m
}

/// Bit string such as `"100"` → basis digits, most significant first.
pub fn parse_bits(bits: &str) -> Result<Vec<usize>> {
    bits.chars()
        .filter(|ch| !ch.is_whitespace() && *ch != '_')
        .map(|ch| match ch {
            '0' => Ok(0),
            '1' => Ok(1),
            other => Err(Error::InvalidState(format!("`{other}` is not a bit"))),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_space_dims() {
        assert_eq!(TensorSpace::qubits(3).total_dim(), 8);
        assert_eq!(TensorSpace::qubits(9).total_dim(), 512);
        let mut f: Vec<_> = (1..=3).map(|i| Factor::qubit(format!("q{i}"))).collect();
        f.extend((1..=3).map(|i| Factor::cavity(format!("a{i}"), 2)));
        assert_eq!(TensorSpace::new(f).unwrap().total_dim(), 64);
    }

    #[test]
    fn make_space_rejects_bad_factors() {
        let dup = TensorSpace::new(vec![Factor::qubit("q"), Factor::qubit("q")]);
        assert_eq!(dup.unwrap_err(), Error::DuplicateLabel("q".into()));
        let small = TensorSpace::new(vec![Factor::cavity("a", 1)]);
        assert!(matches!(small, Err(Error::FactorTooSmall { .. })));
    }

    #[test]
    fn index_convention_is_row_major() {
        let s = TensorSpace::qubits(3);
        assert_eq!(s.index_of(&[1, 0, 0]).unwrap(), 4);
        assert_eq!(s.digits(3), vec![0, 1, 1]);
        assert_eq!(s.stride(0), 4);
    }

    #[test]
    fn ladder_matrices() {
        let plus = pauli(Pauli::Plus);
        let ket0 = nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]);
        assert_eq!(&plus * &ket0, nalgebra::DVector::from_vec(vec![c(0.0), c(1.0)]));
        assert_eq!(pauli(Pauli::Minus) * &ket0, nalgebra::DVector::zeros(2));
        let a = annihilator(2);
        let n = a.adjoint() * &a;
        assert_eq!(n, DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.0), c(1.0)])));
    }
}
