use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, TensorSpace};

/// How the complex expectation `tr(Oρ)` becomes a sampled real number.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reduce {
    Real,
    Abs,
    /// `1 − Re tr(Oρ)`.
    OneMinus,
}

/// A named linear functional of the state.
#[derive(Clone, Debug)]
pub struct Observable {
    pub name: String,
    pub op: Operator,
    pub reduce: Reduce,
}

impl Observable {
    pub fn new(name: impl Into<String>, op: Operator, reduce: Reduce) -> Self {
        Self { name: name.into(), op, reduce }
    }

    pub fn expectation(name: impl Into<String>, op: Operator) -> Self {
        Self::new(name, op, Reduce::Real)
    }

    /// `tr(ρ_ref ρ)`, with `ρ_ref` given on the qubit factors of `space` and
    /// extended by identity over any cavities.
    pub fn fidelity(name: impl Into<String>, reference: &DensityMatrix, space: &TensorSpace) -> Result<Self> {
        let op = lift_to(reference.matrix(), reference.space(), space)?;
        Ok(Self::new(name, op, Reduce::Real))
    }

    /// `1 − tr(P ρ)` for the repetition-code projector on the qubits.
    pub fn codespace_distance(name: impl Into<String>, space: &TensorSpace) -> Result<Self> {
        let (qubits, p) = code_projector_dense(space)?;
        Ok(Self::new(name, lift_to(&p, &qubits, space)?, Reduce::OneMinus))
    }

    /// `|⟨0…0|ρ_q|1…1⟩|` on the qubit marginal.
    pub fn logical_coherence(name: impl Into<String>, space: &TensorSpace) -> Result<Self> {
        let qubits = qubit_space(space)?;
        let d = qubits.total_dim();
        let mut m = DMatrix::zeros(d, d);
        // tr(|1…1⟩⟨0…0| ρ) = ⟨0…0|ρ|1…1⟩
        m[(d - 1, 0)] = Complex64::new(1.0, 0.0);
        Ok(Self::new(name, lift_to(&m, &qubits, space)?, Reduce::Abs))
    }

    /// Total photon number over all cavities.
    pub fn photon_number(name: impl Into<String>, space: &TensorSpace) -> Result<Self> {
        let mut op = Operator::zero(space);
        for label in space.cavity_labels() {
            let f = space.factor(label)?;
            let n = DMatrix::from_fn(f.dim, f.dim, |i, j| {
                if i == j { Complex64::new(i as f64, 0.0) } else { Complex64::new(0.0, 0.0) }
            });
            op = &op + &Operator::embed(&n, label, space)?;
        }
        Ok(Self::new(name, op, Reduce::Real))
    }

    /// Population of a qubit basis configuration (cavities traced out).
    pub fn qubit_population(name: impl Into<String>, bits: &[usize], space: &TensorSpace) -> Result<Self> {
        let labels = space.qubit_labels();
        if bits.len() != labels.len() {
            return Err(Error::DimensionMismatch { expected: labels.len(), got: bits.len() });
        }
        let assign: Vec<(&str, usize)> = labels.into_iter().zip(bits.iter().copied()).collect();
        Ok(Self::new(name, Operator::projector(space, &assign)?, Reduce::Real))
    }

    pub fn evaluate_density(&self, rho: &DMatrix<Complex64>) -> Complex64 {
        self.op.csr().iter().map(|(i, j, v)| v * rho[(j, i)]).sum()
    }

    pub fn evaluate_pure(&self, psi: &DVector<Complex64>) -> Complex64 {
        self.op.csr().iter().map(|(i, j, v)| psi[i].conj() * v * psi[j]).sum()
    }

    pub fn finish(&self, value: Complex64) -> f64 {
        match self.reduce {
            Reduce::Real => value.re,
            Reduce::Abs => value.norm(),
            Reduce::OneMinus => 1.0 - value.re,
        }
    }
}

/// Sub-space formed by the qubit factors.
pub fn qubit_space(space: &TensorSpace) -> Result<TensorSpace> {
    let labels = space.qubit_labels();
    if labels.is_empty() {
        return Err(Error::Precondition("space has no qubits".into()));
    }
    space.subspace(&labels)
}

fn code_projector_dense(space: &TensorSpace) -> Result<(TensorSpace, DMatrix<Complex64>)> {
    let qubits = qubit_space(space)?;
    let d = qubits.total_dim();
    let mut p = DMatrix::zeros(d, d);
    p[(0, 0)] = Complex64::new(1.0, 0.0);
    p[(d - 1, d - 1)] = Complex64::new(1.0, 0.0);
    Ok((qubits, p))
}

fn lift_to(m: &DMatrix<Complex64>, sub: &TensorSpace, space: &TensorSpace) -> Result<Operator> {
    if sub == space {
        Operator::from_dense(space, m)
    } else {
        Operator::lift(m, sub, space)
    }
}

/// Sampled observables, optionally with Monte-Carlo standard errors.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub columns: Vec<(String, Vec<f64>)>,
    pub stderr: Option<Vec<Vec<f64>>>,
}

impl TimeSeries {
    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns.iter().find(|(n, _)| n == name).map(|(_, v)| v.as_slice())
    }

    pub fn stderr_column(&self, name: &str) -> Option<&[f64]> {
        let k = self.columns.iter().position(|(n, _)| n == name)?;
        self.stderr.as_ref().map(|s| s[k].as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|(n, _)| n.as_str())
    }
}
