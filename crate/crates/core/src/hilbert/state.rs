use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::TensorSpace;
use crate::error::{Error, Result};

const STATE_TOL: f64 = 1e-12;

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    space: TensorSpace,
    amps: DVector<Complex64>,
}

impl PureState {
    pub fn new(space: &TensorSpace, amps: DVector<Complex64>) -> Result<Self> {
        if amps.len() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), got: amps.len() });
        }
        let norm = amps.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidState(format!("norm {norm} differs from 1")));
        }
        Ok(Self { space: space.clone(), amps })
    }

    /// Rescales `amps` to unit norm before validating.
    pub fn normalized(space: &TensorSpace, amps: DVector<Complex64>) -> Result<Self> {
        let norm = amps.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero vector".into()));
        }
        Self::new(space, amps.unscale(norm))
    }

    pub fn basis(space: &TensorSpace, digits: &[usize]) -> Result<Self> {
        let mut amps = DVector::zeros(space.total_dim());
        amps[space.index_of(digits)?] = Complex64::new(1.0, 0.0);
        Ok(Self { space: space.clone(), amps })
    }

    pub fn basis_index(space: &TensorSpace, index: usize) -> Result<Self> {
        Self::basis(space, &space.digits(index))
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amps
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let mut factors = self.space.factors().to_vec();
        factors.extend_from_slice(other.space.factors());
        let space = TensorSpace::new(factors)?;
        let amps = self.amps.kronecker(&other.amps);
        Ok(PureState { space, amps })
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix { space: self.space.clone(), mat: &self.amps * self.amps.adjoint() }
    }
}

/// Dense density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: TensorSpace,
    mat: DMatrix<Complex64>,
}

impl DensityMatrix {
    /// Validates Hermiticity (relative Frobenius) and unit trace.
    pub fn new(space: &TensorSpace, mat: DMatrix<Complex64>) -> Result<Self> {
        let d = space.total_dim();
        if mat.nrows() != d || mat.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: mat.nrows() });
        }
        let herm = hermiticity_error(&mat);
        if herm > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (relative error {herm:.3e})")));
        }
        let tr = mat.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        Ok(Self { space: space.clone(), mat })
    }

    /// Wraps a matrix produced by propagation without re-validating.
    pub(crate) fn from_raw(space: &TensorSpace, mat: DMatrix<Complex64>) -> Self {
        Self { space: space.clone(), mat }
    }

    pub fn maximally_mixed(space: &TensorSpace) -> Self {
        let d = space.total_dim();
        Self { space: space.clone(), mat: DMatrix::identity(d, d).unscale(d as f64) }
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.mat
    }

    pub fn trace(&self) -> Complex64 {
        self.mat.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        hermiticity_error(&self.mat)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.mat + self.mat.adjoint()).unscale(2.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn population(&self, index: usize) -> f64 {
        self.mat[(index, index)].re
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> Result<DensityMatrix> {
        let mut factors = self.space.factors().to_vec();
        factors.extend_from_slice(other.space.factors());
        let space = TensorSpace::new(factors)?;
        Ok(DensityMatrix { space, mat: self.mat.kronecker(&other.mat) })
    }
}

/// `‖A − A†‖_F / max(‖A‖_F, 1)`.
pub fn hermiticity_error(m: &DMatrix<Complex64>) -> f64 {
    (m - m.adjoint()).norm() / m.norm().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_invalid_states() {
        let s = TensorSpace::qubits(1);
        let bad = DVector::from_vec(vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert!(PureState::new(&s, bad.clone()).is_err());
        assert!(PureState::normalized(&s, bad).is_ok());
        let m = DMatrix::from_row_slice(2, 2, &[
            Complex64::new(0.5, 0.0), Complex64::new(0.0, 0.3),
            Complex64::new(0.0, 0.3), Complex64::new(0.5, 0.0),
        ]);
        assert!(DensityMatrix::new(&s, m).is_err());
        let m2 = DMatrix::from_diagonal_element(2, 2, Complex64::new(0.6, 0.0));
        assert!(DensityMatrix::new(&s, m2).is_err());
    }

    #[test]
    fn pure_to_density() {
        let s = TensorSpace::qubits(2);
        let psi = PureState::basis(&s, &[1, 0]).unwrap();
        let rho = psi.to_density();
        assert_eq!(rho.population(2), 1.0);
        assert!((rho.min_eigenvalue()).abs() < 1e-14);
    }
}
