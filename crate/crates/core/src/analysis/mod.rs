//! Observables on states and verification tools: fidelity, codespace
//! diagnostics, exponential-rate fitting and basin analysis of the
//! classical jump chain.

mod basins;
mod fit;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, Operator, TensorSpace};

pub use basins::{
    classify_basins, correction_order_sweep, AbsorbingClass, BasinReport, ClassKind, OrderSweep, PatternFailure,
    WeightRow, ABSORPTION_TOL,
};
pub use fit::{fit_decay_rate, DecayFit};

const IMAG_TOL: f64 = 1e-12;

/// `tr(ρ_ref ρ)`.
pub fn fidelity(reference: &DensityMatrix, rho: &DensityMatrix) -> Result<f64> {
    if reference.space() != rho.space() {
        return Err(Error::SpaceMismatch);
    }
    let a = reference.matrix();
    let b = rho.matrix();
    let d = a.nrows();
    let mut tr = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            tr += a[(i, k)] * b[(k, i)];
        }
    }
    if tr.im.abs() > IMAG_TOL {
        return Err(Error::Precondition(format!("fidelity has imaginary part {:.3e}", tr.im)));
    }
    Ok(tr.re)
}

fn require_qubits(space: &TensorSpace) -> Result<()> {
    if !space.is_all_qubits() {
        return Err(Error::Precondition("space has cavity factors; trace them out first".into()));
    }
    Ok(())
}

/// `|0…0⟩⟨0…0| + |1…1⟩⟨1…1|`.
pub fn codespace_projector(space: &TensorSpace) -> Result<Operator> {
    require_qubits(space)?;
    let d = space.total_dim();
    Ok(&Operator::outer(space, 0, 0)? + &Operator::outer(space, d - 1, d - 1)?)
}

/// `1 − tr(Pρ)` for the codespace projector `P`.
pub fn distance_to_codespace(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho.space())?;
    let m = rho.matrix();
    let d = m.nrows();
    Ok(1.0 - (m[(0, 0)].re + m[(d - 1, d - 1)].re))
}

/// `|⟨0…0|ρ|1…1⟩|`.
pub fn logical_coherence(rho: &DensityMatrix) -> Result<f64> {
    require_qubits(rho.space())?;
    let d = rho.matrix().nrows();
    Ok(rho.matrix()[(0, d - 1)].norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::PureState;

    fn ket(space: &TensorSpace, amps: &[(usize, f64)]) -> DensityMatrix {
        let mut v = nalgebra::DVector::zeros(space.total_dim());
        for &(i, a) in amps {
            v[i] = Complex64::new(a, 0.0);
        }
        PureState::normalized(space, v).unwrap().to_density()
    }

    #[test]
    fn fidelity_of_pure_state_with_itself() {
        let s = TensorSpace::qubits(3);
        let r = ket(&s, &[(0, 1.0), (7, -1.0)]);
        assert!((fidelity(&r, &r).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_codewords() {
        let s = TensorSpace::qubits(3);
        assert_eq!(fidelity(&ket(&s, &[(0, 1.0)]), &ket(&s, &[(7, 1.0)])).unwrap(), 0.0);
    }

    #[test]
    fn fidelity_space_mismatch() {
        let a = ket(&TensorSpace::qubits(1), &[(0, 1.0)]);
        let b = ket(&TensorSpace::qubits(2), &[(0, 1.0)]);
        assert_eq!(fidelity(&a, &b).unwrap_err(), Error::SpaceMismatch);
    }

    #[test]
    fn codespace_distance_examples() {
        let s = TensorSpace::qubits(3);
        assert!(distance_to_codespace(&ket(&s, &[(0, 1.0), (7, 2.0)])).unwrap().abs() < 1e-15);
        assert!((distance_to_codespace(&ket(&s, &[(4, 1.0)])).unwrap() - 1.0).abs() < 1e-15);
        let p = codespace_projector(&s).unwrap();
        assert_eq!(p.nnz(), 2);
    }

    #[test]
    fn coherence_examples() {
        let s = TensorSpace::qubits(3);
        let psi0 = ket(&s, &[(0, 1.0), (7, -1.0)]);
        assert!((logical_coherence(&psi0).unwrap() - 0.5).abs() < 1e-15);
        let mut mixed = DensityMatrix::maximally_mixed(&s).into_matrix() * Complex64::new(0.0, 0.0);
        mixed[(0, 0)] = Complex64::new(0.5, 0.0);
        mixed[(7, 7)] = Complex64::new(0.5, 0.0);
        let mixed = DensityMatrix::new(&s, mixed).unwrap();
        assert_eq!(logical_coherence(&mixed).unwrap(), 0.0);
    }

    #[test]
    fn cavity_spaces_rejected() {
        let s = crate::models::three_qubit_cavity_space(2).unwrap();
        assert!(matches!(codespace_projector(&s), Err(Error::Precondition(_))));
    }
}
