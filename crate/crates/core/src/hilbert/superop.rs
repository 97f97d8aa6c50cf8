use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{DensityMatrix, Operator};
use crate::error::{Error, Result};

/// `D_X(ρ) = XρX† − (X†Xρ + ρX†X)/2`.
pub fn apply_dissipator(x: &Operator, rho: &DensityMatrix) -> Result<DMatrix<Complex64>> {
    if x.space() != rho.space() {
        return Err(Error::SpaceMismatch);
    }
    let one = Complex64::new(1.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    let r = rho.matrix();
    let d = r.nrows();
    let xdx = (&x.adjoint() * x).csr().clone();

    let mut xr = DMatrix::zeros(d, d);
    x.csr().mul_dense_acc(one, r, &mut xr);
    let mut out = DMatrix::zeros(d, d);
    x.csr().dense_mul_adjoint_acc(one, &xr, &mut out);
    // X†X is Hermitian, so ρ X†X = ρ (X†X)†.
    xdx.mul_dense_acc(-half, r, &mut out);
    xdx.dense_mul_adjoint_acc(-half, r, &mut out);
    Ok(out)
}

/// Reduced state on `keep` (order follows the parent space).
pub fn partial_trace(rho: &DensityMatrix, keep: &[&str]) -> Result<DensityMatrix> {
    if keep.is_empty() {
        return Err(Error::InvalidParameter("keep list must be nonempty".into()));
    }
    let space = rho.space();
    let kept = space.subspace(keep)?;
    let keep_mask: Vec<bool> = space
        .factors()
        .iter()
        .map(|f| keep.contains(&f.label.as_str()))
        .collect();
    let d = space.total_dim();
    let dk = kept.total_dim();
    let mut out = DMatrix::zeros(dk, dk);
    let split = |idx: usize| -> (usize, usize) {
        let digits = space.digits(idx);
        let (mut k, mut t) = (0usize, 0usize);
        for ((f, &dig), &m) in space.factors().iter().zip(&digits).zip(&keep_mask) {
            if m {
                k = k * f.dim + dig;
            } else {
                t = t * f.dim + dig;
            }
        }
        (k, t)
    };
    let parts: Vec<(usize, usize)> = (0..d).map(split).collect();
    let m = rho.matrix();
    for (i, &(ki, ti)) in parts.iter().enumerate() {
        for (j, &(kj, tj)) in parts.iter().enumerate() {
            if ti == tj {
                out[(ki, kj)] += m[(i, j)];
            }
        }
    }
    Ok(DensityMatrix::from_raw(&kept, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{pauli, Pauli, PureState, TensorSpace};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn decay_of_excited_state() {
        let s = TensorSpace::qubits(1);
        let sm = Operator::embed(&pauli(Pauli::Minus), "q1", &s).unwrap();
        let rho = PureState::basis(&s, &[1]).unwrap().to_density();
        let d = apply_dissipator(&sm, &rho).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(-1.0)]);
        assert!((d - expect).norm() < 1e-15);
    }

    #[test]
    fn bit_flip_fixes_maximally_mixed() {
        let s = TensorSpace::qubits(1);
        let x = Operator::embed(&pauli(Pauli::X), "q1", &s).unwrap();
        let d = apply_dissipator(&x, &DensityMatrix::maximally_mixed(&s)).unwrap();
        assert!(d.norm() < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = TensorSpace::qubits(2);
        let mut amps = nalgebra::DVector::zeros(4);
        amps[0] = c(1.0);
        amps[3] = c(1.0);
        let bell = PureState::normalized(&s, amps).unwrap().to_density();
        let red = partial_trace(&bell, &["q2"]).unwrap();
        assert!((red.matrix() - DMatrix::identity(2, 2).unscale(2.0)).norm() < 1e-15);
        assert!(matches!(partial_trace(&bell, &["zz"]), Err(Error::UnknownLabel(_))));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = PureState::normalized(
            &TensorSpace::qubits(1),
            nalgebra::DVector::from_vec(vec![c(0.6), Complex64::new(0.0, 0.8)]),
        )
        .unwrap()
        .to_density();
        let b = DensityMatrix::maximally_mixed(&TensorSpace::new(vec![crate::hilbert::Factor::cavity("a1", 3)]).unwrap());
        let ab = a.tensor(&b).unwrap();
        let red = partial_trace(&ab, &["q1"]).unwrap();
        assert!((red.matrix() - a.matrix()).norm() < 1e-15);
        assert!((red.trace() - c(1.0)).norm() < 1e-15);
    }
}
