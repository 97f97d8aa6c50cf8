#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use resqec::hilbert::{DensityMatrix, PureState, TensorSpace};

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

/// `M M† / tr(M M†)` for a random complex `M`.
pub fn random_density(rng: &mut impl Rng, space: &TensorSpace) -> DensityMatrix {
    let m = random_matrix(rng, space.total_dim());
    let mut rho = &m * m.adjoint();
    let tr = rho.trace();
    rho /= tr;
    let rho = (&rho + rho.adjoint()) * c(0.5);
    DensityMatrix::new(space, rho).unwrap()
}

pub fn random_pure(rng: &mut impl Rng, space: &TensorSpace) -> PureState {
    let d = space.total_dim();
    let v = DVector::from_fn(d, |_, _| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    PureState::normalized(space, v).unwrap()
}

pub fn max_abs(m: &DMatrix<Complex64>) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `(a|0…0⟩ + b|1…1⟩)` on `n` qubits, normalized.
pub fn logical(space: &TensorSpace, a: Complex64, b: Complex64) -> PureState {
    let d = space.total_dim();
    let mut v = DVector::zeros(d);
    v[0] = a;
    v[d - 1] = b;
    PureState::normalized(space, v).unwrap()
}
