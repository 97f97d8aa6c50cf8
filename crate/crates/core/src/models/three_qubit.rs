use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{gamma_c, ChannelKind, LindbladModel, Params, Profile, Scheme, Tier};
use crate::error::{Error, Result};
use crate::hilbert::{annihilator, pauli, Factor, Operator, Pauli, TensorSpace};

const QUBITS: [&str; 3] = ["q1", "q2", "q3"];
const CAVITIES: [&str; 3] = ["a1", "a2", "a3"];

fn proj(value: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(2, 2);
    m[(value, value)] = Complex64::new(1.0, 0.0);
    m
}

/// Majority-restoring flip of `target`:
/// `σ^−_target Π_{others=00} + σ^+_target Π_{others=11}`.
pub fn correction_operator(space: &TensorSpace, target: &str, others: [&str; 2]) -> Result<Operator> {
    let (sm, sp, p0, p1) = (pauli(Pauli::Minus), pauli(Pauli::Plus), proj(0), proj(1));
    let down = Operator::embed_many(&[(&sm, target), (&p0, others[0]), (&p0, others[1])], space)?;
    let up = Operator::embed_many(&[(&sp, target), (&p1, others[0]), (&p1, others[1])], space)?;
    Ok(&down + &up)
}

/// The same operators written as sums of basis outer products on three qubits,
/// e.g. `c_1 = |000⟩⟨100| + |111⟩⟨011|`.
pub fn correction_operator_outer_form(target: usize) -> Result<Operator> {
    let space = TensorSpace::qubits(3);
    let bit = 1usize << (2 - target);
    let zero = 0usize;
    let all = 0b111usize;
    let a = Operator::outer(&space, zero, zero | bit)?;
    let b = Operator::outer(&space, all, all & !bit)?;
    Ok(&a + &b)
}

fn bit_flips(model: &mut LindbladModel, labels: &[&str], gamma: f64) -> Result<()> {
    let x = pauli(Pauli::X);
    for l in labels {
        let op = Operator::embed(&x, l, model.space())?;
        model.add_channel(format!("flip_{l}"), ChannelKind::BitFlip, gamma, op, Profile::Constant)?;
    }
    Ok(())
}

fn others(k: usize) -> [&'static str; 2] {
    match k {
        0 => [QUBITS[1], QUBITS[2]],
        1 => [QUBITS[0], QUBITS[2]],
        _ => [QUBITS[0], QUBITS[1]],
    }
}

/// Three qubits followed by three cavities of dimension `cavity_dim`.
pub fn three_qubit_cavity_space(cavity_dim: usize) -> Result<TensorSpace> {
    let mut f: Vec<_> = QUBITS.iter().map(|l| Factor::qubit(*l)).collect();
    f.extend(CAVITIES.iter().map(|l| Factor::cavity(*l, cavity_dim)));
    TensorSpace::new(f)
}

/// Qubit-only model with three correction dissipators at rate `Ω_p²/κ`.
pub fn build_effective_3q(params: &Params) -> Result<LindbladModel> {
    params.validate()?;
    let rate = gamma_c(params)?;
    let space = TensorSpace::qubits(3);
    let mut m = LindbladModel::new(space.clone(), Tier::Effective, Scheme::Effective3q);
    for (k, q) in QUBITS.iter().enumerate() {
        let c = correction_operator(&space, q, others(k))?;
        m.add_channel(format!("c{}", k + 1), ChannelKind::Correction, rate, c, Profile::Constant)?;
    }
    bit_flips(&mut m, &QUBITS, params.gamma)?;
    Ok(m)
}

/// Qubits and cavities after the second rotating-wave approximation, before
/// eliminating the cavities: `H = (Ω_p/2) Σ_i (a_i† c_i + a_i c_i†)`.
pub fn build_tier_b_3q(params: &Params) -> Result<LindbladModel> {
    params.validate()?;
    let space = three_qubit_cavity_space(params.cavity_dim)?;
    let mut m = LindbladModel::new(space.clone(), Tier::PreElimination, Scheme::TierB3q);
    let a = annihilator(params.cavity_dim);
    let mut h = Operator::zero(&space);
    for (k, q) in QUBITS.iter().enumerate() {
        let c = correction_operator(&space, q, others(k))?;
        let ak = Operator::embed(&a, CAVITIES[k], &space)?;
        let term = &ak.adjoint() * &c;
        h = &h + &(&term + &term.adjoint()).scale(params.omega_p / 2.0);
    }
    m.add_hamiltonian(h, Profile::Constant)?;
    for (k, l) in CAVITIES.iter().enumerate() {
        let ak = Operator::embed(&a, l, &space)?;
        m.add_channel(format!("decay_a{}", k + 1), ChannelKind::CavityDecay, params.kappa, ak, Profile::Constant)?;
    }
    bit_flips(&mut m, &QUBITS, params.gamma)?;
    Ok(m)
}

/// Qubits and cavities after the first rotating-wave approximation, in the
/// dispersive frame:
/// `H = Σ_k a_k†a_k Σ_j χ_kj σ^z_j / 2 + (Ω_p/2) Σ_k (a_k† σ^x_k + a_k σ^x_k)`.
///
/// With `χ_k = (χ, −χ/2, −χ/2)` a flip of qubit `k` is resonant only when it
/// lands on a codeword; every other flip is detuned by at least `|χ|/2`.
pub fn build_tier_c_3q(params: &Params) -> Result<LindbladModel> {
    params.validate()?;
    let space = three_qubit_cavity_space(params.cavity_dim)?;
    let mut m = LindbladModel::new(space.clone(), Tier::Dispersive, Scheme::TierC3q);
    let a = annihilator(params.cavity_dim);
    let n = a.adjoint() * &a;
    let (z, x) = (pauli(Pauli::Z), pauli(Pauli::X));
    let chi = params.chi_triple();
    let mut h = Operator::zero(&space);
    for (k, cav) in CAVITIES.iter().enumerate() {
        for (j, q) in QUBITS.iter().enumerate() {
            let term = Operator::embed_many(&[(&n, cav), (&z, q)], &space)?;
            h = &h + &term.scale(chi[j] / 2.0);
        }
        let ak = Operator::embed(&a, cav, &space)?;
        let xk = Operator::embed(&x, QUBITS[k], &space)?;
        let conv = &ak.adjoint() * &xk;
        h = &h + &(&conv + &conv.adjoint()).scale(params.omega_p / 2.0);
    }
    m.add_hamiltonian(h, Profile::Constant)?;
    for (k, l) in CAVITIES.iter().enumerate() {
        let ak = Operator::embed(&a, l, &space)?;
        m.add_channel(format!("decay_a{}", k + 1), ChannelKind::CavityDecay, params.kappa, ak, Profile::Constant)?;
    }
    bit_flips(&mut m, &QUBITS, params.gamma)?;
    Ok(m)
}

/// One correction channel on qubit 1 plus nearest-neighbour exchange
/// `H = (J/2)[(σ^+_1σ^−_2 + σ^+_2σ^−_3) + h.c.]` that carries errors to it.
pub fn build_single_cavity_3q(params: &Params) -> Result<LindbladModel> {
    params.validate()?;
    let j = params.j_circ();
    let rate = gamma_c(params)?;
    let space = TensorSpace::qubits(3);
    let mut m = LindbladModel::new(space.clone(), Tier::Effective, Scheme::SingleCavity3q);
    let (sp, sm) = (pauli(Pauli::Plus), pauli(Pauli::Minus));
    let mut h = Operator::zero(&space);
    for pair in [("q1", "q2"), ("q2", "q3")] {
        let hop = Operator::embed_many(&[(&sp, pair.0), (&sm, pair.1)], &space)?;
        h = &h + &(&hop + &hop.adjoint()).scale(j / 2.0);
    }
    m.add_hamiltonian(h, Profile::Constant)?;
    let c1 = correction_operator(&space, "q1", others(0))?;
    m.add_channel("c1", ChannelKind::Correction, rate, c1, Profile::Constant)?;
    bit_flips(&mut m, &QUBITS, params.gamma)?;
    Ok(m)
}

/// A single qubit under bit-flip noise only.
pub fn build_unprotected_qubit(params: &Params) -> Result<LindbladModel> {
    if !(params.gamma >= 0.0) {
        return Err(Error::InvalidParameter("gamma must be ≥ 0".into()));
    }
    let space = TensorSpace::qubits(1);
    let mut m = LindbladModel::new(space, Tier::Bare, Scheme::UnprotectedQubit);
    bit_flips(&mut m, &["q1"], params.gamma)?;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn ket(space: &TensorSpace, bits: &[usize]) -> DVector<Complex64> {
        let mut v = DVector::zeros(space.total_dim());
        v[space.index_of(bits).unwrap()] = Complex64::new(1.0, 0.0);
        v
    }

    #[test]
    fn c1_restores_majority() {
        let m = build_effective_3q(&Params::default()).unwrap();
        let s = m.space().clone();
        let c1 = &m.channels()[0].jump;
        assert_eq!(c1.apply_vec(&ket(&s, &[1, 0, 0])), ket(&s, &[0, 0, 0]));
        assert_eq!(c1.apply_vec(&ket(&s, &[0, 1, 1])), ket(&s, &[1, 1, 1]));
        assert_eq!(c1.apply_vec(&ket(&s, &[0, 1, 0])), DVector::zeros(8));
    }

    #[test]
    fn projector_and_outer_forms_agree() {
        let s = TensorSpace::qubits(3);
        for (k, q) in QUBITS.iter().enumerate() {
            let a = correction_operator(&s, q, others(k)).unwrap();
            let b = correction_operator_outer_form(k).unwrap();
            assert_eq!(a.max_abs_diff(&b), 0.0, "c{}", k + 1);
        }
        // c_2 = |000⟩⟨010| + |111⟩⟨101|
        let c2 = correction_operator(&s, "q2", others(1)).unwrap();
        assert_eq!(c2.apply_vec(&ket(&s, &[1, 0, 1])), ket(&s, &[1, 1, 1]));
    }

    #[test]
    fn effective_rates() {
        let m = build_effective_3q(&Params::default()).unwrap();
        assert_eq!(m.space().total_dim(), 8);
        assert!(!m.has_hamiltonian());
        let corr: Vec<_> = m.channels().iter().filter(|c| c.kind == ChannelKind::Correction).collect();
        assert_eq!(corr.len(), 3);
        assert!(corr.iter().all(|c| c.rate == 20.0));
    }

    #[test]
    fn tier_c_resonances() {
        // Dispersive shift of a photon in cavity 1 after the flip, i.e. the
        // energy of the final qubit configuration.
        let chi = Params::default().chi_triple();
        let shift = |z: [f64; 3]| (0..3).map(|j| chi[j] * z[j]).sum::<f64>() / 2.0;
        // wanted: (1,0,0) → (0,0,0)
        assert_eq!(shift([1.0, 1.0, 1.0]), 0.0);
        // unwanted: (1,1,1) → (0,1,1)
        assert_eq!(shift([1.0, -1.0, -1.0]), chi[0]);
        // all non-codeword finals are detuned by at least |χ|/2
        for bits in 1..7u32 {
            let z: Vec<f64> = (0..3).map(|j| if bits >> (2 - j) & 1 == 0 { 1.0 } else { -1.0 }).collect();
            assert!(shift([z[0], z[1], z[2]]).abs() >= chi[0].abs() / 2.0);
        }
    }

    #[test]
    fn tier_b_and_c_shapes() {
        let b = build_tier_b_3q(&Params::default()).unwrap();
        assert_eq!(b.space().total_dim(), 64);
        assert_eq!(b.channels().len(), 6);
        let c = build_tier_c_3q(&Params::default()).unwrap();
        assert!(c.hamiltonian()[0].op.is_hermitian(1e-12));
    }

    #[test]
    fn circulation_annihilates_codewords() {
        let m = build_single_cavity_3q(&Params::default()).unwrap();
        let s = m.space().clone();
        let h = &m.hamiltonian()[0].op;
        assert_eq!(h.apply_vec(&ket(&s, &[0, 0, 0])), DVector::zeros(8));
        assert_eq!(h.apply_vec(&ket(&s, &[1, 1, 1])), DVector::zeros(8));
        let moved = h.apply_vec(&ket(&s, &[0, 1, 0]));
        assert!(moved[s.index_of(&[1, 0, 0]).unwrap()].norm() > 0.0);
    }
}
