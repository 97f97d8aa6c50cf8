//! Nine-qubit star: three outer 3-qubit blocks, each sharing its first qubit
//! with a central block.
//!
//! Qubit `(i, j)` of outer block `i ∈ {1,2,3}` is labelled `q{i}{j}` and sits
//! at global position `3(i−1)+j` (1-based). Qubit `j` of the central block is
//! the shared qubit `(j, 1)`.

use super::{three_qubit::correction_operator, ChannelKind, LindbladModel, Params, Profile, Scheme, Tier};
use crate::error::Result;
use crate::hilbert::{pauli, Factor, Operator, Pauli, TensorSpace};

pub fn star_label(block: usize, qubit: usize) -> String {
    format!("q{block}{qubit}")
}

pub fn star_space() -> TensorSpace {
    let factors = (1..=3)
        .flat_map(|i| (1..=3).map(move |j| Factor::qubit(star_label(i, j))))
        .collect();
    TensorSpace::new(factors).expect("star labels are unique")
}

fn block_members(block: usize) -> [String; 3] {
    if block == 4 {
        [star_label(1, 1), star_label(2, 1), star_label(3, 1)]
    } else {
        [star_label(block, 1), star_label(block, 2), star_label(block, 3)]
    }
}

fn add_corrections(
    model: &mut LindbladModel,
    block: usize,
    rate: f64,
    profile: Profile,
) -> Result<()> {
    let members = block_members(block);
    let space = model.space().clone();
    for j in 0..3 {
        let others: Vec<&str> = (0..3).filter(|&k| k != j).map(|k| members[k].as_str()).collect();
        let c = correction_operator(&space, &members[j], [others[0], others[1]])?;
        model.add_channel(format!("c{}{}", block, j + 1), ChannelKind::Correction, rate, c, profile)?;
    }
    Ok(())
}

fn build_star(params: &Params, outer: Profile, central: Profile, scheme: Scheme) -> Result<LindbladModel> {
    params.validate()?;
    let space = star_space();
    let mut m = LindbladModel::new(space.clone(), Tier::Effective, scheme);
    let g_out = params.gamma_c_outer()?;
    let g_cen = params.gamma_c_central()?;
    for block in 1..=3 {
        add_corrections(&mut m, block, g_out, outer)?;
    }
    add_corrections(&mut m, 4, g_cen, central)?;
    let x = pauli(Pauli::X);
    for f in space.factors() {
        let op = Operator::embed(&x, &f.label, &space)?;
        m.add_channel(format!("flip_{}", f.label), ChannelKind::BitFlip, params.gamma, op, Profile::Constant)?;
    }
    Ok(m)
}

/// Effective star model: twelve correction dissipators and nine bit flips.
pub fn build_star_effective(params: &Params) -> Result<LindbladModel> {
    build_star(params, Profile::Constant, Profile::Constant, Scheme::StarEffective)
}

/// Star with outer blocks active on `[2kT, (2k+1)T)` and the central block on
/// `[(2k+1)T, (2k+2)T)`; bit flips are always on.
pub fn build_star_multiplexed(params: &Params) -> Result<LindbladModel> {
    params.validate()?;
    let t = params.switch_period()?;
    let outer = Profile::Periodic { period: 2.0 * t, on_start: 0.0, on_end: t };
    let central = Profile::Periodic { period: 2.0 * t, on_start: t, on_end: 2.0 * t };
    build_star(params, outer, central, Scheme::StarMultiplexed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use num_complex::Complex64;

    fn ket(bits: &str) -> DVector<Complex64> {
        let s = star_space();
        let d = crate::hilbert::parse_bits(bits).unwrap();
        let mut v = DVector::zeros(512);
        v[s.index_of(&d).unwrap()] = Complex64::new(1.0, 0.0);
        v
    }

    fn channel<'a>(m: &'a LindbladModel, label: &str) -> &'a Operator {
        &m.channels().iter().find(|c| c.label == label).unwrap().jump
    }

    #[test]
    fn outer_block_correction() {
        let m = build_star_effective(&Params::default()).unwrap();
        assert_eq!(m.space().total_dim(), 512);
        assert_eq!(channel(&m, "c11").apply_vec(&ket("100 000 000")), ket("000 000 000"));
    }

    #[test]
    fn central_block_acts_on_shared_qubits() {
        let m = build_star_effective(&Params::default()).unwrap();
        // shared qubits (1,1),(2,1),(3,1) = (1,0,0)
        assert_eq!(channel(&m, "c41").apply_vec(&ket("100 000 000")), ket("000 000 000"));
        assert_eq!(channel(&m, "c42").apply_vec(&ket("100 100 100")), DVector::zeros(512));
        assert_eq!(channel(&m, "c42").apply_vec(&ket("100 000 100")), ket("100 100 100"));
    }

    #[test]
    fn codewords_are_dark() {
        let m = build_star_effective(&Params::default()).unwrap();
        for c in m.channels().iter().filter(|c| c.kind == ChannelKind::Correction) {
            assert_eq!(c.jump.apply_vec(&ket("000000000")), DVector::zeros(512));
            assert_eq!(c.jump.apply_vec(&ket("111111111")), DVector::zeros(512));
        }
    }

    #[test]
    fn multiplexed_schedule() {
        let p = Params { switch_period: Some(1.0), ..Params::default() };
        let m = build_star_multiplexed(&p).unwrap();
        let outer = m.channels().iter().find(|c| c.label == "c11").unwrap().profile;
        let central = m.channels().iter().find(|c| c.label == "c41").unwrap().profile;
        assert!(outer.is_active(0.5) && !central.is_active(0.5));
        assert!(!outer.is_active(1.5) && central.is_active(1.5));
        assert_eq!(outer.duty_cycle(), 0.5);
        assert_eq!(central.duty_cycle(), 0.5);
        assert_eq!(m.breakpoints(0.0, 3.5), vec![1.0, 2.0, 3.0]);
        assert!(!m.is_time_independent());
    }
}
