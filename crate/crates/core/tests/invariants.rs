mod common;

use std::collections::HashSet;

use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

use common::{c, max_abs, random_density, rng};
use resqec::analysis::{classify_basins, fidelity};
use resqec::hilbert::{apply_dissipator, pauli, DensityMatrix, Factor, Operator, Pauli, TensorSpace};
use resqec::models::{build_effective_3q, build_star_effective, star_label, ChannelKind, Params};

fn complex2() -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)
        .prop_map(|v| DMatrix::from_iterator(2, 2, v.into_iter().map(|(re, im)| Complex64::new(re, im))))
}

fn kron_at(space: &TensorSpace, parts: &[(&DMatrix<Complex64>, usize)]) -> DMatrix<Complex64> {
    let mut out = DMatrix::from_element(1, 1, c(1.0));
    for (pos, f) in space.factors().iter().enumerate() {
        let m = parts
            .iter()
            .find(|(_, p)| *p == pos)
            .map(|(m, _)| (*m).clone())
            .unwrap_or_else(|| DMatrix::identity(f.dim, f.dim));
        out = out.kronecker(&m);
    }
    out
}

fn dense_nnz(m: &DMatrix<Complex64>) -> usize {
    m.iter().filter(|z| z.norm() > 0.0).count()
}

fn mixed_space(n_qubits: usize, with_cavity: bool) -> TensorSpace {
    let mut f: Vec<Factor> = (0..n_qubits).map(|k| Factor::qubit(format!("q{}", k + 1))).collect();
    if with_cavity {
        f.insert(1, Factor::cavity("a1", 2));
    }
    TensorSpace::new(f).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embed_matches_kronecker(
        a in complex2(), b in complex2(), n in 2usize..6, cav in any::<bool>(), i in 0usize..6, j in 0usize..6,
    ) {
        let space = mixed_space(n, cav);
        let nf = space.factors().len();
        let (i, j) = (i % nf, j % nf);
        prop_assume!(i != j);
        let (li, lj) = (space.factors()[i].label.clone(), space.factors()[j].label.clone());

        let ea = Operator::embed(&a, &li, &space).unwrap();
        let eb = Operator::embed(&b, &lj, &space).unwrap();
        prop_assert!(max_abs(&(ea.to_dense() - kron_at(&space, &[(&a, i)]))) < 1e-14);

        let prod = &ea * &eb;
        let reference = kron_at(&space, &[(&a, i), (&b, j)]);
        prop_assert!(max_abs(&(prod.to_dense() - &reference)) < 1e-13);
        let many = Operator::embed_many(&[(&a, &li), (&b, &lj)], &space).unwrap();
        prop_assert!(max_abs(&(many.to_dense() - &reference)) < 1e-13);

        let sum = Operator::embed(&(&a + &b), &li, &space).unwrap();
        let split = &ea + &Operator::embed(&b, &li, &space).unwrap();
        prop_assert!(sum.max_abs_diff(&split) < 1e-14);

        prop_assert!(prod.nnz() <= dense_nnz(&reference));
        prop_assert!(ea.nnz() <= dense_nnz(&kron_at(&space, &[(&a, i)])));
    }

    #[test]
    fn dissipator_output_is_hermitian_and_traceless(seed in any::<u64>(), x in complex2(), y in complex2()) {
        let space = TensorSpace::qubits(3);
        let mut r = rng(seed);
        let rho = random_density(&mut r, &space);
        let op = Operator::embed_many(&[(&x, "q1"), (&y, "q3")], &space).unwrap();
        let out = apply_dissipator(&op, &rho).unwrap();
        prop_assert!(out.trace().norm() < 1e-12);
        prop_assert!(max_abs(&(&out - out.adjoint())) < 1e-12);
    }

    #[test]
    fn fidelity_is_symmetric_and_linear(seed in any::<u64>(), p in 0.0f64..1.0) {
        let space = TensorSpace::qubits(2);
        let mut r = rng(seed);
        let (a, b, e) = (random_density(&mut r, &space), random_density(&mut r, &space), random_density(&mut r, &space));
        let fab = fidelity(&a, &b).unwrap();
        prop_assert!((fab - fidelity(&b, &a).unwrap()).abs() < 1e-14);

        let mix = DensityMatrix::new(&space, a.matrix() * c(p) + b.matrix() * c(1.0 - p)).unwrap();
        let lhs = fidelity(&e, &mix).unwrap();
        let rhs = p * fidelity(&e, &a).unwrap() + (1.0 - p) * fidelity(&e, &b).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-13);
    }

    #[test]
    fn effective_absorption_sums_to_one(omega in 1.0f64..400.0, kappa in 100.0f64..1000.0) {
        let m = build_effective_3q(&Params { gamma: 0.0, omega_p: omega, kappa, ..Params::default() }).unwrap();
        let rep = classify_basins(&m).unwrap();
        for row in &rep.absorption {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn star_absorption_sums_to_one(central in 0.5f64..50.0, outer in 0.5f64..50.0) {
        let p = Params { gamma: 0.0, gamma_c_central: Some(central), gamma_c_outer: Some(outer), ..Params::default() };
        let rep = classify_basins(&build_star_effective(&p).unwrap()).unwrap();
        for row in &rep.absorption {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn effective_and_star_jumps_map_basis_to_basis() {
    let p = Params::default();
    for m in [build_effective_3q(&p).unwrap(), build_star_effective(&p).unwrap()] {
        for ch in m.channels() {
            assert!(ch.jump.maps_basis_to_basis(), "{}", ch.label);
        }
    }
}

#[test]
fn correction_channels_are_pairs_of_projectors() {
    let m = build_effective_3q(&Params::default()).unwrap();
    let space = m.space().clone();
    let mut total = DMatrix::<Complex64>::zeros(8, 8);
    for ch in m.channels().iter().filter(|c| c.kind == ChannelKind::Correction) {
        let cdc = (&ch.jump.adjoint() * &ch.jump).to_dense();
        assert!(max_abs(&(&cdc - DMatrix::from_diagonal(&cdc.diagonal()))) < 1e-15);
        let diag: Vec<f64> = cdc.diagonal().iter().map(|z| z.re).collect();
        assert!(diag.iter().all(|&x| x == 0.0 || x == 1.0));
        assert_eq!(diag.iter().filter(|&&x| x == 1.0).count(), 2);
        total += cdc;
    }
    // Codespace is dark; each single-error state is hit by exactly one channel.
    for idx in 0..8 {
        let w = space.digits(idx).iter().sum::<usize>();
        let expect = if w == 0 || w == 3 { 0.0 } else { 1.0 };
        assert_eq!(total[(idx, idx)].re, expect);
    }
}

fn permuted_index(space: &TensorSpace, perm: &[usize; 3], idx: usize) -> usize {
    let digits = space.digits(idx);
    let mut out = vec![0; digits.len()];
    for (pos, f) in space.factors().iter().enumerate() {
        let (b, q) = parse_label(&f.label);
        let target = if b <= 3 { star_label(perm[b - 1] + 1, q) } else { f.label.clone() };
        out[space.position(&target).unwrap()] = digits[pos];
    }
    space.index_of(&out).unwrap()
}

fn parse_label(l: &str) -> (usize, usize) {
    let b = l[1..2].parse().unwrap();
    let q = l[2..3].parse().unwrap();
    (b, q)
}

type Key = (u64, Vec<(usize, usize, i64, i64)>);

fn channel_key(rate: f64, triplets: impl Iterator<Item = (usize, usize, Complex64)>) -> Key {
    let mut t: Vec<_> = triplets
        .map(|(r, col, v)| (r, col, (v.re * 1e12).round() as i64, (v.im * 1e12).round() as i64))
        .collect();
    t.sort_unstable();
    (rate.to_bits(), t)
}

#[test]
fn star_channels_are_symmetric_under_outer_relabelling() {
    let m = build_star_effective(&Params { gamma: 1.0, ..Params::default() }).unwrap();
    let space = m.space().clone();
    let original: HashSet<Key> = m.channels().iter().map(|ch| channel_key(ch.rate, ch.jump.csr().iter())).collect();
    for perm in [[1, 0, 2], [0, 2, 1], [2, 0, 1]] {
        let moved: HashSet<Key> = m
            .channels()
            .iter()
            .map(|ch| {
                let it = ch.jump.csr().iter().map(|(r, col, v)| {
                    (permuted_index(&space, &perm, r), permuted_index(&space, &perm, col), v)
                });
                channel_key(ch.rate, it)
            })
            .collect();
        assert_eq!(original, moved, "permutation {perm:?}");
    }
}

#[test]
fn bit_flip_dissipator_matches_pauli_formula() {
    let space = TensorSpace::qubits(1);
    let x = Operator::embed(&pauli(Pauli::X), "q1", &space).unwrap();
    let rho = DensityMatrix::new(&space, DMatrix::from_row_slice(2, 2, &[c(0.7), c(0.2), c(0.2), c(0.3)])).unwrap();
    let out = apply_dissipator(&x, &rho).unwrap();
    let expect = DMatrix::from_row_slice(2, 2, &[c(-0.4), c(0.0), c(0.0), c(0.4)]);
    assert!(max_abs(&(out - expect)) < 1e-15);
}
