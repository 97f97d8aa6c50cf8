//! Brute-force references for tests: dense vectorized Liouvillians, closed
//! forms and explicit Markov chains. Nothing here shares operator
//! application with the integrator or the basin solver.
//!
//! Vectorization stacks columns: `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, TensorSpace};
use crate::models::{ChannelKind, LindbladModel, Profile};

/// Largest Hilbert-space dimension for dense continuous-time oracles.
pub const DENSE_DIM_LIMIT: usize = 64;
/// Largest state count for the explicit chain oracle.
pub const CHAIN_DIM_LIMIT: usize = 512;

type CMat = DMatrix<Complex64>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// `out += s·(a ⊗ b)`.
fn kron_acc(out: &mut CMat, a: &CMat, b: &CMat, s: Complex64) {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    for j in 0..ca {
        for i in 0..ra {
            let aij = a[(i, j)];
            if aij == c(0.0) {
                continue;
            }
            let f = s * aij;
            for l in 0..cb {
                for k in 0..rb {
                    let bkl = b[(k, l)];
                    if bkl != c(0.0) {
                        out[(i * rb + k, j * cb + l)] += f * bkl;
                    }
                }
            }
        }
    }
}

/// Dense `d² × d²` Liouvillian of a time-independent model.
pub fn dense_liouvillian(model: &LindbladModel) -> Result<CMat> {
    if !model.is_time_independent() {
        return Err(Error::TimeDependentModel);
    }
    let d = model.space().total_dim();
    if d > DENSE_DIM_LIMIT {
        return Err(Error::DimensionGuard { what: "dense Liouvillian", dim: d, limit: DENSE_DIM_LIMIT });
    }
    let id = CMat::identity(d, d);
    let mut h = CMat::zeros(d, d);
    for term in model.hamiltonian() {
        h += term.op.to_dense();
    }
    let mi = Complex64::new(0.0, -1.0);
    let mut l = CMat::zeros(d * d, d * d);
    kron_acc(&mut l, &id, &h, mi);
    kron_acc(&mut l, &h.transpose(), &id, -mi);
    for ch in model.channels() {
        if ch.rate == 0.0 {
            continue;
        }
        let x = ch.jump.to_dense();
        let xdx = x.adjoint() * &x;
        let r = c(ch.rate);
        kron_acc(&mut l, &x.conjugate(), &x, r);
        kron_acc(&mut l, &id, &xdx, -r * 0.5);
        kron_acc(&mut l, &xdx.transpose(), &id, -r * 0.5);
    }
    Ok(l)
}

fn vec_of(m: &CMat) -> DVector<Complex64> {
    DVector::from_column_slice(m.as_slice())
}

fn unvec(v: &DVector<Complex64>, d: usize) -> CMat {
    CMat::from_column_slice(d, d, v.as_slice())
}

/// `exp(tL) v` by Taylor series on `s` equal sub-steps with `‖tL‖₁/s ≤ 1/2`.
/// Products run over the nonzero entries of `L`.
fn expmv(l: &CMat, t: f64, v: &DVector<Complex64>) -> DVector<Complex64> {
    let n = l.nrows();
    let mut nz: Vec<(usize, usize, Complex64)> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let z = l[(i, j)];
            if z != c(0.0) {
                nz.push((i, j, z));
            }
        }
    }
    let mul = |x: &DVector<Complex64>, s: Complex64| {
        let mut y = DVector::zeros(n);
        for &(i, j, z) in &nz {
            y[i] += z * x[j];
        }
        y * s
    };
    let norm1 = (0..l.ncols()).map(|j| l.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
    let steps = ((norm1 * t.abs()) / 0.5).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let mut x = v.clone();
    for _ in 0..steps {
        let mut term = x.clone();
        let mut acc = x.clone();
        for k in 1..=60 {
            term = mul(&term, c(h / k as f64));
            acc += &term;
            if term.norm() <= 1e-18 * acc.norm() {
                break;
            }
        }
        x = acc;
    }
    x
}

/// `ρ(t) = exp(tL) ρ0` through the dense Liouvillian.
pub fn dense_propagate(model: &LindbladModel, rho0: &DensityMatrix, t: f64) -> Result<DensityMatrix> {
    Ok(dense_propagate_many(model, std::slice::from_ref(rho0), t)?.remove(0))
}

/// [`dense_propagate`] for several initial states sharing one Liouvillian.
pub fn dense_propagate_many(model: &LindbladModel, rho0: &[DensityMatrix], t: f64) -> Result<Vec<DensityMatrix>> {
    if rho0.iter().any(|r| r.space() != model.space()) {
        return Err(Error::SpaceMismatch);
    }
    let l = dense_liouvillian(model)?;
    let d = model.space().total_dim();
    rho0.iter()
        .map(|r| {
            let out = unvec(&expmv(&l, t, &vec_of(r.matrix())), d);
            Ok(DensityMatrix::from_raw(model.space(), out))
        })
        .collect()
}

/// Eigenvalues of the dense Liouvillian. For a real generator the real
/// Schur form is used directly; otherwise the real `2d² × 2d²` embedding is
/// diagonalized and every eigenvalue appears together with its conjugate.
pub fn dense_eigenvalues(model: &LindbladModel) -> Result<Vec<Complex64>> {
    let l = dense_liouvillian(model)?;
    let n = l.nrows();
    let real = l.iter().all(|z| z.im == 0.0);
    let m = if real {
        l.map(|z| z.re)
    } else {
        let mut m = DMatrix::<f64>::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                let z = l[(i, j)];
                m[(i, j)] = z.re;
                m[(i + n, j + n)] = z.re;
                m[(i, j + n)] = -z.im;
                m[(i + n, j)] = z.im;
            }
        }
        m
    };
    let schur = nalgebra::linalg::Schur::try_new(m, 1e-14, 1_000_000)
        .ok_or(Error::NoConvergence { iterations: 1_000_000, residual: f64::NAN })?;
    let mut ev: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(a.im.total_cmp(&b.im)));
    Ok(ev)
}

/// Smallest nonzero `|Re λ|` of the dense spectrum, with `|λ| ≤ zero_tol`
/// counted as zero.
pub fn dense_gap(model: &LindbladModel, zero_tol: f64) -> Result<(f64, usize)> {
    let ev = dense_eigenvalues(model)?;
    let zeros = ev.iter().filter(|z| z.norm() <= zero_tol).count();
    let gap = ev.iter().filter(|z| z.norm() > zero_tol).map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
    Ok((gap, zeros))
}

/// Single qubit started in `|0⟩` under bit flips at rate `γ`.
pub fn closed_form_bitflip(gamma: f64, t: f64) -> Result<DensityMatrix> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidParameter("gamma must be ≥ 0".into()));
    }
    let e = (-2.0 * gamma * t).exp();
    let m = DMatrix::from_row_slice(2, 2, &[c((1.0 + e) / 2.0), c(0.0), c(0.0), c((1.0 - e) / 2.0)]);
    DensityMatrix::new(&TensorSpace::qubits(1), m)
}

/// Explicit generator, closed classes and absorption probabilities.
#[derive(Clone, Debug)]
pub struct DenseChain {
    /// `q[(to, from)]`, columns summing to zero.
    pub generator: DMatrix<f64>,
    /// Closed classes, each ascending, ordered by smallest member.
    pub classes: Vec<Vec<usize>>,
    /// `absorption[(state, class)]`.
    pub absorption: DMatrix<f64>,
}

/// Jump chain built from dense jump matrices and solved on the generator
/// with Gaussian elimination.
pub fn dense_chain(model: &LindbladModel) -> Result<DenseChain> {
    let n = model.space().total_dim();
    if n > CHAIN_DIM_LIMIT {
        return Err(Error::DimensionGuard { what: "dense chain", dim: n, limit: CHAIN_DIM_LIMIT });
    }
    if model.hamiltonian().iter().any(|h| h.op.to_dense().iter().any(|z| *z != c(0.0))) {
        return Err(Error::Precondition("chain oracle needs a model without Hamiltonian".into()));
    }
    let mut q = DMatrix::<f64>::zeros(n, n);
    for ch in model.channels() {
        if ch.kind == ChannelKind::BitFlip || ch.rate == 0.0 {
            continue;
        }
        if ch.profile != Profile::Constant {
            return Err(Error::Precondition("chain oracle needs constant channels".into()));
        }
        let x = ch.jump.to_dense();
        for from in 0..n {
            let hits: Vec<usize> = (0..n).filter(|&to| x[(to, from)] != c(0.0)).collect();
            if hits.len() > 1 {
                return Err(Error::Precondition(format!("jump `{}` is not a basis map", ch.label)));
            }
            for to in hits {
                if to != from {
                    let r = ch.rate * x[(to, from)].norm_sqr();
                    q[(to, from)] += r;
                    q[(from, from)] -= r;
                }
            }
        }
    }

    // reachability by transitive closure
    let mut reach = vec![vec![false; n]; n];
    for s in 0..n {
        reach[s][s] = true;
        for t in 0..n {
            if q[(t, s)] > 0.0 {
                reach[s][t] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                let (row_k, row_i) = if i < k {
                    let (a, b) = reach.split_at_mut(k);
                    (&b[0], &mut a[i])
                } else if i > k {
                    let (a, b) = reach.split_at_mut(i);
                    (&a[k], &mut b[0])
                } else {
                    continue;
                };
                for j in 0..n {
                    row_i[j] |= row_k[j];
                }
            }
        }
    }
    // s is recurrent iff everything it reaches reaches back
    let recurrent: Vec<bool> = (0..n).map(|s| (0..n).all(|t| !reach[s][t] || reach[t][s])).collect();
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut class_of = vec![usize::MAX; n];
    for s in 0..n {
        if !recurrent[s] || class_of[s] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (0..n).filter(|&t| reach[s][t]).collect();
        for &t in &members {
            class_of[t] = classes.len();
        }
        classes.push(members);
    }

    // absorption: for transient s, Σ_t q(t,s) h(t) = 0, h = indicator on classes
    let transient: Vec<usize> = (0..n).filter(|&s| !recurrent[s]).collect();
    let nt = transient.len();
    let nc = classes.len();
    let mut absorption = DMatrix::<f64>::zeros(n, nc);
    for s in 0..n {
        if recurrent[s] {
            absorption[(s, class_of[s])] = 1.0;
        }
    }
    if nt > 0 {
        let mut idx = vec![usize::MAX; n];
        for (i, &s) in transient.iter().enumerate() {
            idx[s] = i;
        }
        // augmented [A | B] with A = Q_TTᵀ restricted, B = −Σ over class members
        let mut aug = vec![vec![0.0; nt + nc]; nt];
        for (i, &s) in transient.iter().enumerate() {
            for t in 0..n {
                let r = q[(t, s)];
                if r == 0.0 {
                    continue;
                }
                if recurrent[t] {
                    aug[i][nt + class_of[t]] -= r;
                } else {
                    aug[i][idx[t]] += r;
                }
            }
        }
        for col in 0..nt {
            let piv = (col..nt)
                .max_by(|&a, &b| aug[a][col].abs().total_cmp(&aug[b][col].abs()))
                .expect("non-empty range");
            if aug[piv][col].abs() < 1e-300 {
                return Err(Error::Precondition("singular chain system".into()));
            }
            aug.swap(col, piv);
            let pivot_row = aug[col].clone();
            for (r, row) in aug.iter_mut().enumerate() {
                if r == col {
                    continue;
                }
                let f = row[col] / pivot_row[col];
                if f != 0.0 {
                    for (x, p) in row.iter_mut().zip(&pivot_row).skip(col) {
                        *x -= f * p;
                    }
                }
            }
        }
        for (i, &s) in transient.iter().enumerate() {
            for k in 0..nc {
                absorption[(s, k)] = aug[i][nt + k] / aug[i][i];
            }
        }
    }
    Ok(DenseChain { generator: q, classes, absorption })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_effective_3q, build_star_effective, build_unprotected_qubit, Params};

    #[test]
    fn bitflip_closed_form_values() {
        let r = closed_form_bitflip(1.0, 1.0).unwrap();
        assert!((r.population(0) - 0.5676676416183064).abs() < 1e-15);
        assert!((closed_form_bitflip(1.0, 0.0).unwrap().population(0) - 1.0).abs() < 1e-15);
        assert!((closed_form_bitflip(1.0, 50.0).unwrap().population(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn dense_bitflip_matches_closed_form() {
        let m = build_unprotected_qubit(&Params::default()).unwrap();
        let rho0 = closed_form_bitflip(1.0, 0.0).unwrap();
        let r = dense_propagate(&m, &rho0, 1.0).unwrap();
        assert!((r.population(0) - 0.5676676416183064).abs() < 1e-13);
        let r0 = dense_propagate(&m, &rho0, 0.0).unwrap();
        assert_eq!(r0.matrix(), rho0.matrix());
    }

    #[test]
    fn dense_effective_gap() {
        let p = Params { gamma: 0.0, ..Params::default() };
        let (gap, zeros) = dense_gap(&build_effective_3q(&p).unwrap(), 1e-9).unwrap();
        assert!((gap - 10.0).abs() < 1e-9);
        assert_eq!(zeros, 4);
    }

    #[test]
    fn chain_state_counts() {
        let ch = dense_chain(&build_effective_3q(&Params::default()).unwrap()).unwrap();
        assert_eq!(ch.generator.nrows(), 8);
        assert_eq!(ch.classes, vec![vec![0], vec![7]]);
        let star = dense_chain(&build_star_effective(&Params::default()).unwrap()).unwrap();
        assert_eq!(star.generator.nrows(), 512);
        assert!(star.classes.contains(&vec![0]) && star.classes.contains(&vec![511]));
    }
}
