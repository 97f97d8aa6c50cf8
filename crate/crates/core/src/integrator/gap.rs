//! Slowest nonzero relaxation rate of a time-independent Liouvillian.
//!
//! Block Krylov–Schur iteration on the vectorized space, matrix-free: the
//! Liouvillian is only ever applied to `d × d` operators. Ritz values are
//! ordered by real part (rightmost first) and the leading partial Schur form
//! is kept across restarts.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::LindbladModel;

use super::generator::{ActiveMask, Generator};
use super::rk::State;
use super::trajectories::trajectory_rng;

/// Largest Hilbert-space dimension accepted by [`liouvillian_gap`].
pub const GAP_DIM_LIMIT: usize = 512;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq)]
pub struct GapOptions {
    /// Number of rightmost eigenvalues to converge.
    pub n_eigs: usize,
    /// Residual tolerance relative to a bound on `‖L‖`.
    pub tol: f64,
    /// Maximum number of restart cycles.
    pub max_iter: usize,
    /// Block size; bounds the eigenvalue multiplicity that is resolved reliably.
    pub block_size: usize,
    /// Krylov basis size per cycle; `0` picks `2·n_eigs + 3·block_size`.
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self { n_eigs: 24, tol: 1e-10, max_iter: 500, block_size: 6, krylov_dim: 0, seed: 7 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    /// Smallest `|Re λ|` over the converged nonzero eigenvalues.
    pub gap: f64,
    /// Converged nonzero eigenvalues, rightmost first.
    pub eigenvalues: Vec<Complex64>,
    pub zero_multiplicity: usize,
    pub iterations: usize,
    pub max_residual: f64,
}

const CHUNK: usize = 2048;

/// `Σ conj(a_i) b_i` over chunk slices, four partial sums.
fn dot_chunk(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    let mut acc = [ZERO; 4];
    let mut it_a = a.chunks_exact(4);
    let mut it_b = b.chunks_exact(4);
    for (x, y) in (&mut it_a).zip(&mut it_b) {
        for k in 0..4 {
            acc[k] += x[k].conj() * y[k];
        }
    }
    for (x, y) in it_a.remainder().iter().zip(it_b.remainder()) {
        acc[0] += x.conj() * y;
    }
    acc[0] + acc[1] + acc[2] + acc[3]
}

/// One classical Gram–Schmidt sweep, blocked so each slice of `w` stays in
/// cache while the basis streams past.
fn cgs_sweep(basis: &[State], w: &mut State) -> Vec<Complex64> {
    let n = w.len();
    let mut c = vec![ZERO; basis.len()];
    let ws = w.as_slice();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        for (cj, v) in c.iter_mut().zip(basis) {
            *cj += dot_chunk(&v.as_slice()[start..end], &ws[start..end]);
        }
    }
    let ws = w.as_mut_slice();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        let wc = &mut ws[start..end];
        for (cj, v) in c.iter().zip(basis) {
            for (x, y) in wc.iter_mut().zip(&v.as_slice()[start..end]) {
                *x -= cj * y;
            }
        }
    }
    c
}

/// Orthogonalizes `w` against `basis`, re-orthogonalizing once if the first
/// sweep cancelled most of its norm. Returns the coefficients.
fn project_out(basis: &[State], w: &mut State) -> Vec<Complex64> {
    if basis.is_empty() {
        return Vec::new();
    }
    let before = w.norm();
    let mut coef = cgs_sweep(basis, w);
    if w.norm() < std::f64::consts::FRAC_1_SQRT_2 * before {
        for (a, b) in coef.iter_mut().zip(cgs_sweep(basis, w)) {
            *a += b;
        }
    }
    coef
}

fn random_state(rng: &mut ChaCha8Rng, d: usize) -> State {
    DMatrix::from_fn(d, d, |_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

/// Columns `V q[:, i]` for `i < keep`, blocked over slices of the vectors.
fn combine(v: &[State], q: &DMatrix<Complex64>, keep: usize) -> Vec<State> {
    let (d, n) = (v[0].nrows(), v[0].len());
    let mut out: Vec<State> = (0..keep).map(|_| DMatrix::zeros(d, d)).collect();
    for start in (0..n).step_by(CHUNK) {
        let end = (start + CHUNK).min(n);
        for (i, u) in out.iter_mut().enumerate() {
            let uc = &mut u.as_mut_slice()[start..end];
            for (r, vr) in v.iter().enumerate() {
                let a = q[(r, i)];
                for (x, y) in uc.iter_mut().zip(&vr.as_slice()[start..end]) {
                    *x += a * y;
                }
            }
        }
    }
    out
}

/// Unit vector orthogonal to `basis`, or `None` if the space is exhausted.
fn fresh_direction(basis: &[State], rng: &mut ChaCha8Rng, d: usize) -> Option<State> {
    if basis.len() >= d * d {
        return None;
    }
    for _ in 0..8 {
        let mut w = random_state(rng, d);
        project_out(basis, &mut w);
        let n = w.norm();
        if n > 1e-8 {
            w.unscale_mut(n);
            return Some(w);
        }
    }
    None
}

/// Swaps adjacent diagonal entries `k`, `k+1` of upper-triangular `t`,
/// keeping `q t q†` fixed.
fn swap_adjacent(t: &mut DMatrix<Complex64>, q: &mut DMatrix<Complex64>, k: usize) {
    let (a, b, c) = (t[(k, k)], t[(k + 1, k + 1)], t[(k, k + 1)]);
    let (v1, v2) = (c, b - a);
    let n = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if n == 0.0 {
        return;
    }
    let (v1, v2) = (v1 / n, v2 / n);
    // z = [[v1, −v2*], [v2, v1*]], first column is the eigenvector for b
    let z = [[v1, -v2.conj()], [v2, v1.conj()]];
    let m = t.nrows();
    for j in 0..m {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = z[0][0].conj() * x + z[1][0].conj() * y;
        t[(k + 1, j)] = z[0][1].conj() * x + z[1][1].conj() * y;
    }
    for mat in [&mut *t, &mut *q] {
        for i in 0..mat.nrows() {
            let (x, y) = (mat[(i, k)], mat[(i, k + 1)]);
            mat[(i, k)] = x * z[0][0] + y * z[1][0];
            mat[(i, k + 1)] = x * z[0][1] + y * z[1][1];
        }
    }
    t[(k + 1, k)] = ZERO;
}

/// Rotation `[[c, s], [−s*, c]]` with real `c` sending `(x, y)` to `(r, 0)`.
fn givens(x: Complex64, y: Complex64) -> (f64, Complex64) {
    let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
    if r == 0.0 {
        (1.0, ZERO)
    } else if x.norm() == 0.0 {
        (0.0, Complex64::new(1.0, 0.0))
    } else {
        (x.norm() / r, x * y.conj() / (x.norm() * r))
    }
}

fn rotate_rows(t: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, from: usize) {
    for j in from..t.ncols() {
        let (x, y) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = x * c + s * y;
        t[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(t: &mut DMatrix<Complex64>, k: usize, c: f64, s: Complex64, to: usize) {
    for i in 0..to {
        let (x, y) = (t[(i, k)], t[(i, k + 1)]);
        t[(i, k)] = x * c + y * s.conj();
        t[(i, k + 1)] = -x * s + y * c;
    }
}

/// Complex Schur form `g = q t q†`: Householder reduction to Hessenberg form
/// followed by single-shift QR with Wilkinson and exceptional shifts.
fn schur(g: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let n = g.nrows();
    let mut t = g.clone();
    let mut q = DMatrix::<Complex64>::identity(n, n);
    for k in 0..n.saturating_sub(2) {
        let x: Vec<Complex64> = (k + 1..n).map(|i| t[(i, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if tail == 0.0 {
            continue;
        }
        let xn = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { Complex64::new(1.0, 0.0) };
        let mut v = x;
        v[0] += phase * xn;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= vn);
        // t ← (I − 2vv†) t (I − 2vv†), q ← q (I − 2vv†)
        for j in 0..n {
            let dot: Complex64 = v.iter().enumerate().map(|(a, va)| va.conj() * t[(k + 1 + a, j)]).sum();
            for (a, va) in v.iter().enumerate() {
                t[(k + 1 + a, j)] -= 2.0 * va * dot;
            }
        }
        for mat in [&mut t, &mut q] {
            for i in 0..n {
                let dot: Complex64 = v.iter().enumerate().map(|(a, va)| mat[(i, k + 1 + a)] * va).sum();
                for (a, va) in v.iter().enumerate() {
                    mat[(i, k + 1 + a)] -= 2.0 * dot * va.conj();
                }
            }
        }
        for i in k + 2..n {
            t[(i, k)] = ZERO;
        }
    }

    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let eps = f64::EPSILON;
    let max_iter = 60 * n.max(1);
    let mut hi = n.saturating_sub(1);
    let mut iter = 0;
    let mut total = 0;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let mut s = t[(l - 1, l - 1)].norm() + t[(l, l)].norm();
            if s == 0.0 {
                s = scale;
            }
            if t[(l, l - 1)].norm() <= eps * s {
                t[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > max_iter {
            return Err(Error::NoConvergence { iterations: total, residual: t[(hi, hi - 1)].norm() });
        }
        let mu = if iter % 10 == 0 {
            t[(hi, hi)] + Complex64::new(0.75 * t[(hi, hi - 1)].norm(), 0.0)
        } else {
            let (a, b, c, d) = (t[(hi - 1, hi - 1)], t[(hi - 1, hi)], t[(hi, hi - 1)], t[(hi, hi)]);
            let half = (a - d) * 0.5;
            let disc = (half * half + b * c).sqrt();
            let e1 = (a + d) * 0.5 + disc;
            let e2 = (a + d) * 0.5 - disc;
            if (e1 - d).norm() <= (e2 - d).norm() { e1 } else { e2 }
        };
        let (mut x, mut y) = (t[(l, l)] - mu, t[(l + 1, l)]);
        for k in l..hi {
            let (c, s) = givens(x, y);
            let from = if k > l { k - 1 } else { l };
            rotate_rows(&mut t, k, c, s, from);
            rotate_cols(&mut t, k, c, s, (k + 3).min(hi + 1));
            rotate_cols(&mut q, k, c, s, n);
            if k > l {
                t[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = t[(k + 1, k)];
                y = t[(k + 2, k)];
            }
        }
    }
    Ok((q, t))
}

/// Schur form `g = q t q†` with the diagonal sorted by decreasing real part.
fn sorted_schur(g: &DMatrix<Complex64>) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    let (mut q, mut t) = schur(g)?;
    let m = t.nrows();
    for i in 0..m {
        let best = (i..m).max_by(|&a, &b| t[(a, a)].re.total_cmp(&t[(b, b)].re).then(b.cmp(&a))).unwrap_or(i);
        for k in (i..best).rev() {
            swap_adjacent(&mut t, &mut q, k);
        }
    }
    Ok((q, t))
}

/// Spectral gap of a time-independent model.
pub fn liouvillian_gap(model: &LindbladModel, opts: &GapOptions) -> Result<GapReport> {
    if !model.is_time_independent() {
        return Err(Error::TimeDependentModel);
    }
    let d = model.space().total_dim();
    if d > GAP_DIM_LIMIT {
        return Err(Error::DimensionGuard { what: "Liouvillian gap", dim: d, limit: GAP_DIM_LIMIT });
    }
    let n2 = d * d;
    if opts.n_eigs == 0 || opts.n_eigs > n2 {
        return Err(Error::InvalidParameter(format!("n_eigs must lie in [1, {n2}]")));
    }
    if !(opts.tol > 0.0) || opts.max_iter == 0 || opts.block_size == 0 {
        return Err(Error::InvalidParameter("tol, max_iter and block_size must be positive".into()));
    }
    let nev = opts.n_eigs;
    let b = opts.block_size.min(n2);
    let m = if opts.krylov_dim == 0 { 2 * nev + 3 * b } else { opts.krylov_dim }.min(n2);
    if m < n2 && m < nev + 2 * b {
        return Err(Error::InvalidParameter(format!("krylov_dim must be ≥ n_eigs + 2·block_size = {}", nev + 2 * b)));
    }
    let nt = b.min(m);
    let keep = if m == n2 { m - nt } else { (nev + (m - nev - nt) / 2).min(m - nt) };

    let g = Generator::new(model, &ActiveMask::at(model, 0.0));
    let norm = g.norm_bound();
    if norm == 0.0 {
        return Err(Error::Precondition("Liouvillian is identically zero".into()));
    }
    let apply = |x: &State| {
        let mut out = DMatrix::zeros(d, d);
        g.apply_lindblad(x, &mut out);
        out
    };
    let zero_tol = 1e-7 * norm;
    let mut rng = trajectory_rng(opts.seed, u64::MAX);

    // L V[..known] = V H[.., ..known] holds exactly; V[known..] await images.
    let mut v: Vec<State> = Vec::with_capacity(m + 1);
    for _ in 0..nt {
        let w = fresh_direction(&v, &mut rng, d).expect("block fits in the space");
        v.push(w);
    }
    let mut h = DMatrix::<Complex64>::zeros(m, m);
    let mut known = 0;
    let mut last_residual = f64::INFINITY;

    for cycle in 1..=opts.max_iter {
        while v.len() < m {
            let mut w = apply(&v[known]);
            let coef = project_out(&v, &mut w);
            for (i, c) in coef.into_iter().enumerate() {
                h[(i, known)] = c;
            }
            let beta = w.norm();
            let row = v.len();
            if beta > 1e-12 * norm {
                w.unscale_mut(beta);
                h[(row, known)] = Complex64::new(beta, 0.0);
                v.push(w);
            } else {
                h[(row, known)] = ZERO;
                v.push(fresh_direction(&v, &mut rng, d).expect("basis smaller than the space"));
            }
            known += 1;
        }
        // images of the trailing block: projection into H, remainder = Q_R C
        let mut q_r: Vec<State> = Vec::with_capacity(nt);
        let mut c = DMatrix::<Complex64>::zeros(nt, nt);
        for (jj, j) in (known..m).enumerate() {
            let mut w = apply(&v[j]);
            let coef = project_out(&v, &mut w);
            for (i, ci) in coef.into_iter().enumerate() {
                h[(i, j)] = ci;
            }
            let local = project_out(&q_r, &mut w);
            for (i, ci) in local.into_iter().enumerate() {
                c[(i, jj)] = ci;
            }
            let beta = w.norm();
            if beta > 1e-12 * norm {
                w.unscale_mut(beta);
                c[(jj, jj)] = Complex64::new(beta, 0.0);
                q_r.push(w);
            } else {
                let mut all: Vec<State> = v.clone();
                all.extend(q_r.iter().cloned());
                q_r.push(fresh_direction(&all, &mut rng, d).unwrap_or_else(|| DMatrix::zeros(d, d)));
            }
        }

        let (q, t) = sorted_schur(&h)?;
        // residual of Schur vector i: ‖C · q[tail, i]‖
        let tail = q.rows(known, nt);
        let res = &c * tail;
        let wanted = nev.min(m);
        let worst = (0..wanted).map(|i| res.column(i).norm()).fold(0.0, f64::max) / norm;
        last_residual = worst;
        if worst <= opts.tol {
            let eig: Vec<Complex64> = (0..wanted).map(|i| t[(i, i)]).collect();
            let zero_multiplicity = eig.iter().filter(|z| z.norm() <= zero_tol).count();
            let eigenvalues: Vec<Complex64> = eig.into_iter().filter(|z| z.norm() > zero_tol).collect();
            let gap = eigenvalues.iter().map(|z| z.re.abs()).fold(f64::INFINITY, f64::min);
            if !gap.is_finite() {
                return Err(Error::Precondition(format!("all {wanted} converged eigenvalues are zero; increase n_eigs")));
            }
            return Ok(GapReport { gap, eigenvalues, zero_multiplicity, iterations: cycle, max_residual: worst });
        }

        // restart from the leading partial Schur form plus the residual block
        let mut next = combine(&v, &q, keep);
        next.extend(q_r);
        let mut h_new = DMatrix::<Complex64>::zeros(m, m);
        h_new.view_mut((0, 0), (keep, keep)).copy_from(&t.view((0, 0), (keep, keep)));
        h_new.view_mut((keep, 0), (nt, keep)).copy_from(&res.columns(0, keep));
        v = next;
        h = h_new;
        known = keep;
    }
    Err(Error::NoConvergence { iterations: opts.max_iter, residual: last_residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{build_effective_3q, build_star_multiplexed, build_unprotected_qubit, gamma_c, Params};

    #[test]
    fn schur_sorting_keeps_similarity() {
        let g = DMatrix::from_fn(6, 6, |i, j| Complex64::new((i * 7 + j * 3) as f64 % 5.0 - 2.0, (i + 2 * j) as f64 % 3.0));
        let (q, t) = sorted_schur(&g).unwrap();
        let back = &q * &t * q.adjoint();
        assert!((back - &g).norm() < 1e-10);
        for i in 1..6 {
            assert!(t[(i - 1, i - 1)].re >= t[(i, i)].re - 1e-12);
            assert!(t[(i, i - 1)].norm() < 1e-12);
        }
    }

    #[test]
    fn schur_handles_degenerate_blocks() {
        // nilpotent shift plus a zero block and a repeated eigenvalue
        let mut g = DMatrix::<Complex64>::zeros(8, 8);
        for i in 0..3 {
            g[(i, i + 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 5..8 {
            g[(i, i)] = Complex64::new(-2.0, 0.5);
        }
        g[(5, 6)] = Complex64::new(0.3, 0.0);
        g[(7, 0)] = Complex64::new(1e-3, 0.0);
        let (q, t) = sorted_schur(&g).unwrap();
        assert!((&q * &t * q.adjoint() - &g).norm() < 1e-10);
        assert!((q.adjoint() * &q - DMatrix::identity(8, 8)).norm() < 1e-12);
        for i in 1..8 {
            for j in 0..i {
                assert!(t[(i, j)].norm() < 1e-12);
            }
        }
    }

    #[test]
    fn bitflip_gap_is_two_gamma() {
        let m = build_unprotected_qubit(&Params::default()).unwrap();
        // steady directions: I and σ^x
        let opts = GapOptions { n_eigs: 3, block_size: 1, ..Default::default() };
        let r = liouvillian_gap(&m, &opts).unwrap();
        assert!((r.gap - 2.0).abs() < 1e-8, "{r:?}");
        assert_eq!(r.zero_multiplicity, 2);
    }

    #[test]
    fn effective_gap_is_half_correction_rate() {
        let p = Params { gamma: 0.0, ..Params::default() };
        let m = build_effective_3q(&p).unwrap();
        let r = liouvillian_gap(&m, &GapOptions { n_eigs: 12, ..Default::default() }).unwrap();
        let gc = gamma_c(&p).unwrap();
        assert!((r.gap - gc / 2.0).abs() < 1e-6, "gap {} vs {}", r.gap, gc / 2.0);
        assert_eq!(r.zero_multiplicity, 4);
    }

    #[test]
    fn rejects_time_dependent() {
        let m = build_star_multiplexed(&Params::default()).unwrap();
        assert_eq!(liouvillian_gap(&m, &GapOptions::default()).unwrap_err(), Error::TimeDependentModel);
    }
}
