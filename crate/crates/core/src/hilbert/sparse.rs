//! Compressed sparse row storage for complex square matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Square CSR matrix over `Complex64`.
///
/// Column indices within a row are sorted and unique. Explicit zeros are
/// dropped on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<Complex64>,
}

impl CsrMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: vec![0; dim + 1],
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            dim,
            row_ptr: (0..=dim).collect(),
            col_idx: (0..dim).collect(),
            values: vec![Complex64::new(1.0, 0.0); dim],
        }
    }

    pub fn diagonal(diag: &[Complex64]) -> Self {
        Self::from_triplets(diag.len(), diag.iter().enumerate().map(|(i, &v)| (i, i, v)))
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets<I>(dim: usize, triplets: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::new(); dim];
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of bounds for dim {dim}");
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v += v2;
                    iter.next();
                }
                if v != ZERO {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { dim, row_ptr, col_idx, values }
    }

    pub fn from_dense(m: &DMatrix<Complex64>) -> Self {
        assert_eq!(m.nrows(), m.ncols(), "matrix must be square");
        let dim = m.nrows();
        let trip = (0..dim)
            .flat_map(|r| (0..dim).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, m[(r, c)]));
        Self::from_triplets(dim, trip)
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of row `r` as parallel column/value slices.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[Complex64]) {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[span.clone()], &self.values[span])
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, Complex64)> + '_ {
        (0..self.dim).flat_map(move |r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).map(move |(&c, &v)| (r, c, v))
        })
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => ZERO,
        }
    }

    pub fn adjoint(&self) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (c, r, v.conj())))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::from_triplets(self.dim, self.iter().map(|(r, c, v)| (r, c, v * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        Self::from_triplets(self.dim, self.iter().chain(other.iter()))
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim, "dimension mismatch");
        let mut trip = Vec::new();
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&k, &a) in cols.iter().zip(vals) {
                let (cols2, vals2) = other.row(k);
                trip.extend(cols2.iter().zip(vals2).map(|(&c, &b)| (r, c, a * b)));
            }
        }
        Self::from_triplets(self.dim, trip)
    }

    /// Kronecker product `self ⊗ other`, first factor most significant.
    pub fn kron(&self, other: &Self) -> Self {
        let d2 = other.dim;
        let trip = self.iter().flat_map(|(r1, c1, v1)| {
            other
                .iter()
                .map(move |(r2, c2, v2)| (r1 * d2 + r2, c1 * d2 + c2, v1 * v2))
        });
        Self::from_triplets(self.dim * d2, trip)
    }

    pub fn matvec(&self, x: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(out.len(), self.dim);
        for (r, o) in out.iter_mut().enumerate() {
            let (cols, vals) = self.row(r);
            *o = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
    }

    /// `out += alpha * self * x` for a dense column-major block `x` (dim × m).
    pub fn mul_dense_acc(&self, alpha: Complex64, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        debug_assert_eq!(x.nrows(), self.dim);
        debug_assert_eq!(out.shape(), x.shape());
        for j in 0..x.ncols() {
            let xc = x.column(j);
            let xs = xc.as_slice();
            let mut oc = out.column_mut(j);
            let os = oc.as_mut_slice();
            for (r, o) in os.iter_mut().enumerate() {
                let (cols, vals) = self.row(r);
                let mut acc = ZERO;
                for (&c, &v) in cols.iter().zip(vals) {
                    acc += v * xs[c];
                }
                *o += alpha * acc;
            }
        }
    }

    /// `out += alpha * x * self†` for a dense block `x` (m × dim).
    pub fn dense_mul_adjoint_acc(
        &self,
        alpha: Complex64,
        x: &DMatrix<Complex64>,
        out: &mut DMatrix<Complex64>,
    ) {
        debug_assert_eq!(x.ncols(), self.dim);
        debug_assert_eq!(out.shape(), x.shape());
        // (x S†)[:, r] = Σ_c conj(S[r, c]) x[:, c]
        for r in 0..self.dim {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let w = alpha * v.conj();
                out.column_mut(r).axpy(w, &x.column(c), Complex64::new(1.0, 0.0));
            }
        }
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.dim)
            .map(|r| self.row(r).1.iter().map(|v| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.dim];
        for (_, c, v) in self.iter() {
            sums[c] += v.norm();
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
            .values
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn triplets_merge_duplicates_and_drop_zeros() {
        let m = CsrMatrix::from_triplets(
            2,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 1.0)), (1, 0, c(1.0, 0.0)), (1, 0, c(-1.0, 0.0))],
        );
        assert_eq!(m.nnz(), 1);
        assert_eq!(m.get(0, 1), c(3.0, 1.0));
        assert_eq!(m.get(1, 0), ZERO);
    }

    #[test]
    fn kron_matches_dense() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 1, c(1.0, 2.0)), (1, 1, c(-1.0, 0.0))]);
        let b = CsrMatrix::from_triplets(2, vec![(0, 0, c(0.5, 0.0)), (1, 0, c(0.0, 1.0))]);
        let k = a.kron(&b).to_dense();
        let (ad, bd) = (a.to_dense(), b.to_dense());
        let expect = ad.kronecker(&bd);
        assert!((k - expect).norm() < 1e-15);
    }

    #[test]
    fn dense_products_match_nalgebra() {
        let s = CsrMatrix::from_triplets(
            3,
            vec![(0, 2, c(1.0, -1.0)), (1, 1, c(2.0, 0.0)), (2, 0, c(0.0, 3.0)), (2, 1, c(1.0, 0.0))],
        );
        let x = DMatrix::from_fn(3, 3, |i, j| c(i as f64 + 0.5 * j as f64, j as f64 - 1.0));
        let alpha = c(0.3, -0.2);
        let mut out = DMatrix::zeros(3, 3);
        s.mul_dense_acc(alpha, &x, &mut out);
        assert!((&out - (s.to_dense() * &x) * alpha).norm() < 1e-13);
        let mut out2 = DMatrix::zeros(3, 3);
        s.dense_mul_adjoint_acc(alpha, &x, &mut out2);
        assert!((&out2 - (&x * s.to_dense().adjoint()) * alpha).norm() < 1e-13);
    }
}
