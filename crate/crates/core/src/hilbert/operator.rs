use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::{CsrMatrix, PureState, TensorSpace};
use crate::error::{Error, Result};

/// Sparse operator on a [`TensorSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: TensorSpace,
    mat: CsrMatrix,
}

impl Operator {
    pub fn from_csr(space: &TensorSpace, mat: CsrMatrix) -> Result<Self> {
        if mat.dim() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), got: mat.dim() });
        }
        Ok(Self { space: space.clone(), mat })
    }

    pub fn from_dense(space: &TensorSpace, m: &DMatrix<Complex64>) -> Result<Self> {
        if m.nrows() != space.total_dim() || m.ncols() != space.total_dim() {
            return Err(Error::DimensionMismatch { expected: space.total_dim(), got: m.nrows() });
        }
        Self::from_csr(space, CsrMatrix::from_dense(m))
    }

    pub fn zero(space: &TensorSpace) -> Self {
        Self { space: space.clone(), mat: CsrMatrix::zeros(space.total_dim()) }
    }

    pub fn identity(space: &TensorSpace) -> Self {
        Self { space: space.clone(), mat: CsrMatrix::identity(space.total_dim()) }
    }

    /// Lifts a single-factor matrix to the full space, identity elsewhere.
    pub fn embed(factor_op: &DMatrix<Complex64>, target: &str, space: &TensorSpace) -> Result<Self> {
        Self::embed_many(&[(factor_op, target)], space)
    }

    /// Lifts a product of single-factor matrices acting on distinct factors.
    pub fn embed_many(parts: &[(&DMatrix<Complex64>, &str)], space: &TensorSpace) -> Result<Self> {
        let mut slots: Vec<Option<&DMatrix<Complex64>>> = vec![None; space.factors().len()];
        for &(m, label) in parts {
            let pos = space.position(label)?;
            let dim = space.factors()[pos].dim;
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: m.nrows() });
            }
            if slots[pos].is_some() {
                return Err(Error::DuplicateLabel(label.to_string()));
            }
            slots[pos] = Some(m);
        }
        let mut acc = CsrMatrix::identity(1);
        for (f, slot) in space.factors().iter().zip(slots) {
            let local = match slot {
                Some(m) => CsrMatrix::from_dense(m),
                None => CsrMatrix::identity(f.dim),
            };
            acc = acc.kron(&local);
        }
        Self::from_csr(space, acc)
    }

    /// Lifts a dense operator on `sub` (a subset of factors of `space`, in
    /// the same order) to `space`, acting as identity on the other factors.
    pub fn lift(op: &DMatrix<Complex64>, sub: &TensorSpace, space: &TensorSpace) -> Result<Self> {
        let d_sub = sub.total_dim();
        if op.nrows() != d_sub || op.ncols() != d_sub {
            return Err(Error::DimensionMismatch { expected: d_sub, got: op.nrows() });
        }
        let labels: Vec<&str> = sub.factors().iter().map(|f| f.label.as_str()).collect();
        if &space.subspace(&labels)? != sub {
            return Err(Error::SpaceMismatch);
        }
        let mask: Vec<bool> = space.factors().iter().map(|f| labels.contains(&f.label.as_str())).collect();
        let d = space.total_dim();
        // (index within sub, index within the complement) for every basis state
        let split: Vec<(usize, usize)> = (0..d)
            .map(|idx| {
                let (mut k, mut t) = (0, 0);
                for ((f, dig), &m) in space.factors().iter().zip(space.digits(idx)).zip(&mask) {
                    if m {
                        k = k * f.dim + dig;
                    } else {
                        t = t * f.dim + dig;
                    }
                }
                (k, t)
            })
            .collect();
        let mut by_rest: std::collections::BTreeMap<usize, Vec<(usize, usize)>> = Default::default();
        for (idx, &(k, t)) in split.iter().enumerate() {
            by_rest.entry(t).or_default().push((k, idx));
        }
        let mut trip = Vec::new();
        for group in by_rest.values() {
            for &(ki, i) in group {
                for &(kj, j) in group {
                    let v = op[(ki, kj)];
                    if v != Complex64::new(0.0, 0.0) {
                        trip.push((i, j, v));
                    }
                }
            }
        }
        Self::from_csr(space, CsrMatrix::from_triplets(d, trip))
    }

    /// Projector fixing the listed factors to basis values; identity elsewhere.
    pub fn projector(space: &TensorSpace, assignments: &[(&str, usize)]) -> Result<Self> {
        let mut locals = Vec::with_capacity(assignments.len());
        for &(label, value) in assignments {
            let f = space.factor(label)?;
            if value >= f.dim {
                return Err(Error::BasisValueOutOfRange { label: label.to_string(), value, dim: f.dim });
            }
            let mut m = DMatrix::zeros(f.dim, f.dim);
            m[(value, value)] = Complex64::new(1.0, 0.0);
            locals.push((m, label));
        }
        let parts: Vec<_> = locals.iter().map(|(m, l)| (m, *l)).collect();
        Self::embed_many(&parts, space)
    }

    /// `|ket⟩⟨bra|` for composite basis indices.
    pub fn outer(space: &TensorSpace, ket: usize, bra: usize) -> Result<Self> {
        let d = space.total_dim();
        if ket >= d || bra >= d {
            return Err(Error::DimensionMismatch { expected: d, got: ket.max(bra) });
        }
        Self::from_csr(space, CsrMatrix::from_triplets(d, [(ket, bra, Complex64::new(1.0, 0.0))]))
    }

    pub fn space(&self) -> &TensorSpace {
        &self.space
    }

    pub fn csr(&self) -> &CsrMatrix {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn nnz(&self) -> usize {
        self.mat.nnz()
    }

    pub fn adjoint(&self) -> Self {
        Self { space: self.space.clone(), mat: self.mat.adjoint() }
    }

    pub fn scale(&self, s: impl Into<Complex64>) -> Self {
        Self { space: self.space.clone(), mat: self.mat.scale(s.into()) }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        self.mat.to_dense()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.mat.is_hermitian(tol)
    }

    /// Operator applied to a pure state, without renormalizing.
    pub fn apply_vec(&self, psi: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::zeros(self.dim());
        self.mat.matvec(psi.as_slice(), out.as_mut_slice());
        out
    }

    pub fn apply(&self, psi: &PureState) -> Result<DVector<Complex64>> {
        if psi.space() != &self.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(self.apply_vec(psi.amplitudes()))
    }

    pub fn try_add(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Self { space: self.space.clone(), mat: self.mat.add(&rhs.mat) })
    }

    pub fn try_mul(&self, rhs: &Self) -> Result<Self> {
        self.check_space(rhs)?;
        Ok(Self { space: self.space.clone(), mat: self.mat.matmul(&rhs.mat) })
    }

    fn check_space(&self, rhs: &Self) -> Result<()> {
        if self.space != rhs.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Max-entry distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.mat.max_abs_diff(&other.mat)
    }

    /// True if every column has at most one nonzero entry, i.e. the operator
    /// sends computational basis states to multiples of basis states.
    pub fn maps_basis_to_basis(&self) -> bool {
        let mut count = vec![0usize; self.dim()];
        for (_, c, _) in self.mat.iter() {
            count[c] += 1;
        }
        count.iter().all(|&n| n <= 1)
    }
}

// Operator algebra panics on mismatched spaces; the `try_*` forms return errors.
impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.try_add(rhs).expect("operators on different spaces")
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.try_add(&rhs.scale(-1.0)).expect("operators on different spaces")
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.try_mul(rhs).expect("operators on different spaces")
    }
}
