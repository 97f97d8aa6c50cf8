//! Matrix-free application of the Lindblad generator for a fixed set of
//! active terms.

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::hilbert::CsrMatrix;
use crate::models::LindbladModel;

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Generator with `H_eff = H − (i/2) Σ r L†L` and jumps `√r·L`.
#[derive(Clone, Debug)]
pub(crate) struct Generator {
    pub h_eff: CsrMatrix,
    /// `(channel index, √rate · L)` for channels with positive rate.
    pub jumps: Vec<(usize, CsrMatrix)>,
}

impl Generator {
    pub fn new(model: &LindbladModel, mask: &ActiveMask) -> Self {
        let d = model.space().total_dim();
        let mut h_eff = CsrMatrix::zeros(d);
        for (h, on) in model.hamiltonian().iter().zip(&mask.hamiltonian) {
            if *on {
                h_eff = h_eff.add(h.op.csr());
            }
        }
        let mut jumps = Vec::new();
        for (k, (c, on)) in model.channels().iter().zip(&mask.channels).enumerate() {
            if !*on || c.rate == 0.0 || c.jump.nnz() == 0 {
                continue;
            }
            let l = c.jump.csr().scale(Complex64::new(c.rate.sqrt(), 0.0));
            let ldl = l.adjoint().matmul(&l);
            h_eff = h_eff.add(&ldl.scale(Complex64::new(0.0, -0.5)));
            jumps.push((k, l));
        }
        Self { h_eff, jumps }
    }

    /// `out += L(x)` for any square `x`, Hermitian or not.
    pub fn apply_lindblad(&self, x: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        self.h_eff.mul_dense_acc(-I, x, out);
        // + i x H_eff†
        self.h_eff.dense_mul_adjoint_acc(I, x, out);
        if self.jumps.is_empty() {
            return;
        }
        let mut tmp = DMatrix::zeros(x.nrows(), x.ncols());
        for (_, l) in &self.jumps {
            tmp.fill(Complex64::new(0.0, 0.0));
            l.mul_dense_acc(ONE, x, &mut tmp);
            l.dense_mul_adjoint_acc(ONE, &tmp, out);
        }
    }

    /// `out += −i H_eff ψ` for column block `ψ`.
    pub fn apply_no_jump(&self, psi: &DMatrix<Complex64>, out: &mut DMatrix<Complex64>) {
        self.h_eff.mul_dense_acc(-I, psi, out);
    }

    /// Upper bound on the spectral radius of the Liouvillian.
    pub fn norm_bound(&self) -> f64 {
        let op_norm = |m: &CsrMatrix| (m.norm_one() * m.norm_inf()).sqrt();
        2.0 * op_norm(&self.h_eff) + self.jumps.iter().map(|(_, l)| op_norm(l).powi(2)).sum::<f64>()
    }
}

/// Which Hamiltonian terms and channels are switched on.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct ActiveMask {
    pub hamiltonian: Vec<bool>,
    pub channels: Vec<bool>,
}

impl ActiveMask {
    pub fn at(model: &LindbladModel, t: f64) -> Self {
        Self {
            hamiltonian: model.hamiltonian().iter().map(|h| h.profile.is_active(t)).collect(),
            channels: model.channels().iter().map(|c| c.profile.is_active(t)).collect(),
        }
    }
}

/// Lazily built generators, one per distinct switching configuration.
pub(crate) struct GeneratorCache<'m> {
    model: &'m LindbladModel,
    built: HashMap<ActiveMask, Generator>,
}

impl<'m> GeneratorCache<'m> {
    pub fn new(model: &'m LindbladModel) -> Self {
        Self { model, built: HashMap::new() }
    }

    /// Generator valid on the open segment containing `t_mid`.
    pub fn at(&mut self, t_mid: f64) -> &Generator {
        let mask = ActiveMask::at(self.model, t_mid);
        let model = self.model;
        self.built.entry(mask).or_insert_with_key(|m| Generator::new(model, m))
    }
}
