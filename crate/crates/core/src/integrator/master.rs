use crate::error::{Error, Result};
use crate::hilbert::{hermiticity_error, DensityMatrix};
use crate::models::LindbladModel;

use super::generator::GeneratorCache;
use super::observable::{Observable, TimeSeries};
use super::rk::{Method, State, Stepper};

/// Largest Hilbert-space dimension for density-matrix propagation.
pub const MASTER_DIM_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq)]
pub struct PropagationConfig {
    pub t_final: f64,
    pub sample_times: Vec<f64>,
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
}

impl PropagationConfig {
    /// `n_samples` evenly spaced times on `[0, t_final]`, adaptive stepping.
    pub fn uniform(t_final: f64, n_samples: usize) -> Self {
        let n = n_samples.max(2);
        let sample_times = (0..n).map(|k| t_final * k as f64 / (n - 1) as f64).collect();
        Self {
            t_final,
            sample_times,
            method: Method::Adaptive,
            abs_tol: 1e-9,
            rel_tol: 1e-7,
            max_step: f64::INFINITY,
        }
    }

    pub fn with_tolerances(mut self, abs_tol: f64, rel_tol: f64) -> Self {
        self.abs_tol = abs_tol;
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return bad("t_final must be finite and ≥ 0");
        }
        if self.sample_times.is_empty() {
            return bad("sample_times must not be empty");
        }
        if self.sample_times.windows(2).any(|w| w[1] < w[0]) {
            return bad("sample_times must be sorted");
        }
        if self.sample_times.iter().any(|&t| t < 0.0 || t > self.t_final) {
            return bad("sample_times must lie within [0, t_final]");
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be > 0");
        }
        if !(self.max_step > 0.0) {
            return bad("max_step must be > 0");
        }
        if let Method::Rk4 { step } = self.method {
            if !(step > 0.0) || !step.is_finite() {
                return bad("RK4 step must be > 0");
            }
        }
        Ok(())
    }

    pub(crate) fn stepper(&self) -> Stepper {
        Stepper::new(self.method, self.abs_tol, self.rel_tol, self.max_step)
    }
}

/// Worst-case departures from a physical state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conservation {
    /// Largest `|tr ρ − tr ρ0|` at the sample times.
    pub max_trace_drift: f64,
    /// Largest relative anti-Hermitian part left by a single step, before
    /// the state is projected back onto Hermitian matrices.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue of the final state.
    pub final_min_eigenvalue: f64,
}

impl Conservation {
    pub fn within(&self, trace: f64, herm: f64, min_eig: f64) -> bool {
        self.max_trace_drift <= trace && self.max_hermiticity_error <= herm && self.final_min_eigenvalue >= min_eig
    }
}

#[derive(Clone, Debug)]
pub struct MasterRun {
    pub series: TimeSeries,
    pub final_state: DensityMatrix,
    pub conservation: Conservation,
}

/// `y ← (y + y†)/2` in place.
fn symmetrize(y: &mut State) {
    let n = y.nrows();
    for j in 0..n {
        y[(j, j)].im = 0.0;
        for i in j + 1..n {
            let a = (y[(i, j)] + y[(j, i)].conj()) * 0.5;
            y[(i, j)] = a;
            y[(j, i)] = a.conj();
        }
    }
}

/// Event times: all samples and switching points, sorted, each flagged with
/// whether it is a sample.
pub(crate) fn event_grid(model: &LindbladModel, config: &PropagationConfig) -> Vec<(f64, bool)> {
    let mut ev: Vec<(f64, bool)> = config.sample_times.iter().map(|&t| (t, true)).collect();
    ev.extend(model.breakpoints(0.0, config.t_final).into_iter().map(|t| (t, false)));
    ev.push((config.t_final, false));
    ev.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
    ev
}

/// Integrates the master equation and samples `observables`.
pub fn propagate_master(
    model: &LindbladModel,
    rho0: &DensityMatrix,
    config: &PropagationConfig,
    observables: &[Observable],
) -> Result<MasterRun> {
    config.validate()?;
    let d = model.space().total_dim();
    if d > MASTER_DIM_LIMIT {
        return Err(Error::DimensionGuard { what: "density-matrix propagation", dim: d, limit: MASTER_DIM_LIMIT });
    }
    if rho0.space() != model.space() || observables.iter().any(|o| o.op.space() != model.space()) {
        return Err(Error::SpaceMismatch);
    }
    let trace0 = rho0.trace().re;
    let mut cache = GeneratorCache::new(model);
    let mut stepper = config.stepper();
    let mut y: State = rho0.matrix().clone();
    let mut t = 0.0;
    let mut times = Vec::with_capacity(config.sample_times.len());
    let mut cols: Vec<Vec<f64>> = vec![Vec::with_capacity(config.sample_times.len()); observables.len()];
    let mut drift: f64 = 0.0;
    let mut herm: f64 = 0.0;

    for (te, is_sample) in event_grid(model, config) {
        if te > t {
            let g = cache.at(0.5 * (t + te));
            let mut rhs = |x: &State, out: &mut State| g.apply_lindblad(x, out);
            while t < te {
                let (y1, t1) = stepper.step(&mut rhs, &y, t, te)?;
                y = y1;
                t = t1;
                // the exact flow is Hermitian; record the raw step's error, then project
                herm = herm.max(hermiticity_error(&y));
                symmetrize(&mut y);
            }
        }
        if is_sample {
            times.push(te);
            for (col, obs) in cols.iter_mut().zip(observables) {
                col.push(obs.finish(obs.evaluate_density(&y)));
            }
            drift = drift.max((y.trace().re - trace0).abs());
        }
    }
    let final_state = DensityMatrix::from_raw(model.space(), y);
    let final_min_eigenvalue = final_state.min_eigenvalue();
    let columns = observables.iter().map(|o| o.name.clone()).zip(cols).collect();
    Ok(MasterRun {
        series: TimeSeries { times, columns, stderr: None },
        final_state,
        conservation: Conservation { max_trace_drift: drift, max_hermiticity_error: herm, final_min_eigenvalue },
    })
}
