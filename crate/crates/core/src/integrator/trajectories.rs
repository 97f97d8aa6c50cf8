//! Monte-Carlo wavefunction unraveling.
//!
//! Between jumps the unnormalized state follows `ψ' = −i H_eff ψ`. A jump
//! fires when `‖ψ‖²` falls to a uniform threshold drawn beforehand; the jump
//! time is bisected to `jump_tol` in `‖ψ‖²`, and channel `k` is chosen with
//! probability proportional to `rate_k ‖L_k ψ‖²`.
//!
//! Random streams: trajectory `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` with its stream set to `i`. Uniforms are
//! consumed in the order threshold, then (channel choice, next threshold) per
//! jump. Results are therefore independent of the worker count.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::PureState;
use crate::models::LindbladModel;

use super::generator::{Generator, GeneratorCache};
use super::master::{event_grid, PropagationConfig};
use super::observable::{Observable, Reduce, TimeSeries};
use super::rk::State;

/// Largest Hilbert-space dimension for state-vector trajectories.
pub const TRAJECTORY_DIM_LIMIT: usize = 1 << 13;

const MAX_BISECTIONS: usize = 200;

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    pub seed: u64,
    pub jump_tol: f64,
}

impl TrajectoryConfig {
    pub fn new(n_traj: usize, seed: u64) -> Self {
        Self { n_traj, seed, jump_tol: 1e-10 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_traj == 0 {
            return Err(Error::InvalidParameter("n_traj must be ≥ 1".into()));
        }
        if !(self.jump_tol > 0.0) {
            return Err(Error::InvalidParameter("jump_tol must be > 0".into()));
        }
        Ok(())
    }
}

/// Random stream of trajectory `index` under `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Samples of one trajectory: `values[sample][observable]` plus jump count.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub values: Vec<Vec<Complex64>>,
    pub jumps: Vec<(f64, usize)>,
}

fn norm_sq(psi: &State) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum()
}

fn pick_channel(g: &Generator, psi: &State, u: f64) -> Result<(usize, State)> {
    let d = psi.nrows();
    let candidates: Vec<State> = g
        .jumps
        .iter()
        .map(|(_, l)| {
            let mut out = DMatrix::zeros(d, 1);
            l.mul_dense_acc(Complex64::new(1.0, 0.0), psi, &mut out);
            out
        })
        .collect();
    let weights: Vec<f64> = candidates.iter().map(norm_sq).collect();
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let target = u * total;
    let mut acc = 0.0;
    let mut chosen = weights.iter().rposition(|&w| w > 0.0).expect("total > 0");
    for (k, w) in weights.iter().enumerate() {
        acc += w;
        if *w > 0.0 && acc > target {
            chosen = k;
            break;
        }
    }
    let mut next = candidates.into_iter().nth(chosen).expect("index in range");
    let n = norm_sq(&next).sqrt();
    next.unscale_mut(n);
    Ok((g.jumps[chosen].0, next))
}

/// Runs trajectory `index` of the ensemble.
pub fn run_trajectory(
    model: &LindbladModel,
    psi0: &PureState,
    prop: &PropagationConfig,
    traj: &TrajectoryConfig,
    observables: &[Observable],
    index: u64,
) -> Result<TrajectoryRecord> {
    let mut rng = trajectory_rng(traj.seed, index);
    let mut cache = GeneratorCache::new(model);
    let mut stepper = prop.stepper();
    let mut psi: State = DMatrix::from_column_slice(psi0.amplitudes().len(), 1, psi0.amplitudes().as_slice());
    if norm_sq(&psi) == 0.0 {
        return Err(Error::ZeroNorm);
    }
    let mut threshold: f64 = rng.gen();
    let mut t = 0.0;
    let mut values = Vec::with_capacity(prop.sample_times.len());
    let mut jumps = Vec::new();

    for (te, is_sample) in event_grid(model, prop) {
        while t < te {
            let g = cache.at(0.5 * (t + te));
            let mut rhs = |x: &State, out: &mut State| g.apply_no_jump(x, out);
            let (y1, t1) = stepper.step(&mut rhs, &psi, t, te)?;
            if norm_sq(&y1) > threshold {
                psi = y1;
                t = t1;
                continue;
            }
            // bisect the jump time inside (t, t1]
            let (mut lo, mut hi) = (0.0, t1 - t);
            let mut y_hi = y1;
            for _ in 0..MAX_BISECTIONS {
                if (norm_sq(&y_hi) - threshold).abs() <= traj.jump_tol || hi - lo <= f64::EPSILON * t1.abs().max(1.0) {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                let y_mid = stepper.fixed_step(&mut rhs, &psi, mid);
                if norm_sq(&y_mid) > threshold {
                    lo = mid;
                } else {
                    hi = mid;
                    y_hi = y_mid;
                }
            }
            t += hi;
            let (channel, next) = pick_channel(g, &y_hi, rng.gen())?;
            jumps.push((t, channel));
            psi = next;
            threshold = rng.gen();
        }
        if is_sample {
            let n = norm_sq(&psi);
            if !(n > 0.0) {
                return Err(Error::ZeroNorm);
            }
            let col = psi.column(0).into_owned();
            values.push(observables.iter().map(|o| o.evaluate_pure(&col) / n).collect());
        }
    }
    Ok(TrajectoryRecord { values, jumps })
}

/// Ensemble average over `traj.n_traj` trajectories with standard errors.
pub fn propagate_trajectories(
    model: &LindbladModel,
    psi0: &PureState,
    prop: &PropagationConfig,
    traj: &TrajectoryConfig,
    observables: &[Observable],
) -> Result<TimeSeries> {
    prop.validate()?;
    traj.validate()?;
    let d = model.space().total_dim();
    if d > TRAJECTORY_DIM_LIMIT {
        return Err(Error::DimensionGuard { what: "trajectory propagation", dim: d, limit: TRAJECTORY_DIM_LIMIT });
    }
    if psi0.space() != model.space() || observables.iter().any(|o| o.op.space() != model.space()) {
        return Err(Error::SpaceMismatch);
    }
    let records: Vec<TrajectoryRecord> = (0..traj.n_traj as u64)
        .into_par_iter()
        .map(|i| run_trajectory(model, psi0, prop, traj, observables, i))
        .collect::<Result<_>>()?;
    Ok(reduce(&records, prop, observables))
}

/// Index-ordered mean and standard error of the trajectory samples.
pub fn reduce(records: &[TrajectoryRecord], prop: &PropagationConfig, observables: &[Observable]) -> TimeSeries {
    let n = records.len() as f64;
    let n_samples = prop.sample_times.len();
    let mut columns = Vec::with_capacity(observables.len());
    let mut errs = Vec::with_capacity(observables.len());
    for (k, obs) in observables.iter().enumerate() {
        let mut col = Vec::with_capacity(n_samples);
        let mut err = Vec::with_capacity(n_samples);
        for s in 0..n_samples {
            let mean: Complex64 = records.iter().map(|r| r.values[s][k]).sum::<Complex64>() / n;
            let (var_re, var_im) = if records.len() > 1 {
                let (a, b) = records.iter().fold((0.0, 0.0), |(a, b), r| {
                    let dz = r.values[s][k] - mean;
                    (a + dz.re * dz.re, b + dz.im * dz.im)
                });
                (a / (n - 1.0), b / (n - 1.0))
            } else {
                (0.0, 0.0)
            };
            let se = match obs.reduce {
                Reduce::Abs => ((var_re + var_im) / n).sqrt(),
                Reduce::Real | Reduce::OneMinus => (var_re / n).sqrt(),
            };
            col.push(obs.finish(mean));
            err.push(se);
        }
        columns.push((obs.name.clone(), col));
        errs.push(err);
    }
    TimeSeries { times: prop.sample_times.clone(), columns, stderr: Some(errs) }
}
