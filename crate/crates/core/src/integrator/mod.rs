//! Time evolution of Lindblad models: density-matrix propagation,
//! Monte-Carlo wavefunction trajectories and spectral-gap estimation.
//! Superoperators are never formed; the generator acts on `d × d` blocks.

mod gap;
mod generator;
mod master;
mod observable;
mod rk;
mod trajectories;

pub use gap::{liouvillian_gap, GapOptions, GapReport, GAP_DIM_LIMIT};
pub use master::{propagate_master, Conservation, MasterRun, PropagationConfig, MASTER_DIM_LIMIT};
pub use observable::{qubit_space, Observable, Reduce, TimeSeries};
pub use rk::Method;
pub use trajectories::{
    propagate_trajectories, reduce, run_trajectory, trajectory_rng, TrajectoryConfig, TrajectoryRecord,
    TRAJECTORY_DIM_LIMIT,
};
