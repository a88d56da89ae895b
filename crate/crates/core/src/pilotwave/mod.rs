//! Guided (de Broglie–Bohm) trajectories.
//!
//! A [`GuidedWave`] stores the guidance velocity on a stack of planes between
//! the source and the detector. [`run_ensemble`] draws photon pairs, places
//! each signal particle according to the initial density and integrates it
//! through the stack. Arrival histograms are compared with the wave intensity
//! by [`equivariance`].

mod ensemble;
mod sampling;
mod stack;

pub use ensemble::{
    arrival_histogram, coincidence_filter, ensemble_density, equivariance, run_ensemble, run_trajectories, Bins,
    Ensemble, Equivariance, IdlerOutcome, IdlerRule, PairModel, Run, RunConfig, SlitTaken, Trajectory,
};
pub use sampling::sample_initial_positions;
pub use stack::{build_wave_stack, GuidedWave, Integrator, PlaneAction, PlaneElement, StackConfig, Velocity, VectorField};
