//! Two-photon double-slit and quantum-eraser simulation.
//!
//! [`biphoton`] computes coincidence and singles patterns from the
//! two-photon amplitude; [`pilotwave`] integrates guided trajectories through
//! the same apparatus. Both share the optics in [`waveoptics`] and
//! [`polarization`], and their outputs are compared with [`analysis`].

mod error;
pub mod analysis;
pub mod biphoton;
pub mod pilotwave;
pub mod polarization;
pub mod waveoptics;

pub use error::{Error, Result};
