//! Chimera states of a nonlocally coupled ring of quantum Van der Pol
//! oscillators, treated at the level of Gaussian fluctuations about the
//! semiclassical (Stuart-Landau) trajectory.
//!
//! * [`network`]: parameters and ring topology.
//! * [`meanfield`]: classical amplitudes, initial conditions, regime detection.
//! * [`fluctuations`]: drift/diffusion matrices and covariance propagation.
//! * [`analysis`]: squeezing, weighted correlations, Renyi-2 entropies and
//!   mutual information.
//! * [`io`]: CSV and JSON file formats.

pub mod analysis;
pub mod error;
pub mod fluctuations;
pub mod io;
pub mod linalg;
pub mod meanfield;
pub mod network;
pub mod rk4;

pub use error::{Error, ParamError, Result};
pub use meanfield::ThetaMode;
pub use network::{NetworkParams, Ring, RingIndex};
