//! Semiclassical simulation of dispersive microwave readout for a
//! cavity-coupled spin ensemble.
//!
//! The library integrates the driven, lossy Maxwell-Bloch equations for the
//! coupled cavity field / collective spin system, evaluates the analytic
//! solution valid in the dispersive regime, and builds readout metrics on
//! top: signal energy, inverse readout fidelity, noise budget (thermal and
//! drive phase noise), and magnetometric sensitivity. A sweep harness runs
//! the parameter studies (power-detuning maps, ensemble-size scaling,
//! coupling and quality-factor enhancement scans).
//!
//! All frequencies and rates inside the library are angular (rad/s).
//! Conversion from cycles/s happens at the configuration boundary only.


pub mod dispersive;
pub mod error;
pub mod model;

pub mod noise;
pub mod ode;
pub(crate) mod quad;
pub mod readout;



pub use error::Error;
pub use model::{DerivedQuantities, DriveParams, FullState, SystemParams, Trajectory};

pub use noise::{NoiseBudget, PhaseNoiseTable};
pub use ode::IntegratorConfig;
pub use readout::{Protocol, ProtocolParams, ReadoutConfig, ReadoutResult, SolveMode};


/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Boltzmann constant, J/K.
pub const K_BOLTZMANN: f64 = 1.380_649e-23;
