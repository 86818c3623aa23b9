//! Decoy-state simulator and certification engine for a measurement-device-
//! independent QKD protocol whose security is anchored in a CHSH witness.
//!
//! The crate is organised as a pipeline:
//!
//! * [`model`] — protocol vocabulary: intensities, basis settings, Poisson
//!   photon-number statistics, system parameters.
//! * [`optics`] — linear-optics relay model: exact Fock-state yields (the
//!   oracle) and phase-averaged coherent-state statistics (the observable).
//! * [`lp`] — deterministic dense simplex solver for small bounded-variable
//!   linear programs.
//! * [`bounds`] — decoy-state linear programs certifying lower bounds on the
//!   single-photon yield and the CHSH witness from observed gains alone.
//! * [`keyrate`] — secret-key-rate formulas, signal-intensity optimisation,
//!   and distance scans (asymptotic and finite-size).
//! * [`cli`] — flat key=value run configuration, CSV emission, diagnostics.

pub mod bounds;
pub mod cli;
pub mod keyrate;
pub mod lp;
pub mod model;
pub mod optics;

pub use bounds::{BoundReport, Interval, IntervalObservation, TruncationPolicy};
pub use keyrate::{BoundSource, KeyRatePoint, Protocol, ScanResult, SignalGrid};
pub use model::{Intensity, IntensitySet, ProtocolConfig, SystemParams};
pub use optics::{FockYieldTable, ObservedStatistics};
