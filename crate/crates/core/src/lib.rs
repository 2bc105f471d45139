//! Simulation and design exploration for Blochnium-based Josephson
//! parametric amplifiers.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`circuit`] reduces a chain of `N` Quartons (each `M` slave SQUIDs
//!    shunted by a master SQUID) to a single Kerr mode: linear frequency from
//!    the capacitance/inductance matrices, Kerr coefficient from the quartic
//!    expansion of the junction potentials.
//! 2. [`steady_state`] solves the normalized pump cubic for the intracavity
//!    photon number and classifies the branches.
//! 3. [`gain`] linearizes around the pump state and computes signal and idler
//!    gain from the 2×2 scattering system.
//! 4. [`metrics`], [`sweep`] and [`optimize`] derive compression point,
//!    bandwidth and band coverage, and search the design space.

pub mod circuit;
pub mod constants;
pub mod cubic;
pub mod eigen;
mod error;
pub mod gain;
pub mod metrics;
pub mod optimize;
pub mod steady_state;
pub mod sweep;

pub use circuit::{BlochniumDesign, CircuitMatrices, EffectiveModel};
pub use error::{Error, Result};
pub use gain::{GainResult, ScatterMatrix, SignalProbe};
pub use metrics::{P1dBResult, PhysicalScale, TuningCurve};
pub use steady_state::{BranchPolicy, OperatingPoint, PumpDrive, RootSet};
pub use sweep::{SweepRecord, SweepSpec};
