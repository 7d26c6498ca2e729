//! Design and verification of probabilistic accumulate-then-transmit
//! covert links.
//!
//! A sensor harvests energy from a full-duplex receiver's artificial noise
//! and, whenever its battery holds enough for one slot, transmits with a
//! conditional probability `p`. A warden thresholds its received power to
//! decide whether a slot carried a transmission. This crate provides
//!
//! * [`config`]: parameters, unit conversion and derived coefficients,
//! * [`analytic`]: closed-form transmit prior, outage, covert rate and the
//!   warden's detection error,
//! * [`numerics`]: Lambert W, bracketed roots and interval maximisation,
//! * [`optimizer`]: covertness-maximising designs for the wireless-powered
//!   and cable-powered systems plus a brute-force grid oracle,
//! * [`simulator`]: Monte-Carlo oracles for the energy dynamics, the
//!   radiometer test and the outage event.

pub mod analytic;
pub mod config;
pub mod error;
pub mod numerics;
pub mod optimizer;
pub mod simulator;

pub use analytic::{DetectionOutcome, Threshold};
pub use config::{derive_coefficients, load_params, load_params_file, Coefficients, Scenario, SystemParams};
pub use error::{Error, Result};
pub use numerics::SearchOptions;
pub use optimizer::{CpccSolution, DesignSolution, Mode, WpccSolution};
pub use simulator::{AttStats, MonteCarloEstimate};
