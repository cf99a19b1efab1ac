//! Cooperative multi-satellite integrated sensing and communication (ISAC)
//! network simulator.
//!
//! Several satellites serve ground UEs while illuminating a shared airborne
//! sensing region; several ground gateways collect the bistatic echoes. The
//! crate covers the whole chain:
//!
//! - [`geometry`]: positions, angle conventions, UPA steering vectors and the
//!   steering crosstalk coefficient.
//! - [`channel`]: Rician satellite-to-UE channels, bistatic sensing gains and
//!   Swerling-I reflection coefficients.
//! - [`beamforming`]: constant-modulus sensing and communication beams plus the
//!   per-slot power-minimization solve.
//! - [`network`]: the resolved node layout of a trial with cached steering.
//! - [`signal`]: transmitted ISAC signals, gateway observations and the grid
//!   dictionary.
//! - [`recovery`]: group OMP (centralized and per-gateway), group CoSaMP and
//!   the MUSIC baseline.
//! - [`association`]: line-distance association with sequential Hungarian
//!   matching, the K-means baseline and closed-form line fusion.
//! - [`experiments`]: scenario profiles, seeded Monte Carlo trials and sweeps.
//! - [`validation`]: oracle-equivalence and invariant suites shared by the CLI
//!   `validate` command and the acceptance tests.

pub mod association;
pub mod beamforming;
pub mod channel;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod network;
pub mod recovery;
pub mod rng;
pub mod signal;
pub mod validation;

pub use error::{Error, Result};
pub use experiments::{Framework, ScenarioConfig, TrialResult};
pub use geometry::{Direction, Position3, UpaGeometry};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
