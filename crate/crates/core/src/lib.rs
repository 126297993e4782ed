//! Rough-path integration of Brownian currents, pair-potential energies,
//! path-space Gibbs measures and their cluster expansion.
//!
//! The crate is organised bottom-up:
//!
//! * [`rough`] grid paths, step-2 lifts, rough integrals and Hölder diagnostics
//! * [`brownian`] exact samplers for Brownian motion, bridges and Ornstein-Uhlenbeck paths
//! * [`currents`] currents as functionals on test fields, boundary currents and the `W` pairing
//! * [`potentials`] external and pair potentials, Mehler kernel and path energies
//! * [`gibbs`] importance-weighted Gibbs ensembles and diagnostics
//! * [`cluster`] contours, chains, clusters and the polymer expansion
//!
//! Randomness is counter based ([`rng::RngStream`]) so every estimate is reproducible
//! from `(seed, stream)` regardless of worker count.

pub mod brownian;
pub mod cluster;
pub mod currents;
pub mod error;
pub mod gibbs;
pub mod io;
pub mod potentials;
pub mod quadrature;
pub mod rng;
pub mod rough;
pub mod stats;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
