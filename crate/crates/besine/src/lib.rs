//! Random canonical systems at the hard-edge to bulk transition.
//!
//! The crate simulates two families of 2x2 canonical systems driven by the
//! same Brownian data: the shifted Bessel system of a stochastic operator at
//! spectral level E, and the sine system it converges to as E grows. The
//! pieces are
//!
//! - [`stochastic`]: time grids, seeded Brownian paths, SDE steppers;
//! - [`bessel`]: the polar fundamental pair, its coefficient matrix field,
//!   and the reversed-time asymptotics;
//! - [`sine`]: the hyperbolic-plane path and the sine coefficient field;
//! - [`coupling`]: the block construction that builds the sine system's
//!   complex Brownian motion from the Bessel system's native one, plus the
//!   comparison statistics between the coupled objects;
//! - [`spectral`]: transfer matrices, Weyl functions, eigenvalue scans and
//!   Stieltjes mass extraction for any sampled field;
//! - [`boundary`]: right boundary data for the Bessel half of the pair;
//! - [`harness`], [`config`], [`report`]: Monte Carlo sweeps over (E, path)
//!   cells and their persisted reports.
//!
//! Everything is deterministic given a seed: paths are keyed by
//! (experiment, stream, path) triples and parallel sweeps reduce in a fixed
//! order, so reruns reproduce reports byte for byte.

pub mod bessel;
pub mod besselfn;
pub mod boundary;
pub mod config;
pub mod coupling;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod report;
pub mod sine;
pub mod spectral;
pub mod stats;
pub mod stochastic;

pub use error::{Error, Result};
