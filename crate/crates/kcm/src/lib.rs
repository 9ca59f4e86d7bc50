//! Kinetically constrained spin models on the line and on trees.
//!
//! The East process lives on integer sites carrying 0/1 spins. A site may
//! refresh its spin (to 1 with probability `p`, to 0 with probability
//! `q = 1 - p`) only while the site to its left holds a 0. Zeros therefore
//! facilitate motion to their right, and a configuration with a rightmost
//! zero has a well-defined *front* that drifts rightward at a linear speed
//! with diffusive fluctuations. This crate provides:
//!
//! - [`engine`]: the event-driven simulator (graphical construction: per-site
//!   rate-1 clocks plus Bernoulli coins), including shared-stream couplings
//!   and the Poisson-tail bound on information propagation;
//! - [`front`]: estimators for the front velocity, its variance rate, the
//!   law of the spins behind the front, increment mixing, and CLT checks;
//! - [`spacing`]: the strong/weak spacing predicates on the pattern of zeros
//!   behind the front and Monte Carlo estimates of their failure rates;
//! - [`exact`]: exact finite-interval analysis — sparse generator, spectral
//!   gap, total-variation curves via uniformization, mixing times, and the
//!   cutoff-profile experiment at large interval length;
//! - [`trees`]: constrained models on k-ary trees (a node needs j of its k
//!   children at 0), root hitting times, stochastic-domination checks, and
//!   the bootstrap fixed-point solver for the critical density;
//! - [`stats`]: the small statistical toolkit the estimators share;
//! - [`ensemble`]: seeded replica scheduling, parallel when the `parallel`
//!   feature is enabled (default), sequential otherwise.
//!
//! Everything is deterministic given a master seed: replica r draws from an
//! independent counter-indexed stream of one ChaCha8 generator, so replica
//! subsets reproduce independently of how many run or in what order.

pub mod engine;
pub mod ensemble;
pub mod error;
pub mod exact;
pub mod front;
pub mod params;
pub mod report;
pub mod spacing;
pub mod stats;
pub mod trees;

pub use error::{Error, Result};
pub use params::Params;
