//! Graphical-construction engine for the East process.
//!
//! The model: spins ω_x ∈ {0,1} on an integer window; site x may refresh
//! (to 1 with probability p, to 0 with probability q = 1 − p) only while
//! its left neighbor is 0. Each site carries a rate-1 Poisson clock and an
//! independent coin per ring; a ring at a constrained site does nothing.
//!
//! Submodules: [`state`] holds configurations and the front bookkeeping,
//! [`events`] the seeded ring/coin streams (adaptive and per-site modes),
//! [`run`] the simulation loops, and [`linking`] the exact finite-speed
//! tail computation used to sanity-check information propagation.

pub mod events;
pub mod linking;
pub mod run;
pub mod state;

pub use events::{replica_rng, ClockEvent, ClockStream, EventStream};
pub use linking::{default_v_max, linking_probability, LinkingEventQuery, LinkingProbability};
pub use run::{
    coupled_run, run, CoalescenceRecord, Probe, ProbeSamples, RunOptions, RunRecord,
    DEFAULT_W_KEEP,
};
pub use state::{Boundary, LatticeState};
