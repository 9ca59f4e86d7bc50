//! Seeded sources of (site, ring-time, coin) triples.
//!
//! The dynamics is driven by per-site rate-1 Poisson clocks plus an i.i.d.
//! Bernoulli(p) coin attached to every ring. Two equivalent-in-law sampling
//! modes are provided, matching how the events get consumed:
//!
//! - **Adaptive (Gillespie)**: only rings at currently-unconstrained sites
//!   are generated. The consumer reports how many sites are schedulable; the
//!   stream returns an Exp(n)-distributed wait, a uniform index into that
//!   set, and the coin. Rings at constrained sites would be no-ops, and by
//!   memorylessness skipping them leaves the law of the process unchanged.
//!   Fast, but the sequence depends on the consumer's state — single-replica
//!   use only.
//! - **Clock ([`ClockStream`])**: every site of a *fixed* finite range rings
//!   at rate 1 regardless of state (superposed into one rate-n process).
//!   The sequence is a pure function of the seed, so any number of replicas
//!   can consume the same stream — this is the shared randomness that makes
//!   couplings work.
//!
//! Replica r of master seed m draws from `ChaCha8Rng::seed_from_u64(m)` with
//! stream counter r, so any subset of replicas reproduces independently of
//! the others.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deterministic per-replica generator: master seed + replica counter.
pub fn replica_rng(master_seed: u64, replica: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(replica);
    rng
}

/// Draw order per event is fixed (wait, site, coin) so sequences are stable
/// under refactoring of consumers.
#[derive(Debug, Clone)]
pub struct EventStream {
    rng: ChaCha8Rng,
    p: f64,
}

/// One ring produced by the adaptive mode: time advance since the previous
/// event, index into the consumer's schedulable set, coin value.
#[derive(Debug, Clone, Copy)]
pub struct AdaptiveEvent {
    pub dt: f64,
    pub pick: usize,
    pub coin: u8,
}

impl EventStream {
    pub fn new(master_seed: u64, replica: u64, p: f64) -> Self {
        EventStream { rng: replica_rng(master_seed, replica), p }
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn from_rng(rng: ChaCha8Rng, p: f64) -> Self {
        EventStream { rng, p }
    }

    /// Next legal-ring candidate given `n` schedulable sites. The wait is
    /// Exp(n); `pick` is uniform on 0..n. Returns None when n = 0 (no site
    /// can ring; the caller just advances to its horizon).
    #[inline]
    pub fn next_adaptive(&mut self, n: usize) -> Option<AdaptiveEvent> {
        if n == 0 {
            return None;
        }
        // 1 - U lies in (0, 1], keeping ln finite.
        let u: f64 = self.rng.gen();
        let dt = -(1.0 - u).ln() / n as f64;
        let pick = self.rng.gen_range(0..n);
        let coin = u8::from(self.rng.gen::<f64>() < self.p);
        Some(AdaptiveEvent { dt, pick, coin })
    }
}

/// Ring of a clock stream: absolute site, absolute time, coin.
#[derive(Debug, Clone, Copy)]
pub struct ClockEvent {
    pub site: i64,
    pub t: f64,
    pub coin: u8,
}

/// State-independent rings over the fixed site range [lo, hi]: the
/// superposition of per-site rate-1 clocks. Identical seeds yield identical
/// (site, time, coin) sequences no matter how many replicas consume them.
#[derive(Debug, Clone)]
pub struct ClockStream {
    rng: ChaCha8Rng,
    p: f64,
    lo: i64,
    n_sites: usize,
    t: f64,
}

impl ClockStream {
    pub fn new(master_seed: u64, replica: u64, p: f64, lo: i64, hi: i64) -> Self {
        assert!(hi >= lo);
        ClockStream {
            rng: replica_rng(master_seed, replica),
            p,
            lo,
            n_sites: (hi - lo + 1) as usize,
            t: 0.0,
        }
    }

    /// Next ring anywhere in the range. Times are strictly increasing and
    /// almost surely distinct (ties cannot arise from one superposed
    /// process).
    #[inline]
    pub fn next_event(&mut self) -> ClockEvent {
        let u: f64 = self.rng.gen();
        self.t += -(1.0 - u).ln() / self.n_sites as f64;
        let site = self.lo + self.rng.gen_range(0..self.n_sites) as i64;
        let coin = u8::from(self.rng.gen::<f64>() < self.p);
        ClockEvent { site, t: self.t, coin }
    }
}
