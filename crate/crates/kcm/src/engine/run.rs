//! Event-driven simulation loops.
//!
//! [`run`] drives a single replica with adaptive (Gillespie) scheduling: a
//! set `U` of currently-unconstrained sites is maintained, the total legal
//! ring rate is `|U|`, and each event picks a uniform member of `U` plus a
//! Bernoulli(p) coin. Rings at constrained sites are no-ops and are never
//! generated; by memorylessness of the clocks this changes nothing in law.
//! After a flip at `x` only the membership of `x + 1` can change (the
//! constraint of a site reads its left neighbor), so bookkeeping is O(1)
//! per event. The window grows to `front + 2` as the front advances, and an
//! optional left truncation freezes sites far behind the front — sound for
//! front/ν statistics because influence from distance `W` behind the front
//! would need a chain of rings of length `W` to outrun the front, an event
//! exponentially unlikely in `W`.
//!
//! [`coupled_run`] evolves several initial states under one shared clock
//! stream (the basic coupling). States agree forever once they agree,
//! because agreement on a left prefix is preserved (no site reads to its
//! right) and shared coins refresh agreeing sites identically. The run
//! verifies the coupling fact used for mixing-time upper bounds: all states
//! have coalesced by the first time the all-ones replica's front reaches
//! the right end of the window.

use super::events::{ClockStream, EventStream};
use super::state::{Boundary, LatticeState};
use crate::error::{Error, Result};
use crate::params::Params;

/// Default left-truncation depth for ν-estimation runs: sites more than
/// this far behind the front are frozen.
pub const DEFAULT_W_KEEP: u32 = 512;

/// Measurements taken during a run.
#[derive(Debug, Clone)]
pub enum Probe {
    /// Effective front position at each sample time (sorted, within
    /// horizon).
    Front { times: Vec<f64> },
    /// Spins at offsets `0..width` behind the effective front at each
    /// sample time; offset 0 is the front site itself (always 0).
    FrontWindow { times: Vec<f64>, width: usize },
    /// First time the effective front reaches `target`.
    HitTime { target: i64 },
}

#[derive(Debug, Clone)]
pub enum ProbeSamples {
    Front { times: Vec<f64>, positions: Vec<i64> },
    FrontWindow { times: Vec<f64>, width: usize, rows: Vec<Vec<u8>> },
    HitTime { target: i64, time: Option<f64> },
}

/// Sample times, window width, and per-time spin rows of a front window.
pub type WindowRows<'a> = (&'a [f64], usize, &'a [Vec<u8>]);

impl ProbeSamples {
    pub fn front_positions(&self) -> Option<(&[f64], &[i64])> {
        match self {
            ProbeSamples::Front { times, positions } => Some((times, positions)),
            _ => None,
        }
    }

    pub fn hit_time(&self) -> Option<Option<f64>> {
        match self {
            ProbeSamples::HitTime { time, .. } => Some(*time),
            _ => None,
        }
    }

    pub fn window_rows(&self) -> Option<WindowRows<'_>> {
        match self {
            ProbeSamples::FrontWindow { times, width, rows } => Some((times, *width, rows)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Freeze sites more than this far behind the front (None = never).
    pub w_keep: Option<u32>,
    /// Hard cap on the window length (memory guard).
    pub max_window: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { w_keep: None, max_window: 1 << 24 }
    }
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub final_state: LatticeState,
    pub samples: Vec<ProbeSamples>,
    pub horizon: f64,
    /// Number of legal rings applied.
    pub legal_rings: u64,
}

/// Set of schedulable sites with O(1) insert/remove/uniform-pick. Sites are
/// dense integers >= base (the window only ever grows right).
struct SiteSet {
    base: i64,
    items: Vec<i64>,
    pos: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl SiteSet {
    fn new(base: i64, capacity: usize) -> Self {
        SiteSet { base, items: Vec::with_capacity(capacity), pos: vec![ABSENT; capacity] }
    }

    #[inline]
    fn idx(&self, site: i64) -> usize {
        debug_assert!(site >= self.base);
        (site - self.base) as usize
    }

    fn ensure(&mut self, site: i64) {
        let i = self.idx(site);
        if i >= self.pos.len() {
            self.pos.resize(i + 1, ABSENT);
        }
    }

    fn insert(&mut self, site: i64) {
        self.ensure(site);
        let i = self.idx(site);
        if self.pos[i] == ABSENT {
            self.pos[i] = self.items.len() as u32;
            self.items.push(site);
        }
    }

    fn remove(&mut self, site: i64) {
        let i = self.idx(site);
        if i >= self.pos.len() || self.pos[i] == ABSENT {
            return;
        }
        let slot = self.pos[i] as usize;
        let last = *self.items.last().unwrap();
        let last_idx = self.idx(last);
        self.items[slot] = last;
        self.pos[last_idx] = slot as u32;
        self.items.pop();
        self.pos[i] = ABSENT;
    }

    fn set_membership(&mut self, site: i64, member: bool) {
        if member {
            self.insert(site);
        } else {
            self.remove(site);
        }
    }

    #[inline]
    fn len(&self) -> usize {
        self.items.len()
    }

    #[inline]
    fn get(&self, k: usize) -> i64 {
        self.items[k]
    }
}

/// Flattened, time-sorted sample schedule across probes.
struct Schedule {
    entries: Vec<(f64, usize)>, // (time, probe index)
    next: usize,
}

impl Schedule {
    fn build(probes: &[Probe], horizon: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for (pi, probe) in probes.iter().enumerate() {
            let times = match probe {
                Probe::Front { times } | Probe::FrontWindow { times, .. } => times,
                Probe::HitTime { .. } => continue,
            };
            for &t in times {
                if !(0.0..=horizon).contains(&t) {
                    return Err(Error::usage(format!(
                        "probe time {t} outside [0, {horizon}]"
                    )));
                }
                entries.push((t, pi));
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        Ok(Schedule { entries, next: 0 })
    }

    fn peek(&self) -> Option<(f64, usize)> {
        self.entries.get(self.next).copied()
    }

    fn pop(&mut self) {
        self.next += 1;
    }
}

fn empty_samples(probes: &[Probe]) -> Vec<ProbeSamples> {
    probes
        .iter()
        .map(|p| match p {
            Probe::Front { .. } => {
                ProbeSamples::Front { times: Vec::new(), positions: Vec::new() }
            }
            Probe::FrontWindow { width, .. } => {
                ProbeSamples::FrontWindow { times: Vec::new(), width: *width, rows: Vec::new() }
            }
            Probe::HitTime { target } => ProbeSamples::HitTime { target: *target, time: None },
        })
        .collect()
}

fn record_sample(state: &LatticeState, out: &mut ProbeSamples, t: f64) {
    match out {
        ProbeSamples::Front { times, positions } => {
            times.push(t);
            positions.push(state.effective_front());
        }
        ProbeSamples::FrontWindow { times, width, rows } => {
            let f = state.effective_front();
            let row: Vec<u8> = (0..*width as i64).map(|i| state.spin_extended(f - i)).collect();
            times.push(t);
            rows.push(row);
        }
        ProbeSamples::HitTime { .. } => unreachable!("hit probes are not scheduled"),
    }
}

/// Evolve one replica to `horizon` under adaptive scheduling.
pub fn run(
    state0: LatticeState,
    params: Params,
    mut events: EventStream,
    horizon: f64,
    probes: &[Probe],
    options: &RunOptions,
) -> Result<RunRecord> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::usage(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    if events.p() != params.p {
        return Err(Error::usage(format!(
            "event stream coin bias {} disagrees with params.p {}",
            events.p(),
            params.p
        )));
    }
    let mut state = state0;
    let mut schedule = Schedule::build(probes, horizon)?;
    let mut samples = empty_samples(probes);

    // Hit probes trigger on front movement, not on the sample schedule.
    let hit_targets: Vec<(usize, i64)> = probes
        .iter()
        .enumerate()
        .filter_map(|(i, p)| match p {
            Probe::HitTime { target } => Some((i, *target)),
            _ => None,
        })
        .collect();
    let check_hits = |state: &LatticeState, t: f64, samples: &mut Vec<ProbeSamples>| {
        for &(pi, target) in &hit_targets {
            if let ProbeSamples::HitTime { time, .. } = &mut samples[pi] {
                if time.is_none() && state.effective_front() >= target {
                    *time = Some(t);
                }
            }
        }
    };
    check_hits(&state, 0.0, &mut samples);

    let lo = state.lo();
    let mut active_lo = lo; // sites < active_lo are frozen by truncation
    let mut set = SiteSet::new(lo, state.window_len() + 16);
    for x in lo..=state.hi() {
        if state.constraint_unchecked(x) {
            set.insert(x);
        }
    }

    let mut t = 0.0;
    let mut legal_rings = 0u64;
    loop {
        let (dt, pick, coin) = match events.next_adaptive(set.len()) {
            Some(e) => (e.dt, e.pick, e.coin),
            // Nothing can ring any more; drain the schedule at the frozen
            // state and stop.
            None => (f64::INFINITY, 0, 0),
        };
        let t_event = t + dt;

        // Samples strictly before the next event see the current state.
        while let Some((ts, pi)) = schedule.peek() {
            if ts < t_event || t_event > horizon {
                if ts > horizon {
                    break;
                }
                record_sample(&state, &mut samples[pi], ts);
                schedule.pop();
            } else {
                break;
            }
        }
        if t_event > horizon {
            break;
        }
        t = t_event;

        let x = set.get(pick);
        let was_front = state.effective_front();
        let legal = state.apply_ring(x, coin);
        debug_assert!(legal, "scheduled sites must be unconstrained");
        legal_rings += 1;

        // Only the right neighbor's constraint can have changed.
        let neighbor = x + 1;
        if neighbor <= state.hi() {
            set.set_membership(neighbor, state.spin(x) == 0 && neighbor >= active_lo);
        }

        let front = state.effective_front();
        if front > was_front {
            check_hits(&state, t, &mut samples);
            if state.boundary() == Boundary::AllOnesBeyondWindow && state.hi() < front + 2 {
                let old_hi = state.hi();
                state.grow_right_to(front + 2);
                if state.window_len() > options.max_window {
                    return Err(Error::resource(format!(
                        "window grew past {} sites at t={t:.3} (cap max_window)",
                        options.max_window
                    )));
                }
                for nh in old_hi + 1..=state.hi() {
                    set.set_membership(nh, state.constraint_unchecked(nh));
                }
            }
            if let Some(w) = options.w_keep {
                let new_lo = front - w as i64;
                if new_lo > active_lo {
                    for site in active_lo..new_lo {
                        set.remove(site);
                    }
                    active_lo = new_lo;
                }
            }
        }
    }

    Ok(RunRecord { final_state: state, samples, horizon, legal_rings })
}

/// Outcome of a basic-coupling run on a fixed window.
#[derive(Debug, Clone, Copy)]
pub struct CoalescenceRecord {
    /// First time every state agreed on the whole window.
    pub coalesce_time: Option<f64>,
    /// First time the all-ones replica's front reached the right end of the
    /// window (None if no all-ones start was supplied or it never got
    /// there within the horizon).
    pub all_ones_hit_time: Option<f64>,
    pub horizon: f64,
    pub n_states: usize,
}

/// Evolve all `states0` under one shared (site, time, coin) stream derived
/// from `master_seed`/`replica`, on a fixed window. Verifies the coupling
/// fact behind mixing-time upper bounds: if an all-ones start is present,
/// coalescence must happen no later than the first time its front reaches
/// the right end — a violation is reported as `CheckFailed`.
pub fn coupled_run(
    states0: &[LatticeState],
    params: Params,
    master_seed: u64,
    replica: u64,
    horizon: f64,
) -> Result<CoalescenceRecord> {
    let first = states0
        .first()
        .ok_or_else(|| Error::usage("coupled_run needs at least one state"))?;
    if first.boundary() != Boundary::FrozenZeroAtLoMinus1 {
        return Err(Error::usage(
            "coupled_run requires fixed windows (FrozenZeroAtLoMinus1)",
        ));
    }
    let (lo, hi) = (first.lo(), first.hi());
    if states0.iter().any(|s| s.lo() != lo || s.hi() != hi || s.boundary() != first.boundary()) {
        return Err(Error::usage("coupled states must share window and boundary"));
    }

    let mut states: Vec<LatticeState> = states0.to_vec();
    let all_ones_idx = states.iter().position(|s| s.spins().iter().all(|&b| b == 1));

    let all_equal =
        |states: &[LatticeState]| states[1..].iter().all(|s| s.spins() == states[0].spins());

    let mut coalesce_time = if all_equal(&states) { Some(0.0) } else { None };
    let mut hit_time = None;

    let mut clock = ClockStream::new(master_seed, replica, params.p, lo, hi);
    loop {
        // Stop once there is nothing left to observe.
        let want_hit = all_ones_idx.is_some() && hit_time.is_none();
        if coalesce_time.is_some() && !want_hit {
            break;
        }
        let e = clock.next_event();
        if e.t > horizon {
            break;
        }
        for s in states.iter_mut() {
            s.apply_ring(e.site, e.coin);
        }
        if let Some(ai) = all_ones_idx {
            if hit_time.is_none() && states[ai].effective_front() >= hi {
                hit_time = Some(e.t);
            }
        }
        if coalesce_time.is_none() && all_equal(&states) {
            coalesce_time = Some(e.t);
        }
    }

    if let Some(th) = hit_time {
        let coalesced_in_time = coalesce_time.is_some_and(|tc| tc <= th);
        if !coalesced_in_time {
            return Err(Error::check_failed(format!(
                "all-ones front reached the right end at t={th:.6} before coalescence \
                 (coalesce_time={coalesce_time:?})"
            )));
        }
    }

    Ok(CoalescenceRecord {
        coalesce_time,
        all_ones_hit_time: hit_time,
        horizon,
        n_states: states.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(p: f64) -> Params {
        Params::new(p).unwrap()
    }

    #[test]
    fn horizon_zero_returns_start_unchanged() {
        let s0 = LatticeState::all_ones_interval(4).unwrap();
        let rec = run(
            s0.clone(),
            params(0.3),
            EventStream::new(1, 0, 0.3),
            0.0,
            &[],
            &RunOptions::default(),
        )
        .unwrap();
        assert_eq!(rec.final_state, s0);
        assert_eq!(rec.legal_rings, 0);
    }

    #[test]
    fn single_site_matches_two_state_chain() {
        // One unconstrained site starting at 1: P(spin = 0 at t) is
        // q(1 - e^{-t}).
        let p = 0.4;
        let t = 0.7f64;
        let truth = (1.0 - p) * (1.0 - (-t).exp());
        let n = 200_000u64;
        let mut zeros = 0u64;
        for r in 0..n {
            let s0 = LatticeState::all_ones_interval(1).unwrap();
            let rec = run(
                s0,
                params(p),
                EventStream::new(2024, r, p),
                t,
                &[],
                &RunOptions::default(),
            )
            .unwrap();
            zeros += u64::from(rec.final_state.spin(1) == 0);
        }
        let freq = zeros as f64 / n as f64;
        // 3 sigma Monte Carlo band.
        let sigma = (truth * (1.0 - truth) / n as f64).sqrt();
        assert!(
            (freq - truth).abs() < 3.0 * sigma + 1e-4,
            "freq {freq} vs closed form {truth}"
        );
    }

    #[test]
    fn probes_are_deterministic_per_seed() {
        let mk = || {
            run(
                LatticeState::front_start(),
                params(0.3),
                EventStream::new(77, 5, 0.3),
                50.0,
                &[
                    Probe::Front { times: (1..=50).map(|i| i as f64).collect() },
                    Probe::FrontWindow { times: vec![25.0, 50.0], width: 8 },
                ],
                &RunOptions::default(),
            )
            .unwrap()
        };
        let (a, b) = (mk(), mk());
        let (ta, pa) = a.samples[0].front_positions().unwrap();
        let (tb, pb) = b.samples[0].front_positions().unwrap();
        assert_eq!(ta, tb);
        assert_eq!(pa, pb);
        let (_, _, ra) = a.samples[1].window_rows().unwrap();
        let (_, _, rb) = b.samples[1].window_rows().unwrap();
        assert_eq!(ra, rb);
        assert_eq!(a.final_state, b.final_state);
    }

    #[test]
    fn front_window_offset_zero_is_zero_once_front_moves() {
        let rec = run(
            LatticeState::front_start(),
            params(0.3),
            EventStream::new(3, 0, 0.3),
            40.0,
            &[Probe::FrontWindow { times: vec![10.0, 20.0, 30.0, 40.0], width: 4 }],
            &RunOptions::default(),
        )
        .unwrap();
        let (_, _, rows) = rec.samples[0].window_rows().unwrap();
        for row in rows {
            assert_eq!(row[0], 0, "front site must be a zero");
        }
    }

    #[test]
    fn window_grows_ahead_of_front() {
        let rec = run(
            LatticeState::front_start(),
            params(0.2),
            EventStream::new(9, 0, 0.2),
            100.0,
            &[],
            &RunOptions::default(),
        )
        .unwrap();
        let s = rec.final_state;
        assert!(s.effective_front() > 10, "front should have moved well right");
        assert!(s.hi() >= s.effective_front() + 2);
        assert_eq!(s.front(), s.recompute_front());
    }

    #[test]
    fn window_cap_is_a_resource_error() {
        let res = run(
            LatticeState::front_start(),
            params(0.2),
            EventStream::new(9, 0, 0.2),
            200.0,
            &[],
            &RunOptions { w_keep: None, max_window: 16 },
        );
        match res {
            Err(Error::Resource(_)) => {}
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_run_still_tracks_front() {
        // With truncation the far-behind sites freeze, but front statistics
        // stay sane (front keeps advancing, window bookkeeping intact).
        let rec = run(
            LatticeState::front_start(),
            params(0.3),
            EventStream::new(11, 2, 0.3),
            300.0,
            &[Probe::Front { times: vec![100.0, 200.0, 300.0] }],
            &RunOptions { w_keep: Some(32), max_window: 1 << 24 },
        )
        .unwrap();
        let (_, pos) = rec.samples[0].front_positions().unwrap();
        assert!(pos[2] > pos[0], "front should advance");
        assert_eq!(rec.final_state.front(), rec.final_state.recompute_front());
    }

    #[test]
    fn hit_time_probe_fires_once() {
        let rec = run(
            LatticeState::all_ones_interval(6).unwrap(),
            params(0.3),
            EventStream::new(21, 0, 0.3),
            500.0,
            &[Probe::HitTime { target: 6 }],
            &RunOptions::default(),
        )
        .unwrap();
        let hit = rec.samples[0].hit_time().unwrap();
        let t = hit.expect("front should reach 6 well before t=500");
        assert!(t > 0.0 && t < 500.0);
    }

    #[test]
    fn orientation_sites_left_of_x_ignore_right_perturbation() {
        // Two states differing only at sites > 3, driven by the same clock
        // stream: the trajectories restricted to sites <= 3 must be
        // identical (no site reads to its right).
        let p = params(0.4);
        let a0 = LatticeState::new(1, vec![1, 0, 1, 1, 1, 1], Boundary::FrozenZeroAtLoMinus1)
            .unwrap();
        let b0 = LatticeState::new(1, vec![1, 0, 1, 0, 1, 0], Boundary::FrozenZeroAtLoMinus1)
            .unwrap();
        let mut a = a0;
        let mut b = b0;
        let mut clock = ClockStream::new(5150, 0, p.p, 1, 6);
        for _ in 0..2000 {
            let e = clock.next_event();
            a.apply_ring(e.site, e.coin);
            b.apply_ring(e.site, e.coin);
            assert_eq!(&a.spins()[..3], &b.spins()[..3], "left prefix diverged at t={}", e.t);
        }
    }

    #[test]
    fn coupled_identical_states_coalesce_at_zero() {
        let s = LatticeState::all_ones_interval(3).unwrap();
        let rec =
            coupled_run(&[s.clone(), s.clone(), s], params(0.3), 1, 0, 10.0).unwrap();
        assert_eq!(rec.coalesce_time, Some(0.0));
    }

    #[test]
    fn coupled_single_site_coalesces_at_first_ring() {
        // L=1: the one site is unconstrained in both states, so the first
        // shared ring writes the same coin into both.
        let a = LatticeState::new(1, vec![0], Boundary::FrozenZeroAtLoMinus1).unwrap();
        let b = LatticeState::new(1, vec![1], Boundary::FrozenZeroAtLoMinus1).unwrap();
        for r in 0..20 {
            let rec = coupled_run(&[a.clone(), b.clone()], params(0.5), 33, r, 100.0).unwrap();
            let tc = rec.coalesce_time.expect("must coalesce");
            assert!(tc > 0.0);
            // The all-ones replica needs its (only) site to flip to zero;
            // that cannot be earlier than coalescence.
            if let Some(th) = rec.all_ones_hit_time {
                assert!(tc <= th);
            }
        }
    }

    #[test]
    fn coupled_all_starts_coalesce_by_right_end_hit() {
        // Every initial state on a 6-site window, many random streams: the
        // shared-stream coupling must finish by the all-ones front's
        // arrival at the right end (coupled_run errors otherwise).
        let p = params(0.3);
        for r in 0..25 {
            let states: Vec<LatticeState> = (0..64u32)
                .map(|code| {
                    let spins = (0..6).map(|i| ((code >> i) & 1) as u8).collect();
                    LatticeState::new(1, spins, Boundary::FrozenZeroAtLoMinus1).unwrap()
                })
                .collect();
            let rec = coupled_run(&states, p, 4242, r, 4000.0).unwrap();
            let tc = rec.coalesce_time.expect("horizon generous enough to coalesce");
            let th = rec.all_ones_hit_time.expect("front must reach the end");
            assert!(tc <= th, "coalesced at {tc} after right-end hit {th}");
        }
    }

    #[test]
    fn coupled_rejects_growing_windows_and_mismatched_states() {
        let grow = LatticeState::front_start();
        assert!(coupled_run(&[grow], params(0.3), 0, 0, 1.0).is_err());
        let a = LatticeState::all_ones_interval(3).unwrap();
        let b = LatticeState::all_ones_interval(4).unwrap();
        assert!(coupled_run(&[a, b], params(0.3), 0, 0, 1.0).is_err());
    }
}
