//! Monte Carlo cutoff experiment.
//!
//! For intervals far beyond exact diagonalization, the finite-chain
//! distance d_L(t) is bracketed by simulable quantities. Upper bound:
//! d_L(t) ≤ P(τ(L) > t), where τ(L) is the time the front started from
//! all ones first reaches L — the grand coupling has coalesced once the
//! front has swept the interval. Lower bound: d_L(t) ≥ P(X(t) ≤ L − a) −
//! p^a for any a, since the event "no zero within a of the right edge"
//! has stationary mass at most p^a; a = ln L makes the correction
//! vanish. Both are estimated from one ensemble of half-line runs — the
//! half-line process restricted to [1, L] is exactly the finite chain, and
//! the front hits L precisely when site L first flips to 0. Around
//! t = L/v + s√L the two bounds pinch onto the Gaussian profile
//! Φ(−v^{3/2}s/σ*): that is the cutoff shape this experiment exhibits.

use crate::engine::{run, EventStream, LatticeState, Probe, RunOptions, DEFAULT_W_KEEP};
use crate::ensemble::try_map_replicas;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::{normal_cdf, proportion_ci};
use serde::Serialize;

/// One window offset s: the two distance bounds at t = L/v̂ + s·√L and
/// the Gaussian profile value they should straddle.
#[derive(Debug, Clone, Serialize)]
pub struct CutoffPoint {
    pub s: f64,
    pub t: f64,
    /// P̂(τ(L) > t) — upper bound on d_L(t).
    pub d_upper: f64,
    pub d_upper_ci: (f64, f64),
    /// P̂(X(t) ≤ L − a_L) − p^{a_L} — lower bound on d_L(t).
    pub d_lower: f64,
    pub d_lower_ci: (f64, f64),
    /// Φ(−v̂^{3/2} s / σ̂*).
    pub profile: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffComparison {
    pub l: i64,
    pub replicas: u64,
    pub v_hat: f64,
    pub sigma_star: f64,
    /// Edge margin a_L = ln L.
    pub a_l: f64,
    /// Stationary correction p^{a_L} subtracted from the lower bound.
    pub p_to_a_l: f64,
    /// Sorted by s ascending.
    pub points: Vec<CutoffPoint>,
}

impl CutoffComparison {
    /// Largest amount by which the lower bound exceeds the upper bound
    /// (point-wise); should be statistically zero.
    pub fn order_violation(&self) -> f64 {
        self.points
            .iter()
            .map(|pt| pt.d_lower - pt.d_upper)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest |d_upper − profile| over the points.
    pub fn worst_profile_gap(&self) -> f64 {
        self.points
            .iter()
            .map(|pt| (pt.d_upper - pt.profile).abs())
            .fold(0.0, f64::max)
    }
}

/// Run the cutoff experiment on [1, L] at window offsets `s_values`,
/// using externally measured front speed `v_hat` and dispersion
/// `sigma_star` to place the observation times.
pub fn mc_cutoff_experiment(
    params: Params,
    l: i64,
    s_values: &[f64],
    v_hat: f64,
    sigma_star: f64,
    replicas: u64,
    seed: u64,
) -> Result<CutoffComparison> {
    if l < 100 {
        return Err(Error::usage(format!("cutoff experiment needs L >= 100, got {l}")));
    }
    if !(v_hat > 0.0 && v_hat < 1.0) {
        return Err(Error::usage(format!("front speed estimate out of (0,1): {v_hat}")));
    }
    if !(sigma_star > 0.0 && sigma_star.is_finite()) {
        return Err(Error::usage(format!("dispersion must be positive, got {sigma_star}")));
    }
    if s_values.is_empty() || s_values.iter().any(|s| !s.is_finite()) {
        return Err(Error::usage("need a nonempty finite s grid"));
    }
    if replicas < 2 {
        return Err(Error::usage("need at least 2 replicas"));
    }

    let mut s_sorted = s_values.to_vec();
    s_sorted.sort_by(|a, b| a.total_cmp(b));
    let lf = l as f64;
    let times: Vec<f64> = s_sorted.iter().map(|s| lf / v_hat + s * lf.sqrt()).collect();
    if times[0] <= 0.0 {
        return Err(Error::usage(format!(
            "s = {} places the observation time at {:.3} <= 0",
            s_sorted[0], times[0]
        )));
    }
    let horizon = *times.last().unwrap();
    let a_l = lf.ln();
    let p_to_a_l = params.p.powf(a_l);

    let probes = vec![Probe::Front { times: times.clone() }, Probe::HitTime { target: l }];
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), max_window: 1 << 24 };

    // Per replica: front position at every observation time, and τ(L).
    let per: Vec<(Vec<i64>, Option<f64>)> = try_map_replicas(replicas, |r| {
        let record = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            horizon,
            &probes,
            &options,
        )?;
        let (_, positions) = record.samples[0].front_positions().unwrap();
        let tau = record.samples[1].hit_time().unwrap();
        Ok((positions.to_vec(), tau))
    })?;

    let thresh = l - a_l.ceil() as i64;
    let points = s_sorted
        .iter()
        .zip(&times)
        .enumerate()
        .map(|(i, (&s, &t))| {
            // τ > t counts censored runs: τ unobserved means τ > horizon ≥ t.
            let survive = per.iter().filter(|(_, tau)| tau.is_none_or(|x| x > t)).count();
            let behind = per.iter().filter(|(pos, _)| pos[i] <= thresh).count();
            let up = proportion_ci(survive as u64, replicas, 0.95);
            let lo = proportion_ci(behind as u64, replicas, 0.95);
            CutoffPoint {
                s,
                t,
                d_upper: up.p_hat,
                d_upper_ci: (up.lo, up.hi),
                d_lower: lo.p_hat - p_to_a_l,
                d_lower_ci: (lo.lo - p_to_a_l, lo.hi - p_to_a_l),
                profile: normal_cdf(-v_hat.powf(1.5) * s / sigma_star),
            }
        })
        .collect();

    Ok(CutoffComparison { l, replicas, v_hat, sigma_star, a_l, p_to_a_l, points })
}

/// Survival function of the hitting time τ(L) on the finite interval
/// [1, L] started from all ones: P̂(τ > t) with a Wilson interval, at each
/// requested time. This is the Monte Carlo upper bound on the exact
/// distance curve, comparable to [`super::tv_curve`] output at small L.
pub fn finite_hitting_survival(
    params: Params,
    l: usize,
    times: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<(f64, f64, f64)>> {
    if times.is_empty() || times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::usage("need finite nonnegative times"));
    }
    if replicas < 2 {
        return Err(Error::usage("need at least 2 replicas"));
    }
    let horizon = times.iter().cloned().fold(0.0, f64::max);
    let probes = vec![Probe::HitTime { target: l as i64 }];
    let taus: Vec<Option<f64>> = try_map_replicas(replicas, |r| {
        let record = run(
            LatticeState::all_ones_interval(l)?,
            params,
            EventStream::new(seed, r, params.p),
            horizon,
            &probes,
            &RunOptions::default(),
        )?;
        Ok(record.samples[0].hit_time().unwrap())
    })?;
    Ok(times
        .iter()
        .map(|&t| {
            let survive = taus.iter().filter(|tau| tau.is_none_or(|x| x > t)).count();
            let ci = proportion_ci(survive as u64, replicas, 0.95);
            (t, ci.p_hat, 0.5 * (ci.hi - ci.lo))
        })
        .collect())
}
