//! Front statistics: velocity, diffusion constant, increment mixing, the
//! law of the spins behind the front, and CLT diagnostics.
//!
//! All estimators consume traces started from the canonical configuration
//! ω*: a single zero at the origin with ones to its right. The front
//! X(t) then advances ballistically, X(t)/t → v = q − p·q*, where
//! q* = ν(ω₋₁ = 0) is the zero density immediately behind the front under
//! the front-anchored invariant law ν. Since q < q* ≤ 1, the velocity is
//! pinned to the window [q − p, q²] — every velocity estimate carries that
//! window as a built-in consistency check, and the measured q̂* feeds the
//! identity back as a second, independent estimate of v.
//!
//! The diffusion constant σ*² is estimated two ways — across replicas from
//! Var X(T)/T, and from the increment autocovariances via
//! Δ⁻¹[Var ξ + 2 Σ_ℓ Cov(ξ₀, ξ_ℓ)] — which must agree; their agreement is
//! itself one of the headline checks. Increment autocovariances decay
//! quickly in the lag, so the covariance sum is truncated at the first lag
//! whose confidence interval contains zero (capped at 50).

use crate::engine::{run, EventStream, LatticeState, Probe, RunOptions, DEFAULT_W_KEEP};
use crate::ensemble::try_map_replicas;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::{
    self, autocov_raw, bootstrap_ci, ks_distance, normal_cdf, proportion_ci, variance,
    AutocovPoint, DecayFit, SampleSummary,
};
use serde::{Deserialize, Serialize};

const CI_LEVEL: f64 = 0.95;

/// Front positions sampled on the grid t_n = nΔ.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontTrace {
    pub replica: u64,
    /// Sample period Δ.
    pub delta: f64,
    /// X_n at t_n = nΔ; X_0 is the starting front.
    pub positions: Vec<i64>,
    /// Default burn-in sample index (first tenth of the horizon).
    pub burn_in: usize,
}

impl FrontTrace {
    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.delta
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Increments ξ_n = X_n − X_{n−1}, n = 1..N.
    pub fn increments(&self) -> Vec<i64> {
        self.positions.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Increments with both endpoints past the burn-in index.
    pub fn post_burn_increments(&self, burn_in: usize) -> Vec<f64> {
        self.positions[burn_in..].windows(2).map(|w| (w[1] - w[0]) as f64).collect()
    }
}

/// Simulate `replicas` independent fronts from ω* and sample X on the grid
/// nΔ up to `horizon`. Sites far behind the front are frozen (they cannot
/// catch up to influence it), which keeps the event rate bounded in t.
pub fn trace_front(
    params: Params,
    horizon: f64,
    delta: f64,
    replicas: u64,
    seed: u64,
) -> Result<Vec<FrontTrace>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::usage(format!("delta must be positive, got {delta}")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::usage(format!("horizon must be finite and >= 0, got {horizon}")));
    }
    let n = (horizon / delta + 1e-9).floor() as usize;
    let times: Vec<f64> = (0..=n).map(|i| i as f64 * delta).collect();
    let run_horizon = *times.last().unwrap();
    let burn_in = n.div_ceil(10);
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), ..RunOptions::default() };

    try_map_replicas(replicas, |r| {
        let rec = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            run_horizon,
            &[Probe::Front { times: times.clone() }],
            &options,
        )?;
        let (_, positions) = rec.samples[0].front_positions().expect("front probe");
        Ok(FrontTrace { replica: r, delta, positions: positions.to_vec(), burn_in })
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VelocityEstimate {
    pub v_hat: f64,
    pub ci_half: f64,
    pub n_replicas: usize,
    /// Lower end of the admissible window, max(q − p, 0).
    pub window_lo: f64,
    /// Upper end of the admissible window, q².
    pub window_hi: f64,
    pub in_window: bool,
    /// True when the CI is tight enough (< window width / 4) for the
    /// window check to be meaningful.
    pub decisive: bool,
    /// True when replicas < 2 left the CI unbounded.
    pub degenerate_ci: bool,
}

/// Agreement report between a direct velocity estimate and the identity
/// v = q − p·q* evaluated at a measured q̂*.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FormulaCheck {
    pub v_formula: f64,
    pub formula_ci_half: f64,
    pub gap: f64,
    pub combined_ci: f64,
    /// |v̂ − v_formula| ≤ 2·(both CI half-widths).
    pub agrees: bool,
}

impl VelocityEstimate {
    /// Cross-check against v = q − p·q̂* given an estimate of q* with its
    /// CI half-width.
    pub fn formula_check(&self, params: Params, q_star_hat: f64, q_star_ci: f64) -> FormulaCheck {
        let v_formula = params.q - params.p * q_star_hat;
        let formula_ci_half = params.p * q_star_ci;
        let gap = (self.v_hat - v_formula).abs();
        let combined_ci = self.ci_half + formula_ci_half;
        FormulaCheck { v_formula, formula_ci_half, gap, combined_ci, agrees: gap <= 2.0 * combined_ci }
    }
}

fn effective_burn(trace: &FrontTrace, burn_in: Option<usize>) -> Result<usize> {
    let b = burn_in.unwrap_or(trace.burn_in);
    if b + 1 >= trace.len() {
        return Err(Error::usage(format!(
            "burn-in index {b} leaves no increments in a trace of {} samples",
            trace.len()
        )));
    }
    Ok(b)
}

/// Pooled post-burn-in slope with a replica-based CI, reported against the
/// admissible window [max(q−p,0), q²].
pub fn estimate_velocity(
    traces: &[FrontTrace],
    burn_in: Option<usize>,
    params: Params,
) -> Result<VelocityEstimate> {
    if traces.is_empty() {
        return Err(Error::usage("estimate_velocity needs at least one trace"));
    }
    let mut slopes = Vec::with_capacity(traces.len());
    for tr in traces {
        let b = effective_burn(tr, burn_in)?;
        let last = tr.len() - 1;
        let dx = (tr.positions[last] - tr.positions[b]) as f64;
        let dt = tr.time(last) - tr.time(b);
        slopes.push(dx / dt);
    }
    let s = SampleSummary::from_slice(&slopes, CI_LEVEL);
    let window_lo = (params.q - params.p).max(0.0);
    let window_hi = params.q * params.q;
    let in_window = (window_lo..=window_hi).contains(&s.mean);
    let decisive = s.ci_half < (window_hi - window_lo) / 4.0;
    Ok(VelocityEstimate {
        v_hat: s.mean,
        ci_half: s.ci_half,
        n_replicas: traces.len(),
        window_lo,
        window_hi,
        in_window,
        decisive,
        degenerate_ci: !s.ci_half.is_finite(),
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EstimatorPart {
    pub value: f64,
    pub ci_half: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SigmaStarEstimate {
    /// Var over replicas of X(T), divided by T (bootstrap CI).
    pub replica_based: EstimatorPart,
    /// Δ⁻¹[γ̂(0) + 2Σ_ℓ γ̂(ℓ)] with the lag sum truncated at the first
    /// insignificant lag; per-replica values give the CI.
    pub covariance_sum: EstimatorPart,
    /// Number of positive lags included in the covariance sum.
    pub lags_summed: usize,
    /// The two estimators agree within 2 combined CI half-widths.
    pub agree: bool,
    /// Covariance-sum estimate fell below −CI: the lag window is
    /// inconsistent with a nonnegative variance rate (reported, not
    /// clamped).
    pub inconsistent_window: bool,
    pub delta: f64,
}

impl SigmaStarEstimate {
    /// σ̂* from the covariance-sum estimator (the tighter of the two).
    pub fn sigma_star(&self) -> f64 {
        self.covariance_sum.value.max(0.0).sqrt()
    }
}

/// Pooled autocovariance curve: per-replica γ̂ vectors averaged, CI from
/// the replica spread.
fn pooled_autocov(per_replica: &[Vec<f64>]) -> Vec<AutocovPoint> {
    let lags = per_replica[0].len();
    (0..lags)
        .map(|lag| {
            let vals: Vec<f64> = per_replica.iter().map(|g| g[lag]).collect();
            let s = SampleSummary::from_slice(&vals, CI_LEVEL);
            AutocovPoint { lag, gamma: s.mean, ci_half: s.ci_half }
        })
        .collect()
}

fn replica_gammas(
    traces: &[FrontTrace],
    burn_in: Option<usize>,
    max_lag: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(traces.len());
    for tr in traces {
        let b = effective_burn(tr, burn_in)?;
        let xs = tr.post_burn_increments(b);
        if xs.len() <= max_lag {
            return Err(Error::usage(format!(
                "trace has {} post-burn increments, need > max_lag = {max_lag}",
                xs.len()
            )));
        }
        out.push(autocov_raw(&xs, max_lag));
    }
    Ok(out)
}

/// Two estimators of the variance rate σ*² with agreement report.
pub fn estimate_sigma_star(
    traces: &[FrontTrace],
    burn_in: Option<usize>,
    max_lag: usize,
) -> Result<SigmaStarEstimate> {
    if traces.len() < 2 {
        return Err(Error::usage("estimate_sigma_star needs >= 2 replicas"));
    }
    if max_lag < 1 {
        return Err(Error::usage("max_lag must be >= 1"));
    }
    let delta = traces[0].delta;
    if traces.iter().any(|t| t.delta != delta || t.len() != traces[0].len()) {
        return Err(Error::usage("traces must share delta and grid length"));
    }
    let max_lag = max_lag.min(50);

    // (a) replica spread of the endpoint.
    let t_end = traces[0].time(traces[0].len() - 1);
    let ends: Vec<f64> = traces.iter().map(|t| *t.positions.last().unwrap() as f64).collect();
    let var_rate = |xs: &[f64]| variance(xs) / t_end;
    let a_value = var_rate(&ends);
    let (blo, bhi) = bootstrap_ci(&ends, var_rate, 400, 0x5EED_51F7, CI_LEVEL);
    let replica_based = EstimatorPart { value: a_value, ci_half: (bhi - blo) / 2.0 };

    // (b) increment covariance sum with data-driven truncation.
    let gammas = replica_gammas(traces, burn_in, max_lag)?;
    let pooled = pooled_autocov(&gammas);
    let lags_summed = (1..=max_lag)
        .find(|&l| pooled[l].gamma.abs() <= pooled[l].ci_half)
        .map_or(max_lag, |l| l - 1);
    let s_r: Vec<f64> = gammas
        .iter()
        .map(|g| (g[0] + 2.0 * g[1..=lags_summed].iter().sum::<f64>()) / delta)
        .collect();
    let s = SampleSummary::from_slice(&s_r, CI_LEVEL);
    let covariance_sum = EstimatorPart { value: s.mean, ci_half: s.ci_half };

    let agree = (replica_based.value - covariance_sum.value).abs()
        <= 2.0 * (replica_based.ci_half + covariance_sum.ci_half);
    let inconsistent_window = covariance_sum.value < -covariance_sum.ci_half;
    Ok(SigmaStarEstimate {
        replica_based,
        covariance_sum,
        lags_summed,
        agree,
        inconsistent_window,
        delta,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixingCurve {
    pub points: Vec<AutocovPoint>,
    /// Smallest positive lag whose CI contains 0.
    pub first_zero_lag: Option<usize>,
}

/// Lag autocovariances of the increments ξ, pooled across replicas.
pub fn increment_mixing(
    traces: &[FrontTrace],
    burn_in: Option<usize>,
    max_lag: usize,
) -> Result<MixingCurve> {
    if traces.len() < 2 {
        return Err(Error::usage("increment_mixing needs >= 2 replicas"));
    }
    let gammas = replica_gammas(traces, burn_in, max_lag)?;
    let points = pooled_autocov(&gammas);
    let first_zero_lag = (1..points.len()).find(|&l| points[l].gamma.abs() <= points[l].ci_half);
    Ok(MixingCurve { points, first_zero_lag })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OffsetFreq {
    /// Offset i means the site front − i.
    pub offset: usize,
    pub freq: f64,
    pub ci_half: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuEstimate {
    pub time: f64,
    pub n_snapshots: u64,
    pub freqs: Vec<OffsetFreq>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuRun {
    pub per_time: Vec<NuEstimate>,
    /// All snapshot times pooled, CI from the replica spread (snapshots
    /// within a replica are correlated, replicas are not).
    pub pooled: NuEstimate,
    pub q_star_hat: f64,
    pub q_star_ci_half: f64,
    /// q − p·q̂*, the velocity implied by the zero density at offset 1.
    pub v_check: f64,
    pub v_check_ci_half: f64,
    pub window: usize,
    pub replicas: u64,
}

/// Zero frequencies behind the front, in front-relative coordinates, at
/// each snapshot time and pooled over all of them.
pub fn estimate_nu(
    params: Params,
    times: &[f64],
    w: usize,
    replicas: u64,
    seed: u64,
) -> Result<NuRun> {
    if w == 0 || w > DEFAULT_W_KEEP as usize {
        return Err(Error::usage(format!("window w={w} outside 1..={DEFAULT_W_KEEP}")));
    }
    if times.is_empty() || times.windows(2).any(|ts| ts[1] <= ts[0]) {
        return Err(Error::usage("snapshot times must be nonempty and strictly increasing"));
    }
    if replicas < 1 {
        return Err(Error::usage("estimate_nu needs >= 1 replica"));
    }
    let horizon = *times.last().unwrap();
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), ..RunOptions::default() };
    let n_times = times.len();

    struct Rep {
        // zero counts laid out [time-major][offset]
        counts: Vec<u32>,
        // per-offset zero fraction pooled over this replica's snapshots
        pooled: Vec<f64>,
    }
    let reps: Vec<Rep> = try_map_replicas(replicas, |r| {
        let rec = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            horizon,
            &[Probe::FrontWindow { times: times.to_vec(), width: w + 1 }],
            &options,
        )?;
        let (_, _, rows) = rec.samples[0].window_rows().expect("window probe");
        let mut counts = vec![0u32; n_times * w];
        for (ti, row) in rows.iter().enumerate() {
            for i in 1..=w {
                counts[ti * w + (i - 1)] += u32::from(row[i] == 0);
            }
        }
        let pooled = (0..w)
            .map(|o| {
                (0..n_times).map(|ti| counts[ti * w + o] as f64).sum::<f64>() / n_times as f64
            })
            .collect();
        Ok(Rep { counts, pooled })
    })?;

    let per_time: Vec<NuEstimate> = (0..n_times)
        .map(|ti| {
            let freqs = (0..w)
                .map(|o| {
                    let zeros: u64 =
                        reps.iter().map(|rep| rep.counts[ti * w + o] as u64).sum();
                    let ci = proportion_ci(zeros, replicas, CI_LEVEL);
                    OffsetFreq { offset: o + 1, freq: ci.p_hat, ci_half: (ci.hi - ci.lo) / 2.0 }
                })
                .collect();
            NuEstimate { time: times[ti], n_snapshots: replicas, freqs }
        })
        .collect();

    let pooled_freqs: Vec<OffsetFreq> = (0..w)
        .map(|o| {
            if replicas == 1 {
                // No replica spread to measure: fall back to a binomial
                // interval over the lone replica's snapshots. They are
                // correlated in time, so treat this as a wide rough scale
                // rather than a calibrated level.
                let zeros: u64 = (0..n_times).map(|ti| reps[0].counts[ti * w + o] as u64).sum();
                let ci = proportion_ci(zeros, n_times as u64, CI_LEVEL);
                return OffsetFreq { offset: o + 1, freq: ci.p_hat, ci_half: (ci.hi - ci.lo) / 2.0 };
            }
            let vals: Vec<f64> = reps.iter().map(|rep| rep.pooled[o]).collect();
            let s = SampleSummary::from_slice(&vals, CI_LEVEL);
            OffsetFreq { offset: o + 1, freq: s.mean, ci_half: s.ci_half }
        })
        .collect();
    let q_star_hat = pooled_freqs[0].freq;
    let q_star_ci_half = pooled_freqs[0].ci_half;
    let pooled = NuEstimate {
        time: horizon,
        n_snapshots: replicas * n_times as u64,
        freqs: pooled_freqs,
    };

    Ok(NuRun {
        per_time,
        pooled,
        q_star_hat,
        q_star_ci_half,
        v_check: params.q - params.p * q_star_hat,
        v_check_ci_half: params.p * q_star_ci_half,
        window: w,
        replicas,
    })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TvPoint {
    pub time: f64,
    pub tv: f64,
    pub ci_half: f64,
    /// Some occupied cell had fewer than 5 counts; the CI was doubled.
    pub undersampled: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NuConvergence {
    pub points: Vec<TvPoint>,
    pub reference_time: f64,
    pub fit: Option<DecayFit>,
    pub window: usize,
}

fn tv_between(ha: &[u64], hb: &[u64], na: f64, nb: f64) -> f64 {
    0.5 * ha
        .iter()
        .zip(hb)
        .map(|(&a, &b)| (a as f64 / na - b as f64 / nb).abs())
        .sum::<f64>()
}

/// Total-variation distance of the w-bit window behind the front between
/// each time and the largest time (the ν proxy), with bootstrap CIs over
/// replicas and a log-linear decay fit.
pub fn nu_convergence(
    params: Params,
    w: usize,
    times: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<NuConvergence> {
    if !(1..=10).contains(&w) {
        return Err(Error::usage(format!("w={w} outside 1..=10 (cells must stay populated)")));
    }
    if times.len() < 2 || times.windows(2).any(|ts| ts[1] <= ts[0]) {
        return Err(Error::usage("need >= 2 strictly increasing times (last is the reference)"));
    }
    if replicas < 100 {
        return Err(Error::usage("nu_convergence needs >= 100 replicas"));
    }
    let horizon = *times.last().unwrap();
    let n_times = times.len();
    let cells = 1usize << w;
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), ..RunOptions::default() };

    // cell code of the w bits behind the front, per replica and time
    let rows: Vec<Vec<u16>> = try_map_replicas(replicas, |r| {
        let rec = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            horizon,
            &[Probe::FrontWindow { times: times.to_vec(), width: w + 1 }],
            &options,
        )?;
        let (_, _, window_rows) = rec.samples[0].window_rows().expect("window probe");
        Ok(window_rows
            .iter()
            .map(|row| {
                let mut code = 0u16;
                for (i, &bit) in row[1..=w].iter().enumerate() {
                    code |= u16::from(bit) << i;
                }
                code
            })
            .collect())
    })?;

    let hist_of = |idx: &[usize], ti: usize| {
        let mut h = vec![0u64; cells];
        for &r in idx {
            h[rows[r][ti] as usize] += 1;
        }
        h
    };
    let all_idx: Vec<usize> = (0..replicas as usize).collect();
    let n = replicas as f64;
    let ref_hist = hist_of(&all_idx, n_times - 1);

    use rand::{Rng, SeedableRng};
    let n_boot = 400usize;
    let mut points = Vec::with_capacity(n_times);
    for (ti, &time) in times.iter().enumerate() {
        let h = hist_of(&all_idx, ti);
        let tv = tv_between(&h, &ref_hist, n, n);
        let undersampled =
            h.iter().chain(&ref_hist).any(|&c| c > 0 && c < 5) && ti != n_times - 1;
        // Percentile bootstrap over replicas; each resample re-draws both
        // the t-histogram and the reference so their coupling within a
        // replica is preserved.
        let mut boots = Vec::with_capacity(n_boot);
        for b in 0..n_boot {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0xB007);
            rng.set_stream(b as u64);
            let idx: Vec<usize> =
                (0..replicas as usize).map(|_| rng.gen_range(0..replicas as usize)).collect();
            let hb = hist_of(&idx, ti);
            let rb = hist_of(&idx, n_times - 1);
            boots.push(tv_between(&hb, &rb, n, n));
        }
        boots.sort_by(|a, b| a.total_cmp(b));
        let lo = boots[(0.025 * (n_boot - 1) as f64).round() as usize];
        let hi = boots[(0.975 * (n_boot - 1) as f64).round() as usize];
        let mut ci_half = (hi - lo) / 2.0;
        if undersampled {
            ci_half *= 2.0;
        }
        points.push(TvPoint { time, tv, ci_half, undersampled });
    }

    let fit_times: Vec<f64> = points[..n_times - 1].iter().map(|p| p.time).collect();
    let fit_tv: Vec<f64> = points[..n_times - 1].iter().map(|p| p.tv).collect();
    let fit = stats::decay_fit(&fit_times, &fit_tv).ok();

    Ok(NuConvergence { points, reference_time: horizon, fit, window: w })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// KS distance of the standardized sample to the standard normal.
    pub ks: f64,
    /// Asymptotic 95% null quantile 1.3581/√n, for context.
    pub ks_null_95: f64,
    pub skewness: f64,
    pub skew_ci_half: f64,
    pub excess_kurtosis: f64,
    pub kurt_ci_half: f64,
    /// Zero empirical SD: standardization impossible.
    pub degenerate: bool,
}

/// Normality diagnostics for an arbitrary sample (standardized in place).
pub fn clt_report_from_samples(xs: &[f64]) -> CltReport {
    let n = xs.len();
    let mean = stats::mean(xs);
    let sd = variance(xs).sqrt();
    if sd == 0.0 || !sd.is_finite() {
        return CltReport {
            n,
            mean,
            sd,
            ks: f64::NAN,
            ks_null_95: 1.3581 / (n as f64).sqrt(),
            skewness: f64::NAN,
            skew_ci_half: f64::NAN,
            excess_kurtosis: f64::NAN,
            kurt_ci_half: f64::NAN,
            degenerate: true,
        };
    }
    let zs: Vec<f64> = xs.iter().map(|x| (x - mean) / sd).collect();
    let nf = n as f64;
    CltReport {
        n,
        mean,
        sd,
        // The KS statistic is meaningless below its sample floor.
        ks: if n >= 20 { ks_distance(&zs, normal_cdf) } else { f64::NAN },
        ks_null_95: 1.3581 / nf.sqrt(),
        skewness: stats::skewness(&zs),
        // Normal-theory standard errors; diagnostics, not tests.
        skew_ci_half: 1.96 * (6.0 / nf).sqrt(),
        excess_kurtosis: stats::excess_kurtosis(&zs),
        kurt_ci_half: 1.96 * (24.0 / nf).sqrt(),
        degenerate: false,
    }
}

/// Simulate X(t) across replicas from ω* and report how close its
/// standardized law is to a Gaussian.
pub fn clt_diagnostics(params: Params, t: f64, replicas: u64, seed: u64) -> Result<CltReport> {
    if replicas < 500 {
        return Err(Error::usage("clt_diagnostics needs >= 500 replicas"));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::usage(format!("t must be positive, got {t}")));
    }
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), ..RunOptions::default() };
    let ends: Vec<f64> = try_map_replicas(replicas, |r| {
        let rec = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            t,
            &[],
            &options,
        )?;
        Ok(rec.final_state.effective_front() as f64)
    })?;
    Ok(clt_report_from_samples(&ends))
}
