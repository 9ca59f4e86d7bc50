//! Small statistical toolkit shared by the estimators.
//!
//! Everything here is pure and deterministic: bootstrap resampling takes an
//! explicit seed, and no function touches global state. Confidence intervals
//! use the normal approximation by default; percentile bootstrap is available
//! for skewed statistics (hitting times, total-variation estimates).

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Standard normal quantile function.
pub fn normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Two-sided z value for a symmetric CI at `level` (e.g. 0.95 -> 1.959964).
pub fn z_for_level(level: f64) -> f64 {
    normal_quantile(0.5 + level / 2.0)
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance (n-1 normalization); 0 for n < 2.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Mean absolute deviation around the sample mean, E|x - mean|.
pub fn mean_abs_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m).abs()).sum::<f64>() / xs.len() as f64
}

/// Sample skewness (g1, biased normalization).
pub fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

/// Sample excess kurtosis (g2, biased normalization).
pub fn excess_kurtosis(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let m = mean(xs);
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - m).powi(4)).sum::<f64>() / n;
    if m2 <= 0.0 {
        return 0.0;
    }
    m4 / (m2 * m2) - 3.0
}

/// Mean, SD, and a symmetric normal-approximation CI for one sample.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleSummary {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    /// CI half-width at `level`; infinite when n < 2 (degenerate CI flag).
    pub ci_half: f64,
    pub level: f64,
}

impl SampleSummary {
    pub fn from_slice(xs: &[f64], level: f64) -> Self {
        let n = xs.len();
        let sd = variance(xs).sqrt();
        let ci_half = if n >= 2 {
            z_for_level(level) * sd / (n as f64).sqrt()
        } else {
            f64::INFINITY
        };
        SampleSummary { n, mean: mean(xs), sd, ci_half, level }
    }

    pub fn lo(&self) -> f64 {
        self.mean - self.ci_half
    }

    pub fn hi(&self) -> f64 {
        self.mean + self.ci_half
    }
}

/// Wilson score interval for a binomial proportion. Behaves sensibly at 0
/// and n successes, unlike the Wald interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProportionCi {
    pub successes: u64,
    pub n: u64,
    pub p_hat: f64,
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
}

pub fn proportion_ci(successes: u64, n: u64, level: f64) -> ProportionCi {
    assert!(n > 0, "proportion of an empty sample");
    let z = z_for_level(level);
    let nf = n as f64;
    let p_hat = successes as f64 / nf;
    let denom = 1.0 + z * z / nf;
    let center = (p_hat + z * z / (2.0 * nf)) / denom;
    let half = z * ((p_hat * (1.0 - p_hat) + z * z / (4.0 * nf)) / nf).sqrt() / denom;
    ProportionCi {
        successes,
        n,
        p_hat,
        lo: (center - half).max(0.0),
        hi: (center + half).min(1.0),
        level,
    }
}

/// Kolmogorov–Smirnov sup-distance between the empirical CDF of `samples`
/// and a reference CDF.
pub fn ks_distance(samples: &[f64], reference: impl Fn(f64) -> f64) -> f64 {
    assert!(samples.len() >= 20, "KS distance needs at least 20 samples");
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut sup = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference(x);
        let above = (i as f64 + 1.0) / n - f; // just after the jump
        let below = f - i as f64 / n; // just before the jump
        sup = sup.max(above).max(below);
    }
    sup
}

/// One autocovariance value with a Bartlett-style CI half-width.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AutocovPoint {
    pub lag: usize,
    pub gamma: f64,
    pub ci_half: f64,
}

/// Autocovariances with biased (1/n) normalization, no CIs; the building
/// block for single-series and replica-pooled curves.
pub fn autocov_raw(series: &[f64], max_lag: usize) -> Vec<f64> {
    let n = series.len();
    assert!(n > max_lag, "series of length {n} too short for max_lag {max_lag}");
    let m = mean(series);
    let nf = n as f64;
    let mut gammas = Vec::with_capacity(max_lag + 1);
    for lag in 0..=max_lag {
        let mut acc = 0.0;
        for i in 0..n - lag {
            acc += (series[i] - m) * (series[i + lag] - m);
        }
        gammas.push(acc / nf);
    }
    gammas
}

/// Autocovariances with biased (1/n) normalization for lags 0..=max_lag.
///
/// The CI at lag h uses Bartlett's large-lag variance for autocorrelations,
/// Var(rho_h) ~ (1 + 2 sum_{j<h} rho_j^2)/n, scaled back to covariance units
/// by gamma_0. Under white noise this reduces to the familiar gamma_0/sqrt(n)
/// band at every positive lag.
pub fn autocov(series: &[f64], max_lag: usize, level: f64) -> Vec<AutocovPoint> {
    let n = series.len();
    assert!(n > 2 * max_lag, "series of length {n} too short for max_lag {max_lag}");
    let nf = n as f64;
    let gammas = autocov_raw(series, max_lag);
    let g0 = gammas[0];
    let z = z_for_level(level);
    let mut out = Vec::with_capacity(max_lag + 1);
    let mut rho_sq_sum = 0.0;
    for (lag, &gamma) in gammas.iter().enumerate() {
        let ci_half = if lag == 0 || g0 <= 0.0 {
            0.0
        } else {
            z * g0 * ((1.0 + 2.0 * rho_sq_sum) / nf).sqrt()
        };
        out.push(AutocovPoint { lag, gamma, ci_half });
        if g0 > 0.0 {
            let rho = gamma / g0;
            rho_sq_sum += rho * rho;
        }
    }
    out
}

/// Result of the one-sided empirical-CDF dominance test.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DominanceReport {
    /// True when F_a(t) <= F_b(t) + band everywhere (a is stochastically
    /// larger than b, up to sampling error).
    pub pass: bool,
    /// max_t (F_a(t) - F_b(t)); negative values mean strict dominance.
    pub worst_gap: f64,
    /// The allowed slack: sum of the two DKW envelopes at `level`.
    pub band: f64,
    pub level: f64,
}

fn dkw_eps(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Tests whether `a` is stochastically larger than `b`: F_a(t) <= F_b(t) for
/// all t, with slack from the Dvoretzky–Kiefer–Wolfowitz inequality applied
/// to both empirical CDFs at level `level` (split evenly).
pub fn dominance_band(a: &[f64], b: &[f64], level: f64) -> DominanceReport {
    assert!(a.len() >= 100 && b.len() >= 100, "dominance test needs n >= 100 on both sides");
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(|x, y| x.total_cmp(y));
    sb.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    // F_a - F_b is maximal just after a jump of F_a, i.e. at points of `a`.
    let mut worst = f64::NEG_INFINITY;
    let mut jb = 0usize;
    for (ia, &x) in sa.iter().enumerate() {
        while jb < sb.len() && sb[jb] <= x {
            jb += 1;
        }
        let fa = (ia + 1) as f64 / na;
        let fb = jb as f64 / nb;
        worst = worst.max(fa - fb);
    }
    let band = dkw_eps(sa.len(), level / 2.0) + dkw_eps(sb.len(), level / 2.0);
    DominanceReport { pass: worst <= band, worst_gap: worst, band, level }
}

/// Least-squares fit of log(distance) against time.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    /// True when the raw distance sequence is strictly decreasing.
    pub monotone_decreasing: bool,
    pub n_used: usize,
    /// Points dropped because distance <= 0 (log undefined).
    pub n_excluded: usize,
}

pub fn decay_fit(times: &[f64], distances: &[f64]) -> Result<DecayFit> {
    if times.len() != distances.len() {
        return Err(Error::usage("decay_fit: times and distances differ in length"));
    }
    let pairs: Vec<(f64, f64)> = times
        .iter()
        .zip(distances)
        .filter(|(_, &d)| d > 0.0)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    let n_excluded = times.len() - pairs.len();
    if pairs.len() < 4 {
        return Err(Error::usage(format!(
            "decay_fit: needs at least 4 positive distances, got {}",
            pairs.len()
        )));
    }
    let n = pairs.len() as f64;
    let tx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let ty = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pairs.iter().map(|p| (p.0 - tx) * (p.0 - tx)).sum();
    let sxy: f64 = pairs.iter().map(|p| (p.0 - tx) * (p.1 - ty)).sum();
    let slope = sxy / sxx;
    let monotone = distances.windows(2).all(|w| w[1] < w[0]);
    Ok(DecayFit {
        slope,
        intercept: ty - slope * tx,
        monotone_decreasing: monotone,
        n_used: pairs.len(),
        n_excluded,
    })
}

/// Percentile bootstrap CI for an arbitrary statistic of one sample.
/// Deterministic for a fixed seed; resample r draws from stream r of a
/// ChaCha8 generator so the result is independent of evaluation order.
pub fn bootstrap_ci(
    xs: &[f64],
    stat: impl Fn(&[f64]) -> f64,
    resamples: usize,
    seed: u64,
    level: f64,
) -> (f64, f64) {
    assert!(!xs.is_empty() && resamples >= 10);
    let n = xs.len();
    let mut stats = Vec::with_capacity(resamples);
    let mut buf = vec![0.0; n];
    for r in 0..resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        for slot in buf.iter_mut() {
            *slot = xs[rng.gen_range(0..n)];
        }
        stats.push(stat(&buf));
    }
    stats.sort_by(|a, b| a.total_cmp(b));
    let alpha = 1.0 - level;
    let pick = |p: f64| {
        let idx = (p * (resamples - 1) as f64).round() as usize;
        stats[idx.min(resamples - 1)]
    };
    (pick(alpha / 2.0), pick(1.0 - alpha / 2.0))
}

/// Plug-in estimate of E[max of k i.i.d. draws] from the empirical CDF:
/// sum over order statistics x_(i) of [(i/n)^k - ((i-1)/n)^k].
pub fn plugin_max_of_k_expectation(xs: &[f64], k: u32) -> f64 {
    assert!(!xs.is_empty());
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut acc = 0.0;
    let mut prev_pow = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let cur_pow = ((i + 1) as f64 / n).powi(k as i32);
        acc += x * (cur_pow - prev_pow);
        prev_pow = cur_pow;
    }
    acc
}

/// Pearson chi-square statistic for independence in a contingency table,
/// with its degrees of freedom. Rows/columns with zero totals are dropped.
pub fn chi_square_independence(table: &[Vec<u64>]) -> (f64, usize) {
    let rows = table.len();
    let cols = table.first().map_or(0, |r| r.len());
    assert!(rows >= 2 && cols >= 2, "contingency table too small");
    let row_tot: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_tot: Vec<f64> =
        (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    let total: f64 = row_tot.iter().sum();
    let live_rows = row_tot.iter().filter(|&&t| t > 0.0).count();
    let live_cols = col_tot.iter().filter(|&&t| t > 0.0).count();
    let mut stat = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let expected = row_tot[i] * col_tot[j] / total;
            if expected > 0.0 {
                let diff = table[i][j] as f64 - expected;
                stat += diff * diff / expected;
            }
        }
    }
    (stat, (live_rows - 1) * (live_cols - 1))
}

/// Upper quantile of the chi-square distribution (for the independence test).
pub fn chi_square_quantile(df: usize, p: f64) -> f64 {
    use statrs::distribution::ChiSquared;
    ChiSquared::new(df as f64).unwrap().inverse_cdf(p)
}
