//! Total-variation distance and mixing times by uniformization.
//!
//! With λ = max |𝓛_ss|, the chain P = I + 𝓛/λ is a proper stochastic
//! matrix and e^{t𝓛} = Σ_k Poisson_{λt}(k) P^k. Evolving a distribution
//! row through repeated P-steps and weighting by Poisson mass avoids
//! eigendecompositions entirely and stays on the probability simplex, so
//! the computed d(t) is stable even deep in the tails. Poisson weights
//! come from the normalized recurrence around the mode — no e^{−λt}
//! underflow — and the discarded tail mass is below 1e−12 by
//! construction.
//!
//! The mixing time is found by bisection on the worst start: bisect on a
//! candidate start first, then certify the result with one full scan over
//! all 2^L starts (repeating from the scan's argmax if it beats the
//! candidate). Above the scan cap the all-ones start is used alone and
//! flagged as a lower bound. Every mixing time is checked against the
//! relaxation-time upper bound ½·gap⁻¹·(2 + ln(1/π*))·ln(1/ε);
//! violating it is a theorem failure, reported as such.

use crate::error::{Error, Result};
use serde::Serialize;

use super::gap::spectral_gap;
use super::GeneratorMatrix;

/// Largest interval for exhaustive worst-start maximization (2^10 starts).
pub const WORST_CASE_L_MAX: usize = 10;

/// Largest interval for mixing-time computation at all; above
/// [`WORST_CASE_L_MAX`] the all-ones start gives a lower bound only.
pub const TMIX_L_MAX: usize = 14;

/// Poisson terms are kept while ≥ this fraction of the modal weight; the
/// discarded mass is far below the 1e−12 target.
const TERM_CUTOFF: f64 = 1e-18;

/// Cap on Poisson terms per evaluation (resource guard on huge λt).
const MAX_TERMS: usize = 4_000_000;

/// Initial distribution for a total-variation curve.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum StartSpec {
    /// The all-ones configuration — the front must cross the whole
    /// interval.
    AllOnes,
    /// A specific encoded state.
    State(usize),
    /// Exact maximum over every start (capped at [`WORST_CASE_L_MAX`]).
    WorstCase,
}

/// d(t) at the requested times.
#[derive(Debug, Clone, Serialize)]
pub struct TvCurve {
    pub times: Vec<f64>,
    pub d: Vec<f64>,
    pub start: StartSpec,
    /// Uniformization rate used.
    pub lambda: f64,
}

/// Certified (or lower-bound) mixing time plus the spectral bound it must
/// respect.
#[derive(Debug, Clone, Serialize)]
pub struct TmixReport {
    pub eps: f64,
    pub t_mix: f64,
    /// Bisection brackets the crossing within this.
    pub tol: f64,
    /// True when the value is an exact maximum over all starts; false
    /// when it is the all-ones lower bound (L above the scan cap).
    pub certified_max: bool,
    /// Start realizing the reported value.
    pub worst_start: usize,
    pub gap: f64,
    /// ½·gap⁻¹·(2 + ln(1/π*))·ln(1/ε).
    pub gap_bound: f64,
}

/// Poisson(λt) weights around the mode: returns (k_lo, normalized
/// weights for k_lo..k_lo+len).
fn poisson_window(lambda_t: f64) -> Result<(usize, Vec<f64>)> {
    if lambda_t <= 0.0 {
        return Ok((0, vec![1.0]));
    }
    let mode = lambda_t.floor() as usize;
    // Downward from the mode: w_{k-1} = w_k · k / λt.
    let mut down = vec![1.0f64];
    let mut w = 1.0;
    let mut k = mode;
    while k > 0 {
        w *= k as f64 / lambda_t;
        if w < TERM_CUTOFF {
            break;
        }
        down.push(w);
        k -= 1;
    }
    let k_lo = mode + 1 - down.len();
    // Upward: w_{k+1} = w_k · λt / (k+1).
    let mut weights: Vec<f64> = down.into_iter().rev().collect();
    w = 1.0;
    k = mode;
    loop {
        w *= lambda_t / (k + 1) as f64;
        if w < TERM_CUTOFF {
            break;
        }
        weights.push(w);
        k += 1;
        if weights.len() > MAX_TERMS {
            return Err(Error::resource(format!(
                "uniformization needs more than {MAX_TERMS} Poisson terms (λt = {lambda_t:.3e})"
            )));
        }
    }
    let total: f64 = weights.iter().sum();
    for x in &mut weights {
        *x /= total;
    }
    Ok((k_lo, weights))
}

/// One uniformized step: out = μ(I + 𝓛/λ). Row-stochastic and
/// nonnegative, so the iteration never leaves the simplex.
fn step(g: &GeneratorMatrix, lambda: f64, mu: &[f64], out: &mut [f64]) {
    g.apply_left(mu, out);
    for (o, m) in out.iter_mut().zip(mu) {
        *o = m + *o / lambda;
    }
}

/// Distribution of the chain at each time, started from δ_start.
/// One P-walk serves every time: step k contributes weight
/// Poisson_{λt}(k) to each accumulator whose window contains k.
pub(crate) fn distributions_at(
    g: &GeneratorMatrix,
    start: usize,
    times: &[f64],
) -> Result<Vec<Vec<f64>>> {
    let n = g.dim();
    let lambda = g.max_diag();
    let windows: Vec<(usize, Vec<f64>)> = times
        .iter()
        .map(|&t| poisson_window(lambda * t))
        .collect::<Result<_>>()?;
    let k_max = windows.iter().map(|(lo, w)| lo + w.len() - 1).max().unwrap();
    if k_max > MAX_TERMS {
        return Err(Error::resource(format!(
            "uniformization walk needs {k_max} P-steps (cap {MAX_TERMS}); time too large"
        )));
    }

    let mut acc = vec![vec![0.0f64; n]; times.len()];
    let mut mu = vec![0.0f64; n];
    mu[start] = 1.0;
    let mut next = vec![0.0f64; n];
    for k in 0..=k_max {
        for (ti, (k_lo, w)) in windows.iter().enumerate() {
            if k >= *k_lo && k < k_lo + w.len() {
                let wk = w[k - k_lo];
                for (a, &m) in acc[ti].iter_mut().zip(&mu) {
                    *a += wk * m;
                }
            }
        }
        if k < k_max {
            step(g, lambda, &mu, &mut next);
            std::mem::swap(&mut mu, &mut next);
        }
    }
    Ok(acc)
}

fn tv_from_pi(g: &GeneratorMatrix, dist: &[f64]) -> f64 {
    0.5 * dist.iter().zip(g.pi()).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// d(t) for one start at each time.
fn tv_at_times(g: &GeneratorMatrix, start: usize, times: &[f64]) -> Result<Vec<f64>> {
    Ok(distributions_at(g, start, times)?
        .iter()
        .map(|d| tv_from_pi(g, d))
        .collect())
}

/// Total-variation curve t ↦ ‖P_start(X_t ∈ ·) − π‖_TV.
pub fn tv_curve(g: &GeneratorMatrix, start: &StartSpec, times: &[f64]) -> Result<TvCurve> {
    if times.is_empty() {
        return Err(Error::usage("need at least one time"));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::usage("times must be finite and >= 0"));
    }
    let lambda = g.max_diag();
    let d = match start {
        StartSpec::AllOnes => tv_at_times(g, g.all_ones(), times)?,
        StartSpec::State(s) => {
            if *s >= g.dim() {
                return Err(Error::usage(format!("state {s} out of range for L={}", g.l())));
            }
            tv_at_times(g, *s, times)?
        }
        StartSpec::WorstCase => {
            if g.l() > WORST_CASE_L_MAX {
                return Err(Error::resource(format!(
                    "worst-case start scan capped at L={WORST_CASE_L_MAX}, got {}",
                    g.l()
                )));
            }
            let mut best = vec![0.0f64; times.len()];
            for s in 0..g.dim() {
                for (b, v) in best.iter_mut().zip(tv_at_times(g, s, times)?) {
                    *b = b.max(v);
                }
            }
            best
        }
    };
    Ok(TvCurve { times: times.to_vec(), d, start: start.clone(), lambda })
}

/// First t (within `tol`) where d(t) from `start` drops to `eps`. TV from
/// a fixed start is non-increasing in t, so bisection applies.
fn bisect_crossing(g: &GeneratorMatrix, start: usize, eps: f64, tol: f64) -> Result<f64> {
    let d0 = 1.0 - g.pi()[start];
    if d0 <= eps {
        return Ok(0.0);
    }
    let mut hi = 1.0f64;
    let mut doublings = 0;
    while tv_at_times(g, start, &[hi])?[0] > eps {
        hi *= 2.0;
        doublings += 1;
        if doublings > 60 {
            return Err(Error::numerical("no mixing within 2^60 time units"));
        }
    }
    let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if tv_at_times(g, start, &[mid])?[0] > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// Mixing time T_mix(ε) = inf{t : max over starts of d(t) ≤ ε}.
///
/// For L ≤ [`WORST_CASE_L_MAX`] the maximum is exact: bisect on the
/// all-ones candidate, scan every start at the crossing, and repeat from
/// the argmax if some start still exceeds ε there. For larger L (up to
/// [`TMIX_L_MAX`]) only the all-ones start is evaluated and the result is
/// flagged as a lower bound. In both cases the result is checked against
/// the spectral upper bound; exceeding it is an internal-check failure.
pub fn t_mix(g: &GeneratorMatrix, eps: f64, tol: f64) -> Result<TmixReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::usage(format!("eps must be in (0,1), got {eps}")));
    }
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::usage(format!("tol must be positive, got {tol}")));
    }
    if g.l() > TMIX_L_MAX {
        return Err(Error::resource(format!(
            "mixing time capped at L={TMIX_L_MAX}, got {}",
            g.l()
        )));
    }
    let certified = g.l() <= WORST_CASE_L_MAX;

    let mut worst = g.all_ones();
    let mut t = bisect_crossing(g, worst, eps, tol)?;
    if certified {
        // Certify: at the crossing, no other start may still be above ε.
        for _round in 0..64 {
            let mut max_d = f64::NEG_INFINITY;
            let mut argmax = worst;
            for s in 0..g.dim() {
                let d = tv_at_times(g, s, &[t])?[0];
                if d > max_d {
                    max_d = d;
                    argmax = s;
                }
            }
            if max_d <= eps {
                break;
            }
            worst = argmax;
            t = bisect_crossing(g, worst, eps, tol)?;
        }
    }

    let gap = spectral_gap(g)?;
    let pi_star = g.pi_star();
    let gap_bound = 0.5 / gap * (2.0 + (1.0 / pi_star).ln()) * (1.0 / eps).ln();
    if t > gap_bound + tol.max(1e-9) + 1e-9 * gap_bound {
        return Err(Error::check_failed(format!(
            "mixing time {t:.6} exceeds the spectral bound {gap_bound:.6} (L={}, eps={eps})",
            g.l()
        )));
    }
    Ok(TmixReport {
        eps,
        t_mix: t,
        tol,
        certified_max: certified,
        worst_start: worst,
        gap,
        gap_bound,
    })
}
