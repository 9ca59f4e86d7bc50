//! Finite speed of information propagation.
//!
//! For sites x ≠ y to influence each other between times s and t, there
//! must be an ordered sequence of rings crossing every edge between them,
//! and the number of rings available is Poisson(t − s) per site. The
//! probability of a linking chain is therefore at most the upper tail
//! P(Poisson(t−s) ≥ |x−y|), which drops below e^{−|x−y|} once |x−y| is at
//! least v_max·(t−s) for a suitable constant v_max. This module computes
//! that tail exactly (in log space when it underflows) and reports whether
//! the exponential bound is in force.

use crate::error::{Error, Result};
use statrs::function::gamma::{gamma_lr, ln_gamma};

/// Ask how likely it is that sites x and y are linked by a chain of rings
/// within the time window (s, t].
#[derive(Debug, Clone, Copy)]
pub struct LinkingEventQuery {
    pub x: i64,
    pub y: i64,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LinkingProbability {
    /// Exact tail P(Poisson(elapsed) ≥ distance); underflows to 0.0 for
    /// very large distances — `ln_probability` stays finite.
    pub probability: f64,
    pub ln_probability: f64,
    pub distance: u64,
    pub elapsed: f64,
    /// Speed constant the caller configured (sites per unit time).
    pub v_max: u32,
    /// True when distance ≥ v_max·elapsed, i.e. the regime where the
    /// exponential bound e^{−distance} holds.
    pub bound_applies: bool,
    /// e^{−distance}, for comparison.
    pub exp_bound: f64,
}

/// Upper tail P(N ≥ n) for N ~ Poisson(lambda). Exact via the regularized
/// incomplete gamma identity P(N ≥ n) = P(n, λ).
pub fn poisson_upper_tail(n: u64, lambda: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    gamma_lr(n as f64, lambda)
}

/// ln P(N ≥ n), finite even when the tail underflows f64. For small n the
/// direct tail is logged; deep in the tail (n well above λ) the series
/// P = e^{−λ} λ^n/n! · Σ_{j≥0} λ^j / ((n+1)⋯(n+j)) is summed in linear
/// space (its terms are ≤ (λ/(n+1))^j) and only the prefactor is kept in
/// logs.
pub fn ln_poisson_upper_tail(n: u64, lambda: f64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let direct = poisson_upper_tail(n, lambda);
    if direct > 1e-290 {
        return direct.ln();
    }
    // Underflow regime implies n >> lambda, so the series converges
    // geometrically with ratio < lambda/(n+1) < 1.
    let nf = n as f64;
    let mut s = 1.0f64;
    let mut term = 1.0f64;
    let mut j = 1.0f64;
    loop {
        term *= lambda / (nf + j);
        s += term;
        if term < 1e-18 * s {
            break;
        }
        j += 1.0;
    }
    -lambda + nf * lambda.ln() - ln_gamma(nf + 1.0) + s.ln()
}

/// Smallest integer v with P(Poisson(1) ≥ v) ≤ e^{−v}. At this speed and
/// beyond, the per-unit-time linking tail is dominated by e^{−distance}.
pub fn default_v_max() -> u32 {
    (1u32..)
        .find(|&v| poisson_upper_tail(v as u64, 1.0) <= (-(v as f64)).exp())
        .unwrap()
}

pub fn linking_probability(query: &LinkingEventQuery, v_max: u32) -> Result<LinkingProbability> {
    let LinkingEventQuery { x, y, s, t } = *query;
    if x == y {
        return Err(Error::usage("linking query needs distinct sites (|x−y| ≥ 1)"));
    }
    if !(s.is_finite() && t.is_finite() && t > s) {
        return Err(Error::usage(format!("linking query needs finite s < t, got s={s}, t={t}")));
    }
    let distance = x.abs_diff(y);
    let elapsed = t - s;
    let probability = poisson_upper_tail(distance, elapsed);
    let ln_probability = ln_poisson_upper_tail(distance, elapsed);
    Ok(LinkingProbability {
        probability,
        ln_probability,
        distance,
        elapsed,
        v_max,
        bound_applies: distance as f64 >= v_max as f64 * elapsed,
        exp_bound: (-(distance as f64)).exp(),
    })
}
