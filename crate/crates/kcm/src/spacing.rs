//! Spacing conditions on the zeros behind the front.
//!
//! A configuration satisfies the strong spacing condition (SSC) on an
//! interval I when its longest run of consecutive ones is at most
//! 10·ln|I| / min(|ln p|, 1), and the (δ,ε)-weak spacing condition (WSC)
//! when that run is at most δ·|I|^ε. Under the product measure the SSC
//! fails with probability at most |I|·p^threshold ≤ |I|⁻⁹ (a union bound
//! over run start positions), and the law behind a long-running front
//! inherits the same smallness — the Monte Carlo estimators here make both
//! statements checkable.

use crate::engine::{run, EventStream, LatticeState, Probe, RunOptions, DEFAULT_W_KEEP};
use crate::ensemble::try_map_replicas;
use crate::error::{Error, Result};
use crate::params::Params;
use crate::stats::proportion_ci;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SpacingParams {
    pub delta: f64,
    pub epsilon: f64,
}

impl SpacingParams {
    pub fn new(delta: f64, epsilon: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 0.25) || !(epsilon > 0.0 && epsilon < 0.25) {
            return Err(Error::usage(format!(
                "spacing parameters must lie in (0, 1/4), got δ={delta}, ε={epsilon}"
            )));
        }
        Ok(SpacingParams { delta, epsilon })
    }
}

/// Which spacing condition to evaluate; the weak one carries its (δ, ε).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum SpacingCheck {
    Strong,
    Weak(SpacingParams),
}

/// Length of the longest run of consecutive ones. Exact, 0 when no one is
/// present.
pub fn longest_one_run(bits: &[u8]) -> Result<usize> {
    if bits.is_empty() {
        return Err(Error::usage("longest_one_run on an empty interval"));
    }
    let mut best = 0usize;
    let mut cur = 0usize;
    for &b in bits {
        if b == 1 {
            cur += 1;
            best = best.max(cur);
        } else {
            cur = 0;
        }
    }
    Ok(best)
}

/// SSC run-length threshold for an interval of the given length.
pub fn ssc_threshold(len: usize, p: f64) -> f64 {
    10.0 * (len as f64).ln() / p.ln().abs().min(1.0)
}

/// WSC run-length threshold.
pub fn wsc_threshold(len: usize, sp: SpacingParams) -> f64 {
    sp.delta * (len as f64).powf(sp.epsilon)
}

/// Strong spacing condition: longest one-run ≤ 10·ln|I|/min(|ln p|, 1).
pub fn ssc(bits: &[u8], p: f64) -> Result<bool> {
    if bits.len() < 2 {
        return Err(Error::usage("ssc needs |I| >= 2"));
    }
    Ok(longest_one_run(bits)? as f64 <= ssc_threshold(bits.len(), p))
}

/// Weak spacing condition: longest one-run ≤ δ·|I|^ε.
pub fn wsc(bits: &[u8], sp: SpacingParams) -> Result<bool> {
    Ok(longest_one_run(bits)? as f64 <= wsc_threshold(bits.len(), sp))
}

fn check_passes(bits: &[u8], p: f64, which: SpacingCheck) -> Result<bool> {
    match which {
        SpacingCheck::Strong => ssc(bits, p),
        SpacingCheck::Weak(sp) => wsc(bits, sp),
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub failures: u64,
    pub replicas: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// Run-length threshold the condition used.
    pub threshold: f64,
    pub interval_len: usize,
    pub time: f64,
}

/// Monte Carlo failure probability of a spacing condition on the ℓ sites
/// ending at the front, at time t, started from ω*.
pub fn spacing_failure_probability(
    params: Params,
    ell: usize,
    t: f64,
    replicas: u64,
    which: SpacingCheck,
    seed: u64,
) -> Result<FailureEstimate> {
    if ell < 2 {
        return Err(Error::usage("spacing interval needs ℓ >= 2"));
    }
    if ell > DEFAULT_W_KEEP as usize {
        return Err(Error::usage(format!("ℓ={ell} exceeds the kept window {DEFAULT_W_KEEP}")));
    }
    if replicas == 0 {
        return Err(Error::usage("need at least one replica"));
    }
    let options = RunOptions { w_keep: Some(DEFAULT_W_KEEP), ..RunOptions::default() };
    let fails: Vec<u64> = try_map_replicas(replicas, |r| {
        let rec = run(
            LatticeState::front_start(),
            params,
            EventStream::new(seed, r, params.p),
            t,
            &[Probe::FrontWindow { times: vec![t], width: ell }],
            &options,
        )?;
        let (_, _, rows) = rec.samples[0].window_rows().expect("window probe");
        // Run lengths are invariant under reversing the window.
        Ok(u64::from(!check_passes(&rows[0], params.p, which)?))
    })?;
    let failures = fails.iter().sum();
    let ci = proportion_ci(failures, replicas, 0.95);
    let threshold = match which {
        SpacingCheck::Strong => ssc_threshold(ell, params.p),
        SpacingCheck::Weak(sp) => wsc_threshold(ell, sp),
    };
    Ok(FailureEstimate {
        failures,
        replicas,
        p_hat: ci.p_hat,
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        threshold,
        interval_len: ell,
        time: t,
    })
}

/// Failure probability under the product measure itself (i.i.d.
/// Bernoulli(p) ones, no dynamics) — the equilibrium baseline the
/// union-bound |I|·p^threshold controls.
pub fn pi_failure_probability(
    params: Params,
    ell: usize,
    replicas: u64,
    which: SpacingCheck,
    seed: u64,
) -> Result<FailureEstimate> {
    if ell < 2 {
        return Err(Error::usage("spacing interval needs ℓ >= 2"));
    }
    let fails: Vec<u64> = try_map_replicas(replicas, |r| {
        let mut rng = crate::engine::replica_rng(seed, r);
        let bits: Vec<u8> = (0..ell).map(|_| u8::from(rng.gen::<f64>() < params.p)).collect();
        Ok(u64::from(!check_passes(&bits, params.p, which)?))
    })?;
    let failures = fails.iter().sum();
    let ci = proportion_ci(failures, replicas, 0.95);
    let threshold = match which {
        SpacingCheck::Strong => ssc_threshold(ell, params.p),
        SpacingCheck::Weak(sp) => wsc_threshold(ell, sp),
    };
    Ok(FailureEstimate {
        failures,
        replicas,
        p_hat: ci.p_hat,
        ci_lo: ci.lo,
        ci_hi: ci.hi,
        threshold,
        interval_len: ell,
        time: 0.0,
    })
}

/// Union bound on the π-failure probability of the SSC: |I|·p^threshold.
pub fn ssc_pi_union_bound(ell: usize, p: f64) -> f64 {
    ell as f64 * p.powf(ssc_threshold(ell, p))
}
