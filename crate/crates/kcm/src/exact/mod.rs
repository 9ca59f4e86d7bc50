//! Exact finite-interval analysis.
//!
//! The chain on Λ = [a+1, a+L] with a frozen zero at a has 2^L states,
//! encoded as L-bit integers (bit i = spin at site a+1+i). Site a+1 is
//! always unconstrained; site x > a+1 may flip only when the spin at x−1
//! is 0. Each unconstrained site contributes one off-diagonal rate (p for
//! 0→1, q for 1→0), so the generator is sparse with at most L entries per
//! row and is reversible with respect to the product Bernoulli(p) measure.
//! Conjugating by √π turns it into a symmetric matrix whose off-diagonal
//! entries are all √(pq) on the flip graph — the form the eigensolvers
//! use.
//!
//! Submodules: [`gap`] (spectral gap, dense and Lanczos), [`uniform`]
//! (total-variation curves and mixing times via uniformization), and
//! [`cutoff`] (the Monte Carlo cutoff-profile experiment at lengths far
//! beyond exact diagonalization).

pub mod cutoff;
pub mod gap;
pub mod uniform;

pub use cutoff::{finite_hitting_survival, mc_cutoff_experiment, CutoffComparison, CutoffPoint};
pub use gap::{spectral_gap, spectral_gap_dense, spectral_gap_lanczos};
pub use uniform::{t_mix, tv_curve, StartSpec, TmixReport, TvCurve};

use crate::error::{Error, Result};
use crate::params::Params;

/// Hard cap on interval length: 2^20 states with ~L entries per row is
/// the largest matrix worth holding on one machine.
pub const L_MAX: usize = 20;

/// Sparse generator of the East chain on an interval of length L, plus its
/// stationary vector.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    l: usize,
    params: Params,
    /// Interval left edge: sites are a+1..a+L (metadata only; the matrix
    /// must not depend on it).
    offset: i64,
    dim: usize,
    row_ptr: Vec<u32>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    /// Diagonal = −(total legal flip rate out of the state).
    diag: Vec<f64>,
    pi: Vec<f64>,
}

/// Build the generator for Λ = [1..L].
pub fn build_generator(params: Params, l: usize) -> Result<GeneratorMatrix> {
    build_generator_at(params, 0, l)
}

/// Build the generator for Λ = [a+1..a+L] with the frozen zero at a. The
/// result is independent of `a` — the dynamics only sees relative
/// positions — and a unit test pins that.
pub fn build_generator_at(params: Params, a: i64, l: usize) -> Result<GeneratorMatrix> {
    if l == 0 {
        return Err(Error::usage("interval length must be >= 1"));
    }
    if l > L_MAX {
        return Err(Error::resource(format!("L={l} exceeds the 2^{L_MAX}-state cap")));
    }
    let dim = 1usize << l;
    let (p, q) = (params.p, params.q);

    let mut row_ptr = Vec::with_capacity(dim + 1);
    let mut cols = Vec::new();
    let mut rates = Vec::new();
    let mut diag = vec![0.0f64; dim];
    let mut pi = vec![0.0f64; dim];

    row_ptr.push(0u32);
    for s in 0..dim {
        let mut out_rate = 0.0;
        for x in 1..=l {
            // Site a+x is unconstrained iff x == 1 or the spin at a+x−1
            // (bit x−2) is 0.
            let unconstrained = x == 1 || (s >> (x - 2)) & 1 == 0;
            if !unconstrained {
                continue;
            }
            let bit = 1usize << (x - 1);
            let rate = if s & bit != 0 { q } else { p };
            cols.push((s ^ bit) as u32);
            rates.push(rate);
            out_rate += rate;
        }
        diag[s] = -out_rate;
        row_ptr.push(cols.len() as u32);
        pi[s] = p.powi((s.count_ones()) as i32) * q.powi((l as u32 - s.count_ones()) as i32);
    }

    Ok(GeneratorMatrix { l, params, offset: a, dim, row_ptr, cols, rates, diag, pi })
}

impl GeneratorMatrix {
    pub fn l(&self) -> usize {
        self.l
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    /// Smallest stationary probability, min(p,q)^L.
    pub fn pi_star(&self) -> f64 {
        self.params.p.min(self.params.q).powi(self.l as i32)
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of one row as (column, rate) pairs.
    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let lo = self.row_ptr[s] as usize;
        let hi = self.row_ptr[s + 1] as usize;
        self.cols[lo..hi].iter().zip(&self.rates[lo..hi]).map(|(&c, &r)| (c as usize, r))
    }

    /// The all-ones state index.
    pub fn all_ones(&self) -> usize {
        self.dim - 1
    }

    /// out = μᵀ𝓛 for a row vector μ.
    pub fn apply_left(&self, mu: &[f64], out: &mut [f64]) {
        assert_eq!(mu.len(), self.dim);
        out.fill(0.0);
        for s in 0..self.dim {
            let m = mu[s];
            if m == 0.0 {
                continue;
            }
            out[s] += m * self.diag[s];
            let lo = self.row_ptr[s] as usize;
            let hi = self.row_ptr[s + 1] as usize;
            for k in lo..hi {
                out[self.cols[k] as usize] += m * self.rates[k];
            }
        }
    }

    /// out = A·v for the π-symmetrized generator A = Π^{1/2} 𝓛 Π^{−1/2}:
    /// same diagonal, every off-diagonal entry √(pq).
    pub fn apply_symmetrized(&self, v: &[f64], out: &mut [f64]) {
        assert_eq!(v.len(), self.dim);
        let spq = (self.params.p * self.params.q).sqrt();
        for s in 0..self.dim {
            let lo = self.row_ptr[s] as usize;
            let hi = self.row_ptr[s + 1] as usize;
            let mut acc = self.diag[s] * v[s];
            for k in lo..hi {
                acc += spq * v[self.cols[k] as usize];
            }
            out[s] = acc;
        }
    }

    /// Largest diagonal magnitude — the uniformization rate.
    pub fn max_diag(&self) -> f64 {
        self.diag.iter().fold(0.0, |a, &d| a.max(-d))
    }

    /// Worst relative detailed-balance violation over all transitions:
    /// |π(s)r(s,s′) − π(s′)r(s′,s)| / max(π(s)r(s,s′), π(s′)r(s′,s)).
    pub fn detailed_balance_defect(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..self.dim {
            for (t, r_st) in self.row(s) {
                let r_ts = self
                    .row(t)
                    .find(|&(u, _)| u == s)
                    .map(|(_, r)| r)
                    .unwrap_or(0.0);
                let a = self.pi[s] * r_st;
                let b = self.pi[t] * r_ts;
                worst = worst.max((a - b).abs() / a.max(b).max(f64::MIN_POSITIVE));
            }
        }
        worst
    }

    /// Max |(πᵀ𝓛)_j| over states — exact stationarity defect.
    pub fn stationarity_defect(&self) -> f64 {
        let mut out = vec![0.0; self.dim];
        self.apply_left(&self.pi, &mut out);
        out.iter().fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// Coordinate-list text dump (row, col, rate), diagonal included, for
    /// external verification.
    pub fn to_coordinate_list(&self) -> String {
        let mut s = String::new();
        for i in 0..self.dim {
            s.push_str(&format!("{} {} {:.17e}\n", i, i, self.diag[i]));
            for (j, r) in self.row(i) {
                s.push_str(&format!("{i} {j} {r:.17e}\n"));
            }
        }
        s
    }
}
