//! Spin configurations on a finite window of the integer line.
//!
//! The constraint is oriented: site x may refresh only while site x-1 holds
//! a 0, so no site ever queries anything to its right. Two window
//! conventions cover every supported start:
//!
//! - [`Boundary::FrozenZeroAtLoMinus1`]: a fixed window `[lo, hi]` with a
//!   permanent zero at `lo - 1`. Site `lo` is therefore always
//!   unconstrained. This is the finite-interval chain, and simultaneously
//!   the exact infinite-line dynamics started from a configuration whose
//!   leftmost zero sits at `lo - 1`: everything left of that zero can never
//!   flip (each such site sees a 1 on its left forever).
//! - [`Boundary::AllOnesBeyondWindow`]: the same frozen zero on the left,
//!   but sites beyond `hi` are implicitly 1 and the window is meant to grow
//!   rightward ahead of the front (the run loop keeps `hi >= front + 2`).
//!   This represents the half-line process started from a single zero at
//!   `lo - 1` with ones to its right — the canonical front-tracking start.
//!
//! The *front* is the rightmost zero. Within the window it is tracked
//! incrementally by [`LatticeState::apply_ring`]; when the window holds no
//! zero the effective front is the frozen boundary zero at `lo - 1`.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Fixed window, permanent zero at lo-1 (finite-interval chain).
    FrozenZeroAtLoMinus1,
    /// Growing window, permanent zero at lo-1, implicit ones right of hi.
    AllOnesBeyondWindow,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeState {
    lo: i64,
    spins: Vec<u8>,
    front: Option<i64>,
    boundary: Boundary,
}

impl LatticeState {
    pub fn new(lo: i64, spins: Vec<u8>, boundary: Boundary) -> Result<Self> {
        if spins.is_empty() {
            return Err(Error::usage("window must contain at least one site"));
        }
        if spins.iter().any(|&s| s > 1) {
            return Err(Error::usage("spins must be 0 or 1"));
        }
        let front = spins
            .iter()
            .rposition(|&s| s == 0)
            .map(|i| lo + i as i64);
        Ok(LatticeState { lo, spins, front, boundary })
    }

    /// All-ones configuration on [1, len] with the frozen zero at 0: the
    /// start whose front must traverse the whole interval.
    pub fn all_ones_interval(len: usize) -> Result<Self> {
        Self::new(1, vec![1; len], Boundary::FrozenZeroAtLoMinus1)
    }

    /// Single zero at the origin, ones to its right: the canonical
    /// front-tracking start on the (effectively infinite) line. The zero
    /// itself is the frozen boundary site at 0; the window starts at [1, 2]
    /// and grows as the front advances.
    pub fn front_start() -> Self {
        Self::new(1, vec![1, 1], Boundary::AllOnesBeyondWindow).unwrap()
    }

    pub fn lo(&self) -> i64 {
        self.lo
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.spins.len() as i64 - 1
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn window_len(&self) -> usize {
        self.spins.len()
    }

    pub fn spins(&self) -> &[u8] {
        &self.spins
    }

    /// Spin at a window site.
    #[inline]
    pub fn spin(&self, x: i64) -> u8 {
        self.spins[(x - self.lo) as usize]
    }

    /// Spin at any site, applying the boundary conventions: the frozen zero
    /// at lo-1, ones left of it, and (for the growing convention) ones
    /// right of the window.
    #[inline]
    pub fn spin_extended(&self, x: i64) -> u8 {
        if x < self.lo {
            return if x == self.lo - 1 { 0 } else { 1 };
        }
        if x > self.hi() {
            debug_assert!(self.boundary == Boundary::AllOnesBeyondWindow);
            return 1;
        }
        self.spin(x)
    }

    /// Rightmost zero inside the window, if any.
    pub fn front(&self) -> Option<i64> {
        self.front
    }

    /// Rightmost zero including the frozen boundary zero at lo-1: this is
    /// the position front statistics track.
    #[inline]
    pub fn effective_front(&self) -> i64 {
        self.front.unwrap_or(self.lo - 1)
    }

    /// Whether a ring at `x` would be legal: true iff the spin at x-1 is 0.
    /// Site `lo` is always unconstrained thanks to the frozen boundary zero.
    pub fn constraint(&self, x: i64) -> Result<bool> {
        if x < self.lo || x > self.hi() {
            return Err(Error::usage(format!(
                "site {x} outside window [{}, {}]",
                self.lo,
                self.hi()
            )));
        }
        Ok(self.constraint_unchecked(x))
    }

    #[inline]
    pub(crate) fn constraint_unchecked(&self, x: i64) -> bool {
        debug_assert!(x >= self.lo && x <= self.hi());
        x == self.lo || self.spins[(x - self.lo - 1) as usize] == 0
    }

    /// One clock ring at `x` carrying `coin`. If the constraint holds the
    /// spin is reset to `coin` and the front is maintained incrementally;
    /// otherwise the ring is illegal and nothing changes. Returns whether
    /// the ring was legal.
    ///
    /// Front bookkeeping: a 0 written at x right of the front moves the
    /// front up to x; a 1 written at the front retreats it to the next zero
    /// on the left (the scan handles arbitrary states, though under the
    /// dynamics legality forces a zero at x-1, so a retreat is always a
    /// single step down).
    pub fn apply_ring(&mut self, x: i64, coin: u8) -> bool {
        assert!(x >= self.lo && x <= self.hi(), "ring outside window");
        debug_assert!(coin <= 1);
        if !self.constraint_unchecked(x) {
            return false;
        }
        self.spins[(x - self.lo) as usize] = coin;
        if coin == 0 {
            if self.front.is_none_or(|f| x > f) {
                self.front = Some(x);
            }
        } else if self.front == Some(x) {
            self.front = self.next_zero_left_of(x);
        }
        true
    }

    fn next_zero_left_of(&self, x: i64) -> Option<i64> {
        let end = (x - self.lo) as usize; // scan indices < end
        self.spins[..end].iter().rposition(|&s| s == 0).map(|i| self.lo + i as i64)
    }

    /// Extend the window to `new_hi`, filling with the implicit ones. Only
    /// meaningful under the growing convention.
    pub(crate) fn grow_right_to(&mut self, new_hi: i64) {
        debug_assert!(self.boundary == Boundary::AllOnesBeyondWindow);
        while self.hi() < new_hi {
            self.spins.push(1);
        }
    }

    /// Recompute the front from scratch (test oracle for the incremental
    /// bookkeeping).
    pub fn recompute_front(&self) -> Option<i64> {
        self.spins.iter().rposition(|&s| s == 0).map(|i| self.lo + i as i64)
    }
}
