//! Model parameters for the spin dynamics.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Occupation/vacancy probabilities of a refresh.
///
/// A legal ring resets the spin to 1 with probability `p` and to 0 with
/// probability `q = 1 - p`. `q` is stored so call sites never recompute it
/// inconsistently; the constructor guarantees `p + q == 1.0` exactly in f64
/// (q is defined as `1.0 - p`, and `p + (1.0 - p)` is exact for p in [0,1]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub p: f64,
    pub q: f64,
}

impl Params {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::usage(format!("p must lie in (0,1), got {p}")));
        }
        Ok(Params { p, q: 1.0 - p })
    }
}
