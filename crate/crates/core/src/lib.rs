//! Combinatorial Boolean Models (CBM): sparse linear predictors over
//! conjunctions of boolean attributes, trained with GRAB, a grafting loop
//! whose feature-selection step is weighted frequent itemset mining.
//!
//! Module map:
//! * [`datakit`]: LIBSVM parsing, equal-width binarization, transaction databases.
//! * [`miner`]: frequency / weighted frequency, depth-first itemset search,
//!   signed two-stage mining, top-K extraction with a dynamic threshold.
//! * [`loss`]: logistic and L2-hinge losses, gradients, transaction weights.
//! * [`model`]: the sparse predictor, prediction, reporting, serialization.
//! * [`solver`]: L1 coordinate descent restricted to an active feature set.
//! * [`grab`]: the outer training loop with the suboptimality stopping rule.
//! * [`oracle`]: brute-force references used by tests and the expansion baseline.

// Validation uses `!(x > 0.0)` on purpose: it rejects NaN along with
// nonpositives, which the suggested `x <= 0.0` rewrite would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datakit;
pub mod error;
pub mod grab;
pub mod loss;
pub mod miner;
pub mod model;
pub mod oracle;
pub mod solver;

pub use error::{CbmError, Result};

/// Maximum conjunction size, either a finite cap or unbounded (`k = inf`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DegreeCap {
    Cap(u32),
    Unbounded,
}

impl DegreeCap {
    /// True when an itemset of `len` items fits under the cap.
    pub fn allows(self, len: usize) -> bool {
        match self {
            DegreeCap::Cap(k) => len <= k as usize,
            DegreeCap::Unbounded => true,
        }
    }
}

impl std::fmt::Display for DegreeCap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DegreeCap::Cap(k) => write!(f, "{k}"),
            DegreeCap::Unbounded => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for DegreeCap {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "inf" {
            return Ok(DegreeCap::Unbounded);
        }
        match s.parse::<u32>() {
            Ok(k) if k >= 1 => Ok(DegreeCap::Cap(k)),
            _ => Err(format!("degree cap must be a positive integer or `inf`, got `{s}`")),
        }
    }
}
