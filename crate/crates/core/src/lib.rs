//! Exact, game-theoretic feature importance for tabular models and decision
//! trees.
//!
//! The pipeline: enumerate contrastive explanations (CXps) of a model at a
//! target instance, count the adversarial examples each CXp covers, assemble
//! the weighted CXp family into a characteristic function (a "CXp-Forest"),
//! and score features with Shapley-like and Banzhaf-like power indices —
//! all in exact rational arithmetic. Baseline attributions (FFA, WFFA,
//! Responsibility, Deegan-Packel, exact SHAP) and rank-biased-overlap ranking
//! comparisons are included.

pub mod adv;
pub mod cli;
pub mod compare;
pub mod forest;
pub mod model;
pub mod num;
pub mod scores;
pub mod synth;
pub mod xp;

use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} coordinates, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("value {value} is outside the domain of feature {feature}")]
    OutsideDomain { feature: usize, value: i64 },

    #[error("feature index {feature} out of range 1..={m}")]
    FeatureOutOfRange { feature: usize, m: usize },

    #[error("{what}: needs {needed} but the cap is {cap}")]
    CapExceeded {
        what: &'static str,
        needed: u128,
        cap: u128,
    },

    #[error("{method} requires a decision-tree model")]
    MethodMismatch { method: &'static str },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("schema error: {0}")]
    Schema(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Stable machine-readable kind string, used by the CLI error stream.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::ArityMismatch { .. } => "arity_mismatch",
            Error::OutsideDomain { .. } => "outside_domain",
            Error::FeatureOutOfRange { .. } => "feature_out_of_range",
            Error::CapExceeded { .. } => "cap_exceeded",
            Error::MethodMismatch { .. } => "method_mismatch",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidModel(_) => "invalid_model",
            Error::Schema(_) => "schema",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Resource limits for the exhaustive procedures.
///
/// `subsets` bounds the feature count for 2^m subset scans, `space` bounds
/// the number of points any single enumeration may visit, and `exhaustive`
/// bounds the feature count for the power-index engines that tabulate a
/// characteristic function over all coalitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Caps {
    pub subsets: usize,
    pub space: u64,
    pub exhaustive: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            subsets: 22,
            space: 10_000_000,
            exhaustive: 16,
        }
    }
}

impl Caps {
    pub fn check_subsets(&self, what: &'static str, m: usize) -> Result<()> {
        if m > self.subsets {
            return Err(Error::CapExceeded {
                what,
                needed: m as u128,
                cap: self.subsets as u128,
            });
        }
        Ok(())
    }

    pub fn check_space(&self, what: &'static str, points: u128) -> Result<()> {
        if points > self.space as u128 {
            return Err(Error::CapExceeded {
                what,
                needed: points,
                cap: self.space as u128,
            });
        }
        Ok(())
    }

    pub fn check_exhaustive(&self, what: &'static str, m: usize) -> Result<()> {
        if m > self.exhaustive {
            return Err(Error::CapExceeded {
                what,
                needed: m as u128,
                cap: self.exhaustive as u128,
            });
        }
        Ok(())
    }
}
