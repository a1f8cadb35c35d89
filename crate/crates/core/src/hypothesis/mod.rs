//! Binary hypothesis tests against devices with memory.
//!
//! A test fixes, for every round, an input policy `Q_k(x|s_{k-1})` and, at
//! the end, the probability `Q_f(1|s_n)` of declaring the null hypothesis
//! falsified. Its acceptance probability against an n-round behavior is
//!
//! `P_T(1|P⁽ⁿ⁾) = Σ_{s_n} P⁽ⁿ⁾(s_n) Π_k Q_k(x_k|s_{k-1}) · Q_f(1|s_n)`,
//!
//! which [`exact_acceptance`] evaluates by enumerating transcripts and
//! [`monte_carlo_acceptance`] estimates by simulation. Throughout, "accept"
//! means the test outputs 1, i.e. the device passes the certification.
//!
//! Variable-length protocols use the reserved input ∅ (`x == X`): a policy
//! may return `X + 1` weights, the last one for ∅. Once ∅ is used the engine
//! keeps feeding ∅, and the device is not queried (output fixed to 0).

mod enumerate;
mod exact;
mod family;
mod ksigma;
mod martingale;
mod montecarlo;
mod table;

use std::borrow::Cow;

use serde::Serialize;
use thiserror::Error;

use crate::correlations::{Alphabet, CorrelationError, Transcript};
use crate::devices::DeviceError;

pub use enumerate::{enumerate_deterministic_max, DeterministicMax, ARGMAX_TIE_TOL, MAX_STRATEGIES};
pub use exact::{exact_acceptance, exact_acceptance_rational, state_space_size, MAX_STATE_SPACE};
pub use family::{verify_test_family, AcceptanceMethod, FamilyReport, FamilyRow};
pub use ksigma::{
    ksigma_frequency_test, DistanceFunctional, FnFunctional, FrequencyFunctional, KSigmaStatistic, KSigmaTest,
    DEFAULT_BOOTSTRAP,
};
pub use martingale::{hoeffding_pvalue, hoeffding_threshold, martingale_witness_test, MartingaleTest};
pub use montecarlo::{monte_carlo_acceptance, run_trial, simulate, wilson_interval, Simulation, TraceRow};
pub use table::{constant_test, FnTest, TableTest};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HypothesisError {
    #[error("state space of {size:.3e} transcripts exceeds {limit}")]
    StateSpaceTooLarge { size: f64, limit: usize },
    #[error("search space of {size:.3e} strategies exceeds {limit}")]
    SearchSpaceTooLarge { size: f64, limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("input policy after {round} rounds is not a distribution over inputs")]
    InvalidPolicy { round: usize },
    #[error("non-finite probability encountered")]
    NonFinite,
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

/// Statistic value after some number of rounds, for traces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub statistic: f64,
    pub pvalue: Option<f64>,
}

/// An n-round binary hypothesis test.
pub trait HypothesisTest: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    /// Number of rounds `N` the protocol runs (its maximum, for
    /// variable-length protocols).
    fn max_rounds(&self) -> usize;

    /// `Q_k(·|s_{k-1})` with `k = history.len() + 1`; `X` weights, or `X + 1`
    /// with the last for ∅.
    fn input_policy(&self, history: &Transcript) -> Cow<'_, [f64]>;

    /// `Q_f(1|s_n)` for a complete transcript.
    fn decision(&self, transcript: &Transcript) -> f64;

    fn descriptor(&self) -> String;

    /// Statistic after each prefix of a transcript; empty if the test has no
    /// running statistic.
    fn trajectory(&self, _transcript: &Transcript) -> Vec<TracePoint> {
        Vec::new()
    }
}

impl<T: HypothesisTest + ?Sized> HypothesisTest for Box<T> {
    fn alphabet(&self) -> Alphabet {
        (**self).alphabet()
    }
    fn max_rounds(&self) -> usize {
        (**self).max_rounds()
    }
    fn input_policy(&self, history: &Transcript) -> Cow<'_, [f64]> {
        (**self).input_policy(history)
    }
    fn decision(&self, transcript: &Transcript) -> f64 {
        (**self).decision(transcript)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
    fn trajectory(&self, transcript: &Transcript) -> Vec<TracePoint> {
        (**self).trajectory(transcript)
    }
}

/// Checks a policy vector and reports whether it includes ∅.
pub(crate) fn check_policy(policy: &[f64], alphabet: Alphabet, round: usize) -> Result<(), HypothesisError> {
    let ok_len = policy.len() == alphabet.inputs || policy.len() == alphabet.inputs + 1;
    let ok_vals = policy.iter().all(|q| *q >= 0.0 && q.is_finite());
    let sum: f64 = policy.iter().sum();
    if !ok_len || !ok_vals || (sum - 1.0).abs() > 1e-9 {
        return Err(HypothesisError::InvalidPolicy { round });
    }
    Ok(())
}

/// Validates an iid input distribution over `alphabet.inputs` symbols.
pub(crate) fn check_input_dist(dist: &[f64], alphabet: Alphabet) -> Result<(), HypothesisError> {
    if dist.len() != alphabet.inputs {
        return Err(HypothesisError::InvalidParameter(format!(
            "input distribution has {} entries, expected {}",
            dist.len(),
            alphabet.inputs
        )));
    }
    check_policy(dist, alphabet, 0)
}

/// Outcome of a Monte Carlo acceptance estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestReport {
    pub test: String,
    pub device: String,
    pub n: usize,
    pub trials: usize,
    pub accepted: usize,
    pub accept_rate: f64,
    /// Wilson 95% interval.
    pub ci95: (f64, f64),
    pub seed: u64,
    pub wall_time_s: f64,
}
