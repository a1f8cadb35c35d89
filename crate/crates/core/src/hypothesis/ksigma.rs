use std::borrow::Cow;
use std::sync::Arc;

use rand::distr::Distribution;
use rand_distr::Binomial;

use super::{check_input_dist, HypothesisError, HypothesisTest, TracePoint};
use crate::correlations::{
    frequency_estimate, l1_distance, Alphabet, Behavior, CorrelationError, FrequencyTable, LinearWitness, Transcript,
};
use crate::rng::rng_from_seed;

/// Bootstrap resamples used for `σ̂`.
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// A (possibly nonlinear) function of the frequency estimate `P̃`.
pub trait FrequencyFunctional: Send + Sync {
    fn evaluate(&self, table: &FrequencyTable) -> Result<f64, CorrelationError>;
    fn name(&self) -> String;
}

impl FrequencyFunctional for LinearWitness {
    fn evaluate(&self, table: &FrequencyTable) -> Result<f64, CorrelationError> {
        self.evaluate_frequencies(table)
    }

    fn name(&self) -> String {
        "linear".into()
    }
}

/// `F(P̃) = −‖P̃ − target‖`, large when the estimate is close to `target`.
#[derive(Debug, Clone)]
pub struct DistanceFunctional {
    pub target: Behavior,
    pub name: String,
}

impl DistanceFunctional {
    pub fn new(target: Behavior, name: impl Into<String>) -> Self {
        Self {
            target,
            name: name.into(),
        }
    }
}

impl FrequencyFunctional for DistanceFunctional {
    fn evaluate(&self, table: &FrequencyTable) -> Result<f64, CorrelationError> {
        Ok(-l1_distance(&table.to_behavior()?, &self.target)?)
    }

    fn name(&self) -> String {
        format!("-dist({})", self.name)
    }
}

type TableFn = dyn Fn(&FrequencyTable) -> Result<f64, CorrelationError> + Send + Sync;

/// Functional given by a closure.
#[derive(Clone)]
pub struct FnFunctional {
    name: String,
    f: Arc<TableFn>,
}

impl FnFunctional {
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(&FrequencyTable) -> Result<f64, CorrelationError> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
        }
    }
}

impl FrequencyFunctional for FnFunctional {
    fn evaluate(&self, table: &FrequencyTable) -> Result<f64, CorrelationError> {
        (self.f)(table)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Value of `F(P̃)` and its bootstrap spread for one transcript.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KSigmaStatistic {
    pub value: f64,
    pub sigma: f64,
}

/// Frequency test designed for iid devices: inputs iid from a fixed
/// distribution, reject the null (output 1) iff `F(P̃) > α + K·σ̂`.
///
/// `σ̂` is the standard deviation of `F` over bootstrap resamples of the
/// transcript rows, drawn from a fixed seed so the decision is a
/// deterministic function of the transcript. Resampling rows is done as a
/// multinomial draw on the `(x, a)` counts, which has the same law.
#[derive(Clone)]
pub struct KSigmaTest {
    functional: Arc<dyn FrequencyFunctional>,
    alphabet: Alphabet,
    alpha: f64,
    k: f64,
    input_dist: Vec<f64>,
    n: usize,
    bootstrap: usize,
    bootstrap_seed: u64,
}

pub fn ksigma_frequency_test(
    functional: Arc<dyn FrequencyFunctional>,
    alphabet: Alphabet,
    alpha: f64,
    k: f64,
    input_dist: Vec<f64>,
    n: usize,
) -> Result<KSigmaTest, HypothesisError> {
    if !(k > 0.0) {
        return Err(HypothesisError::InvalidParameter("K must be positive".into()));
    }
    if !alpha.is_finite() {
        return Err(HypothesisError::InvalidParameter("alpha must be finite".into()));
    }
    check_input_dist(&input_dist, alphabet)?;
    Ok(KSigmaTest {
        functional,
        alphabet,
        alpha,
        k,
        input_dist,
        n,
        bootstrap: DEFAULT_BOOTSTRAP,
        bootstrap_seed: 0,
    })
}

impl KSigmaTest {
    pub fn with_bootstrap(mut self, resamples: usize, seed: u64) -> Self {
        self.bootstrap = resamples.max(2);
        self.bootstrap_seed = seed;
        self
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// `F(P̃)` and `σ̂`; fails if `F` needs an input that was never used.
    pub fn statistic(&self, transcript: &Transcript) -> Result<KSigmaStatistic, CorrelationError> {
        let table = frequency_estimate(transcript, self.alphabet)?;
        let value = self.functional.evaluate(&table)?;
        Ok(KSigmaStatistic {
            value,
            sigma: self.bootstrap_sigma(&table),
        })
    }

    fn bootstrap_sigma(&self, table: &FrequencyTable) -> f64 {
        let counts = table.counts();
        let total = table.total();
        let mut rng = rng_from_seed(self.bootstrap_seed);
        let mut values = Vec::with_capacity(self.bootstrap);
        let mut resampled = vec![0u64; counts.len()];
        for _ in 0..self.bootstrap {
            let mut remaining = total;
            let mut mass_left = total;
            for (slot, &c) in resampled.iter_mut().zip(counts) {
                *slot = if remaining == 0 || c == 0 {
                    0
                } else if c == mass_left {
                    remaining
                } else {
                    let p = c as f64 / mass_left as f64;
                    Binomial::new(remaining, p).expect("valid binomial").sample(&mut rng)
                };
                remaining -= *slot;
                mass_left -= c;
            }
            let t = FrequencyTable::from_counts(self.alphabet, resampled.clone()).expect("same shape");
            if let Ok(v) = self.functional.evaluate(&t) {
                values.push(v);
            }
        }
        if values.len() < 2 {
            return f64::INFINITY;
        }
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
        var.sqrt()
    }
}

impl HypothesisTest for KSigmaTest {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn max_rounds(&self) -> usize {
        self.n
    }

    fn input_policy(&self, _history: &Transcript) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.input_dist)
    }

    /// Undefined frequencies count as a failure to reject.
    fn decision(&self, transcript: &Transcript) -> f64 {
        match self.statistic(transcript) {
            Ok(s) => (s.value > self.alpha + self.k * s.sigma) as u8 as f64,
            Err(_) => 0.0,
        }
    }

    fn descriptor(&self) -> String {
        format!(
            "ksigma(F={}, alpha={}, K={}, n={})",
            self.functional.name(),
            self.alpha,
            self.k,
            self.n
        )
    }

    /// Running `F(P̃_k)`; `NaN` while some needed input is unobserved.
    fn trajectory(&self, transcript: &Transcript) -> Vec<TracePoint> {
        let mut counts = vec![0u64; self.alphabet.cells()];
        transcript
            .rounds()
            .iter()
            .map(|r| {
                if r.x < self.alphabet.inputs {
                    counts[self.alphabet.index(r.x, r.a)] += 1;
                }
                let table = FrequencyTable::from_counts(self.alphabet, counts.clone()).expect("same shape");
                TracePoint {
                    statistic: self.functional.evaluate(&table).unwrap_or(f64::NAN),
                    pvalue: None,
                }
            })
            .collect()
    }
}
