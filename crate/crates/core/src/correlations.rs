//! Single-round probability objects: alphabets, behaviors, transcripts,
//! frequency estimates, distances and linear witnesses.
//!
//! Conditional tables are stored row-major by input: entry `(x, a)` lives at
//! index `x * A + a`, so each row is the output distribution for one input.
//! Composite outputs such as triples `(a1, a2, a3)` are flattened row-major,
//! i.e. `((a1 * A2) + a2) * A3 + a3`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Normalization tolerance for in-memory behaviors.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Normalization tolerance accepted when reading behavior files; smaller
/// deficits are renormalized away.
pub const FILE_NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorrelationError {
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("table has {got} entries, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("negative entry P({a}|{x})")]
    NegativeEntry { a: usize, x: usize },
    #[error("row for input {x} not normalized (sum - 1 = {deficit:e})")]
    NotNormalized { x: usize, deficit: f64 },
    #[error("alphabet mismatch: {left:?} vs {right:?}")]
    AlphabetMismatch { left: Alphabet, right: Alphabet },
    #[error("symbol out of range in round {round}: x={x}, a={a}")]
    SymbolOutOfRange { round: usize, x: usize, a: usize },
    #[error("input {0} never observed")]
    UndefinedFrequency(usize),
    #[error("score coefficient {value} outside declared range [{min}, {max}]")]
    UnboundedScore { value: f64, min: f64, max: f64 },
    #[error("behavior file: {0}")]
    Parse(String),
}

/// Input and output alphabet sizes of a single device use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub inputs: usize,
    pub outputs: usize,
}

impl Alphabet {
    pub fn new(inputs: usize, outputs: usize) -> Result<Self, CorrelationError> {
        if inputs < 1 {
            return Err(CorrelationError::InvalidAlphabet(
                "need at least one input".into(),
            ));
        }
        if outputs < 2 {
            return Err(CorrelationError::InvalidAlphabet(
                "need at least two outputs".into(),
            ));
        }
        Ok(Self { inputs, outputs })
    }

    /// Alphabet of a no-input scenario with `outputs` joint outcomes.
    pub fn no_input(outputs: usize) -> Result<Self, CorrelationError> {
        Self::new(1, outputs)
    }

    /// Number of `(x, a)` cells.
    pub fn cells(&self) -> usize {
        self.inputs * self.outputs
    }

    #[inline]
    pub fn index(&self, x: usize, a: usize) -> usize {
        x * self.outputs + a
    }

    fn ensure_same(&self, other: &Alphabet) -> Result<(), CorrelationError> {
        if self != other {
            return Err(CorrelationError::AlphabetMismatch {
                left: *self,
                right: *other,
            });
        }
        Ok(())
    }
}

/// Checks nonnegativity, then per-input normalization within `tol`.
fn check_table(alphabet: Alphabet, probs: &[f64], tol: f64) -> Result<(), CorrelationError> {
    if probs.len() != alphabet.cells() {
        return Err(CorrelationError::DimensionMismatch {
            expected: alphabet.cells(),
            got: probs.len(),
        });
    }
    for x in 0..alphabet.inputs {
        let row = &probs[x * alphabet.outputs..(x + 1) * alphabet.outputs];
        if let Some(a) = row.iter().position(|p| !(*p >= 0.0)) {
            return Err(CorrelationError::NegativeEntry { a, x });
        }
    }
    for x in 0..alphabet.inputs {
        let row = &probs[x * alphabet.outputs..(x + 1) * alphabet.outputs];
        let deficit = row.iter().sum::<f64>() - 1.0;
        if deficit.abs() > tol {
            return Err(CorrelationError::NotNormalized { x, deficit });
        }
    }
    Ok(())
}

/// Checks a raw table against the behavior invariants without building one.
pub fn validate_behavior(alphabet: Alphabet, probs: &[f64]) -> Result<(), CorrelationError> {
    check_table(alphabet, probs, NORMALIZATION_TOL)
}

/// A conditional distribution `P(a|x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Behavior {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

impl Behavior {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self, CorrelationError> {
        validate_behavior(alphabet, &probs)?;
        Ok(Self { alphabet, probs })
    }

    pub fn from_fn(
        alphabet: Alphabet,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self, CorrelationError> {
        let mut probs = Vec::with_capacity(alphabet.cells());
        for x in 0..alphabet.inputs {
            for a in 0..alphabet.outputs {
                probs.push(f(x, a));
            }
        }
        Self::new(alphabet, probs)
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let p = 1.0 / alphabet.outputs as f64;
        Self {
            alphabet,
            probs: vec![p; alphabet.cells()],
        }
    }

    /// Point mass on output `a` for every input.
    pub fn deterministic(alphabet: Alphabet, a: usize) -> Self {
        assert!(a < alphabet.outputs, "output {a} out of range");
        let mut probs = vec![0.0; alphabet.cells()];
        for x in 0..alphabet.inputs {
            probs[alphabet.index(x, a)] = 1.0;
        }
        Self { alphabet, probs }
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn prob(&self, x: usize, a: usize) -> f64 {
        self.probs[self.alphabet.index(x, a)]
    }

    /// Output distribution for input `x`.
    pub fn row(&self, x: usize) -> &[f64] {
        let n = self.alphabet.outputs;
        &self.probs[x * n..(x + 1) * n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    /// Number of nonzero entries, `‖P‖₀`.
    pub fn support_size(&self) -> usize {
        self.probs.iter().filter(|p| **p > 0.0).count()
    }

    /// `λ·self + (1-λ)·other`.
    pub fn mix(&self, other: &Behavior, lambda: f64) -> Result<Behavior, CorrelationError> {
        self.alphabet.ensure_same(&other.alphabet)?;
        let probs = self
            .probs
            .iter()
            .zip(&other.probs)
            .map(|(p, q)| lambda * p + (1.0 - lambda) * q)
            .collect();
        Ok(Behavior {
            alphabet: self.alphabet,
            probs,
        })
    }

    /// Parses the key-value behavior file format:
    ///
    /// ```text
    /// input_size = 1
    /// output_size = 2
    /// probs = [0.5, 0.5]
    /// ```
    ///
    /// Rows off by more than [`FILE_NORMALIZATION_TOL`] are rejected; smaller
    /// deviations are renormalized.
    pub fn from_toml_str(text: &str) -> Result<Self, CorrelationError> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct BehaviorFile {
            input_size: usize,
            output_size: usize,
            probs: Vec<f64>,
        }
        let file: BehaviorFile =
            toml::from_str(text).map_err(|e| CorrelationError::Parse(e.to_string()))?;
        let alphabet = Alphabet::new(file.input_size, file.output_size)?;
        let mut probs = file.probs;
        check_table(alphabet, &probs, FILE_NORMALIZATION_TOL)?;
        for row in probs.chunks_mut(alphabet.outputs) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        Self::new(alphabet, probs)
    }

    pub fn to_toml_string(&self) -> String {
        let probs: Vec<String> = self.probs.iter().map(|p| format!("{p:?}")).collect();
        format!(
            "input_size = {}\noutput_size = {}\nprobs = [{}]\n",
            self.alphabet.inputs,
            self.alphabet.outputs,
            probs.join(", ")
        )
    }
}

/// Worst-case-input ℓ1 distance `max_x Σ_a |P(a|x) − Q(a|x)|`.
pub fn l1_distance(p: &Behavior, q: &Behavior) -> Result<f64, CorrelationError> {
    p.alphabet.ensure_same(&q.alphabet)?;
    Ok((0..p.alphabet.inputs)
        .map(|x| {
            p.row(x)
                .iter()
                .zip(q.row(x))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        })
        .fold(0.0, f64::max))
}

/// One round of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Round {
    pub x: usize,
    pub a: usize,
}

/// Ordered list of `(input, output)` pairs, `s_k = (a_1, x_1, …, a_k, x_k)`.
///
/// The input symbol `x == alphabet.inputs` is reserved for the "not
/// measured" input ∅ of variable-length protocols; it always carries output 0.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Transcript {
    rounds: Vec<Round>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(n: usize) -> Self {
        Self {
            rounds: Vec::with_capacity(n),
        }
    }

    pub fn from_rounds(rounds: Vec<Round>) -> Self {
        Self { rounds }
    }

    /// Transcript of a no-input scenario.
    pub fn from_outputs(outputs: impl IntoIterator<Item = usize>) -> Self {
        Self {
            rounds: outputs.into_iter().map(|a| Round { x: 0, a }).collect(),
        }
    }

    pub fn push(&mut self, x: usize, a: usize) {
        self.rounds.push(Round { x, a });
    }

    pub fn pop(&mut self) -> Option<Round> {
        self.rounds.pop()
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn rounds(&self) -> &[Round] {
        &self.rounds
    }

    pub fn outputs(&self) -> impl Iterator<Item = usize> + '_ {
        self.rounds.iter().map(|r| r.a)
    }

    /// Whether the protocol has stopped. ∅ is absorbing, so only the last
    /// round needs checking.
    pub fn is_stopped(&self, alphabet: Alphabet) -> bool {
        self.rounds.last().is_some_and(|r| r.x == alphabet.inputs)
    }

    /// Checks every symbol against `alphabet` (∅ allowed) and the length
    /// against `max_rounds`.
    pub fn validate(&self, alphabet: Alphabet, max_rounds: usize) -> Result<(), CorrelationError> {
        if self.len() > max_rounds {
            return Err(CorrelationError::DimensionMismatch {
                expected: max_rounds,
                got: self.len(),
            });
        }
        for (round, r) in self.rounds.iter().enumerate() {
            let stop = r.x == alphabet.inputs && r.a == 0;
            if !stop && (r.x >= alphabet.inputs || r.a >= alphabet.outputs) {
                return Err(CorrelationError::SymbolOutOfRange {
                    round,
                    x: r.x,
                    a: r.a,
                });
            }
        }
        Ok(())
    }
}

/// Observed counts and the frequency estimate `P̃(a|x) = N(a,x) / N(x)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrequencyTable {
    alphabet: Alphabet,
    counts: Vec<u64>,
    undefined_inputs: Vec<usize>,
}

impl FrequencyTable {
    pub fn from_counts(alphabet: Alphabet, counts: Vec<u64>) -> Result<Self, CorrelationError> {
        if counts.len() != alphabet.cells() {
            return Err(CorrelationError::DimensionMismatch {
                expected: alphabet.cells(),
                got: counts.len(),
            });
        }
        let undefined_inputs = (0..alphabet.inputs)
            .filter(|&x| counts[x * alphabet.outputs..(x + 1) * alphabet.outputs].iter().all(|c| *c == 0))
            .collect();
        Ok(Self {
            alphabet,
            counts,
            undefined_inputs,
        })
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn count(&self, x: usize, a: usize) -> u64 {
        self.counts[self.alphabet.index(x, a)]
    }

    pub fn input_total(&self, x: usize) -> u64 {
        let n = self.alphabet.outputs;
        self.counts[x * n..(x + 1) * n].iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn undefined_inputs(&self) -> &[usize] {
        &self.undefined_inputs
    }

    /// Exact estimate as `(numerator, denominator)`, `None` if `x` unobserved.
    pub fn ratio(&self, x: usize, a: usize) -> Option<(u64, u64)> {
        let d = self.input_total(x);
        (d > 0).then(|| (self.count(x, a), d))
    }

    pub fn estimate(&self, x: usize, a: usize) -> Option<f64> {
        self.ratio(x, a).map(|(n, d)| n as f64 / d as f64)
    }

    /// The estimate as a behavior; fails if any input was never observed.
    pub fn to_behavior(&self) -> Result<Behavior, CorrelationError> {
        if let Some(&x) = self.undefined_inputs.first() {
            return Err(CorrelationError::UndefinedFrequency(x));
        }
        let alphabet = self.alphabet;
        let probs = (0..alphabet.inputs)
            .flat_map(|x| {
                let d = self.input_total(x) as f64;
                (0..alphabet.outputs).map(move |a| (x, a, d))
            })
            .map(|(x, a, d)| self.count(x, a) as f64 / d)
            .collect();
        Ok(Behavior { alphabet, probs })
    }

    /// Exact comparison of the estimate with a behavior, in integer
    /// arithmetic where `p` is a dyadic rational (always true for `f64`).
    pub fn equals_exactly(&self, p: &Behavior) -> bool {
        if p.alphabet != self.alphabet {
            return false;
        }
        (0..self.alphabet.inputs).all(|x| {
            let d = self.input_total(x);
            d > 0
                && (0..self.alphabet.outputs)
                    .all(|a| self.count(x, a) as f64 == p.prob(x, a) * d as f64)
        })
    }
}

/// Per-input empirical conditionals of a transcript. Rounds with the ∅ input
/// are skipped.
pub fn frequency_estimate(
    transcript: &Transcript,
    alphabet: Alphabet,
) -> Result<FrequencyTable, CorrelationError> {
    let mut counts = vec![0u64; alphabet.cells()];
    for (round, r) in transcript.rounds().iter().enumerate() {
        if r.x == alphabet.inputs {
            continue;
        }
        if r.x > alphabet.inputs || r.a >= alphabet.outputs {
            return Err(CorrelationError::SymbolOutOfRange {
                round,
                x: r.x,
                a: r.a,
            });
        }
        counts[alphabet.index(r.x, r.a)] += 1;
    }
    FrequencyTable::from_counts(alphabet, counts)
}

/// Linear functional `F(P) = Σ_{a,x} f(a,x)·w(x)·P(a|x)` with null bound
/// `F(P) ≤ alpha` and a declared range `[m, M]` for the coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearWitness {
    alphabet: Alphabet,
    coeffs: Vec<f64>,
    input_weights: Vec<f64>,
    alpha: f64,
    score_range: (f64, f64),
}

impl LinearWitness {
    pub fn new(
        alphabet: Alphabet,
        coeffs: Vec<f64>,
        input_weights: Vec<f64>,
        alpha: f64,
        score_range: (f64, f64),
    ) -> Result<Self, CorrelationError> {
        if coeffs.len() != alphabet.cells() {
            return Err(CorrelationError::DimensionMismatch {
                expected: alphabet.cells(),
                got: coeffs.len(),
            });
        }
        if input_weights.len() != alphabet.inputs {
            return Err(CorrelationError::DimensionMismatch {
                expected: alphabet.inputs,
                got: input_weights.len(),
            });
        }
        let (min, max) = score_range;
        if !(min <= max) {
            return Err(CorrelationError::InvalidAlphabet(format!(
                "empty score range [{min}, {max}]"
            )));
        }
        if let Some(&value) = coeffs.iter().find(|c| !(**c >= min && **c <= max)) {
            return Err(CorrelationError::UnboundedScore { value, min, max });
        }
        Ok(Self {
            alphabet,
            coeffs,
            input_weights,
            alpha,
            score_range,
        })
    }

    /// Witness with uniform input weights `1/X` and the tightest score range.
    pub fn with_uniform_weights(
        alphabet: Alphabet,
        coeffs: Vec<f64>,
        alpha: f64,
    ) -> Result<Self, CorrelationError> {
        let min = coeffs.iter().copied().fold(f64::INFINITY, f64::min);
        let max = coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w = vec![1.0 / alphabet.inputs as f64; alphabet.inputs];
        Self::new(alphabet, coeffs, w, alpha, (min, max))
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn coeff(&self, x: usize, a: usize) -> f64 {
        self.coeffs[self.alphabet.index(x, a)]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn input_weights(&self) -> &[f64] {
        &self.input_weights
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn score_range(&self) -> (f64, f64) {
        self.score_range
    }

    /// Evaluates `F` on an estimate; inputs with nonzero weight must have
    /// been observed.
    pub fn evaluate_frequencies(&self, table: &FrequencyTable) -> Result<f64, CorrelationError> {
        self.alphabet.ensure_same(&table.alphabet())?;
        let mut total = 0.0;
        for x in 0..self.alphabet.inputs {
            let w = self.input_weights[x];
            if w == 0.0 {
                continue;
            }
            let d = table.input_total(x);
            if d == 0 {
                return Err(CorrelationError::UndefinedFrequency(x));
            }
            let row: f64 = (0..self.alphabet.outputs)
                .map(|a| self.coeff(x, a) * table.count(x, a) as f64)
                .sum();
            total += w * row / d as f64;
        }
        Ok(total)
    }
}

/// `F(P)` for a linear witness.
pub fn evaluate_witness(f: &LinearWitness, p: &Behavior) -> Result<f64, CorrelationError> {
    f.alphabet.ensure_same(&p.alphabet)?;
    Ok((0..f.alphabet.inputs)
        .map(|x| {
            f.input_weights[x]
                * p.row(x)
                    .iter()
                    .enumerate()
                    .map(|(a, pa)| f.coeff(x, a) * pa)
                    .sum::<f64>()
        })
        .sum())
}

/// History-independent n-round behavior `P_1 ⊗ … ⊗ P_n`: round `k` is
/// answered by `P_k` whatever happened before.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBehavior {
    rounds: Vec<Behavior>,
}

impl ProductBehavior {
    pub fn alphabet(&self) -> Alphabet {
        self.rounds[0].alphabet
    }

    pub fn rounds(&self) -> &[Behavior] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    /// Probability of a complete transcript given its inputs, `Π_k P_k(a_k|x_k)`.
    pub fn transcript_probability(&self, t: &Transcript) -> f64 {
        if t.len() != self.rounds.len() {
            return 0.0;
        }
        t.rounds()
            .iter()
            .zip(&self.rounds)
            .map(|(r, p)| p.prob(r.x, r.a))
            .product()
    }
}

/// `⊗_k P_k` for a nonempty list sharing one alphabet.
pub fn product_behavior(list: Vec<Behavior>) -> Result<ProductBehavior, CorrelationError> {
    let first = list
        .first()
        .ok_or_else(|| CorrelationError::InvalidAlphabet("empty behavior list".into()))?
        .alphabet;
    for p in &list[1..] {
        first.ensure_same(&p.alphabet)?;
    }
    Ok(ProductBehavior { rounds: list })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn binary() -> Alphabet {
        Alphabet::new(1, 2).unwrap()
    }

    fn pc() -> Behavior {
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[7] = 0.5;
        Behavior::new(Alphabet::no_input(8).unwrap(), p).unwrap()
    }

    #[test]
    fn alphabet_bounds() {
        assert!(Alphabet::new(0, 2).is_err());
        assert!(Alphabet::new(1, 1).is_err());
        assert_eq!(Alphabet::new(3, 4).unwrap().cells(), 12);
    }

    #[test]
    fn validate_examples() {
        assert!(validate_behavior(binary(), &[0.5, 0.5]).is_ok());
        match validate_behavior(binary(), &[0.6, 0.5]) {
            Err(CorrelationError::NotNormalized { x: 0, deficit }) => {
                assert!((deficit - 0.1).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            validate_behavior(binary(), &[-0.1, 1.1]),
            Err(CorrelationError::NegativeEntry { a: 0, x: 0 })
        );
        assert!(matches!(
            validate_behavior(binary(), &[1.0]),
            Err(CorrelationError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn frequency_examples() {
        let alph = Alphabet::new(2, 2).unwrap();
        let t = Transcript::from_rounds(vec![
            Round { x: 0, a: 1 },
            Round { x: 0, a: 0 },
            Round { x: 1, a: 1 },
        ]);
        let f = frequency_estimate(&t, alph).unwrap();
        assert_eq!(f.estimate(0, 1), Some(0.5));
        assert_eq!(f.estimate(1, 1), Some(1.0));
        assert_eq!(f.ratio(0, 1), Some((1, 2)));

        let empty = frequency_estimate(&Transcript::new(), alph).unwrap();
        assert_eq!(empty.undefined_inputs(), &[0, 1]);
        assert_eq!(empty.to_behavior(), Err(CorrelationError::UndefinedFrequency(0)));

        let clock = Transcript::from_outputs([0, 7, 0, 7]);
        let f = frequency_estimate(&clock, Alphabet::no_input(8).unwrap()).unwrap();
        assert_eq!(f.estimate(0, 0), Some(0.5));
        assert_eq!(f.estimate(0, 7), Some(0.5));
        assert!(f.equals_exactly(&pc()));
    }

    #[test]
    fn frequency_rejects_out_of_range() {
        let t = Transcript::from_outputs([0, 2]);
        assert!(matches!(
            frequency_estimate(&t, binary()),
            Err(CorrelationError::SymbolOutOfRange { round: 1, .. })
        ));
    }

    #[test]
    fn distance_examples() {
        let p = Behavior::uniform(binary());
        assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
        let d0 = Behavior::deterministic(binary(), 0);
        let d1 = Behavior::deterministic(binary(), 1);
        assert_eq!(l1_distance(&d0, &d1).unwrap(), 2.0);
        let p0 = Behavior::deterministic(Alphabet::no_input(8).unwrap(), 0);
        assert_eq!(l1_distance(&pc(), &p0).unwrap(), 1.0);
        assert!(l1_distance(&p, &p0).is_err());
    }

    #[test]
    fn witness_examples() {
        let alph = Alphabet::no_input(8).unwrap();
        let zero = LinearWitness::with_uniform_weights(alph, vec![0.0; 8], 0.0).unwrap();
        assert_eq!(evaluate_witness(&zero, &pc()).unwrap(), 0.0);
        let mut f = vec![0.0; 8];
        f[0] = 1.0;
        f[7] = 1.0;
        let ghz = LinearWitness::with_uniform_weights(alph, f, 0.9).unwrap();
        assert_eq!(evaluate_witness(&ghz, &pc()).unwrap(), 1.0);
        assert_eq!(evaluate_witness(&ghz, &Behavior::uniform(alph)).unwrap(), 0.25);
    }

    #[test]
    fn witness_rejects_out_of_range_coefficients() {
        let err = LinearWitness::new(binary(), vec![0.0, 2.0], vec![1.0], 0.5, (0.0, 1.0));
        assert!(matches!(err, Err(CorrelationError::UnboundedScore { .. })));
    }

    #[test]
    fn product_examples() {
        let p = Behavior::uniform(binary());
        let single = product_behavior(vec![p.clone()]).unwrap();
        assert_eq!(single.rounds(), std::slice::from_ref(&p));

        let alph = Alphabet::no_input(8).unwrap();
        let clock = product_behavior(vec![
            Behavior::deterministic(alph, 0),
            Behavior::deterministic(alph, 7),
        ])
        .unwrap();
        assert_eq!(clock.transcript_probability(&Transcript::from_outputs([0, 7])), 1.0);
        assert_eq!(clock.transcript_probability(&Transcript::from_outputs([7, 0])), 0.0);

        let pp = product_behavior(vec![p.clone(), p]).unwrap();
        for t in [[0, 0], [0, 1], [1, 0], [1, 1]] {
            assert_eq!(pp.transcript_probability(&Transcript::from_outputs(t)), 0.25);
        }
        assert!(product_behavior(vec![Behavior::uniform(binary()), pc()]).is_err());
        assert!(product_behavior(vec![]).is_err());
    }

    #[test]
    fn behavior_file_roundtrip_and_renormalization() {
        let p = pc();
        assert_eq!(Behavior::from_toml_str(&p.to_toml_string()).unwrap(), p);

        let slightly_off = "input_size = 1\noutput_size = 2\nprobs = [0.5, 0.5000000001]\n";
        let q = Behavior::from_toml_str(slightly_off).unwrap();
        assert!((q.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-15);

        let off = "input_size = 1\noutput_size = 2\nprobs = [0.5, 0.51]\n";
        assert!(matches!(
            Behavior::from_toml_str(off),
            Err(CorrelationError::NotNormalized { .. })
        ));
        let unknown = "input_size = 1\noutput_size = 2\nprobs = [0.5, 0.5]\nfoo = 1\n";
        assert!(matches!(
            Behavior::from_toml_str(unknown),
            Err(CorrelationError::Parse(_))
        ));
    }

    fn behavior_strategy(inputs: usize, outputs: usize) -> impl Strategy<Value = Behavior> {
        prop::collection::vec(0.01f64..1.0, inputs * outputs).prop_map(move |raw| {
            let alph = Alphabet::new(inputs, outputs).unwrap();
            let mut probs = raw;
            for row in probs.chunks_mut(outputs) {
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|p| *p /= s);
            }
            Behavior { alphabet: alph, probs }
        })
    }

    proptest! {
        #[test]
        fn l1_is_a_metric(
            p in behavior_strategy(3, 4),
            q in behavior_strategy(3, 4),
            r in behavior_strategy(3, 4),
        ) {
            let pq = l1_distance(&p, &q).unwrap();
            let qp = l1_distance(&q, &p).unwrap();
            let qr = l1_distance(&q, &r).unwrap();
            let pr = l1_distance(&p, &r).unwrap();
            prop_assert!((pq - qp).abs() <= 1e-12);
            prop_assert!(pr <= pq + qr + 1e-12);
            prop_assert_eq!(l1_distance(&p, &p).unwrap(), 0.0);
            prop_assert!(p == q || pq > 0.0);
        }

        #[test]
        fn witness_is_linear(
            p in behavior_strategy(2, 3),
            q in behavior_strategy(2, 3),
            coeffs in prop::collection::vec(-1.0f64..1.0, 6),
            lambda in 0.0f64..1.0,
        ) {
            let alph = p.alphabet();
            let f = LinearWitness::with_uniform_weights(alph, coeffs, 0.0).unwrap();
            let mixed = p.mix(&q, lambda).unwrap();
            let lhs = evaluate_witness(&f, &mixed).unwrap();
            let rhs = lambda * evaluate_witness(&f, &p).unwrap()
                + (1.0 - lambda) * evaluate_witness(&f, &q).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12);
        }
    }
}
