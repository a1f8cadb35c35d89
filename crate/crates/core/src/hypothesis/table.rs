use std::borrow::Cow;
use std::sync::Arc;

use rand::Rng;

use super::{check_input_dist, HypothesisError, HypothesisTest};
use crate::correlations::{Alphabet, Transcript};
use crate::rng::SimRng;

/// Position of a transcript among all transcripts of its length, with round
/// 1 as the most significant digit and `(x, a)` coded as `x·A + a`.
fn transcript_code(alphabet: Alphabet, t: &Transcript) -> usize {
    t.rounds()
        .iter()
        .fold(0, |acc, r| acc * alphabet.cells() + alphabet.index(r.x, r.a))
}

/// Offset of length-`k` prefixes in a table holding all prefixes of
/// lengths `0..n`.
fn prefix_offset(alphabet: Alphabet, k: usize) -> usize {
    (0..k).map(|j| alphabet.cells().pow(j as u32)).sum()
}

fn random_simplex(len: usize, rng: &mut SimRng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..len).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|p| *p /= s);
    v
}

/// A test given by explicit tables: one input distribution per prefix and
/// one acceptance probability per complete transcript.
#[derive(Debug, Clone, PartialEq)]
pub struct TableTest {
    alphabet: Alphabet,
    n: usize,
    /// `None` means uniform inputs every round.
    policies: Option<Vec<Vec<f64>>>,
    decisions: Vec<f64>,
    name: String,
}

impl TableTest {
    /// Test with uniform inputs and the given decision per transcript,
    /// indexed as described in [`TableTest::transcript_index`].
    pub fn from_decisions(alphabet: Alphabet, n: usize, decisions: Vec<f64>) -> Result<Self, HypothesisError> {
        let expected = alphabet.cells().pow(n as u32);
        if decisions.len() != expected {
            return Err(HypothesisError::InvalidParameter(format!(
                "decision table has {} entries, expected {expected}",
                decisions.len()
            )));
        }
        if let Some(d) = decisions.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(HypothesisError::InvalidParameter(format!(
                "decision value {d} outside [0, 1]"
            )));
        }
        Ok(Self {
            alphabet,
            n,
            policies: None,
            decisions,
            name: "table".into(),
        })
    }

    /// Random decisions in `[0, 1]` and, if `random_policy`, random
    /// history-dependent input distributions.
    pub fn random(alphabet: Alphabet, n: usize, random_policy: bool, rng: &mut SimRng) -> Self {
        let decisions = (0..alphabet.cells().pow(n as u32)).map(|_| rng.random::<f64>()).collect();
        let policies = random_policy.then(|| {
            (0..prefix_offset(alphabet, n))
                .map(|_| random_simplex(alphabet.inputs, rng))
                .collect()
        });
        Self {
            alphabet,
            n,
            policies,
            decisions,
            name: "random-table".into(),
        }
    }

    /// Random 0/1 decisions with uniform inputs.
    pub fn random_deterministic(alphabet: Alphabet, n: usize, rng: &mut SimRng) -> Self {
        let decisions = (0..alphabet.cells().pow(n as u32))
            .map(|_| rng.random_bool(0.5) as u8 as f64)
            .collect();
        Self {
            alphabet,
            n,
            policies: None,
            decisions,
            name: "random-0/1-table".into(),
        }
    }

    /// The test with `Q_f' = 1 − Q_f` and identical policies.
    pub fn complement(&self) -> Self {
        Self {
            decisions: self.decisions.iter().map(|d| 1.0 - d).collect(),
            name: format!("not({})", self.name),
            ..self.clone()
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Index of a complete transcript in the decision table: round 1 is the
    /// most significant digit, each round coded as `x·A + a`.
    pub fn transcript_index(&self, t: &Transcript) -> usize {
        transcript_code(self.alphabet, t)
    }
}

impl HypothesisTest for TableTest {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn max_rounds(&self) -> usize {
        self.n
    }

    fn input_policy(&self, history: &Transcript) -> Cow<'_, [f64]> {
        match &self.policies {
            Some(p) => {
                let idx = prefix_offset(self.alphabet, history.len()) + transcript_code(self.alphabet, history);
                Cow::Borrowed(&p[idx])
            }
            None => Cow::Owned(vec![1.0 / self.alphabet.inputs as f64; self.alphabet.inputs]),
        }
    }

    fn decision(&self, transcript: &Transcript) -> f64 {
        self.decisions[self.transcript_index(transcript)]
    }

    fn descriptor(&self) -> String {
        self.name.clone()
    }
}

type DecisionFn = dyn Fn(&Transcript) -> f64 + Send + Sync;

/// A test with iid inputs and an arbitrary decision function.
#[derive(Clone)]
pub struct FnTest {
    name: String,
    alphabet: Alphabet,
    n: usize,
    input_dist: Vec<f64>,
    decision: Arc<DecisionFn>,
}

impl FnTest {
    pub fn new(
        name: impl Into<String>,
        alphabet: Alphabet,
        n: usize,
        input_dist: Vec<f64>,
        decision: impl Fn(&Transcript) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, HypothesisError> {
        check_input_dist(&input_dist, alphabet)?;
        Ok(Self {
            name: name.into(),
            alphabet,
            n,
            input_dist,
            decision: Arc::new(decision),
        })
    }

    /// No-input scenario: the single input is always used.
    pub fn no_input(
        name: impl Into<String>,
        alphabet: Alphabet,
        n: usize,
        decision: impl Fn(&Transcript) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let dist = vec![1.0 / alphabet.inputs as f64; alphabet.inputs];
        Self::new(name, alphabet, n, dist, decision).expect("uniform inputs are valid")
    }
}

impl std::fmt::Debug for FnTest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FnTest")
            .field("name", &self.name)
            .field("alphabet", &self.alphabet)
            .field("n", &self.n)
            .finish()
    }
}

impl HypothesisTest for FnTest {
    fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    fn max_rounds(&self) -> usize {
        self.n
    }

    fn input_policy(&self, _history: &Transcript) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.input_dist)
    }

    fn decision(&self, transcript: &Transcript) -> f64 {
        (self.decision)(transcript)
    }

    fn descriptor(&self) -> String {
        self.name.clone()
    }
}

/// Accepts with fixed probability `c` whatever happens.
pub fn constant_test(alphabet: Alphabet, n: usize, c: f64) -> FnTest {
    FnTest::no_input(format!("constant({c})"), alphabet, n, move |_| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn transcript_index_is_row_major() {
        let alph = Alphabet::new(2, 2).unwrap();
        let test = TableTest::from_decisions(alph, 2, (0..16).map(|i| i as f64 / 16.0).collect()).unwrap();
        let mut t = Transcript::new();
        t.push(1, 0);
        t.push(0, 1);
        assert_eq!(test.transcript_index(&t), 2 * 4 + 1);
        assert_eq!(test.decision(&t), 9.0 / 16.0);
    }

    #[test]
    fn random_policies_are_distributions() {
        let alph = Alphabet::new(3, 2).unwrap();
        let test = TableTest::random(alph, 2, true, &mut rng_from_seed(4));
        let mut t = Transcript::new();
        let p = test.input_policy(&t).into_owned();
        assert_eq!(p.len(), 3);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        t.push(2, 1);
        let q = test.input_policy(&t).into_owned();
        assert_ne!(p, q);
    }

    #[test]
    fn decision_table_validation() {
        let alph = Alphabet::no_input(2).unwrap();
        assert!(TableTest::from_decisions(alph, 2, vec![0.0; 3]).is_err());
        assert!(TableTest::from_decisions(alph, 1, vec![0.0, 1.5]).is_err());
        assert!(FnTest::new("x", alph, 1, vec![0.5], |_| 0.0).is_err());
    }
}
