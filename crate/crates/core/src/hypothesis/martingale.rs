//! Azuma–Hoeffding test for a linear witness that stays sound against
//! devices with memory.
//!
//! With inputs drawn iid from `r(x)`, the per-round score
//! `s_k = f(x_k, a_k)·w(x_k)/r(x_k)` has conditional mean `F(P_k(·|·, s_{k-1}))`
//! given the past. Under the null every such mean is at most `α`, so
//! `S_n = Σ_k (s_k − α)` is a supermartingale with increments in a range of
//! width `M − m`, and Azuma–Hoeffding gives
//!
//! `Pr[S_n ≥ t] ≤ exp(−2t² / (n (M − m)²))`
//!
//! for every history-dependent null behavior. Setting the right-hand side to
//! `ε` gives the rejection threshold.

use std::borrow::Cow;

use super::{check_input_dist, HypothesisError, HypothesisTest, TracePoint};
use crate::correlations::{Alphabet, CorrelationError, LinearWitness, Transcript};

/// `(M − m)·sqrt(n·ln(1/ε)/2)`.
pub fn hoeffding_threshold(width: f64, n: usize, epsilon: f64) -> f64 {
    width * (n as f64 * (1.0 / epsilon).ln() / 2.0).sqrt()
}

/// `min(1, exp(−2·max(S, 0)² / (n (M − m)²)))`.
pub fn hoeffding_pvalue(statistic: f64, width: f64, n: usize) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let s = statistic.max(0.0);
    if width == 0.0 {
        return if s > 0.0 { 0.0 } else { 1.0 };
    }
    (-2.0 * s * s / (n as f64 * width * width)).exp().min(1.0)
}

#[derive(Debug, Clone)]
pub struct MartingaleTest {
    witness: LinearWitness,
    epsilon: f64,
    input_dist: Vec<f64>,
    n: usize,
    /// Per-cell score `f(x,a)·w(x)/r(x)`.
    scores: Vec<f64>,
}

pub fn martingale_witness_test(
    witness: LinearWitness,
    epsilon: f64,
    input_dist: Vec<f64>,
    n: usize,
) -> Result<MartingaleTest, HypothesisError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(HypothesisError::InvalidParameter("epsilon must lie in (0, 1)".into()));
    }
    let alph = witness.alphabet();
    check_input_dist(&input_dist, alph)?;
    let (min, max) = witness.score_range();
    let mut scores = vec![0.0; alph.cells()];
    for x in 0..alph.inputs {
        let w = witness.input_weights()[x];
        let r = input_dist[x];
        for a in 0..alph.outputs {
            let f = witness.coeff(x, a);
            let s = if r > 0.0 {
                f * w / r
            } else if f * w == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            if !(s >= min && s <= max) {
                return Err(CorrelationError::UnboundedScore { value: s, min, max }.into());
            }
            scores[alph.index(x, a)] = s;
        }
    }
    Ok(MartingaleTest {
        witness,
        epsilon,
        input_dist,
        n,
        scores,
    })
}

impl MartingaleTest {
    pub fn width(&self) -> f64 {
        let (m, big_m) = self.witness.score_range();
        big_m - m
    }

    pub fn threshold(&self) -> f64 {
        hoeffding_threshold(self.width(), self.n, self.epsilon)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// `S_n = Σ_k (s_k − α)` over measured rounds.
    pub fn statistic(&self, transcript: &Transcript) -> f64 {
        let alph = self.witness.alphabet();
        let alpha = self.witness.alpha();
        transcript
            .rounds()
            .iter()
            .filter(|r| r.x < alph.inputs)
            .map(|r| self.scores[alph.index(r.x, r.a)] - alpha)
            .sum()
    }

    pub fn pvalue(&self, transcript: &Transcript) -> f64 {
        hoeffding_pvalue(self.statistic(transcript), self.width(), self.n)
    }
}

impl HypothesisTest for MartingaleTest {
    fn alphabet(&self) -> Alphabet {
        self.witness.alphabet()
    }

    fn max_rounds(&self) -> usize {
        self.n
    }

    fn input_policy(&self, _history: &Transcript) -> Cow<'_, [f64]> {
        Cow::Borrowed(&self.input_dist)
    }

    fn decision(&self, transcript: &Transcript) -> f64 {
        let s = self.statistic(transcript);
        let reject = if self.width() == 0.0 { s > 0.0 } else { s >= self.threshold() };
        reject as u8 as f64
    }

    fn descriptor(&self) -> String {
        format!(
            "martingale(alpha={}, eps={}, n={})",
            self.witness.alpha(),
            self.epsilon,
            self.n
        )
    }

    fn trajectory(&self, transcript: &Transcript) -> Vec<TracePoint> {
        let alph = self.witness.alphabet();
        let alpha = self.witness.alpha();
        let mut s = 0.0;
        transcript
            .rounds()
            .iter()
            .enumerate()
            .map(|(k, r)| {
                if r.x < alph.inputs {
                    s += self.scores[alph.index(r.x, r.a)] - alpha;
                }
                TracePoint {
                    statistic: s,
                    pvalue: Some(hoeffding_pvalue(s, self.width(), k + 1)),
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{evaluate_witness, Behavior};
    use crate::devices::iid_device;
    use crate::hypothesis::monte_carlo_acceptance;

    fn binary() -> Alphabet {
        Alphabet::no_input(2).unwrap()
    }

    #[test]
    fn threshold_arithmetic() {
        let t = hoeffding_threshold(1.0, 1000, 0.05);
        assert!((t - 38.7023).abs() < 1e-3, "{t}");
        // p-value at the threshold is ε
        assert!((hoeffding_pvalue(t, 1.0, 1000) - 0.05).abs() < 1e-12);
        assert_eq!(hoeffding_pvalue(-3.0, 1.0, 10), 1.0);
    }

    #[test]
    fn parameter_validation() {
        let w = LinearWitness::with_uniform_weights(binary(), vec![0.0, 1.0], 0.5).unwrap();
        assert!(martingale_witness_test(w.clone(), 0.0, vec![1.0], 10).is_err());
        assert!(martingale_witness_test(w.clone(), 1.0, vec![1.0], 10).is_err());
        assert!(martingale_witness_test(w, 0.05, vec![1.0], 10).is_ok());

        // inputs sampled at half the weight double the score and leave [0, 1]
        let alph = Alphabet::new(2, 2).unwrap();
        let w = LinearWitness::new(alph, vec![0.0, 1.0, 0.0, 1.0], vec![0.5, 0.5], 0.5, (0.0, 1.0)).unwrap();
        assert!(matches!(
            martingale_witness_test(w, 0.05, vec![0.25, 0.75], 10),
            Err(HypothesisError::Correlation(CorrelationError::UnboundedScore { .. }))
        ));
    }

    #[test]
    fn statistic_and_trajectory_agree() {
        let w = LinearWitness::with_uniform_weights(binary(), vec![0.0, 1.0], 0.25).unwrap();
        let test = martingale_witness_test(w, 0.05, vec![1.0], 4).unwrap();
        let t = Transcript::from_outputs([1, 0, 1, 1]);
        assert_eq!(test.statistic(&t), 2.0);
        let traj = test.trajectory(&t);
        assert_eq!(traj.len(), 4);
        assert_eq!(traj[3].statistic, 2.0);
        assert_eq!(traj[1].statistic, 0.5);
    }

    #[test]
    fn null_at_boundary_is_rarely_rejected() {
        let alph = Alphabet::new(2, 3).unwrap();
        let p = Behavior::from_fn(alph, |x, a| [[0.2, 0.5, 0.3], [0.6, 0.1, 0.3]][x][a]).unwrap();
        let f = LinearWitness::with_uniform_weights(alph, vec![0.0, 1.0, 0.5, 1.0, 0.0, 0.2], 0.0).unwrap();
        let alpha = evaluate_witness(&f, &p).unwrap();
        let test = martingale_witness_test(f.with_alpha(alpha), 0.05, vec![0.5, 0.5], 1000).unwrap();
        let r = monte_carlo_acceptance(&test, &iid_device(p), 2000, 8).unwrap();
        assert!(r.accept_rate <= 0.05);
    }

    #[test]
    fn drift_is_detected() {
        let f = LinearWitness::with_uniform_weights(binary(), vec![0.0, 1.0], 0.3).unwrap();
        let p = Behavior::new(binary(), vec![0.5, 0.5]).unwrap();
        let test = martingale_witness_test(f, 0.05, vec![1.0], 1000).unwrap();
        let r = monte_carlo_acceptance(&test, &iid_device(p), 1000, 9).unwrap();
        assert!(r.accept_rate >= 0.99);
    }
}
