//! Triangle network with three binary parties.
//!
//! Joint outcomes are flattened party-major, `(a1, a2, a3) ↦ 4·a1 + 2·a2 + a3`,
//! so `(0,0,0)` is 0 and `(1,1,1)` is 7. There are no inputs (`X = 1`).

mod demo;
mod optimizer;

pub use demo::{attack_demo, AttackDemoReport, DemoEntry, Regime, SkippedEntry};
pub use optimizer::{best_local_approx, ApproxOptions, ApproxResult, Objective};

use crate::correlations::{Behavior, LinearWitness};
use crate::devices::{DeterministicStrategy, PartyStructure};
use crate::hypothesis::{enumerate_deterministic_max, HypothesisError, HypothesisTest};

pub type TriangleScenario = PartyStructure;

pub fn scenario() -> TriangleScenario {
    PartyStructure::triangle_binary()
}

/// Point mass on all parties outputting `bit`.
pub fn agreeing_point(bit: usize) -> Behavior {
    let s = scenario();
    Behavior::deterministic(s.alphabet(), s.encode(&[bit; 3]))
}

/// Mass ½ on `(0,0,0)` and ½ on `(1,1,1)`.
pub fn p_c() -> Behavior {
    agreeing_point(0).mix(&agreeing_point(1), 0.5).expect("same alphabet")
}

/// `P(0,0,0) + P(1,1,1)`, bounded by 1 on every behavior.
pub fn ghz_witness(alpha: f64) -> LinearWitness {
    let s = scenario();
    let mut c = vec![0.0; s.joint_outputs()];
    c[0] = 1.0;
    c[7] = 1.0;
    LinearWitness::with_uniform_weights(s.alphabet(), c, alpha).expect("coefficients in [0, 1]")
}

/// The lexicographically first deterministic strategy among those maximizing
/// the acceptance of `test`, and the maximum.
pub fn meta_strategy(test: &dyn HypothesisTest) -> Result<(DeterministicStrategy, f64), HypothesisError> {
    let r = enumerate_deterministic_max(test, &scenario())?;
    let first = r
        .argmax
        .into_iter()
        .min_by(|a, b| a.lex_key().cmp(&b.lex_key()))
        .expect("the maximum is attained");
    Ok((first, r.max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{Alphabet, Transcript};
    use crate::hypothesis::{constant_test, exact_acceptance, FnTest};
    use crate::devices::strategy_device;

    #[test]
    fn p_c_shape() {
        let p = p_c();
        assert_eq!(p.as_slice().iter().sum::<f64>(), 1.0);
        assert_eq!(p.prob(0, 0) + p.prob(0, 7), 1.0);
        let s = scenario();
        for party in 0..3 {
            let ones: f64 = (0..8).filter(|&o| s.decode(o)[party] == 1).map(|o| p.prob(0, o)).sum();
            assert_eq!(ones, 0.5);
        }
    }

    #[test]
    fn meta_strategy_choices() {
        let balanced = FnTest::no_input("balanced", Alphabet::no_input(8).unwrap(), 2, |t: &Transcript| {
            let z = t.outputs().filter(|&a| a == 0).count();
            let o = t.outputs().filter(|&a| a == 7).count();
            (z + o == t.len() && 2 * z == t.len()) as u8 as f64
        });
        let (s, max) = meta_strategy(&balanced).unwrap();
        assert_eq!(s.sequences(), &[vec![0, 1], vec![0, 1], vec![0, 1]]);
        assert_eq!(exact_acceptance(&balanced, &strategy_device(s)).unwrap(), max);

        let (s, _) = meta_strategy(&constant_test(Alphabet::no_input(8).unwrap(), 2, 1.0)).unwrap();
        assert_eq!(s.lex_key(), vec![0; 6]);
    }
}
