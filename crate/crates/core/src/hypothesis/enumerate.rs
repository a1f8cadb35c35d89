use rayon::prelude::*;

use super::exact::acceptance_sequential;
use super::{HypothesisError, HypothesisTest};
use crate::devices::{strategy_device, DeterministicStrategy, PartyStructure};

/// Largest number of deterministic strategies searched.
pub const MAX_STRATEGIES: usize = 10_000_000;

/// Acceptance values within this distance of the maximum count as ties.
pub const ARGMAX_TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct DeterministicMax {
    pub max: f64,
    /// All maximizers in lexicographic order.
    pub argmax: Vec<DeterministicStrategy>,
    pub searched: usize,
}

fn search_space(parties: &PartyStructure, n: usize) -> f64 {
    parties
        .party_outputs()
        .iter()
        .map(|&a| (a as f64).powi(n as i32))
        .product()
}

/// Strategy number `index`, reading the lexicographic key as a mixed-radix
/// numeral: party 1 round 1 is the most significant digit.
fn strategy_at(parties: &PartyStructure, n: usize, mut index: usize) -> DeterministicStrategy {
    let mut sequences: Vec<Vec<usize>> = parties.party_outputs().iter().map(|_| vec![0; n]).collect();
    for (seq, &radix) in sequences.iter_mut().zip(parties.party_outputs()).rev() {
        for slot in seq.iter_mut().rev() {
            *slot = index % radix;
            index /= radix;
        }
    }
    DeterministicStrategy::new(parties.clone(), sequences).expect("digits lie in the party alphabets")
}

/// Maximum of `P_T(1|·)` over every deterministic memory strategy of the
/// given parties, together with all maximizers.
///
/// Without inputs, any memory strategy of independent parties is a mixture
/// of these, so the value is also the maximum over all such strategies.
pub fn enumerate_deterministic_max(
    test: &dyn HypothesisTest,
    parties: &PartyStructure,
) -> Result<DeterministicMax, HypothesisError> {
    let n = test.max_rounds();
    if test.alphabet() != parties.alphabet() {
        return Err(HypothesisError::InvalidParameter(format!(
            "test alphabet {:?} does not match the parties' joint alphabet {:?}",
            test.alphabet(),
            parties.alphabet()
        )));
    }
    let size = search_space(parties, n);
    if size > MAX_STRATEGIES as f64 {
        return Err(HypothesisError::SearchSpaceTooLarge {
            size,
            limit: MAX_STRATEGIES,
        });
    }
    let total = size as usize;
    let values: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|i| acceptance_sequential(test, &strategy_device(strategy_at(parties, n, i))))
        .collect::<Result<_, _>>()?;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let argmax = values
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= max - ARGMAX_TIE_TOL)
        .map(|(i, _)| strategy_at(parties, n, i))
        .collect();
    Ok(DeterministicMax {
        max,
        argmax,
        searched: total,
    })
}
