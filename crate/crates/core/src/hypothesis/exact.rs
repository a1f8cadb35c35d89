use num_rational::BigRational;
use rayon::prelude::*;

use super::{check_policy, HypothesisError, HypothesisTest};
use crate::correlations::Transcript;
use crate::devices::DeviceModel;
use crate::scalar::Scalar;

/// Largest `(A·X)^n` enumerated exactly.
pub const MAX_STATE_SPACE: usize = 10_000_000;

/// Number of complete transcripts `(A·X)^n`, as a float to survive overflow.
pub fn state_space_size(test: &dyn HypothesisTest) -> f64 {
    let alph = test.alphabet();
    (alph.cells() as f64).powi(test.max_rounds() as i32)
}

fn convert<S: Scalar>(v: f64) -> Result<S, HypothesisError> {
    S::from_f64(v).ok_or(HypothesisError::NonFinite)
}

/// One step of the enumeration: all `(x, a, weight)` continuations of
/// `history`, where `weight = Q_k(x|s) · P_k(a|x,s)`.
fn branches<S: Scalar>(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
    history: &Transcript,
) -> Result<Vec<(usize, usize, S)>, HypothesisError> {
    let alph = test.alphabet();
    let stop = alph.inputs;
    if history.is_stopped(alph) {
        return Ok(vec![(stop, 0, S::one())]);
    }
    let policy = test.input_policy(history);
    check_policy(&policy, alph, history.len())?;
    let mut out = Vec::new();
    for (x, &q) in policy.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        let qs: S = convert(q)?;
        if x == stop {
            out.push((stop, 0, qs));
            continue;
        }
        let row = device.conditional(x, history)?;
        for (a, &p) in row.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            out.push((x, a, qs.clone() * convert(p)?));
        }
    }
    Ok(out)
}

fn accept_from<S: Scalar>(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
    history: &mut Transcript,
    n: usize,
) -> Result<S, HypothesisError> {
    if history.len() == n {
        return convert(test.decision(history));
    }
    let mut total = S::zero();
    for (x, a, w) in branches::<S>(test, device, history)? {
        history.push(x, a);
        let sub = accept_from::<S>(test, device, history, n);
        history.pop();
        total = total + w * sub?;
    }
    Ok(total)
}

fn acceptance<S: Scalar>(test: &dyn HypothesisTest, device: &dyn DeviceModel) -> Result<S, HypothesisError> {
    let size = state_space_size(test);
    if size > MAX_STATE_SPACE as f64 {
        return Err(HypothesisError::StateSpaceTooLarge {
            size,
            limit: MAX_STATE_SPACE,
        });
    }
    if test.alphabet() != device.alphabet() {
        return Err(HypothesisError::InvalidParameter(format!(
            "test alphabet {:?} differs from device alphabet {:?}",
            test.alphabet(),
            device.alphabet()
        )));
    }
    let n = test.max_rounds();
    let root = Transcript::with_capacity(n);
    if n == 0 {
        return convert(test.decision(&root));
    }
    // First-round branches run in parallel; the reduction order is fixed.
    let parts: Vec<Result<S, HypothesisError>> = branches::<S>(test, device, &root)?
        .into_par_iter()
        .map(|(x, a, w)| {
            let mut history = Transcript::with_capacity(n);
            history.push(x, a);
            Ok(w * accept_from::<S>(test, device, &mut history, n)?)
        })
        .collect();
    parts.into_iter().try_fold(S::zero(), |acc, p| Ok(acc + p?))
}

/// Single-threaded evaluation, for callers that already parallelize.
pub(super) fn acceptance_sequential(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
) -> Result<f64, HypothesisError> {
    let mut history = Transcript::with_capacity(test.max_rounds());
    accept_from::<f64>(test, device, &mut history, test.max_rounds())
}

/// `P_T(1|P⁽ⁿ⁾)` in double precision.
pub fn exact_acceptance(test: &dyn HypothesisTest, device: &dyn DeviceModel) -> Result<f64, HypothesisError> {
    acceptance::<f64>(test, device)
}

/// `P_T(1|P⁽ⁿ⁾)` in exact rational arithmetic over the (dyadic) values of
/// every policy, behavior and decision entry.
pub fn exact_acceptance_rational(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
) -> Result<BigRational, HypothesisError> {
    acceptance::<BigRational>(test, device)
}
