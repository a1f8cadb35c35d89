use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{check_policy, HypothesisError, HypothesisTest, TestReport};
use crate::correlations::Transcript;
use crate::devices::DeviceModel;
use crate::rng::{sample_index, stream_rng, SimRng};

/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval at 95% for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Plays one complete run of `test` against `device`; returns the transcript
/// and the test's binary outcome.
pub fn run_trial(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
    rng: &mut SimRng,
) -> Result<(Transcript, bool), HypothesisError> {
    let alph = test.alphabet();
    let stop = alph.inputs;
    let n = test.max_rounds();
    let mut t = Transcript::with_capacity(n);
    for _ in 0..n {
        let x = if t.is_stopped(alph) {
            stop
        } else {
            let policy = test.input_policy(&t);
            if policy.len() == 1 {
                0
            } else {
                check_policy(&policy, alph, t.len())?;
                sample_index(&policy, rng)
            }
        };
        let a = if x == stop { 0 } else { device.respond(x, &t, rng)? };
        t.push(x, a);
    }
    let d = test.decision(&t);
    let outcome = d >= 1.0 || (d > 0.0 && rng.random::<f64>() < d);
    Ok((t, outcome))
}

/// One line of a trace file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRow {
    pub trial: usize,
    pub round: usize,
    pub x: usize,
    pub a: usize,
    pub statistic: Option<f64>,
    pub pvalue: Option<f64>,
}

/// Monte Carlo outcome with optional per-round traces.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub report: TestReport,
    pub outcomes: Vec<bool>,
    pub transcripts: Vec<Transcript>,
    pub trace: Vec<TraceRow>,
}

/// Runs `trials` independent trials; trial `i` uses the RNG stream
/// `derive_seed(master_seed, i)`. The first `keep` transcripts are returned
/// and traced.
pub fn simulate(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
    trials: usize,
    master_seed: u64,
    keep: usize,
) -> Result<Simulation, HypothesisError> {
    if trials == 0 {
        return Err(HypothesisError::InvalidParameter("trials must be at least 1".into()));
    }
    let start = Instant::now();
    let results: Vec<Result<(Option<Transcript>, bool), HypothesisError>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(master_seed, i as u64);
            let (t, outcome) = run_trial(test, device, &mut rng)?;
            Ok(((i < keep).then_some(t), outcome))
        })
        .collect();
    let mut outcomes = Vec::with_capacity(trials);
    let mut transcripts = Vec::new();
    for r in results {
        let (t, o) = r?;
        outcomes.push(o);
        transcripts.extend(t);
    }
    let mut trace = Vec::new();
    for (trial, t) in transcripts.iter().enumerate() {
        let points = test.trajectory(t);
        for (k, r) in t.rounds().iter().enumerate() {
            let p = points.get(k);
            trace.push(TraceRow {
                trial,
                round: k + 1,
                x: r.x,
                a: r.a,
                statistic: p.map(|p| p.statistic),
                pvalue: p.and_then(|p| p.pvalue),
            });
        }
    }
    let accepted = outcomes.iter().filter(|o| **o).count();
    let report = TestReport {
        test: test.descriptor(),
        device: device.descriptor().name,
        n: test.max_rounds(),
        trials,
        accepted,
        accept_rate: accepted as f64 / trials as f64,
        ci95: wilson_interval(accepted, trials),
        seed: master_seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok(Simulation {
        report,
        outcomes,
        transcripts,
        trace,
    })
}

/// Unbiased estimate of `P_T(1|device)` with a Wilson 95% interval.
pub fn monte_carlo_acceptance(
    test: &dyn HypothesisTest,
    device: &dyn DeviceModel,
    trials: usize,
    master_seed: u64,
) -> Result<TestReport, HypothesisError> {
    simulate(test, device, trials, master_seed, 0).map(|s| s.report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{Alphabet, Behavior};
    use crate::devices::iid_device;
    use crate::hypothesis::{constant_test, exact_acceptance, TableTest};
    use crate::rng::rng_from_seed;

    #[test]
    fn wilson_brackets_estimate() {
        for (k, n) in [(0, 10), (10, 10), (3, 7), (500, 1000), (1, 1)] {
            let (lo, hi) = wilson_interval(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0, "{k}/{n}: {lo} {hi}");
        }
        let (lo, hi) = wilson_interval(50, 100);
        assert!((lo - 0.4038).abs() < 1e-3 && (hi - 0.5962).abs() < 1e-3);
    }

    #[test]
    fn zero_decision_never_accepts() {
        let alph = Alphabet::no_input(2).unwrap();
        let r = monte_carlo_acceptance(
            &constant_test(alph, 5, 0.0),
            &iid_device(Behavior::uniform(alph)),
            500,
            3,
        )
        .unwrap();
        assert_eq!(r.accept_rate, 0.0);
        assert_eq!(r.accepted, 0);
        assert!(monte_carlo_acceptance(&constant_test(alph, 5, 0.0), &iid_device(Behavior::uniform(alph)), 0, 3).is_err());
    }

    #[test]
    fn estimates_cover_exact_value() {
        let alph = Alphabet::new(2, 2).unwrap();
        let mut rng = rng_from_seed(77);
        let test = TableTest::random(alph, 3, true, &mut rng);
        let dev = iid_device(Behavior::from_fn(alph, |x, a| [[0.8, 0.2], [0.35, 0.65]][x][a]).unwrap());
        let exact = exact_acceptance(&test, &dev).unwrap();
        let covered = (0..100)
            .filter(|&rep| {
                let r = monte_carlo_acceptance(&test, &dev, 2000, 1000 + rep).unwrap();
                r.ci95.0 <= exact && exact <= r.ci95.1
            })
            .count();
        assert!(covered >= 95, "covered {covered}/100");
    }

    #[test]
    fn reproducible_given_seed() {
        let alph = Alphabet::new(2, 2).unwrap();
        let test = TableTest::random(alph, 4, true, &mut rng_from_seed(5));
        let dev = iid_device(Behavior::uniform(alph));
        let a = simulate(&test, &dev, 64, 9, 64).unwrap();
        let b = simulate(&test, &dev, 64, 9, 64).unwrap();
        assert_eq!(a.outcomes, b.outcomes);
        assert_eq!(a.transcripts, b.transcripts);
        assert_eq!(a.trace.len(), 64 * 4);
    }
}
