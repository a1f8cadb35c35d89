use std::borrow::Cow;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{meta_strategy, p_c};
use crate::correlations::{frequency_estimate, Alphabet, Transcript};
use crate::devices::{
    clock_device, iid_device, random_shared_sequence, shared_sequence_device, strategy_device, DeviceDescriptor,
    DeviceError, DeviceModel, TriangleDevice, TriangleLocalModel,
};
use crate::hypothesis::{run_trial, wilson_interval, HypothesisError, HypothesisTest, TestReport};
use crate::rng::{derive_seed, stream_rng, SimRng};

/// Label for how much the parties may coordinate before the test. Only a
/// tag on the report; no quantitative model is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    #[default]
    Unlimited,
    Bounded,
    Banned,
}

#[derive(Debug, Clone, Serialize)]
pub struct DemoEntry {
    pub device: String,
    pub report: TestReport,
    /// Joint-outcome counts of the first trial.
    pub first_trial_counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SkippedEntry {
    pub device: String,
    pub reason: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttackDemoReport {
    pub test: String,
    pub regime: Regime,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub entries: Vec<DemoEntry>,
    pub skipped: Vec<SkippedEntry>,
}

impl AttackDemoReport {
    pub fn entry(&self, device: &str) -> Option<&DemoEntry> {
        self.entries.iter().find(|e| e.device == device)
    }
}

type DeviceFactory<'a> = dyn Fn(&mut SimRng) -> Result<Box<dyn DeviceModel + 'a>, HypothesisError> + Sync + 'a;

/// Trials where each one may build its own device (for strategies sampled
/// before the test starts) from its own RNG stream.
fn run_entry(
    name: &str,
    test: &dyn HypothesisTest,
    make: &DeviceFactory<'_>,
    trials: usize,
    seed: u64,
) -> Result<DemoEntry, HypothesisError> {
    let start = Instant::now();
    let results: Vec<(bool, Option<Transcript>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(seed, i as u64);
            let device = make(&mut rng)?;
            let (t, ok) = run_trial(test, device.as_ref(), &mut rng)?;
            Ok((ok, (i == 0).then_some(t)))
        })
        .collect::<Result<_, HypothesisError>>()?;
    let accepted = results.iter().filter(|r| r.0).count();
    let first = results[0].1.as_ref().expect("trial 0 is kept");
    let counts = frequency_estimate(first, test.alphabet())?.counts().to_vec();
    Ok(DemoEntry {
        device: name.to_string(),
        report: TestReport {
            test: test.descriptor(),
            device: name.to_string(),
            n: test.max_rounds(),
            trials,
            accepted,
            accept_rate: accepted as f64 / trials as f64,
            ci95: wilson_interval(accepted, trials),
            seed,
            wall_time_s: start.elapsed().as_secs_f64(),
        },
        first_trial_counts: counts,
    })
}

/// Runs an iid-designed test against the iid `P_c` device, the clock, the
/// desynchronized clock, fresh shared random sequences, the meta-strategy
/// (when enumerable) and the given triangle-local model.
pub fn attack_demo(
    test: &dyn HypothesisTest,
    best_local: &TriangleLocalModel,
    trials: usize,
    seed: u64,
    regime: Regime,
) -> Result<AttackDemoReport, HypothesisError> {
    if trials == 0 {
        return Err(HypothesisError::InvalidParameter("trials must be at least 1".into()));
    }
    let n = test.max_rounds();
    let pc_device = iid_device(p_c()).named("iid_pc");
    let clock = clock_device(&[0, 0, 0])?;
    let desync = clock_device(&[1, 0, 0])?;
    let local = TriangleDevice::new(best_local.clone())?;

    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    let fixed: [(&str, &dyn DeviceModel); 4] = [
        ("iid_pc", &pc_device),
        ("clock", &clock),
        ("clock_desync", &desync),
        ("best_local", &local),
    ];
    for (k, (name, dev)) in fixed.into_iter().enumerate() {
        let make = move |_: &mut SimRng| -> Result<Box<dyn DeviceModel + '_>, HypothesisError> { Ok(Box::new(Forward(dev))) };
        entries.push(run_entry(name, test, &make, trials, derive_seed(seed, k as u64))?);
    }

    let shared = |rng: &mut SimRng| -> Result<Box<dyn DeviceModel>, HypothesisError> {
        Ok(Box::new(shared_sequence_device(random_shared_sequence(n, rng))?))
    };
    entries.push(run_entry("shared_sequence", test, &shared, trials, derive_seed(seed, 4))?);

    match meta_strategy(test) {
        Ok((strategy, _)) => {
            let dev = strategy_device(strategy);
            let make = |_: &mut SimRng| -> Result<Box<dyn DeviceModel + '_>, HypothesisError> { Ok(Box::new(dev.clone())) };
            entries.push(run_entry("meta_strategy", test, &make, trials, derive_seed(seed, 5))?);
        }
        Err(e @ HypothesisError::SearchSpaceTooLarge { .. }) => skipped.push(SkippedEntry {
            device: "meta_strategy".into(),
            reason: e.to_string(),
        }),
        Err(e) => return Err(e),
    }

    Ok(AttackDemoReport {
        test: test.descriptor(),
        regime,
        n,
        trials,
        seed,
        entries,
        skipped,
    })
}

/// Borrowed device behind a box.
struct Forward<'a>(&'a dyn DeviceModel);

impl DeviceModel for Forward<'_> {
    fn alphabet(&self) -> Alphabet {
        self.0.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        self.0.descriptor()
    }

    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        self.0.conditional(x, history)
    }

    fn respond(&self, x: usize, history: &Transcript, rng: &mut SimRng) -> Result<usize, DeviceError> {
        self.0.respond(x, history, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::devices::random_triangle_model;
    use crate::hypothesis::constant_test;
    use crate::rng::rng_from_seed;

    #[test]
    fn small_demo_lists_every_device() {
        let test = constant_test(Alphabet::no_input(8).unwrap(), 4, 1.0);
        let model = random_triangle_model([2, 2, 2], [2, 2, 2], &mut rng_from_seed(1));
        let r = attack_demo(&test, &model, 20, 3, Regime::Bounded).unwrap();
        let names: Vec<&str> = r.entries.iter().map(|e| e.device.as_str()).collect();
        assert_eq!(
            names,
            ["iid_pc", "clock", "clock_desync", "best_local", "shared_sequence", "meta_strategy"]
        );
        assert!(r.skipped.is_empty());
        assert!(r.entries.iter().all(|e| e.report.accept_rate == 1.0));
        let desync = &r.entry("clock_desync").unwrap().first_trial_counts;
        assert_eq!((desync[4], desync[3]), (2, 2));
    }

    #[test]
    fn meta_strategy_skipped_when_too_large() {
        let test = constant_test(Alphabet::no_input(8).unwrap(), 12, 0.0);
        let model = random_triangle_model([2, 2, 2], [2, 2, 2], &mut rng_from_seed(1));
        let r = attack_demo(&test, &model, 5, 3, Regime::Unlimited).unwrap();
        assert_eq!(r.skipped.len(), 1);
        assert_eq!(r.entries.len(), 5);
    }
}
