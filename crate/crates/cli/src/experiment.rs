//! Turns a parsed config into a test and a device.

use std::path::Path;
use std::sync::Arc;

use noniid_core::correlations::{Alphabet, Behavior, LinearWitness};
use noniid_core::devices::{
    clock_device, iid_device, random_shared_sequence, shared_sequence_device, strategy_device, DeterministicStrategy,
    DeviceModel, PartyStructure, TriangleDevice, TriangleLocalModel,
};
use noniid_core::hypothesis::{
    ksigma_frequency_test, martingale_witness_test, DistanceFunctional, HypothesisTest, TableTest,
};
use noniid_core::rng::{derive_seed, rng_from_seed};
use noniid_core::triangle::{agreeing_point, meta_strategy, p_c, scenario};

use crate::config::{BehaviorSource, FunctionalKind, ScenarioConfig, ScenarioKind, TestKind};
use crate::error::CliError;

/// Stream index reserved for sampling a shared sequence before the trials.
const SEQUENCE_STREAM: u64 = u64::MAX;

pub struct Experiment {
    pub test: Box<dyn HypothesisTest>,
    pub device: Box<dyn DeviceModel>,
}

pub fn read_text(path: &Path, key: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(key, format!("cannot read {}: {e}", path.display())))
}

pub fn named_behavior(name: &str) -> Option<Behavior> {
    match name {
        "pc" => Some(p_c()),
        "p0" => Some(agreeing_point(0)),
        "p1" => Some(agreeing_point(1)),
        _ => None,
    }
}

pub fn load_behavior(source: &BehaviorSource, key: &str) -> Result<Behavior, CliError> {
    match source {
        BehaviorSource::Named(name) => {
            named_behavior(name).ok_or_else(|| CliError::config(key, format!("unknown behavior {name:?}")))
        }
        BehaviorSource::File(path) => {
            Behavior::from_toml_str(&read_text(path, key)?).map_err(|e| CliError::config(key, e))
        }
    }
}

pub fn load_triangle_model(path: &Path, key: &str) -> Result<TriangleLocalModel, CliError> {
    TriangleLocalModel::from_toml_str(&read_text(path, key)?).map_err(|e| CliError::config(key, e))
}

fn load_strategy(path: &Path, parties: &[usize]) -> Result<DeterministicStrategy, CliError> {
    let key = "scenario.strategy";
    let parties = PartyStructure::new(parties.to_vec()).map_err(|e| CliError::config("scenario.parties", e))?;
    DeterministicStrategy::from_text(parties, &read_text(path, key)?).map_err(|e| CliError::config(key, e))
}

/// Device alphabet implied by the scenario, before any device is built.
fn scenario_alphabet(cfg: &ScenarioConfig) -> Result<Alphabet, CliError> {
    match &cfg.scenario {
        ScenarioKind::Iid { behavior } => Ok(load_behavior(behavior, "scenario.behavior")?.alphabet()),
        ScenarioKind::Clock { offsets } => {
            let parties = PartyStructure::new(vec![2; offsets.len()]).map_err(|e| CliError::config("scenario.offsets", e))?;
            Ok(parties.alphabet())
        }
        ScenarioKind::Custom { parties, .. } => PartyStructure::new(parties.clone())
            .map(|p| p.alphabet())
            .map_err(|e| CliError::config("scenario.parties", e)),
        ScenarioKind::TriangleLocal { model } => Ok(load_triangle_model(model, "scenario.model")?.parties().alphabet()),
        ScenarioKind::SharedSequence { .. } | ScenarioKind::Meta => Ok(scenario().alphabet()),
    }
}

fn input_dist(dist: &Option<Vec<f64>>, alphabet: Alphabet) -> Vec<f64> {
    dist.clone()
        .unwrap_or_else(|| vec![1.0 / alphabet.inputs as f64; alphabet.inputs])
}

pub fn build_test(cfg: &ScenarioConfig, alphabet: Alphabet) -> Result<Box<dyn HypothesisTest>, CliError> {
    let n = cfg.n;
    let as_config = |e: &dyn std::fmt::Display| CliError::config("test", e);
    match &cfg.test {
        TestKind::KSigma {
            functional,
            alpha,
            k,
            input_dist: dist,
            bootstrap,
        } => {
            let f: Arc<dyn noniid_core::hypothesis::FrequencyFunctional> = match functional {
                FunctionalKind::Distance(source) => {
                    let target = load_behavior(source, "test.target")?;
                    if target.alphabet() != alphabet {
                        return Err(CliError::config(
                            "test.target",
                            format!("alphabet {:?} does not match the device alphabet {alphabet:?}", target.alphabet()),
                        ));
                    }
                    let name = match source {
                        BehaviorSource::Named(s) => s.clone(),
                        BehaviorSource::File(p) => p.display().to_string(),
                    };
                    Arc::new(DistanceFunctional::new(target, name))
                }
                FunctionalKind::Linear(coeffs) => Arc::new(
                    LinearWitness::with_uniform_weights(alphabet, coeffs.clone(), *alpha)
                        .map_err(|e| CliError::config("test.coeffs", e))?,
                ),
            };
            let mut test = ksigma_frequency_test(f, alphabet, *alpha, *k, input_dist(dist, alphabet), n)
                .map_err(|e| as_config(&e))?;
            if let Some(b) = bootstrap {
                test = test.with_bootstrap(*b, 0);
            }
            Ok(Box::new(test))
        }
        TestKind::Martingale {
            coeffs,
            alpha,
            epsilon,
            input_dist: dist,
            score_range,
        } => {
            let witness = match score_range {
                Some(range) => LinearWitness::new(
                    alphabet,
                    coeffs.clone(),
                    vec![1.0 / alphabet.inputs as f64; alphabet.inputs],
                    *alpha,
                    *range,
                ),
                None => LinearWitness::with_uniform_weights(alphabet, coeffs.clone(), *alpha),
            }
            .map_err(|e| CliError::config("test.coeffs", e))?;
            let test = martingale_witness_test(witness, *epsilon, input_dist(dist, alphabet), n)
                .map_err(|e| as_config(&e))?;
            Ok(Box::new(test))
        }
        TestKind::Custom { decisions } => {
            let key = "test.decisions";
            let text = read_text(decisions, key)?;
            let values = text
                .split_whitespace()
                .map(|w| w.parse::<f64>().map_err(|_| CliError::config(key, format!("bad value {w:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let test = TableTest::from_decisions(alphabet, n, values).map_err(|e| CliError::config(key, e))?;
            Ok(Box::new(test))
        }
    }
}

pub fn build_device(cfg: &ScenarioConfig, test: &dyn HypothesisTest) -> Result<Box<dyn DeviceModel>, CliError> {
    let device: Box<dyn DeviceModel> = match &cfg.scenario {
        ScenarioKind::Iid { behavior } => Box::new(iid_device(load_behavior(behavior, "scenario.behavior")?)),
        ScenarioKind::Clock { offsets } => {
            Box::new(clock_device(offsets).map_err(|e| CliError::config("scenario.offsets", e))?)
        }
        ScenarioKind::SharedSequence { sequence } => {
            let sequence = match sequence {
                Some(s) if s.len() < cfg.n => {
                    return Err(CliError::config(
                        "scenario.sequence",
                        format!("has {} entries, need at least n = {}", s.len(), cfg.n),
                    ))
                }
                Some(s) => s.clone(),
                None => random_shared_sequence(cfg.n, &mut rng_from_seed(derive_seed(cfg.seed, SEQUENCE_STREAM))),
            };
            Box::new(shared_sequence_device(sequence).map_err(|e| CliError::config("scenario.sequence", e))?)
        }
        ScenarioKind::Meta => Box::new(strategy_device(meta_strategy(test)?.0)),
        ScenarioKind::TriangleLocal { model } => {
            let model = load_triangle_model(model, "scenario.model")?;
            Box::new(TriangleDevice::new(model)?)
        }
        ScenarioKind::Custom { strategy, parties } => {
            let s = load_strategy(strategy, parties)?;
            if s.rounds() < cfg.n {
                return Err(CliError::config(
                    "scenario.strategy",
                    format!("has {} rounds, need at least n = {}", s.rounds(), cfg.n),
                ));
            }
            Box::new(strategy_device(s))
        }
    };
    Ok(device)
}

/// Builds the test and the device; a search-space overflow of the
/// meta-strategy surfaces as [`CliError::Overflow`].
pub fn build(cfg: &ScenarioConfig) -> Result<Experiment, CliError> {
    let alphabet = scenario_alphabet(cfg)?;
    let test = build_test(cfg, alphabet)?;
    let device = build_device(cfg, test.as_ref())?;
    Ok(Experiment { test, device })
}
