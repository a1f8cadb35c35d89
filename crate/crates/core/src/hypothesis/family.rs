use serde::Serialize;

use super::{exact_acceptance, monte_carlo_acceptance, HypothesisError, HypothesisTest};
use crate::devices::DeviceModel;
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcceptanceMethod {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

impl AcceptanceMethod {
    fn evaluate(
        self,
        test: &dyn HypothesisTest,
        device: &dyn DeviceModel,
        stream: u64,
    ) -> Result<f64, HypothesisError> {
        match self {
            AcceptanceMethod::Exact => exact_acceptance(test, device),
            AcceptanceMethod::MonteCarlo { trials, seed } => {
                monte_carlo_acceptance(test, device, trials, derive_seed(seed, stream)).map(|r| r.accept_rate)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyRow {
    pub n: usize,
    /// Largest acceptance over the supplied null devices.
    pub epsilon_n: f64,
    pub worst_null: String,
    /// Acceptance of the target device.
    pub detection: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub rows: Vec<FamilyRow>,
    /// `ε_n` is a maximum over the supplied null devices only, not over the
    /// whole null set.
    pub null_devices: Vec<String>,
    pub target: String,
}

impl FamilyReport {
    pub fn max_epsilon(&self) -> f64 {
        self.rows.iter().map(|r| r.epsilon_n).fold(0.0, f64::max)
    }
}

/// Acceptance curves of a test family: for each member, the worst case over
/// `nulls` and the acceptance of `target`.
pub fn verify_test_family(
    tests: &[&dyn HypothesisTest],
    nulls: &[&dyn DeviceModel],
    target: &dyn DeviceModel,
    method: AcceptanceMethod,
) -> Result<FamilyReport, HypothesisError> {
    if nulls.is_empty() {
        return Err(HypothesisError::InvalidParameter("at least one null device is required".into()));
    }
    let stride = nulls.len() as u64 + 1;
    let mut rows = Vec::with_capacity(tests.len());
    for (ti, test) in tests.iter().enumerate() {
        let base = ti as u64 * stride;
        let mut epsilon_n = f64::NEG_INFINITY;
        let mut worst_null = String::new();
        for (di, dev) in nulls.iter().enumerate() {
            let v = method.evaluate(*test, *dev, base + di as u64)?;
            if v > epsilon_n {
                epsilon_n = v;
                worst_null = dev.descriptor().name;
            }
        }
        let detection = method.evaluate(*test, target, base + nulls.len() as u64)?;
        rows.push(FamilyRow {
            n: test.max_rounds(),
            epsilon_n,
            worst_null,
            detection,
        });
    }
    Ok(FamilyReport {
        rows,
        null_devices: nulls.iter().map(|d| d.descriptor().name).collect(),
        target: target.descriptor().name,
    })
}
