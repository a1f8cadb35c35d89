//! Device models: samplers for single- and multi-round behaviors.
//!
//! A device is described by its round conditionals `P_k(a|x, s_{k-1})`,
//! where `k = history.len() + 1`. Every model here is immutable; the history
//! passed in carries all the memory a strategy needs, so one instance can
//! serve many parallel trials.

use std::borrow::Cow;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::correlations::{Alphabet, Behavior, CorrelationError, ProductBehavior, Transcript};
use crate::rng::{sample_index, SimRng};

/// Largest `|Λ1|·|Λ2|·|Λ3|` summed over exactly.
pub const MAX_SOURCE_PRODUCT: usize = 10_000_000;
/// Default source support size of a triangle-local model.
pub const DEFAULT_SOURCE_SUPPORT: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DeviceError {
    #[error("sequence exhausted: round {round} requested, {len} available")]
    SequenceExhausted { round: usize, len: usize },
    #[error("source support product {size} exceeds {MAX_SOURCE_PRODUCT}")]
    SupportTooLarge { size: usize },
    #[error("input {x} out of range for {inputs} inputs")]
    InputOutOfRange { x: usize, inputs: usize },
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error(transparent)]
    Correlation(#[from] CorrelationError),
}

/// Name and parameters of a device, for reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceDescriptor {
    pub name: String,
    pub params: Vec<(String, String)>,
}

impl DeviceDescriptor {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            params: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

/// An n-round behavior that can also be sampled.
pub trait DeviceModel: Send + Sync {
    fn alphabet(&self) -> Alphabet;

    fn descriptor(&self) -> DeviceDescriptor;

    /// Output distribution of the next round given input `x` and the
    /// transcript so far.
    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError>;

    fn respond(&self, x: usize, history: &Transcript, rng: &mut SimRng) -> Result<usize, DeviceError> {
        let row = self.conditional(x, history)?;
        Ok(sample_index(&row, rng))
    }
}

fn check_input(alphabet: Alphabet, x: usize) -> Result<(), DeviceError> {
    if x >= alphabet.inputs {
        return Err(DeviceError::InputOutOfRange {
            x,
            inputs: alphabet.inputs,
        });
    }
    Ok(())
}

/// Output alphabets of the parties sharing one flattened outcome index.
///
/// Outcome `(a_1, …, a_P)` maps to the row-major index
/// `((a_1·A_2 + a_2)·A_3 + a_3)…`; party 1 is the most significant digit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartyStructure {
    outputs: Vec<usize>,
}

impl PartyStructure {
    pub fn new(outputs: Vec<usize>) -> Result<Self, DeviceError> {
        if outputs.is_empty() || outputs.iter().any(|&a| a < 2) {
            return Err(DeviceError::InvalidModel(
                "each party needs at least two outputs".into(),
            ));
        }
        Ok(Self { outputs })
    }

    /// Three binary parties.
    pub fn triangle_binary() -> Self {
        Self {
            outputs: vec![2, 2, 2],
        }
    }

    pub fn parties(&self) -> usize {
        self.outputs.len()
    }

    pub fn party_outputs(&self) -> &[usize] {
        &self.outputs
    }

    pub fn joint_outputs(&self) -> usize {
        self.outputs.iter().product()
    }

    /// The no-input alphabet of joint outcomes.
    pub fn alphabet(&self) -> Alphabet {
        Alphabet {
            inputs: 1,
            outputs: self.joint_outputs(),
        }
    }

    pub fn encode(&self, outcome: &[usize]) -> usize {
        debug_assert_eq!(outcome.len(), self.outputs.len());
        outcome
            .iter()
            .zip(&self.outputs)
            .fold(0, |acc, (a, size)| acc * size + a)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.outputs.len()];
        for (slot, size) in out.iter_mut().zip(&self.outputs).rev() {
            *slot = index % size;
            index /= size;
        }
        out
    }
}

fn point_mass(outputs: usize, a: usize) -> Cow<'static, [f64]> {
    let mut row = vec![0.0; outputs];
    row[a] = 1.0;
    Cow::Owned(row)
}

/// Same behavior every round, ignoring history.
#[derive(Debug, Clone)]
pub struct IidDevice {
    behavior: Behavior,
    name: String,
}

pub fn iid_device(behavior: Behavior) -> IidDevice {
    IidDevice {
        behavior,
        name: "iid".into(),
    }
}

impl IidDevice {
    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn behavior(&self) -> &Behavior {
        &self.behavior
    }
}

impl DeviceModel for IidDevice {
    fn alphabet(&self) -> Alphabet {
        self.behavior.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new(&self.name).with("probs", format!("{:?}", self.behavior.as_slice()))
    }

    fn conditional(&self, x: usize, _history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(self.alphabet(), x)?;
        Ok(Cow::Borrowed(self.behavior.row(x)))
    }
}

impl DeviceModel for ProductBehavior {
    fn alphabet(&self) -> Alphabet {
        ProductBehavior::alphabet(self)
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new("product").with("rounds", self.len())
    }

    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(ProductBehavior::alphabet(self), x)?;
        let round = history.len();
        let p = self.rounds().get(round).ok_or(DeviceError::SequenceExhausted {
            round: round + 1,
            len: self.len(),
        })?;
        Ok(Cow::Borrowed(p.row(x)))
    }
}

/// Binary counters: at round `k` party `i` outputs `o_i ⊕ ((k−1) mod 2)`.
#[derive(Debug, Clone)]
pub struct ClockDevice {
    offsets: Vec<usize>,
    parties: PartyStructure,
}

/// Clock strategy for binary parties with the given starting bits.
pub fn clock_device(offsets: &[usize]) -> Result<ClockDevice, DeviceError> {
    if offsets.is_empty() || offsets.iter().any(|&o| o > 1) {
        return Err(DeviceError::InvalidModel("clock offsets must be bits".into()));
    }
    Ok(ClockDevice {
        offsets: offsets.to_vec(),
        parties: PartyStructure::new(vec![2; offsets.len()])?,
    })
}

impl ClockDevice {
    /// Joint outcome index emitted in round `k` (1-based).
    pub fn output_at(&self, round: usize) -> usize {
        let flip = (round + 1) % 2;
        let bits: Vec<usize> = self.offsets.iter().map(|o| o ^ flip).collect();
        self.parties.encode(&bits)
    }
}

impl DeviceModel for ClockDevice {
    fn alphabet(&self) -> Alphabet {
        self.parties.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new("clock").with("offsets", format!("{:?}", self.offsets))
    }

    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(self.alphabet(), x)?;
        Ok(point_mass(
            self.parties.joint_outputs(),
            self.output_at(history.len() + 1),
        ))
    }

    fn respond(&self, x: usize, history: &Transcript, _rng: &mut SimRng) -> Result<usize, DeviceError> {
        check_input(self.alphabet(), x)?;
        Ok(self.output_at(history.len() + 1))
    }
}

/// All parties output the `k`-th bit of a shared sequence in round `k`.
#[derive(Debug, Clone)]
pub struct SharedSequenceDevice {
    sequence: Vec<usize>,
    parties: PartyStructure,
}

/// Shared-sequence strategy for three binary parties.
pub fn shared_sequence_device(sequence: Vec<usize>) -> Result<SharedSequenceDevice, DeviceError> {
    if sequence.iter().any(|&b| b > 1) {
        return Err(DeviceError::InvalidModel("shared sequence must be bits".into()));
    }
    Ok(SharedSequenceDevice {
        sequence,
        parties: PartyStructure::triangle_binary(),
    })
}

/// Uniformly random `n`-bit shared sequence.
pub fn random_shared_sequence(n: usize, rng: &mut SimRng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..2)).collect()
}

impl SharedSequenceDevice {
    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }

    fn output_at(&self, round: usize) -> Result<usize, DeviceError> {
        let bit = *self
            .sequence
            .get(round - 1)
            .ok_or(DeviceError::SequenceExhausted {
                round,
                len: self.sequence.len(),
            })?;
        Ok(self.parties.encode(&vec![bit; self.parties.parties()]))
    }
}

impl DeviceModel for SharedSequenceDevice {
    fn alphabet(&self) -> Alphabet {
        self.parties.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new("shared_sequence").with("length", self.sequence.len())
    }

    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(self.alphabet(), x)?;
        let a = self.output_at(history.len() + 1)?;
        Ok(point_mass(self.parties.joint_outputs(), a))
    }

    fn respond(&self, x: usize, history: &Transcript, _rng: &mut SimRng) -> Result<usize, DeviceError> {
        check_input(self.alphabet(), x)?;
        self.output_at(history.len() + 1)
    }
}

/// Fixed per-party output sequences.
///
/// Without inputs or inter-round stimulus, a party's memory can only encode
/// the round number, so every deterministic memory strategy is a list of
/// outputs per party.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    parties: PartyStructure,
    sequences: Vec<Vec<usize>>,
}

impl DeterministicStrategy {
    pub fn new(parties: PartyStructure, sequences: Vec<Vec<usize>>) -> Result<Self, DeviceError> {
        if sequences.len() != parties.parties() {
            return Err(DeviceError::InvalidModel(format!(
                "{} sequences for {} parties",
                sequences.len(),
                parties.parties()
            )));
        }
        let n = sequences[0].len();
        for (seq, &size) in sequences.iter().zip(parties.party_outputs()) {
            if seq.len() != n {
                return Err(DeviceError::InvalidModel("sequence lengths differ".into()));
            }
            if seq.iter().any(|&a| a >= size) {
                return Err(DeviceError::InvalidModel("output out of party alphabet".into()));
            }
        }
        Ok(Self { parties, sequences })
    }

    /// Strategy whose joint outputs are `outcomes` (flattened indices).
    pub fn from_joint_outputs(parties: PartyStructure, outcomes: &[usize]) -> Self {
        let mut sequences = vec![Vec::with_capacity(outcomes.len()); parties.parties()];
        for &o in outcomes {
            for (seq, a) in sequences.iter_mut().zip(parties.decode(o)) {
                seq.push(a);
            }
        }
        Self { parties, sequences }
    }

    pub fn parties(&self) -> &PartyStructure {
        &self.parties
    }

    pub fn rounds(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    pub fn joint_output(&self, round: usize) -> usize {
        let outcome: Vec<usize> = self.sequences.iter().map(|s| s[round]).collect();
        self.parties.encode(&outcome)
    }

    /// Lexicographic key: party 1's outputs, then party 2's, and so on.
    pub fn lex_key(&self) -> Vec<usize> {
        self.sequences.concat()
    }

    /// One line of digits per party.
    pub fn to_text(&self) -> String {
        self.sequences
            .iter()
            .map(|s| s.iter().map(|a| a.to_string()).collect::<String>() + "\n")
            .collect()
    }

    /// Parses one line of digits per party; blank lines and `#` comments
    /// are ignored. Party alphabet sizes come from `parties`.
    pub fn from_text(parties: PartyStructure, text: &str) -> Result<Self, DeviceError> {
        let sequences = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| {
                l.chars()
                    .map(|c| {
                        c.to_digit(10).map(|d| d as usize).ok_or_else(|| {
                            DeviceError::InvalidModel(format!("bad symbol {c:?} in strategy"))
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(parties, sequences)
    }
}

#[derive(Debug, Clone)]
pub struct StrategyDevice {
    strategy: DeterministicStrategy,
}

pub fn strategy_device(strategy: DeterministicStrategy) -> StrategyDevice {
    StrategyDevice { strategy }
}

impl StrategyDevice {
    fn output_at(&self, round: usize) -> Result<usize, DeviceError> {
        if round > self.strategy.rounds() {
            return Err(DeviceError::SequenceExhausted {
                round,
                len: self.strategy.rounds(),
            });
        }
        Ok(self.strategy.joint_output(round - 1))
    }
}

impl DeviceModel for StrategyDevice {
    fn alphabet(&self) -> Alphabet {
        self.strategy.parties.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new("strategy").with("sequences", self.strategy.to_text().trim().replace('\n', "/"))
    }

    fn conditional(&self, x: usize, history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(self.alphabet(), x)?;
        let a = self.output_at(history.len() + 1)?;
        Ok(point_mass(self.strategy.parties.joint_outputs(), a))
    }

    fn respond(&self, x: usize, history: &Transcript, _rng: &mut SimRng) -> Result<usize, DeviceError> {
        check_input(self.alphabet(), x)?;
        self.output_at(history.len() + 1)
    }
}

/// Classical triangle model: independent sources `Λ1, Λ2, Λ3` and response
/// functions reading two sources each,
///
/// `P(a1,a2,a3) = Σ_λ p1(λ1)p2(λ2)p3(λ3) q1(a1|λ1,λ3) q2(a2|λ1,λ2) q3(a3|λ2,λ3)`.
///
/// Response tables are row-major over (first parent, second parent, output):
/// `q1` over `(λ1, λ3, a1)`, `q2` over `(λ1, λ2, a2)`, `q3` over `(λ2, λ3, a3)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleLocalModel {
    #[serde(default = "default_party_outputs")]
    pub outputs: [usize; 3],
    pub supports: [usize; 3],
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub q1: Vec<f64>,
    pub q2: Vec<f64>,
    pub q3: Vec<f64>,
}

fn default_party_outputs() -> [usize; 3] {
    [2, 2, 2]
}

/// Source indices `(first, second)` read by each party.
pub const PARENTS: [(usize, usize); 3] = [(0, 2), (0, 1), (1, 2)];

fn check_simplex_rows(name: &str, v: &[f64], width: usize, rows: usize) -> Result<(), DeviceError> {
    if v.len() != width * rows {
        return Err(DeviceError::InvalidModel(format!(
            "{name} has {} entries, expected {}",
            v.len(),
            width * rows
        )));
    }
    for row in v.chunks(width) {
        if row.iter().any(|p| !(*p >= 0.0)) {
            return Err(DeviceError::InvalidModel(format!("{name} has a negative entry")));
        }
        if (row.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(DeviceError::InvalidModel(format!("{name} row not normalized")));
        }
    }
    Ok(())
}

impl TriangleLocalModel {
    pub fn sources(&self) -> [&[f64]; 3] {
        [&self.p1, &self.p2, &self.p3]
    }

    pub fn responses(&self) -> [&[f64]; 3] {
        [&self.q1, &self.q2, &self.q3]
    }

    pub fn parties(&self) -> PartyStructure {
        PartyStructure {
            outputs: self.outputs.to_vec(),
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.outputs.iter().any(|&a| a < 2) || self.supports.iter().any(|&s| s < 1) {
            return Err(DeviceError::InvalidModel("empty alphabet or support".into()));
        }
        for (i, p) in self.sources().iter().enumerate() {
            check_simplex_rows(&format!("p{}", i + 1), p, self.supports[i], 1)?;
        }
        for (i, q) in self.responses().iter().enumerate() {
            let (s, t) = PARENTS[i];
            check_simplex_rows(
                &format!("q{}", i + 1),
                q,
                self.outputs[i],
                self.supports[s] * self.supports[t],
            )?;
        }
        Ok(())
    }

    /// Response row `q_i(·|λ_s, λ_t)` of party `i` for all sources `lambda`.
    #[inline]
    pub fn response_row(&self, party: usize, lambda: [usize; 3]) -> &[f64] {
        let (s, t) = PARENTS[party];
        let row = lambda[s] * self.supports[t] + lambda[t];
        let width = self.outputs[party];
        &self.responses()[party][row * width..(row + 1) * width]
    }

    pub fn from_toml_str(text: &str) -> Result<Self, DeviceError> {
        let model: Self = toml::from_str(text).map_err(|e| DeviceError::InvalidModel(e.to_string()))?;
        model.validate()?;
        Ok(model)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }
}

/// Draws `λ1, λ2, λ3` from the sources, then each output from its response row.
pub fn triangle_sample(model: &TriangleLocalModel, rng: &mut SimRng) -> [usize; 3] {
    let lambda = [
        sample_index(&model.p1, rng),
        sample_index(&model.p2, rng),
        sample_index(&model.p3, rng),
    ];
    [0, 1, 2].map(|i| sample_index(model.response_row(i, lambda), rng))
}

/// Exact `P(a1,a2,a3)` by summing over all source values.
pub fn triangle_exact_distribution(model: &TriangleLocalModel) -> Result<Behavior, DeviceError> {
    model.validate()?;
    let size: usize = model.supports.iter().product();
    if size > MAX_SOURCE_PRODUCT {
        return Err(DeviceError::SupportTooLarge { size });
    }
    let parties = model.parties();
    let [o1, o2, o3] = model.outputs;
    let mut probs = vec![0.0; o1 * o2 * o3];
    for l1 in 0..model.supports[0] {
        for l2 in 0..model.supports[1] {
            for l3 in 0..model.supports[2] {
                let w = model.p1[l1] * model.p2[l2] * model.p3[l3];
                if w == 0.0 {
                    continue;
                }
                let lambda = [l1, l2, l3];
                let r1 = model.response_row(0, lambda);
                let r2 = model.response_row(1, lambda);
                let r3 = model.response_row(2, lambda);
                for (a1, q1) in r1.iter().enumerate() {
                    for (a2, q2) in r2.iter().enumerate() {
                        let w12 = w * q1 * q2;
                        for (a3, q3) in r3.iter().enumerate() {
                            probs[parties.encode(&[a1, a2, a3])] += w12 * q3;
                        }
                    }
                }
            }
        }
    }
    Ok(Behavior::new(parties.alphabet(), probs)?)
}

/// Random model with `Exp(1)`-normalized (flat Dirichlet) tables.
pub fn random_triangle_model(supports: [usize; 3], outputs: [usize; 3], rng: &mut SimRng) -> TriangleLocalModel {
    let mut simplex = |width: usize, rows: usize| -> Vec<f64> {
        let mut v: Vec<f64> = (0..width * rows)
            .map(|_| -(1.0 - rng.random::<f64>()).ln())
            .collect();
        for row in v.chunks_mut(width) {
            let s: f64 = row.iter().sum();
            row.iter_mut().for_each(|p| *p /= s);
        }
        v
    };
    let p1 = simplex(supports[0], 1);
    let p2 = simplex(supports[1], 1);
    let p3 = simplex(supports[2], 1);
    let q1 = simplex(outputs[0], supports[0] * supports[2]);
    let q2 = simplex(outputs[1], supports[0] * supports[1]);
    let q3 = simplex(outputs[2], supports[1] * supports[2]);
    TriangleLocalModel {
        outputs,
        supports,
        p1,
        p2,
        p3,
        q1,
        q2,
        q3,
    }
}

/// The same triangle-local distribution every round, sampled through the
/// sources.
#[derive(Debug, Clone)]
pub struct TriangleDevice {
    model: TriangleLocalModel,
    exact: Behavior,
}

impl TriangleDevice {
    pub fn new(model: TriangleLocalModel) -> Result<Self, DeviceError> {
        let exact = triangle_exact_distribution(&model)?;
        Ok(Self { model, exact })
    }

    pub fn model(&self) -> &TriangleLocalModel {
        &self.model
    }

    pub fn distribution(&self) -> &Behavior {
        &self.exact
    }
}

impl DeviceModel for TriangleDevice {
    fn alphabet(&self) -> Alphabet {
        self.exact.alphabet()
    }

    fn descriptor(&self) -> DeviceDescriptor {
        DeviceDescriptor::new("triangle_local").with("supports", format!("{:?}", self.model.supports))
    }

    fn conditional(&self, x: usize, _history: &Transcript) -> Result<Cow<'_, [f64]>, DeviceError> {
        check_input(self.alphabet(), x)?;
        Ok(Cow::Borrowed(self.exact.row(0)))
    }

    fn respond(&self, x: usize, _history: &Transcript, rng: &mut SimRng) -> Result<usize, DeviceError> {
        check_input(self.alphabet(), x)?;
        Ok(self.model.parties().encode(&triangle_sample(&self.model, rng)))
    }
}

/// Plays `rounds` rounds with input 0, the no-input convention.
pub fn run_no_input(device: &dyn DeviceModel, rounds: usize, rng: &mut SimRng) -> Result<Transcript, DeviceError> {
    let mut t = Transcript::with_capacity(rounds);
    for _ in 0..rounds {
        let a = device.respond(0, &t, rng)?;
        t.push(0, a);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{frequency_estimate, l1_distance};
    use crate::rng::rng_from_seed;

    fn pc() -> Behavior {
        let mut p = vec![0.0; 8];
        p[0] = 0.5;
        p[7] = 0.5;
        Behavior::new(Alphabet::no_input(8).unwrap(), p).unwrap()
    }

    fn freq(t: &Transcript, outputs: usize) -> Behavior {
        frequency_estimate(t, Alphabet::no_input(outputs).unwrap())
            .unwrap()
            .to_behavior()
            .unwrap()
    }

    #[test]
    fn party_structure_is_row_major() {
        let s = PartyStructure::triangle_binary();
        assert_eq!(s.encode(&[1, 0, 0]), 4);
        assert_eq!(s.encode(&[0, 1, 1]), 3);
        assert_eq!(s.decode(6), vec![1, 1, 0]);
        let mixed = PartyStructure::new(vec![2, 3]).unwrap();
        for i in 0..6 {
            assert_eq!(mixed.encode(&mixed.decode(i)), i);
        }
    }

    #[test]
    fn iid_examples() {
        let alph = Alphabet::new(2, 2).unwrap();
        let dev = iid_device(Behavior::deterministic(alph, 0));
        let mut rng = rng_from_seed(0);
        let mut t = Transcript::new();
        for k in 0..100 {
            let x = k % 2;
            assert_eq!(dev.respond(x, &t, &mut rng).unwrap(), 0);
            t.push(x, 0);
        }
        assert!(dev.respond(2, &t, &mut rng).is_err());

        let uniform = iid_device(Behavior::uniform(Alphabet::no_input(2).unwrap()));
        let t = run_no_input(&uniform, 10_000, &mut rng).unwrap();
        assert!((freq(&t, 2).prob(0, 0) - 0.5).abs() < 0.05);

        let t = run_no_input(&iid_device(pc()), 10_000, &mut rng).unwrap();
        assert!(l1_distance(&freq(&t, 8), &pc()).unwrap() < 0.05);
    }

    #[test]
    fn clock_examples() {
        let dev = clock_device(&[0, 0, 0]).unwrap();
        let mut rng = rng_from_seed(0);
        let t = run_no_input(&dev, 4, &mut rng).unwrap();
        assert_eq!(t.outputs().collect::<Vec<_>>(), vec![0, 7, 0, 7]);

        let t = run_no_input(&dev, 1000, &mut rng).unwrap();
        let table = frequency_estimate(&t, dev.alphabet()).unwrap();
        assert!(table.equals_exactly(&pc()));

        let desync = clock_device(&[1, 0, 0]).unwrap();
        let t = run_no_input(&desync, 1000, &mut rng).unwrap();
        let table = frequency_estimate(&t, desync.alphabet()).unwrap();
        assert_eq!(table.count(0, 4), 500);
        assert_eq!(table.count(0, 3), 500);
        assert!(clock_device(&[2, 0, 0]).is_err());
    }

    #[test]
    fn shared_sequence_examples() {
        let mut rng = rng_from_seed(0);
        let dev = shared_sequence_device(vec![0, 1, 0, 1]).unwrap();
        let t = run_no_input(&dev, 4, &mut rng).unwrap();
        assert!(frequency_estimate(&t, dev.alphabet()).unwrap().equals_exactly(&pc()));
        assert_eq!(
            run_no_input(&dev, 5, &mut rng),
            Err(DeviceError::SequenceExhausted { round: 5, len: 4 })
        );

        let zeros = shared_sequence_device(vec![0; 4]).unwrap();
        let t = run_no_input(&zeros, 4, &mut rng).unwrap();
        assert_eq!(freq(&t, 8).prob(0, 0), 1.0);

        let mut close = 0;
        for seed in 0..100 {
            let mut rng = rng_from_seed(seed);
            let q = random_shared_sequence(10_000, &mut rng);
            let dev = shared_sequence_device(q).unwrap();
            let t = run_no_input(&dev, 10_000, &mut rng).unwrap();
            if l1_distance(&freq(&t, 8), &pc()).unwrap() < 0.05 {
                close += 1;
            }
        }
        assert!(close >= 99, "{close}/100 sequences close to P_c");
    }

    #[test]
    fn strategy_examples() {
        let parties = PartyStructure::triangle_binary();
        let clockish = DeterministicStrategy::new(parties.clone(), vec![vec![0, 1, 0, 1]; 3]).unwrap();
        let mut rng = rng_from_seed(0);
        let a = run_no_input(&strategy_device(clockish.clone()), 4, &mut rng).unwrap();
        let b = run_no_input(&clock_device(&[0, 0, 0]).unwrap(), 4, &mut rng).unwrap();
        assert_eq!(a, b);

        let zeros = DeterministicStrategy::new(parties.clone(), vec![vec![0; 6]; 3]).unwrap();
        let t = run_no_input(&strategy_device(zeros), 6, &mut rng).unwrap();
        assert_eq!(freq(&t, 8).prob(0, 0), 1.0);

        assert_eq!(clockish.to_text(), "0101\n0101\n0101\n");
        let parsed = DeterministicStrategy::from_text(parties.clone(), "# clock\n0101\n0101\n\n0101\n").unwrap();
        assert_eq!(parsed, clockish);
        assert_eq!(clockish.lex_key(), vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1, 0, 1]);
        assert!(DeterministicStrategy::from_text(parties.clone(), "01\n0\n01\n").is_err());
        assert!(DeterministicStrategy::from_text(parties, "02\n01\n01\n").is_err());
    }

    fn copy_parent_model() -> TriangleLocalModel {
        // q1 copies λ3, q2 copies λ1, q3 copies λ2
        let copy_second = vec![1.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0];
        let copy_first = vec![1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 1.0];
        TriangleLocalModel {
            outputs: [2, 2, 2],
            supports: [2, 2, 2],
            p1: vec![0.5, 0.5],
            p2: vec![0.5, 0.5],
            p3: vec![0.5, 0.5],
            q1: copy_second,
            q2: copy_first.clone(),
            q3: copy_first,
        }
    }

    #[test]
    fn triangle_exact_examples() {
        let constant = TriangleLocalModel {
            outputs: [2, 2, 2],
            supports: [1, 1, 1],
            p1: vec![1.0],
            p2: vec![1.0],
            p3: vec![1.0],
            q1: vec![1.0, 0.0],
            q2: vec![1.0, 0.0],
            q3: vec![1.0, 0.0],
        };
        let p = triangle_exact_distribution(&constant).unwrap();
        assert_eq!(p.prob(0, 0), 1.0);
        let mut rng = rng_from_seed(3);
        for _ in 0..100 {
            assert_eq!(triangle_sample(&constant, &mut rng), [0, 0, 0]);
        }

        let p = triangle_exact_distribution(&copy_parent_model()).unwrap();
        for o in 0..8 {
            assert!((p.prob(0, o) - 0.125).abs() < 1e-15);
        }

        for seed in 0..10 {
            let mut rng = rng_from_seed(seed);
            let m = random_triangle_model([4, 3, 2], [2, 3, 2], &mut rng);
            let p = triangle_exact_distribution(&m).unwrap();
            assert!((p.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        let mut big = constant.clone();
        big.supports = [1000, 1000, 1000];
        big.p1 = vec![0.001; 1000];
        assert!(matches!(
            triangle_exact_distribution(&big),
            Err(DeviceError::InvalidModel(_))
        ));
    }

    #[test]
    fn triangle_sample_uniform_marginal() {
        let mut rng = rng_from_seed(11);
        let model = copy_parent_model();
        let dev = TriangleDevice::new(model).unwrap();
        let t = run_no_input(&dev, 10_000, &mut rng).unwrap();
        let f = freq(&t, 8);
        for o in 0..8 {
            assert!((f.prob(0, o) - 0.125).abs() < 0.05);
        }
    }

    #[test]
    fn support_too_large_is_reported() {
        let size = 300;
        let uniform = vec![1.0 / size as f64; size];
        let mut q = Vec::new();
        for _ in 0..size * size {
            q.extend([1.0, 0.0]);
        }
        let model = TriangleLocalModel {
            outputs: [2, 2, 2],
            supports: [size; 3],
            p1: uniform.clone(),
            p2: uniform.clone(),
            p3: uniform,
            q1: q.clone(),
            q2: q.clone(),
            q3: q,
        };
        assert_eq!(
            triangle_exact_distribution(&model),
            Err(DeviceError::SupportTooLarge { size: 27_000_000 })
        );
    }

    #[test]
    fn model_file_roundtrip() {
        let m = copy_parent_model();
        let text = m.to_toml_string();
        assert_eq!(TriangleLocalModel::from_toml_str(&text).unwrap(), m);
        let bad = text.replace("p1 = [0.5, 0.5]", "p1 = [0.5, 0.6]");
        assert!(TriangleLocalModel::from_toml_str(&bad).is_err());
    }

    #[test]
    fn devices_are_reproducible() {
        let mut rng = rng_from_seed(5);
        let model = random_triangle_model([4, 4, 4], [2, 2, 2], &mut rng);
        let devices: Vec<Box<dyn DeviceModel>> = vec![
            Box::new(iid_device(pc())),
            Box::new(TriangleDevice::new(model).unwrap()),
            Box::new(clock_device(&[0, 1, 0]).unwrap()),
        ];
        for d in &devices {
            let a = run_no_input(d.as_ref(), 200, &mut rng_from_seed(9)).unwrap();
            let b = run_no_input(d.as_ref(), 200, &mut rng_from_seed(9)).unwrap();
            assert_eq!(a, b);
        }
    }
}
