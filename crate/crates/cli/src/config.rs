//! Scenario configuration files.
//!
//! ```toml
//! n = 1000            # rounds per trial, required
//! trials = 1000       # default 1000
//! seed = 0            # default 0
//!
//! [scenario]
//! kind = "clock"      # iid | clock | shared_sequence | meta | triangle_local | custom
//! offsets = [0, 0, 0] # clock only
//!
//! [test]
//! kind = "ksigma"     # ksigma | martingale | custom
//! target = "pc"       # or `coeffs = [...]` for a linear functional
//! alpha = -0.25
//! k = 3.0
//!
//! [output]
//! report = "demo.json"
//! trace = "trace.csv"
//! ```
//!
//! Scenario keys by kind:
//!
//! * `iid`: `behavior`, a built-in name (`pc`, `p0`, `p1`) or a behavior file.
//! * `clock`: `offsets`, one bit per party (default `[0, 0, 0]`).
//! * `shared_sequence`: optional `sequence` of shared bits, at least `n`
//!   long; when absent a uniform bit sequence is drawn from the seed.
//! * `meta`: no keys; the first deterministic strategy maximizing the test.
//! * `triangle_local`: `model`, a triangle model file.
//! * `custom`: `strategy`, a file with one line of output digits per party,
//!   and optional `parties` (output sizes, default `[2, 2, 2]`).
//!
//! Test keys by kind:
//!
//! * `ksigma`: exactly one of `target` (distance functional) or `coeffs`
//!   (linear functional), then `alpha`, `k` (default 3), `input_dist`
//!   (default uniform), `bootstrap` (default 200).
//! * `martingale`: `coeffs`, `alpha`, `epsilon`, `input_dist`,
//!   optional `score_range = [m, M]`.
//! * `custom`: `decisions`, a file of whitespace-separated acceptance
//!   probabilities, one per transcript.
//!
//! Relative paths are resolved against the directory of the config file.

use std::fmt;
use std::path::{Path, PathBuf};

use toml::{Table, Value};

pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_K: f64 = 3.0;
pub const DEFAULT_TRACE_TRIALS: usize = 10;

/// A problem with one key of a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

impl ConfigIssue {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "`{}`: {}", self.key, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BehaviorSource {
    Named(String),
    File(PathBuf),
}

pub const NAMED_BEHAVIORS: [&str; 3] = ["pc", "p0", "p1"];

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioKind {
    Iid { behavior: BehaviorSource },
    Clock { offsets: Vec<usize> },
    SharedSequence { sequence: Option<Vec<usize>> },
    Meta,
    TriangleLocal { model: PathBuf },
    Custom { strategy: PathBuf, parties: Vec<usize> },
}

impl ScenarioKind {
    pub fn kind(&self) -> &'static str {
        match self {
            ScenarioKind::Iid { .. } => "iid",
            ScenarioKind::Clock { .. } => "clock",
            ScenarioKind::SharedSequence { .. } => "shared_sequence",
            ScenarioKind::Meta => "meta",
            ScenarioKind::TriangleLocal { .. } => "triangle_local",
            ScenarioKind::Custom { .. } => "custom",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalKind {
    Distance(BehaviorSource),
    Linear(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum TestKind {
    KSigma {
        functional: FunctionalKind,
        alpha: f64,
        k: f64,
        input_dist: Option<Vec<f64>>,
        bootstrap: Option<usize>,
    },
    Martingale {
        coeffs: Vec<f64>,
        alpha: f64,
        epsilon: f64,
        input_dist: Option<Vec<f64>>,
        score_range: Option<(f64, f64)>,
    },
    Custom {
        decisions: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OutputPaths {
    pub report: Option<PathBuf>,
    pub trace: Option<PathBuf>,
    pub trace_trials: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub scenario: ScenarioKind,
    pub test: TestKind,
    pub output: OutputPaths,
}

impl ScenarioConfig {
    /// Parses and schema-checks a config; every problem found is reported.
    /// Relative paths are joined onto `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, Vec<ConfigIssue>> {
        let root: Table = text
            .parse()
            .map_err(|e: toml::de::Error| vec![ConfigIssue::new("config", e.message().trim().to_string())])?;
        let mut issues = Vec::new();
        let top = Section::root(&root, base_dir);
        top.allow(&["n", "trials", "seed", "scenario", "test", "output"], &mut issues);

        let n = top.required(top.positive("n"), "n", &mut issues);
        let trials = keep(top.positive("trials"), &mut issues).flatten().unwrap_or(DEFAULT_TRIALS);
        let seed = keep(top.seed("seed"), &mut issues).flatten().unwrap_or(DEFAULT_SEED);

        let scenario = match keep(top.table("scenario"), &mut issues) {
            Some(Some(s)) => parse_scenario(&s, &mut issues),
            Some(None) => {
                issues.push(ConfigIssue::new("scenario", "missing required table"));
                None
            }
            None => None,
        };
        let test = match keep(top.table("test"), &mut issues) {
            Some(Some(s)) => parse_test(&s, &mut issues),
            Some(None) => {
                issues.push(ConfigIssue::new("test", "missing required table"));
                None
            }
            None => None,
        };
        let output = match keep(top.table("output"), &mut issues) {
            Some(Some(s)) => parse_output(&s, &mut issues),
            _ => OutputPaths {
                trace_trials: DEFAULT_TRACE_TRIALS,
                ..OutputPaths::default()
            },
        };

        match (n, scenario, test) {
            (Some(n), Some(scenario), Some(test)) if issues.is_empty() => Ok(Self {
                n,
                trials,
                seed,
                scenario,
                test,
                output,
            }),
            _ => Err(issues),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, Vec<ConfigIssue>> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| vec![ConfigIssue::new("config", format!("cannot read {}: {e}", path.display()))])?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }
}

fn keep<T>(r: Result<T, ConfigIssue>, issues: &mut Vec<ConfigIssue>) -> Option<T> {
    r.map_err(|e| issues.push(e)).ok()
}

fn parse_scenario(s: &Section<'_>, issues: &mut Vec<ConfigIssue>) -> Option<ScenarioKind> {
    let kind = s.required(s.string("kind"), "kind", issues)?;
    let parsed = match kind.as_str() {
        "iid" => {
            s.allow(&["kind", "behavior"], issues);
            let behavior = s.required(s.behavior("behavior"), "behavior", issues)?;
            ScenarioKind::Iid { behavior }
        }
        "clock" => {
            s.allow(&["kind", "offsets"], issues);
            let offsets = keep(s.uints("offsets"), issues)?.unwrap_or_else(|| vec![0, 0, 0]);
            if offsets.is_empty() || offsets.iter().any(|&o| o > 1) {
                issues.push(ConfigIssue::new(s.key("offsets"), "must be a non-empty list of bits"));
                return None;
            }
            ScenarioKind::Clock { offsets }
        }
        "shared_sequence" => {
            s.allow(&["kind", "sequence"], issues);
            let sequence = keep(s.uints("sequence"), issues)?;
            if sequence.as_ref().is_some_and(|q| q.iter().any(|&b| b > 1)) {
                issues.push(ConfigIssue::new(s.key("sequence"), "must be a list of bits"));
                return None;
            }
            ScenarioKind::SharedSequence { sequence }
        }
        "meta" => {
            s.allow(&["kind"], issues);
            ScenarioKind::Meta
        }
        "triangle_local" => {
            s.allow(&["kind", "model"], issues);
            let model = s.required(s.path("model"), "model", issues)?;
            ScenarioKind::TriangleLocal { model }
        }
        "custom" => {
            s.allow(&["kind", "strategy", "parties"], issues);
            let strategy = s.required(s.path("strategy"), "strategy", issues)?;
            let parties = keep(s.uints("parties"), issues)?.unwrap_or_else(|| vec![2, 2, 2]);
            if parties.is_empty() || parties.iter().any(|&p| p == 0 || p > 10) {
                issues.push(ConfigIssue::new(s.key("parties"), "output sizes must lie in 1..=10"));
                return None;
            }
            ScenarioKind::Custom { strategy, parties }
        }
        other => {
            issues.push(ConfigIssue::new(
                s.key("kind"),
                format!("unknown scenario kind {other:?}; expected iid, clock, shared_sequence, meta, triangle_local or custom"),
            ));
            return None;
        }
    };
    Some(parsed)
}

fn parse_test(s: &Section<'_>, issues: &mut Vec<ConfigIssue>) -> Option<TestKind> {
    let kind = s.required(s.string("kind"), "kind", issues)?;
    let parsed = match kind.as_str() {
        "ksigma" => {
            s.allow(&["kind", "target", "coeffs", "alpha", "k", "input_dist", "bootstrap"], issues);
            let target = keep(s.behavior("target"), issues).flatten();
            let coeffs = keep(s.floats("coeffs"), issues).flatten();
            let functional = match (target, coeffs) {
                (Some(t), None) => Some(FunctionalKind::Distance(t)),
                (None, Some(c)) => Some(FunctionalKind::Linear(c)),
                (Some(_), Some(_)) => {
                    issues.push(ConfigIssue::new(s.key("target"), "give either `target` or `coeffs`, not both"));
                    None
                }
                (None, None) => {
                    issues.push(ConfigIssue::new(s.key("target"), "one of `target` or `coeffs` is required"));
                    None
                }
            };
            let alpha = s.required(s.float("alpha"), "alpha", issues);
            let k = keep(s.float("k"), issues).flatten().unwrap_or(DEFAULT_K);
            if !(k > 0.0) {
                issues.push(ConfigIssue::new(s.key("k"), "must be positive"));
            }
            let input_dist = keep(s.floats("input_dist"), issues)?;
            let bootstrap = keep(s.positive("bootstrap"), issues)?;
            TestKind::KSigma {
                functional: functional?,
                alpha: alpha?,
                k,
                input_dist,
                bootstrap,
            }
        }
        "martingale" => {
            s.allow(&["kind", "coeffs", "alpha", "epsilon", "input_dist", "score_range"], issues);
            let coeffs = s.required(s.floats("coeffs"), "coeffs", issues);
            let alpha = s.required(s.float("alpha"), "alpha", issues);
            let epsilon = s.required(s.float("epsilon"), "epsilon", issues);
            if let Some(e) = epsilon {
                if !(e > 0.0 && e < 1.0) {
                    issues.push(ConfigIssue::new(s.key("epsilon"), "must lie in (0, 1)"));
                }
            }
            let input_dist = keep(s.floats("input_dist"), issues)?;
            let score_range = match keep(s.floats("score_range"), issues)? {
                Some(r) if r.len() == 2 && r[0] <= r[1] => Some((r[0], r[1])),
                Some(_) => {
                    issues.push(ConfigIssue::new(s.key("score_range"), "must be [m, M] with m <= M"));
                    return None;
                }
                None => None,
            };
            TestKind::Martingale {
                coeffs: coeffs?,
                alpha: alpha?,
                epsilon: epsilon?,
                input_dist,
                score_range,
            }
        }
        "custom" => {
            s.allow(&["kind", "decisions"], issues);
            TestKind::Custom {
                decisions: s.required(s.path("decisions"), "decisions", issues)?,
            }
        }
        other => {
            issues.push(ConfigIssue::new(
                s.key("kind"),
                format!("unknown test kind {other:?}; expected ksigma, martingale or custom"),
            ));
            return None;
        }
    };
    Some(parsed)
}

fn parse_output(s: &Section<'_>, issues: &mut Vec<ConfigIssue>) -> OutputPaths {
    s.allow(&["report", "trace", "trace_trials"], issues);
    OutputPaths {
        report: keep(s.path("report"), issues).flatten(),
        trace: keep(s.path("trace"), issues).flatten(),
        trace_trials: keep(s.count("trace_trials"), issues)
            .flatten()
            .unwrap_or(DEFAULT_TRACE_TRIALS),
    }
}

/// A table with its dotted prefix, for key names in messages.
struct Section<'a> {
    prefix: String,
    table: &'a Table,
    base_dir: &'a Path,
}

impl<'a> Section<'a> {
    fn root(table: &'a Table, base_dir: &'a Path) -> Self {
        Self {
            prefix: String::new(),
            table,
            base_dir,
        }
    }

    fn key(&self, k: &str) -> String {
        if self.prefix.is_empty() {
            k.to_string()
        } else {
            format!("{}.{k}", self.prefix)
        }
    }

    fn allow(&self, allowed: &[&str], issues: &mut Vec<ConfigIssue>) {
        for k in self.table.keys() {
            if !allowed.contains(&k.as_str()) {
                issues.push(ConfigIssue::new(self.key(k), "unknown key"));
            }
        }
    }

    fn required<T>(&self, r: Result<Option<T>, ConfigIssue>, k: &str, issues: &mut Vec<ConfigIssue>) -> Option<T> {
        match r {
            Ok(Some(v)) => Some(v),
            Ok(None) => {
                issues.push(ConfigIssue::new(self.key(k), "missing required key"));
                None
            }
            Err(e) => {
                issues.push(e);
                None
            }
        }
    }

    fn wrong(&self, k: &str, expected: &str, v: &Value) -> ConfigIssue {
        ConfigIssue::new(self.key(k), format!("expected {expected}, found {}", v.type_str()))
    }

    fn table(&self, k: &str) -> Result<Option<Section<'a>>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Table(t)) => Ok(Some(Section {
                prefix: self.key(k),
                table: t,
                base_dir: self.base_dir,
            })),
            Some(v) => Err(self.wrong(k, "a table", v)),
        }
    }

    fn string(&self, k: &str) -> Result<Option<String>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(v) => Err(self.wrong(k, "a string", v)),
        }
    }

    fn path(&self, k: &str) -> Result<Option<PathBuf>, ConfigIssue> {
        Ok(self.string(k)?.map(|s| self.base_dir.join(s)))
    }

    fn behavior(&self, k: &str) -> Result<Option<BehaviorSource>, ConfigIssue> {
        Ok(self.string(k)?.map(|s| {
            if NAMED_BEHAVIORS.contains(&s.as_str()) {
                BehaviorSource::Named(s)
            } else {
                BehaviorSource::File(self.base_dir.join(s))
            }
        }))
    }

    fn integer(&self, k: &str) -> Result<Option<i64>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(v) => Err(self.wrong(k, "an integer", v)),
        }
    }

    fn positive(&self, k: &str) -> Result<Option<usize>, ConfigIssue> {
        match self.integer(k)? {
            Some(i) if i >= 1 => Ok(Some(i as usize)),
            Some(i) => Err(ConfigIssue::new(self.key(k), format!("must be at least 1, got {i}"))),
            None => Ok(None),
        }
    }

    fn count(&self, k: &str) -> Result<Option<usize>, ConfigIssue> {
        match self.integer(k)? {
            Some(i) if i >= 0 => Ok(Some(i as usize)),
            Some(i) => Err(ConfigIssue::new(self.key(k), format!("must be non-negative, got {i}"))),
            None => Ok(None),
        }
    }

    fn seed(&self, k: &str) -> Result<Option<u64>, ConfigIssue> {
        match self.integer(k)? {
            Some(i) if i >= 0 => Ok(Some(i as u64)),
            Some(i) => Err(ConfigIssue::new(self.key(k), format!("must be non-negative, got {i}"))),
            None => Ok(None),
        }
    }

    fn float(&self, k: &str) -> Result<Option<f64>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(v) => as_float(v)
                .filter(|f| f.is_finite())
                .map(Some)
                .ok_or_else(|| self.wrong(k, "a finite number", v)),
        }
    }

    fn floats(&self, k: &str) -> Result<Option<Vec<f64>>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| as_float(v).filter(|f| f.is_finite()))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| ConfigIssue::new(self.key(k), "expected an array of finite numbers")),
            Some(v) => Err(self.wrong(k, "an array of numbers", v)),
        }
    }

    fn uints(&self, k: &str) -> Result<Option<Vec<usize>>, ConfigIssue> {
        match self.table.get(k) {
            None => Ok(None),
            Some(Value::Array(a)) => a
                .iter()
                .map(|v| v.as_integer().filter(|i| *i >= 0).map(|i| i as usize))
                .collect::<Option<Vec<_>>>()
                .map(Some)
                .ok_or_else(|| ConfigIssue::new(self.key(k), "expected an array of non-negative integers")),
            Some(v) => Err(self.wrong(k, "an array of integers", v)),
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(f) => Some(*f),
        Value::Integer(i) => Some(*i as f64),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
n = 10
[scenario]
kind = "clock"
[test]
kind = "ksigma"
target = "pc"
alpha = -0.25
"#;

    fn parse(text: &str) -> Result<ScenarioConfig, Vec<ConfigIssue>> {
        ScenarioConfig::parse(text, Path::new("/cfg"))
    }

    fn keys(issues: &[ConfigIssue]) -> Vec<&str> {
        issues.iter().map(|i| i.key.as_str()).collect()
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!((c.n, c.trials, c.seed), (10, 1000, 0));
        assert_eq!(c.scenario, ScenarioKind::Clock { offsets: vec![0, 0, 0] });
        match c.test {
            TestKind::KSigma { functional, k, .. } => {
                assert_eq!(functional, FunctionalKind::Distance(BehaviorSource::Named("pc".into())));
                assert_eq!(k, 3.0);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(c.output.trace_trials, DEFAULT_TRACE_TRIALS);
    }

    #[test]
    fn negative_n_names_n() {
        let e = parse(&MINIMAL.replace("n = 10", "n = -5")).unwrap_err();
        assert_eq!(keys(&e), ["n"]);
    }

    #[test]
    fn missing_test_names_test() {
        let text = "n = 3\n[scenario]\nkind = \"meta\"\n";
        assert_eq!(keys(&parse(text).unwrap_err()), ["test"]);
    }

    #[test]
    fn zero_trials_rejected() {
        let e = parse(&MINIMAL.replace("n = 10", "n = 10\ntrials = 0")).unwrap_err();
        assert_eq!(keys(&e), ["trials"]);
    }

    #[test]
    fn errors_are_aggregated() {
        let text = r#"
n = 0
colour = "red"
[scenario]
kind = "clock"
offsets = [2]
[test]
kind = "martingale"
alpha = 0.5
epsilon = 1.5
"#;
        let e = parse(text).unwrap_err();
        let mut k = keys(&e);
        k.sort();
        assert_eq!(k, ["colour", "n", "scenario.offsets", "test.coeffs", "test.epsilon"]);
    }

    #[test]
    fn unknown_nested_key_rejected() {
        let text = MINIMAL.replace("kind = \"clock\"", "kind = \"clock\"\nphase = 1");
        assert_eq!(keys(&parse(&text).unwrap_err()), ["scenario.phase"]);
    }

    #[test]
    fn ksigma_needs_one_functional() {
        let both = MINIMAL.replace("target = \"pc\"", "target = \"pc\"\ncoeffs = [1.0]");
        assert_eq!(keys(&parse(&both).unwrap_err()), ["test.target"]);
        let none = MINIMAL.replace("target = \"pc\"", "");
        assert_eq!(keys(&parse(&none).unwrap_err()), ["test.target"]);
    }

    #[test]
    fn paths_resolve_against_base() {
        let text = MINIMAL.replace("target = \"pc\"", "target = \"p.toml\"") + "[output]\nreport = \"r.json\"\n";
        let c = parse(&text).unwrap();
        assert_eq!(c.output.report, Some(PathBuf::from("/cfg/r.json")));
        match c.test {
            TestKind::KSigma { functional, .. } => {
                assert_eq!(functional, FunctionalKind::Distance(BehaviorSource::File("/cfg/p.toml".into())))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn syntax_error_reported() {
        assert_eq!(keys(&parse("n = ").unwrap_err()), ["config"]);
    }
}
