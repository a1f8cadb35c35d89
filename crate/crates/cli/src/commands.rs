use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use noniid_core::convexity::{membership, membership_exact, separating_functional, Membership, SeparatingFunctional};
use noniid_core::correlations::Behavior;
use noniid_core::hypothesis::{
    enumerate_deterministic_max, exact_acceptance, exact_acceptance_rational, ksigma_frequency_test, simulate,
    state_space_size, DistanceFunctional, TestReport,
};
use noniid_core::rng::rng_from_seed;
use noniid_core::selftest::{exposedness_scan, random_density, DensityMatrix, ExposednessReport};
use noniid_core::triangle::{
    attack_demo, best_local_approx, p_c, scenario, ApproxOptions, ApproxResult, AttackDemoReport, Objective, Regime,
};
use serde::Serialize;

use crate::args::{
    ApproxArgs, AttackDemoArgs, Cli, Command, ConfigArgs, ExactArgs, MembershipArgs, RegimeArg, SimulateArgs,
    WitnessArgs,
};
use crate::config::{BehaviorSource, ScenarioConfig, ScenarioKind, NAMED_BEHAVIORS};
use crate::error::CliError;
use crate::experiment::{build, build_test, load_behavior, load_triangle_model, read_text, Experiment};

/// Largest `argmax` list printed by `enumerate`.
const MAX_LISTED_STRATEGIES: usize = 100;

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::config("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Run(e.to_string()))?;
    }
    let seed = cli.seed;
    let out = cli.out.as_deref();
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, seed, out),
        Command::Exact(a) => cmd_exact(a, seed, out),
        Command::Membership(a) => cmd_membership(a, out),
        Command::Separate(a) => cmd_separate(a, out),
        Command::Witness(a) => cmd_witness(a, seed.unwrap_or(0), out),
        Command::Enumerate(a) => cmd_enumerate(a, seed, out),
        Command::AttackDemo(a) => cmd_attack_demo(a, seed.unwrap_or(0), out),
        Command::Approx(a) => cmd_approx(a, seed.unwrap_or(0), out),
        Command::Validate(a) => cmd_validate(a, seed),
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<ScenarioConfig, CliError> {
    let mut cfg = ScenarioConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

/// Writes pretty JSON followed by a newline to `path`, or to standard output.
pub fn emit<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn report_path<'a>(out: Option<&'a Path>, cfg: &'a ScenarioConfig) -> Option<&'a Path> {
    out.or(cfg.output.report.as_deref())
}

fn cmd_simulate(a: &SimulateArgs, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let mut cfg = load_config(&a.config, seed)?;
    if let Some(t) = a.trials {
        if t == 0 {
            return Err(CliError::config("trials", "must be at least 1, got 0"));
        }
        cfg.trials = t;
    }
    let trace = a.trace.clone().or_else(|| cfg.output.trace.clone());
    let keep = match trace {
        Some(_) => a.trace_trials.unwrap_or(cfg.output.trace_trials).min(cfg.trials),
        None => 0,
    };
    let Experiment { test, device } = build(&cfg)?;
    let sim = simulate(test.as_ref(), device.as_ref(), cfg.trials, cfg.seed, keep)?;
    if let Some(path) = &trace {
        let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Run(format!("{}: {e}", path.display())))?;
        for row in &sim.trace {
            w.serialize(row)?;
        }
        if sim.trace.is_empty() {
            w.write_record(["trial", "round", "x", "a", "statistic", "pvalue"])?;
        }
        w.flush().map_err(|e| CliError::io(path, e))?;
    }
    emit::<TestReport>(&sim.report, report_path(out, &cfg))
}

#[derive(Serialize)]
struct ExactReport {
    test: String,
    device: String,
    n: usize,
    state_space: f64,
    acceptance: f64,
    acceptance_rational: Option<String>,
    seed: u64,
    wall_time_s: f64,
}

fn cmd_exact(a: &ExactArgs, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(&a.config, seed)?;
    let start = Instant::now();
    let Experiment { test, device } = build(&cfg)?;
    let acceptance = exact_acceptance(test.as_ref(), device.as_ref())?;
    let rational = if a.rational {
        Some(exact_acceptance_rational(test.as_ref(), device.as_ref())?.to_string())
    } else {
        None
    };
    let report = ExactReport {
        test: test.descriptor(),
        device: device.descriptor().name,
        n: test.max_rounds(),
        state_space: state_space_size(test.as_ref()),
        acceptance,
        acceptance_rational: rational,
        seed: cfg.seed,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    emit(&report, report_path(out, &cfg))
}

fn behavior_arg(name: &str, key: &str) -> Result<Behavior, CliError> {
    let source = if NAMED_BEHAVIORS.contains(&name) {
        BehaviorSource::Named(name.to_string())
    } else {
        BehaviorSource::File(PathBuf::from(name))
    };
    load_behavior(&source, key)
}

fn behavior_set(a: &MembershipArgs) -> Result<(Behavior, Vec<Behavior>), CliError> {
    let target = behavior_arg(&a.target, "target")?;
    let set = a
        .set
        .iter()
        .map(|s| behavior_arg(s, "set"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((target, set))
}

#[derive(Serialize)]
struct MembershipReport<'a> {
    target: &'a str,
    set: &'a [String],
    member: bool,
    certificate: Membership,
    exact_weights: Option<Vec<String>>,
}

fn cmd_membership(a: &MembershipArgs, out: Option<&Path>) -> Result<(), CliError> {
    let (target, set) = behavior_set(a)?;
    let certificate = membership(&target, &set)?;
    let exact_weights = if a.exact {
        membership_exact(&target, &set)?.map(|w| w.iter().map(|q| q.to_string()).collect())
    } else {
        None
    };
    let report = MembershipReport {
        target: &a.target,
        set: &a.set,
        member: certificate.is_member(),
        certificate,
        exact_weights,
    };
    emit(&report, out)
}

#[derive(Serialize)]
struct SeparationReport<'a> {
    target: &'a str,
    set: &'a [String],
    functional: SeparatingFunctional,
}

fn cmd_separate(a: &MembershipArgs, out: Option<&Path>) -> Result<(), CliError> {
    let (target, set) = behavior_set(a)?;
    let functional = separating_functional(&target, &set)?;
    emit(
        &SeparationReport {
            target: &a.target,
            set: &a.set,
            functional,
        },
        out,
    )
}

#[derive(Serialize)]
struct WitnessReport {
    seed: u64,
    purity: f64,
    rho: String,
    #[serde(flatten)]
    scan: ExposednessReport,
}

fn cmd_witness(a: &WitnessArgs, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let rho = match &a.rho {
        Some(path) => DensityMatrix::from_text(&read_text(path, "rho")?).map_err(|e| CliError::config("rho", e))?,
        None => random_density(a.dim, &mut rng_from_seed(seed)).map_err(|e| CliError::config("dim", e))?,
    };
    if a.samples == 0 {
        return Err(CliError::config("samples", "must be at least 1"));
    }
    let scan = exposedness_scan(&rho, a.samples, seed)?;
    let report = WitnessReport {
        seed,
        purity: rho.purity(),
        rho: rho.to_text(),
        scan,
    };
    emit(&report, out)
}

#[derive(Serialize)]
struct EnumerateReport {
    test: String,
    n: usize,
    searched: usize,
    max: f64,
    argmax_count: usize,
    /// Lexicographically first maximizer, one digit string per party.
    first: Vec<String>,
    argmax: Vec<Vec<String>>,
}

fn strategy_lines(s: &noniid_core::DeterministicStrategy) -> Vec<String> {
    s.to_text().lines().map(str::to_string).collect()
}

fn cmd_enumerate(a: &ConfigArgs, seed: Option<u64>, out: Option<&Path>) -> Result<(), CliError> {
    let cfg = load_config(&a.config, seed)?;
    let parties = match &cfg.scenario {
        ScenarioKind::Custom { parties, .. } => {
            noniid_core::PartyStructure::new(parties.clone()).map_err(|e| CliError::config("scenario.parties", e))?
        }
        _ => scenario(),
    };
    let test = build_test(&cfg, parties.alphabet())?;
    let mut r = enumerate_deterministic_max(test.as_ref(), &parties)?;
    r.argmax.sort_by_key(|s| s.lex_key());
    let report = EnumerateReport {
        test: test.descriptor(),
        n: cfg.n,
        searched: r.searched,
        max: r.max,
        argmax_count: r.argmax.len(),
        first: strategy_lines(&r.argmax[0]),
        argmax: r.argmax.iter().take(MAX_LISTED_STRATEGIES).map(strategy_lines).collect(),
    };
    emit(&report, report_path(out, &cfg))
}

#[derive(Serialize)]
struct ApproxSummary {
    value: f64,
    restart: usize,
    restarts: usize,
    method: &'static str,
}

#[derive(Serialize)]
struct AttackReport {
    delta: f64,
    k: f64,
    local_model: String,
    approx: Option<ApproxSummary>,
    demo: AttackDemoReport,
}

fn cmd_attack_demo(a: &AttackDemoArgs, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    if a.n == 0 {
        return Err(CliError::config("n", "must be at least 1, got 0"));
    }
    if a.trials == 0 {
        return Err(CliError::config("trials", "must be at least 1, got 0"));
    }
    if !(a.delta.is_finite() && a.delta > 0.0) {
        return Err(CliError::config("delta", "must be positive"));
    }
    let functional = Arc::new(DistanceFunctional::new(p_c(), "pc"));
    let test = ksigma_frequency_test(functional, scenario().alphabet(), -a.delta, a.k, vec![1.0], a.n)
        .map_err(|e| CliError::config("k", e))?;
    let (model, approx, local_model) = match &a.model {
        Some(path) => (load_triangle_model(path, "model")?, None, path.display().to_string()),
        None => {
            let opts = ApproxOptions {
                restarts: a.restarts.max(1),
                iters: a.iters,
                seed,
                ..ApproxOptions::default()
            };
            let r = best_local_approx(&Objective::Distance(p_c()), &opts);
            let summary = ApproxSummary {
                value: r.value,
                restart: r.restart,
                restarts: opts.restarts,
                method: r.method,
            };
            (r.model, Some(summary), "optimizer".to_string())
        }
    };
    let regime = match a.regime {
        RegimeArg::Unlimited => Regime::Unlimited,
        RegimeArg::Bounded => Regime::Bounded,
        RegimeArg::Banned => Regime::Banned,
    };
    let demo = attack_demo(&test, &model, a.trials, seed, regime)?;
    let report = AttackReport {
        delta: a.delta,
        k: a.k,
        local_model,
        approx,
        demo,
    };
    emit(&report, out)
}

fn cmd_approx(a: &ApproxArgs, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let target = behavior_arg(&a.target, "target")?;
    if target.alphabet() != scenario().alphabet() {
        return Err(CliError::config("target", "must be a behavior of three binary parties without inputs"));
    }
    if a.support == 0 {
        return Err(CliError::config("support", "must be at least 1"));
    }
    let opts = ApproxOptions {
        supports: [a.support; 3],
        restarts: a.restarts.max(1),
        iters: a.iters,
        seed,
        ..ApproxOptions::default()
    };
    let result: ApproxResult = best_local_approx(&Objective::Distance(target), &opts);
    if let Some(path) = &a.model_out {
        std::fs::write(path, result.model.to_toml_string()).map_err(|e| CliError::io(path, e))?;
    }
    emit(&result, out)
}

/// Full check of a config, including referenced files, without running
/// trials or enumerating strategies.
fn cmd_validate(a: &ConfigArgs, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = load_config(&a.config, seed)?;
    if !matches!(cfg.scenario, ScenarioKind::Meta) {
        build(&cfg)?;
    } else {
        build_test(&cfg, scenario().alphabet())?;
    }
    println!("ok");
    Ok(())
}
