//! Command-line front end.
//!
//! Exit codes: 0 when the command ran and produced its verdict, 1 when an input
//! or a property check failed validation, 2 on I/O, schema or usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctxkit_core::cycle::{
    contextuality_bit_decompose, extremal_contextual, extremal_noncontextual, gammas,
};
use ctxkit_core::measures::{relative_entropy_of_contextuality, RcOptions};
use ctxkit_core::ncpolytope::NcTester;
use ctxkit_core::sample::random_nd_cycle_box;
use ctxkit_core::wiring::apply_wiring;
use ctxkit_core::{Bits, BlackBox, ValidationReport};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::json::{self, LoadError};
use crate::schema::{self, BehaviorDoc, InputError, Loader, NcBoxDoc, ScenarioDoc, WiringDoc};
use crate::suite::{run_suites, Suite, SuiteConfig};

#[derive(Debug, Parser)]
#[command(
    name = "ctxkit",
    version,
    about = "Contextuality as a resource: boxes, wirings and monotones"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Normalization tolerance
    #[arg(long, global = true, default_value_t = 1e-9, value_parser = positive)]
    pub eps_norm: f64,
    /// Distance-to-polytope threshold of the noncontextuality test
    #[arg(long, global = true, default_value_t = 1e-8, value_parser = positive)]
    pub eps_lp: f64,
    /// Certified gap required of R_C, in bits
    #[arg(long, global = true, default_value_t = 1e-6, value_parser = positive)]
    pub rc_tol: f64,
    /// Iteration budget of the R_C solver
    #[arg(long, global = true, default_value_t = ctxkit_core::measures::DEFAULT_MAX_ITER)]
    pub max_iter: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a scenario, behavior, NC box or wiring file
    Validate {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Kind::Auto)]
        kind: Kind,
    },
    /// Nondisturbance check of a behavior
    CheckNd { behavior: PathBuf },
    /// Noncontextuality test with a certificate
    CheckNc { behavior: PathBuf },
    /// Apply a wiring to a behavior; writes the wired behavior
    Wire { wiring: PathBuf, behavior: PathBuf },
    /// Relative entropy of contextuality
    Rc {
        behavior: PathBuf,
        /// Also write the minimizing NC box here
        #[arg(long)]
        argmin: Option<PathBuf>,
    },
    /// Cycle scenarios and the contextuality bit
    Cycle {
        #[command(subcommand)]
        command: CycleCommand,
    },
    /// Seeded property sweeps
    PropSuite {
        /// Multiplies every instance count
        #[arg(long, default_value_t = 1.0, value_parser = positive)]
        scale: f64,
        /// Run only these suites
        #[arg(long = "suite", value_parser = suite_name)]
        suites: Vec<Suite>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CycleCommand {
    /// Extremal box of the b-cycle: contextual for --gamma, deterministic for --zeta
    Gen {
        #[arg(long)]
        b: usize,
        #[arg(long, conflicts_with = "zeta", required_unless_present = "zeta")]
        gamma: Option<String>,
        #[arg(long)]
        zeta: Option<String>,
    },
    /// Reproduce random nondisturbing targets from a contextuality bit
    BitDemo {
        #[arg(long)]
        b: usize,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Source box; a random odd-weight label when absent
        #[arg(long)]
        gamma: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Kind {
    Auto,
    Scenario,
    Behavior,
    NcBox,
    Wiring,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be positive, got {v}"))
    }
}

fn suite_name(s: &str) -> Result<Suite, String> {
    Suite::from_name(s).ok_or_else(|| {
        let names: Vec<&str> = Suite::ALL.iter().map(|s| s.name()).collect();
        format!("unknown suite {s}; expected one of {}", names.join(", "))
    })
}

/// Failure modes mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Input or property check failed; the report is still printed.
    Validation(Value),
    Input(anyhow::Error),
}

impl From<InputError> for Failure {
    fn from(e: InputError) -> Self {
        match e {
            InputError::Load(e) => Failure::Input(e.into()),
            InputError::Invalid(e) => {
                Failure::Validation(json!({ "ok": false, "error": e.to_string() }))
            }
        }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        Failure::Input(e.into())
    }
}

type Outcome = Result<Value, Failure>;

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn fail_on(report: &ValidationReport, kind: &str) -> Result<(), Failure> {
    if report.ok {
        Ok(())
    } else {
        Err(Failure::Validation(
            json!({ "kind": kind, "validation": to_value(report) }),
        ))
    }
}

fn load_behavior(path: &Path, eps_norm: f64) -> Result<BlackBox, Failure> {
    let doc: BehaviorDoc = json::read(path)?;
    let b = Loader::new(path).behavior(&doc)?;
    let mut report = b.scenario().validate();
    report.merge(b.validate(eps_norm));
    fail_on(&report, "behavior")?;
    Ok(BlackBox::from(b))
}

fn parse_bits(s: &str, what: &str) -> Result<Bits, Failure> {
    s.parse()
        .map_err(|e| Failure::Input(anyhow::anyhow!("--{what} {s}: {e}")))
}

fn rc_options(g: &Global) -> RcOptions {
    RcOptions {
        tol: g.rc_tol,
        max_iter: g.max_iter,
        ..RcOptions::default()
    }
}

fn detect_kind(v: &Value) -> Kind {
    let has = |k: &str| v.get(k).is_some();
    if has("pre") {
        Kind::Wiring
    } else if has("strategies") {
        Kind::NcBox
    } else if has("table") {
        Kind::Behavior
    } else {
        Kind::Scenario
    }
}

fn validate(path: &Path, kind: Kind, g: &Global) -> Outcome {
    let text = json::read_text(path)?;
    let kind = match kind {
        Kind::Auto => detect_kind(&json::parse::<Value>(path, &text)?),
        k => k,
    };
    let loader = Loader::new(path);
    let (name, report) = match kind {
        Kind::Scenario | Kind::Auto => {
            let doc: ScenarioDoc = json::parse(path, &text)?;
            ("scenario", loader.scenario_doc(&doc, "")?.validate())
        }
        Kind::Behavior => {
            let doc: BehaviorDoc = json::parse(path, &text)?;
            let b = loader.behavior(&doc)?;
            let mut r = b.scenario().validate();
            r.merge(b.validate(g.eps_norm));
            ("behavior", r)
        }
        Kind::NcBox => {
            let doc: NcBoxDoc = json::parse(path, &text)?;
            let b = loader.nc_box(&doc, "")?;
            let mut r = b.scenario().validate();
            r.merge(b.validate(g.eps_norm));
            ("nc-box", r)
        }
        Kind::Wiring => {
            let doc: WiringDoc = json::parse(path, &text)?;
            ("wiring", loader.wiring(&doc)?.validate())
        }
    };
    let out = json!({ "kind": name, "ok": report.ok, "violations": to_value(&report.violations) });
    if report.ok {
        Ok(out)
    } else {
        Err(Failure::Validation(out))
    }
}

fn check_nd(path: &Path, g: &Global) -> Outcome {
    let bx = load_behavior(path, g.eps_norm)?;
    let nd = bx
        .behavior()
        .is_nondisturbing(ctxkit_core::behavior::DEFAULT_EPS_ND);
    Ok(to_value(&nd))
}

fn check_nc(path: &Path, g: &Global) -> Outcome {
    let bx = load_behavior(path, g.eps_norm)?;
    let tester = NcTester::new(bx.scenario().clone()).map_err(|e| Failure::Input(e.into()))?;
    let v = tester
        .test(bx.behavior(), g.eps_lp)
        .map_err(|e| Failure::Input(e.into()))?;
    Ok(to_value(&schema::verdict_doc(
        &v,
        tester.strategies(),
        bx.scenario(),
    )))
}

fn wire(wiring: &Path, behavior: &Path, g: &Global) -> Outcome {
    let doc: WiringDoc = json::read(wiring)?;
    let w = Loader::new(wiring).wiring(&doc)?;
    fail_on(&w.validate(), "wiring")?;
    let bx = load_behavior(behavior, g.eps_norm)?;
    // Rebind the box to the wiring's target so file-level scenario copies match.
    let bx = if **bx.scenario() == **w.target() {
        let b =
            ctxkit_core::Behavior::from_dense(w.target().clone(), bx.behavior().rows().to_vec())
                .map_err(|e| Failure::Input(e.into()))?;
        BlackBox::from(b)
    } else {
        return Err(Failure::Validation(json!({
            "ok": false,
            "error": "the behavior's scenario is not the wiring's target scenario"
        })));
    };
    let out = apply_wiring(&w, &bx)
        .map_err(|e| Failure::Validation(json!({ "ok": false, "error": e.to_string() })))?;
    Ok(to_value(&schema::box_doc(&out)))
}

fn rc(path: &Path, argmin: Option<&Path>, g: &Global) -> Outcome {
    let bx = load_behavior(path, g.eps_norm)?;
    let r = relative_entropy_of_contextuality(&bx, &rc_options(g))
        .map_err(|e| Failure::Input(e.into()))?;
    if let Some(p) = argmin {
        json::write(p, &schema::nc_box_doc(&r.argmin)).map_err(|e| Failure::Input(e.into()))?;
    }
    Ok(json!({
        "value_bits": r.value,
        "converged": r.converged,
        "iterations": r.iterations,
        "worst_context": r.worst_context,
        "gap_bits": r.gap_estimate,
    }))
}

fn cycle_gen(b: usize, gamma: Option<&str>, zeta: Option<&str>) -> Outcome {
    let bx = match (gamma, zeta) {
        (Some(g), _) => extremal_contextual(b, &parse_bits(g, "gamma")?),
        (None, Some(z)) => extremal_noncontextual(b, &parse_bits(z, "zeta")?),
        (None, None) => unreachable!("clap requires one of --gamma and --zeta"),
    }
    .map_err(|e| Failure::Input(e.into()))?;
    Ok(to_value(&schema::box_doc(&bx)))
}

fn bit_demo(b: usize, count: usize, gamma: Option<&str>, g: &Global) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let fixed = gamma.map(|s| parse_bits(s, "gamma")).transpose()?;
    let gs = gammas(b);
    if gs.is_empty() {
        return Err(Failure::Input(anyhow::anyhow!("no cycle with b = {b}")));
    }
    let mut rows = Vec::with_capacity(count);
    let mut worst = 0.0f64;
    for n in 0..count {
        let target = random_nd_cycle_box(b, &mut rng).map_err(|e| Failure::Input(e.into()))?;
        let from = fixed
            .clone()
            .unwrap_or_else(|| gs[rng.gen_range(0..gs.len())].clone());
        let d =
            contextuality_bit_decompose(&target, &from).map_err(|e| Failure::Input(e.into()))?;
        worst = worst.max(d.residual);
        rows.push(json!({
            "instance": n,
            "gamma_from": from.to_string(),
            "contextual_weight": d.contextual.iter().map(|(_, w)| w).sum::<f64>(),
            "residual": d.residual,
        }));
    }
    let ok = worst <= crate::suite::DECOMPOSE_TOLERANCE;
    let out =
        json!({ "b": b, "seed": g.seed, "ok": ok, "worst_residual": worst, "instances": rows });
    if ok {
        Ok(out)
    } else {
        Err(Failure::Validation(out))
    }
}

fn prop_suite(scale: f64, suites: &[Suite], g: &Global) -> Outcome {
    let cfg = SuiteConfig {
        seed: g.seed,
        scale,
        eps_norm: g.eps_norm,
        eps_lp: g.eps_lp,
        rc: rc_options(g),
        ..SuiteConfig::default()
    };
    let chosen = if suites.is_empty() {
        &Suite::ALL[..]
    } else {
        suites
    };
    let report = run_suites(chosen, &cfg);
    let v = to_value(&report);
    if report.pass {
        Ok(v)
    } else {
        Err(Failure::Validation(v))
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { file, kind } => validate(file, *kind, g),
        Command::CheckNd { behavior } => check_nd(behavior, g),
        Command::CheckNc { behavior } => check_nc(behavior, g),
        Command::Wire { wiring, behavior } => wire(wiring, behavior, g),
        Command::Rc { behavior, argmin } => rc(behavior, argmin.as_deref(), g),
        Command::Cycle { command } => match command {
            CycleCommand::Gen { b, gamma, zeta } => {
                cycle_gen(*b, gamma.as_deref(), zeta.as_deref())
            }
            CycleCommand::BitDemo { b, count, gamma } => bit_demo(*b, *count, gamma.as_deref(), g),
        },
        Command::PropSuite { scale, suites } => prop_suite(*scale, suites, g),
    }
}

fn emit(value: &Value, out: Option<&Path>) -> Result<(), std::io::Error> {
    match out {
        Some(p) => json::write(p, value),
        None => {
            print!("{}", json::to_string(value));
            Ok(())
        }
    }
}

/// Caps the global rayon pool from `CTXKIT_THREADS` (0 or unset: automatic).
pub fn init_threads() {
    let n = std::env::var("CTXKIT_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .unwrap_or(0);
    if n > 0 {
        // the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
}

pub fn run(cli: Cli) -> ExitCode {
    init_threads();
    let out = cli.global.out.clone();
    let (value, code) = match dispatch(&cli) {
        Ok(v) => (Some(v), 0),
        Err(Failure::Validation(v)) => (Some(v), 1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            (None, 2)
        }
    };
    if let Some(v) = value {
        if let Err(e) = emit(&v, out.as_deref()) {
            eprintln!("error: writing report: {e}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(code)
}

pub fn main() -> ExitCode {
    run(Cli::parse())
}
