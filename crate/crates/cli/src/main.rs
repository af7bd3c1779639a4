//! `pathtrack`: solve polynomial systems by homotopy continuation and compare
//! step-size controllers and predictors.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use pathtrack::algebra::{generate_benchmark, parse_system, Family};
use pathtrack::corrector::Criterion;
use pathtrack::predictor::PredictorMethod;
use pathtrack::projective::PatchKind;
use pathtrack::stepcontrol::ControllerKind;
use pathtrack::tracker::{benchmark, predictor_study, solve, PathStatus};
use pathtrack::{ControllerParams, CorrectorOptions, SolveOptions, System, TrackerOptions};

#[derive(Parser)]
#[command(name = "pathtrack", version, about = "Polynomial homotopy continuation with adaptive step-size control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a system and write a JSON report.
    Solve(SolveArgs),
    /// Compare the simple (old) and adaptive (new) step-size controllers.
    Benchmark(BenchArgs),
    /// Compare predictors by runtime and step counts.
    Predictors(PredictorArgs),
}

#[derive(Args)]
struct SystemArgs {
    /// System file (`vars:` header followed by one polynomial per line).
    #[arg(short = 'i', long, conflicts_with_all = ["family", "n"])]
    input: Option<PathBuf>,
    /// Generated benchmark family.
    #[arg(long, requires = "n")]
    family: Option<FamilyArg>,
    /// Size parameter of the generated family.
    #[arg(long, requires = "family")]
    n: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Cyclic,
    Katsura,
}

#[derive(Args)]
struct TrackArgs {
    #[arg(long, default_value_t = 1e-7)]
    tau: f64,
    /// Total corrector iterations, including the simplified step (N + 1).
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(2..))]
    max_corrector_iters: u32,
    #[arg(long, value_enum, default_value_t = CriterionArg::SimplifiedAPriori)]
    criterion: CriterionArg,
    #[arg(long, value_enum, default_value_t = PatchArg::Orthogonal)]
    patch: PatchArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0: all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Run the adaptive controller without its rejection safeguards.
    #[arg(long)]
    literal_controller: bool,
    /// Output file; `.json` selects JSON for tables.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CriterionArg {
    APosteriori,
    APriori,
    SimplifiedAPriori,
}

#[derive(Clone, Copy, ValueEnum)]
enum PatchArg {
    Fixed,
    Orthogonal,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    track: TrackArgs,
    #[arg(long, default_value = "heun", value_parser = parse_predictor)]
    predictor: PredictorMethod,
    #[arg(long, default_value = "adaptive", value_parser = parse_controller)]
    controller: ControllerKind,
    #[arg(long, default_value_t = 0.0)]
    t_end: f64,
    /// Exit 0 even when some paths fail.
    #[arg(long)]
    allow_failures: bool,
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Which {
    Old,
    New,
    Both,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    track: TrackArgs,
    #[arg(long, default_value = "heun", value_parser = parse_predictor)]
    predictor: PredictorMethod,
    /// Rows to emit: old (simple), new (adaptive) or both.
    #[arg(long, value_enum, default_value_t = Which::Both)]
    controller: Which,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
}

#[derive(Args)]
struct PredictorArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[command(flatten)]
    track: TrackArgs,
    /// Comma-separated predictors.
    #[arg(long, value_delimiter = ',', default_value = "euler,heun,rk4,pade21", value_parser = parse_predictor)]
    predictor: Vec<PredictorMethod>,
    #[arg(long, default_value = "adaptive", value_parser = parse_controller)]
    controller: ControllerKind,
    #[arg(long, default_value_t = 0.1)]
    t_end: f64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    runs: u32,
}

fn parse_predictor(s: &str) -> Result<PredictorMethod, String> {
    s.parse().map_err(|e: pathtrack::predictor::PredictorError| e.to_string())
}

fn parse_controller(s: &str) -> Result<ControllerKind, String> {
    s.parse()
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
enum Failure {
    Input(anyhow::Error),
    Numerical(String),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Numerical(_) => 3,
            Failure::Other(_) => 1,
        }
    }
}

fn load_system(args: &SystemArgs) -> Result<System, Failure> {
    match (&args.input, args.family, args.n) {
        (Some(path), _, _) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))
                .map_err(Failure::Input)?;
            parse_system(&text)
                .with_context(|| format!("{}", path.display()))
                .map_err(Failure::Input)
        }
        (None, Some(family), Some(n)) => {
            let family = match family {
                FamilyArg::Cyclic => Family::Cyclic,
                FamilyArg::Katsura => Family::Katsura,
            };
            generate_benchmark(family, n).context("cannot generate system").map_err(Failure::Input)
        }
        _ => Err(Failure::Input(anyhow::anyhow!("give a system with --input or --family and --n"))),
    }
}

fn tracker_options(
    track: &TrackArgs,
    predictor: PredictorMethod,
    controller: ControllerKind,
    t_end: f64,
) -> Result<TrackerOptions, Failure> {
    let criterion = match track.criterion {
        CriterionArg::APosteriori => Criterion::APosteriori,
        CriterionArg::APriori => Criterion::APriori,
        CriterionArg::SimplifiedAPriori => Criterion::SimplifiedAPriori,
    };
    let corrector = CorrectorOptions::new(track.tau, track.max_corrector_iters as usize - 1, criterion)
        .map_err(|e| Failure::Input(e.into()))?;
    let opts = TrackerOptions {
        predictor,
        controller,
        corrector,
        patch: match track.patch {
            PatchArg::Fixed => PatchKind::FixedRandom,
            PatchArg::Orthogonal => PatchKind::Orthogonal,
        },
        t_end,
        params: if track.literal_controller {
            ControllerParams::literal()
        } else {
            ControllerParams::default()
        },
        ..TrackerOptions::default()
    };
    opts.validate().map_err(|e| Failure::Input(e.into()))?;
    Ok(opts)
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Other),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| Failure::Other(e.into()))
        }
    }
}

fn wants_json(out: Option<&Path>) -> bool {
    out.and_then(|p| p.extension()).is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn to_csv<S: serde::Serialize>(rows: &[S]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(vec![]);
    for r in rows {
        w.serialize(r).map_err(|e| Failure::Other(e.into()))?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Other(anyhow::anyhow!(e.to_string())))?;
    String::from_utf8(bytes).map_err(|e| Failure::Other(e.into()))
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let system = load_system(&args.system)?;
    let tracker = tracker_options(&args.track, args.predictor, args.controller, args.t_end)?;
    let opts = SolveOptions {
        tracker,
        seed: args.track.seed,
        threads: args.track.threads,
        ..SolveOptions::default()
    };
    let report = solve(&system, &opts).map_err(|e| Failure::Input(e.into()))?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Other(e.into()))?;
    write_output(args.track.out.as_deref(), &(json + "\n"))?;

    let a = &report.aggregates;
    eprintln!(
        "{} paths: {} succeeded, {} step_size_too_small, {} singular_jacobian, {} diverged; {} distinct finite solutions, {} endpoints at infinity; mean steps {:.2} ({:.2} accepted, {:.2} rejected); {:.2}s",
        a.paths,
        a.successes,
        a.step_size_too_small,
        a.singular_jacobian,
        a.diverged,
        a.distinct_solutions,
        a.infinite_endpoints,
        a.mean_total,
        a.mean_accepted,
        a.mean_rejected,
        report.wall_seconds
    );
    let failed = report.paths.iter().filter(|p| p.status != PathStatus::Success).count();
    if a.successes == 0 {
        return Err(Failure::Numerical("every path failed".into()));
    }
    if failed > 0 && !args.allow_failures {
        return Err(Failure::Numerical(format!("{failed} paths failed (use --allow-failures to accept)")));
    }
    Ok(())
}

fn cmd_benchmark(args: BenchArgs) -> Result<(), Failure> {
    let system = load_system(&args.system)?;
    let old = tracker_options(&args.track, args.predictor, ControllerKind::Simple, args.t_end)?;
    let new = tracker_options(&args.track, args.predictor, ControllerKind::Adaptive, args.t_end)?;
    let mut table = benchmark(&system, &old, &new, args.runs as usize, args.track.seed, args.track.threads)
        .map_err(|e| Failure::Input(e.into()))?;
    table.rows.retain(|r| match args.controller {
        Which::Old => r.controller == "old",
        Which::New => r.controller == "new",
        Which::Both => true,
    });
    let body = if wants_json(args.track.out.as_deref()) {
        serde_json::to_string_pretty(&table).map_err(|e| Failure::Other(e.into()))? + "\n"
    } else {
        to_csv(&table.rows)?
    };
    write_output(args.track.out.as_deref(), &body)
}

fn cmd_predictors(args: PredictorArgs) -> Result<(), Failure> {
    let system = load_system(&args.system)?;
    if args.predictor.is_empty() {
        return Err(Failure::Input(anyhow::anyhow!("no predictors given")));
    }
    let base = tracker_options(&args.track, PredictorMethod::Euler, args.controller, args.t_end)?;
    let rows = predictor_study(&system, &base, &args.predictor, args.runs as usize, args.track.seed, args.track.threads)
        .map_err(|e| Failure::Input(e.into()))?;
    let body = if wants_json(args.track.out.as_deref()) {
        serde_json::to_string_pretty(&rows).map_err(|e| Failure::Other(e.into()))? + "\n"
    } else {
        to_csv(&rows)?
    };
    write_output(args.track.out.as_deref(), &body)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Benchmark(a) => cmd_benchmark(a),
        Command::Predictors(a) => cmd_predictors(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(e) | Failure::Other(e) => eprintln!("error: {e:#}"),
                Failure::Numerical(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
