//! `matmoment` command-line front end.
//!
//! Exit codes: 0 converged (or feasible), 2 divergence (or not strictly
//! feasible), 3 input error.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use matmoment::io::{read_density_csv, write_density_csv, write_trace_csv, ProblemFile, ReportJson};
use matmoment::problems::examples::{example, EXAMPLE_NAMES};
use matmoment::{solve, solve_tau, Family64, Matrix64, Operator64, Report64, SolveConfig, SolveStatus};

const EXIT_DIVERGED: u8 = 2;
const EXIT_INPUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "matmoment",
    version,
    about = "Entropy-extremal solutions of matricial moment problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a moment problem and write report, density and trace.
    Solve(RunArgs),
    /// Decide strict feasibility by whether the continuation converges.
    Feasibility(RunArgs),
    /// Write a built-in example problem bundle.
    Example {
        name: String,
        /// Output directory (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum FamilyArg {
    Rational,
    Exponential,
    WeightedRational,
    WeightedExponential,
    PriorExponential,
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Problem file (JSON).
    #[arg(long, conflicts_with = "example")]
    problem: Option<PathBuf>,
    /// Built-in example name.
    #[arg(long)]
    example: Option<String>,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Weight density (CSV on the problem's grid) for weighted families.
    #[arg(long)]
    sigma: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    /// Allow rational families on two-dimensional grids.
    #[arg(long)]
    torus_override: bool,
    /// Integrate the τ form instead of the feedback form.
    #[arg(long)]
    tau: bool,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    density_out: Option<PathBuf>,
    #[arg(long)]
    trace_out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Config-file mirror of [`RunArgs`].
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
struct ConfigFile {
    problem: Option<PathBuf>,
    example: Option<String>,
    family: Option<FamilyArg>,
    sigma: Option<PathBuf>,
    tol: Option<f64>,
    t_max: Option<f64>,
    #[serde(default)]
    torus_override: bool,
    #[serde(default)]
    tau: bool,
    report: Option<PathBuf>,
    density_out: Option<PathBuf>,
    trace_out: Option<PathBuf>,
    seed: Option<u64>,
}

type CliResult<T> = Result<T, String>;

fn merged(args: &RunArgs) -> CliResult<RunArgs> {
    let Some(path) = &args.config else { return Ok(args.clone()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let file: ConfigFile = serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    // Relative paths in the config file are relative to the file itself.
    let base = path.parent().unwrap_or(Path::new("."));
    let rel = |p: Option<PathBuf>| p.map(|p| if p.is_absolute() { p } else { base.join(p) });
    let from_file_problem = args.problem.is_none() && args.example.is_none();
    Ok(RunArgs {
        problem: args
            .problem
            .clone()
            .or(if from_file_problem { rel(file.problem) } else { None }),
        example: args.example.clone().or(if from_file_problem { file.example } else { None }),
        family: args.family.or(file.family),
        sigma: args.sigma.clone().or(rel(file.sigma)),
        tol: args.tol.or(file.tol),
        t_max: args.t_max.or(file.t_max),
        torus_override: args.torus_override || file.torus_override,
        tau: args.tau || file.tau,
        report: args.report.clone().or(rel(file.report)),
        density_out: args.density_out.clone().or(rel(file.density_out)),
        trace_out: args.trace_out.clone().or(rel(file.trace_out)),
        seed: args.seed.or(file.seed),
        config: None,
    })
}

struct Loaded {
    op: Operator64,
    r: Matrix64,
    default_family: Option<FamilyArg>,
}

fn load(args: &RunArgs) -> CliResult<Loaded> {
    let seed = args.seed.unwrap_or(0);
    let (problem, default_family) = match (&args.problem, &args.example) {
        (Some(path), None) => (ProblemFile::load(path).map_err(|e| format!("{}: {e}", path.display()))?, None),
        (None, Some(name)) => {
            let ex = example(name, seed).map_err(|e| e.to_string())?;
            let fam = FamilyArg::from_str(ex.family, true).ok();
            (ex.problem, fam)
        }
        (None, None) => return Err("one of --problem or --example is required".into()),
        (Some(_), Some(_)) => return Err("--problem and --example are mutually exclusive".into()),
    };
    let op = problem.operator::<f64>().map_err(|e| e.to_string())?;
    let r = problem.moment_matrix::<f64>().map_err(|e| e.to_string())?;
    Ok(Loaded { op, r, default_family })
}

fn build_family(kind: FamilyArg, sigma: Option<&Path>, op: &Operator64) -> CliResult<Family64> {
    let weight = || -> CliResult<_> {
        let path = sigma.ok_or("weighted families need --sigma")?;
        let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        read_density_csv(file, op.grid()).map_err(|e| format!("{}: {e}", path.display()))
    };
    let fam = match kind {
        FamilyArg::Rational => Ok(Family64::Rational),
        FamilyArg::Exponential => Ok(Family64::Exponential),
        FamilyArg::WeightedRational => Family64::weighted_rational(&weight()?),
        FamilyArg::WeightedExponential => Family64::weighted_exponential(&weight()?),
        FamilyArg::PriorExponential => Family64::prior_exponential(&weight()?),
    };
    fam.map_err(|e| e.to_string())
}

fn config(args: &RunArgs) -> SolveConfig<f64> {
    let mut cfg = SolveConfig::default();
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(t) = args.t_max {
        cfg.t_max = t;
    }
    cfg.torus_override = args.torus_override;
    cfg
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("{}: {e}", path.display()))
}

fn write_outputs(args: &RunArgs, op: &Operator64, report: &Report64) -> CliResult<()> {
    if let Some(path) = &args.report {
        let json = serde_json::to_string_pretty(&ReportJson::from_report(report, op.grid())).map_err(|e| e.to_string())?;
        std::fs::write(path, json + "\n").map_err(|e| format!("{}: {e}", path.display()))?;
    }
    if let Some(path) = &args.density_out {
        match &report.density {
            Some(rho) => write_density_csv(create(path)?, op.grid(), rho).map_err(|e| e.to_string())?,
            None => eprintln!("no density written: solve did not converge"),
        }
    }
    if let Some(path) = &args.trace_out {
        write_trace_csv(create(path)?, &report.trace).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run_solve(args: &RunArgs, fallback: FamilyArg, prefer_example_family: bool) -> CliResult<(Report64, FamilyArg)> {
    let loaded = load(args)?;
    let kind = args
        .family
        .or(if prefer_example_family { loaded.default_family } else { None })
        .unwrap_or(fallback);
    let family = build_family(kind, args.sigma.as_deref(), &loaded.op)?;
    let cfg = config(args);
    let report = if args.tau {
        solve_tau(&loaded.op, &loaded.r, &family, &cfg)
    } else {
        solve(&loaded.op, &loaded.r, &family, &cfg)
    }
    .map_err(|e| e.to_string())?;
    write_outputs(args, &loaded.op, &report)?;
    Ok((report, kind))
}

fn exit_for(status: SolveStatus) -> ExitCode {
    match status {
        SolveStatus::Converged => ExitCode::SUCCESS,
        SolveStatus::NotInRange => ExitCode::from(EXIT_INPUT),
        _ => ExitCode::from(EXIT_DIVERGED),
    }
}

fn cmd_solve(args: &RunArgs) -> CliResult<ExitCode> {
    let (report, _) = run_solve(args, FamilyArg::Rational, true)?;
    println!(
        "status: {}  family: {}  V_final: {:e}  iterations: {}",
        report.status, report.family, report.v_final, report.iterations
    );
    if report.status == SolveStatus::NotInRange {
        eprintln!(
            "moment is not in the range of the operator (relative residual {:e})",
            report.range_residual
        );
    }
    Ok(exit_for(report.status))
}

fn cmd_feasibility(args: &RunArgs) -> CliResult<ExitCode> {
    let (report, kind) = run_solve(args, FamilyArg::Exponential, false)?;
    let family = kind.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    match report.status {
        SolveStatus::Converged => println!("feasible (family {family})"),
        SolveStatus::NotInRange => eprintln!("moment is not in the range of the operator"),
        _ => println!("not-strictly-feasible (family {family}, status {})", report.status),
    }
    Ok(exit_for(report.status))
}

fn cmd_example(name: &str, out: &Path, seed: u64) -> CliResult<ExitCode> {
    let mut ex =
        example(name, seed).map_err(|_| format!("unknown example {name:?}; valid names: {}", EXAMPLE_NAMES.join(", ")))?;
    std::fs::create_dir_all(out).map_err(|e| format!("{}: {e}", out.display()))?;
    if let Some(rho) = &ex.rho_true {
        let grid = ex.problem.grid.build::<f64>().map_err(|e| e.to_string())?;
        write_density_csv(create(&out.join("rho_true.csv"))?, &grid, rho).map_err(|e| e.to_string())?;
        ex.problem.rho_true = Some("rho_true.csv".into());
    }
    let json = ex.problem.to_json().map_err(|e| e.to_string())?;
    std::fs::write(out.join("problem.json"), json + "\n").map_err(|e| e.to_string())?;
    let config = serde_json::json!({
        "problem": "problem.json",
        "family": ex.family,
        "seed": seed,
        "report": "report.json",
        "density_out": "density.csv",
        "trace_out": "trace.csv",
    });
    std::fs::write(
        out.join("config.json"),
        serde_json::to_string_pretty(&config).map_err(|e| e.to_string())? + "\n",
    )
    .map_err(|e| e.to_string())?;
    println!("wrote {} example to {}", ex.name, out.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(args) => merged(args).and_then(|a| cmd_solve(&a)),
        Command::Feasibility(args) => merged(args).and_then(|a| cmd_feasibility(&a)),
        Command::Example { name, out, seed } => cmd_example(name, out, seed.unwrap_or(0)),
    };
    result.unwrap_or_else(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(EXIT_INPUT)
    })
}
