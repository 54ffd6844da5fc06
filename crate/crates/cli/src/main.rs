use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use odecert::bound::BoundMode;
use odecert::model::CATALOG;
use odecert::report::{run_scenario, OutputFormat, ProblemSource, ScenarioConfig, ScenarioError};
use odecert::IntegratorConfig;

/// Certified forward-error bounds for numerical solutions of x' = A(t)x + q(t).
#[derive(Parser, Debug)]
#[command(name = "odecert", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// List the built-in problems.
    List,
    /// Run a built-in problem end to end.
    Demo {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Solve a problem (catalog name or problem file) with DP45 and bound the result.
    Solve {
        problem: String,
        #[arg(long, default_value_t = 1e-6)]
        rtol: f64,
        #[arg(long, default_value_t = 1e-6)]
        atol: f64,
        /// Also write the solver trajectory as a CSV table.
        #[arg(long)]
        trajectory_out: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Bound the error of an externally computed trajectory.
    Certify {
        problem: String,
        #[arg(long)]
        trajectory: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// Curve file (t, xtilde, delta, bound, ...).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "csv", value_parser = parse_format)]
    format: OutputFormat,
    #[arg(long, default_value_t = 32)]
    samples_per_step: usize,
    #[arg(long, default_value_t = 1024)]
    hmax_grid: usize,
    #[arg(long, default_value = "stepwise", value_parser = parse_mode)]
    mode: BoundMode,
    #[arg(long, default_value_t = 512)]
    report_grid: usize,
    /// Write the certificate JSON here instead of standard output.
    #[arg(long)]
    certificate: Option<PathBuf>,
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse()
}

fn parse_mode(s: &str) -> Result<BoundMode, String> {
    s.parse()
}

fn problem_source(problem: &str, trajectory: Option<PathBuf>) -> ProblemSource {
    let is_file = Path::new(problem).is_file();
    match (is_file, trajectory) {
        (true, None) => ProblemSource::File(problem.into()),
        (true, Some(t)) => ProblemSource::FileWithTrajectory { problem: problem.into(), trajectory: t },
        (false, None) => ProblemSource::Catalog(problem.into()),
        (false, Some(t)) => ProblemSource::CatalogWithTrajectory { name: problem.into(), trajectory: t },
    }
}

fn apply(cfg: &mut ScenarioConfig<f64>, c: &Common) {
    cfg.samples_per_step = c.samples_per_step;
    cfg.hmax_grid_points = c.hmax_grid;
    cfg.mode = c.mode;
    cfg.report_grid = c.report_grid;
    cfg.format = c.format;
    cfg.output = c.out.clone();
}

fn run(cli: Cli) -> Result<(), ScenarioError> {
    let (cfg, common) = match cli.command {
        Command::List => {
            for (name, desc) in CATALOG {
                println!("{name:<16}{desc}");
            }
            return Ok(());
        }
        Command::Demo { name, common } => {
            let mut cfg = ScenarioConfig::demo(&name)?;
            apply(&mut cfg, &common);
            if cfg.output.is_none() {
                let ext = if common.format == OutputFormat::Json { "json" } else { "csv" };
                cfg.output = Some(PathBuf::from(format!("{name}_curves.{ext}")));
            }
            (cfg, common)
        }
        Command::Solve { problem, rtol, atol, trajectory_out, common } => {
            let mut cfg = ScenarioConfig::new(problem_source(&problem, None));
            cfg.integrator = IntegratorConfig { rtol, atol, ..IntegratorConfig::with_tolerance(rtol) };
            cfg.trajectory_out = trajectory_out;
            apply(&mut cfg, &common);
            (cfg, common)
        }
        Command::Certify { problem, trajectory, common } => {
            let mut cfg = ScenarioConfig::new(problem_source(&problem, Some(trajectory)));
            apply(&mut cfg, &common);
            (cfg, common)
        }
    };
    let out = run_scenario(&cfg)?;
    let json = out.certificate.to_json();
    match &common.certificate {
        Some(path) => std::fs::write(path, json + "\n")
            .map_err(|source| ScenarioError::Io { path: path.clone(), source })?,
        None => {
            // a closed pipe downstream is not an error
            let _ = writeln!(std::io::stdout(), "{json}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // exit code 2 is reserved for inapplicable problems
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.name());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
