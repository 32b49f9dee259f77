use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use curltrace_core::config::{ConfigError, RunConfig};
use curltrace_core::fields::{builtin_scenario, GoldenScenario, BUILTIN_SCENARIOS};
use curltrace_core::trace::TraceFlag;
use curltrace_core::verify::{default_points, run_invariant_suite, tangential_sweep, trace_csv};

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

const TRACE_TABLE: &str = "trace_table.csv";
const REPORT: &str = "report.json";

#[derive(Parser)]
#[command(name = "curltrace", version, about = "Tangential trace estimation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in scenarios.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Estimate interior and exterior traces at boundary points.
    Trace {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the invariant suite and write a report.
    Check {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the report JSON instead of one line per check.
        #[arg(long)]
        json: bool,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List { json } => {
            cmd_list(json);
            Ok(ExitCode::SUCCESS)
        }
        Command::Trace { config, out } => cmd_trace(&config, out.as_deref()),
        Command::Check { config, out, json } => cmd_check(&config, out.as_deref(), json),
    };
    match outcome {
        Ok(code) => code,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical error: {msg}");
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn cmd_list(json: bool) {
    let scenarios: Vec<GoldenScenario> = BUILTIN_SCENARIOS
        .iter()
        .filter_map(|name| builtin_scenario(name))
        .collect();
    if json {
        let entries: Vec<_> = scenarios
            .iter()
            .map(|s| serde_json::json!({"name": s.name, "anchor": s.anchor}))
            .collect();
        println!("{}", serde_json::to_string(&entries).expect("plain strings serialize"));
    } else {
        for s in &scenarios {
            println!("{:<14} {}", s.name, s.anchor);
        }
    }
}

fn load(config: &Path, out: Option<&Path>) -> Result<(RunConfig, PathBuf), Failure> {
    let text = fs::read_to_string(config)
        .map_err(|e| Failure::Config(format!("cannot read {}: {e}", config.display())))?;
    let cfg = RunConfig::from_json(&text)?;
    let dir = match (out, &cfg.out) {
        (Some(dir), _) => dir.to_path_buf(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => return Err(Failure::Config("no output directory: pass --out or set \"out\"".into())),
    };
    fs::create_dir_all(&dir).map_err(|e| Failure::Config(format!("cannot create {}: {e}", dir.display())))?;
    Ok((cfg, dir))
}

/// Write to a sibling temp file, then rename over the target.
fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let target = dir.join(name);
    fs::write(&tmp, contents)
        .and_then(|_| fs::rename(&tmp, &target))
        .map_err(|e| Failure::Numerical(format!("cannot write {}: {e}", target.display())))
}

fn cmd_trace(config: &Path, out: Option<&Path>) -> Result<ExitCode, Failure> {
    let (cfg, dir) = load(config, out)?;
    let scenario = cfg.scenario.build()?;
    let n = cfg.points.unwrap_or_else(|| default_points(&scenario));
    let sweep = tangential_sweep(&scenario, n, &cfg.trace).map_err(|e| Failure::Numerical(e.to_string()))?;
    write_atomic(&dir, TRACE_TABLE, &trace_csv(&sweep.rows))?;

    let failed = sweep
        .rows
        .iter()
        .filter(|r| r.flag != TraceFlag::Ok.as_str() && r.flag != TraceFlag::LimitUnstable.as_str())
        .count();
    let unstable = sweep
        .rows
        .iter()
        .filter(|r| r.flag == TraceFlag::LimitUnstable.as_str())
        .count();
    println!(
        "{}: {} points, max defect {:e}, mean defect {:e}, {unstable} unstable, {failed} failed",
        scenario.name,
        sweep.rows.len(),
        sweep.max_defect,
        sweep.mean_defect
    );
    Ok(if failed > 0 {
        ExitCode::from(EXIT_NUMERICAL)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_check(config: &Path, out: Option<&Path>, json: bool) -> Result<ExitCode, Failure> {
    let (cfg, dir) = load(config, out)?;
    let scenario = cfg.scenario.build()?;
    let mut report = run_invariant_suite(&scenario, &cfg.suite()).map_err(|e| Failure::Numerical(e.to_string()))?;
    report.trace_table_csv = Some(TRACE_TABLE.into());
    write_atomic(&dir, TRACE_TABLE, &report.trace_csv())?;
    write_atomic(&dir, REPORT, &report.to_json())?;

    if json {
        print!("{}", report.to_json());
    } else {
        for c in &report.checks {
            println!(
                "{} {:<34} residual={:e} tol={:e}",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.tol
            );
        }
        let failed = report.checks.iter().filter(|c| !c.pass).count();
        println!("{}: {} checks, {failed} failed", report.scenario, report.checks.len());
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_CHECK_FAILED)
    })
}
