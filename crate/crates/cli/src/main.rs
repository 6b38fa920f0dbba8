mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use workbench_core::analysis::{lemma_suite, report_suite, sharpness_sweep, Group, Status};

use config::RunConfig;

#[derive(Parser)]
#[command(
    name = "workbench",
    version,
    about = "Finite dyadic checks for multilinear sparse bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the randomized check suite and write check_summary.json.
    Check {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<usize>,
        /// Run only these groups (repeatable, or comma separated).
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Run the ε sweep and write sweep.csv and sweep_summary.json.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Write report.csv and report_summary.json.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seeds: Option<usize>,
    },
}

#[derive(Args)]
struct Common {
    /// JSON run configuration; built-in defaults when absent.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Existing output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if !self.out.is_dir() {
            bail!("output directory {} does not exist", self.out.display());
        }
        Ok(cfg)
    }
}

fn init_threads() -> Result<()> {
    let threads = match std::env::var("WORKBENCH_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .with_context(|| format!("WORKBENCH_THREADS={s:?} is not a thread count"))?,
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => bail!("WORKBENCH_THREADS: {e}"),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .context("building the thread pool")
}

fn check(common: &Common, seeds: Option<usize>, only: &[String]) -> Result<bool> {
    let mut cfg = common.load()?;
    if let Some(k) = seeds {
        cfg.suite.seeds = k;
    }
    if !only.is_empty() {
        cfg.suite.groups = only
            .iter()
            .map(|s| s.parse::<Group>())
            .collect::<std::result::Result<_, _>>()?;
    }
    cfg.validate()?;
    let start = Instant::now();
    let result = lemma_suite(&cfg.suite())?;
    for c in &result.checks {
        println!("{}", output::check_line(c));
    }
    for (g, t) in &result.timings {
        eprintln!("time {g} {:.3}s", t.as_secs_f64());
    }
    eprintln!("time total {:.3}s", start.elapsed().as_secs_f64());
    output::write_json(&common.out.join("check_summary.json"), &result.checks)?;
    Ok(result.passed())
}

fn sweep(common: &Common) -> Result<bool> {
    let cfg = common.load()?;
    cfg.validate()?;
    let start = Instant::now();
    let result = sharpness_sweep(&cfg.sweep())?;
    let records: Vec<_> = result
        .slopes
        .iter()
        .map(|s| output::slope_record(s, cfg.sweep.tolerance))
        .collect();
    for r in &records {
        println!("{}", output::slope_line(r));
    }
    eprintln!("time total {:.3}s", start.elapsed().as_secs_f64());
    output::write_text(&common.out.join("sweep.csv"), &output::sweep_csv(&result))?;
    output::write_json(&common.out.join("sweep_summary.json"), &records)?;
    for r in records.iter().filter(|r| r.status == Status::Fail) {
        eprintln!("failing slope: {} = {} against {}", r.check_name, r.value, r.target);
    }
    Ok(result.passed())
}

fn report(common: &Common, seeds: Option<usize>) -> Result<bool> {
    let mut cfg = common.load()?;
    if let Some(k) = seeds {
        cfg.suite.seeds = k;
    }
    cfg.validate()?;
    let start = Instant::now();
    let result = report_suite(&cfg.suite())?;
    for c in &result.checks {
        println!("{}", output::check_line(c));
    }
    eprintln!("time total {:.3}s", start.elapsed().as_secs_f64());
    output::write_text(&common.out.join("report.csv"), &output::report_csv(&result.instances))?;
    output::write_json(&common.out.join("report_summary.json"), &result.checks)?;
    Ok(result.passed())
}

fn run(cli: Cli) -> Result<bool> {
    init_threads()?;
    match &cli.command {
        Command::Check { common, seeds, only } => check(common, *seeds, only),
        Command::Sweep { common } => sweep(common),
        Command::Report { common, seeds } => report(common, *seeds),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
