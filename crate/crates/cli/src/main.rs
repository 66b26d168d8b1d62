mod config;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use config::ExperimentConfig;
use table::{Cell, OutputFormat, ResultTable};

#[derive(Parser)]
#[command(name = "ospc", version, about = "Delay-energy tradeoff experiments for threshold-based superposition-coding scheduling", long_about = None)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Overrides the seed from the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Full-size ensembles (1000 systems) instead of desk scale.
    #[arg(long, global = true, default_value_t = false)]
    paper_scale: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Delay-energy tradeoff rows over a delay grid.
    Tradeoff,
    /// Threshold-policy curves against the proportional-fair baseline.
    ComparePfs,
    /// Finite-user ensemble extremes against the mean-field value.
    Convergence,
    /// One simulated system with full per-user metrics.
    Simulate,
    /// Runs the self-check suite; nonzero exit on any failure.
    Validate {
        /// Restrict to specific criteria ids (1..=14).
        #[arg(long, value_delimiter = ',')]
        criteria: Vec<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let format = match cli.format {
        FormatArg::Csv => OutputFormat::Csv,
        FormatArg::Json => OutputFormat::Json,
    };

    let started = std::time::Instant::now();
    let (mut table, all_passed) = match &cli.command {
        Command::Validate { criteria } => {
            let results = if criteria.is_empty() {
                ospc_core::validation::run_all(cli.paper_scale)
            } else {
                for &id in criteria {
                    if !(1..=14).contains(&id) {
                        bail!("unknown criterion id {id} (valid: 1..=14)");
                    }
                }
                criteria
                    .iter()
                    .map(|&id| ospc_core::validation::run_criterion(id, cli.paper_scale))
                    .collect()
            };
            let all = results.iter().all(|r| r.passed);
            let mut t = ResultTable::new(
                "validate",
                vec!["criterion", "name", "status", "seconds", "detail"],
                serde_json::json!({ "criteria": criteria }),
                cli.seed.unwrap_or(0),
                cli.paper_scale,
            );
            for r in results {
                t.push(vec![
                    Cell::Int(r.id as u64),
                    Cell::Text(r.name.to_string()),
                    Cell::Text(if r.passed { "pass" } else { "FAIL" }.to_string()),
                    Cell::Float(r.seconds),
                    Cell::Text(r.detail),
                ]);
            }
            (t, all)
        }
        command => {
            let path = cli
                .config
                .as_ref()
                .context("this subcommand needs --config <file>")?;
            let raw = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let mut experiment = ExperimentConfig::parse(&raw)?;
            if let Some(seed) = cli.seed {
                experiment.seed = seed;
            }
            let table = match command {
                Command::Tradeoff => experiment.run_tradeoff()?,
                Command::ComparePfs => experiment.run_compare_pfs()?,
                Command::Convergence => experiment.run_convergence(cli.paper_scale)?,
                Command::Simulate => experiment.run_simulate()?,
                Command::Validate { .. } => unreachable!(),
            };
            (table, true)
        }
    };
    table.metadata.wall_clock_seconds = started.elapsed().as_secs_f64();

    let rendered = table.render(format);
    match &cli.out {
        Some(path) => std::fs::write(path, rendered)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{rendered}"),
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
