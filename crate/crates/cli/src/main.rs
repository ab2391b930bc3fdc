use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hdsel::bench::{emit, read_report, render_markdown, run_benchmark, BenchConfig, EmitOptions, RunOptions};
use hdsel::simgen::{save_dataset, Design, DesignSpec};

#[derive(Parser)]
#[command(name = "bench", version, about = "Sparse regression selection benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the simulation study and write tables, report.json and plots.
    Run(RunArgs),
    /// Render an existing report.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Md)]
        format: Format,
    },
    /// Generate one replicate of a design and save its train and test halves.
    Simulate {
        #[arg(long)]
        design: Design,
        #[arg(long, default_value_t = 2021)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 150)]
        n: usize,
        #[arg(long, default_value_t = 200)]
        p: usize,
        #[arg(long, default_value_t = 0)]
        replicate: usize,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML configuration; the full study when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// n = 60, p = 40, 8 replicates.
    #[arg(long)]
    quick: bool,
    #[arg(long, value_delimiter = ',')]
    designs: Vec<Design>,
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Skip cells already on disk.
    #[arg(long)]
    resume: bool,
    /// Draw boxplots of every metric.
    #[arg(long)]
    plots: bool,
    /// Also print the markdown tables.
    #[arg(long)]
    print: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
    Md,
}

fn build_config(a: &RunArgs) -> Result<BenchConfig> {
    let mut cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            BenchConfig::from_toml(&text)?
        }
        None => BenchConfig::full(),
    };
    if !a.designs.is_empty() {
        let template = cfg.designs[0].clone();
        cfg.designs = a
            .designs
            .iter()
            .map(|&d| {
                cfg.designs.iter().find(|s| s.name == d).cloned().unwrap_or(DesignSpec {
                    name: d,
                    ..template.clone()
                })
            })
            .collect();
    }
    if a.quick {
        cfg.make_quick();
    }
    if !a.methods.is_empty() {
        cfg.methods = a.methods.clone();
    }
    if let Some(r) = a.replicates {
        cfg.replicates = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = &a.out {
        cfg.output_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(a: RunArgs) -> Result<ExitCode> {
    let cfg = build_config(&a)?;
    log::info!(
        "{} designs, {} methods, {} replicates -> {}",
        cfg.designs.len(),
        cfg.method_list()?.len(),
        cfg.replicates,
        cfg.output_dir.display()
    );
    let report = run_benchmark(&cfg, &RunOptions { resume: a.resume })?;
    emit(&report, &cfg.output_dir, &EmitOptions { plots: a.plots })?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml())?;
    if a.print {
        println!("{}", render_markdown(&report));
    }
    eprintln!("wrote {} rows to {}", report.rows.len(), cfg.output_dir.display());
    if report.has_failures() {
        eprintln!("{} cells failed", report.failures.len());
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let outcome = match Cli::parse().command {
        Command::Run(a) => run(a),
        Command::Report { input, format } => report(input, format),
        Command::Simulate {
            design,
            seed,
            out,
            n,
            p,
            replicate,
        } => simulate(DesignSpec::new(design, n, p), seed, replicate, out),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::FAILURE
    })
}

fn report(input: PathBuf, format: Format) -> Result<ExitCode> {
    match format {
        Format::Md => print!("{}", render_markdown(&read_report(&input)?)),
        Format::Json => print!("{}", fs::read_to_string(input.join("report.json")).context("reading report.json")?),
        Format::Csv => {
            let path = input.join("metrics.csv");
            if !path.exists() {
                bail!("{} not found", path.display());
            }
            print!("{}", fs::read_to_string(path)?);
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn simulate(spec: DesignSpec, seed: u64, replicate: usize, out: PathBuf) -> Result<ExitCode> {
    let pair = spec.replicate(seed, replicate)?;
    save_dataset(&pair.train, &out.join("train"))?;
    save_dataset(&pair.test, &out.join("test"))?;
    eprintln!("wrote {} to {}", spec.name, out.display());
    Ok(ExitCode::SUCCESS)
}
