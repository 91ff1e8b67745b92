use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use fluxcat_cli::{run_sweep, validate_config, write_outputs, Experiment, JOBS_ENV};

/// Run a parameter sweep and write a CSV table plus a JSON manifest.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Args {
    /// One of phase_diagram, overlap, splitting, bitflip, phaseflip,
    /// lindblad_spectrum, xgate, cos2theta_lifetimes, qps_pair.
    experiment: Experiment,
    /// JSON sweep configuration.
    #[arg(long)]
    config: PathBuf,
    /// CSV output path; the manifest is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, env = JOBS_ENV)]
    jobs: Option<usize>,
    /// Rerun each point with refined numerics and flag disagreements.
    #[arg(long)]
    verify_convergence: bool,
}

fn run(args: Args) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = match validate_config(&text, Some(args.experiment)) {
        Ok(c) => c,
        Err(e) => {
            eprint!("{e}");
            return Ok(ExitCode::from(2));
        }
    };
    let jobs = args
        .jobs
        .or(cfg.jobs)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
        .max(1);
    let out = args
        .out
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", cfg.experiment)));

    log::info!("{}: {} points on {jobs} workers", cfg.experiment, cfg.points().len());
    let res = run_sweep(&cfg, jobs, args.verify_convergence)?;
    let manifest = write_outputs(&res, &cfg, &out)?;
    let failed = res.failed();
    eprintln!(
        "{} points, {failed} failed, {:.1} s -> {} ({})",
        res.records.len(),
        res.wall_time_s,
        out.display(),
        manifest.display()
    );
    Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
