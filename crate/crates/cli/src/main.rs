use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use bubblerank::harness::{
    run_config, run_verify, sanity_sweep_chi, sanity_sweep_v0, write_chi_csv, write_json, write_v0_csv,
    ExperimentConfig,
};
use bubblerank::oracle::regret_upper_bound;
use bubblerank::Instance;
use clap::{Args, Parser, Subcommand};

/// Safe online learning-to-rank simulations.
#[derive(Parser)]
#[command(name = "bubblerank", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config's `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf)> {
        let config = ExperimentConfig::load(&self.config)
            .with_context(|| format!("loading config {}", self.config.display()))?;
        let out = self.out.clone().unwrap_or_else(|| config.output_dir.clone());
        fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
        Ok((config, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run every (instance, agent, run) of the grid; writes runs.csv, agg.csv and summary.json.
    Simulate(ConfigArgs),
    /// Regret against the smallest examination probability; writes chi.csv and chi.json.
    SanityChi(ConfigArgs),
    /// Regret against initial incorrectly ordered pairs; writes v0.csv and v0.json.
    SanityV0(ConfigArgs),
    /// Run the oracle suites and the BubbleRank grid checks; writes verify.json.
    Verify(ConfigArgs),
    /// Print the regret ceiling of an instance.
    Bound {
        #[arg(long)]
        instance: PathBuf,
        /// Number of incorrectly ordered pairs in the initial list.
        #[arg(long)]
        v0: usize,
        #[arg(long)]
        delta: f64,
        /// Horizon.
        #[arg(long)]
        n: u64,
    },
}

fn csv_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn simulate(args: &ConfigArgs) -> Result<bool> {
    let (config, out) = args.load()?;
    if config.agents.is_empty() || config.instances.is_empty() {
        bail!("simulate needs at least one instance and one agent");
    }
    let started = Instant::now();
    let grid = run_config(&config)?;
    let secs = started.elapsed().as_secs_f64();
    grid.write(&out)?;
    log::info!(
        "{} runs, {} steps in {secs:.1}s ({:.3e} steps/s)",
        grid.runs.len(),
        grid.total_steps(),
        grid.total_steps() as f64 / secs
    );
    for f in &grid.failures {
        eprintln!("run {} of {} on {} failed: {}", f.run, f.agent, f.instance, f.error);
    }
    println!("wrote {}", out.display());
    Ok(grid.succeeded())
}

fn sanity_chi(args: &ConfigArgs) -> Result<bool> {
    let (config, out) = args.load()?;
    let report = sanity_sweep_chi(&config)?;
    write_chi_csv(csv_file(&out.join("chi.csv"))?, &report)?;
    write_json(&out.join("chi.json"), &report)?;
    for r in &report.rows {
        let ratio = r.ratio.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
        println!("i={} chi_min={} regret={:.1} ratio={ratio}", r.i, r.chi_min, r.final_regret);
    }
    Ok(true)
}

fn sanity_v0(args: &ConfigArgs) -> Result<bool> {
    let (config, out) = args.load()?;
    let instances = config.load_instances()?;
    let [instance] = instances.as_slice() else {
        bail!("sanity-v0 needs exactly one instance, got {}", instances.len());
    };
    let report = sanity_sweep_v0(instance, &config)?;
    write_v0_csv(csv_file(&out.join("v0.csv"))?, &report)?;
    write_json(&out.join("v0.json"), &report)?;
    for r in &report.rows {
        println!("v0={} regret={:.1}", r.v0, r.final_regret);
    }
    println!("slope={:.3} intercept={:.3} r2={:.3}", report.fit.slope, report.fit.intercept, report.fit.r_squared);
    Ok(true)
}

fn verify(args: &ConfigArgs) -> Result<bool> {
    let (config, out) = args.load()?;
    let report = run_verify(&config)?;
    write_json(&out.join("verify.json"), &report)?;
    for c in &report.checks {
        println!("{} {}", if c.passed { "PASS" } else { "FAIL" }, c.name);
    }
    if report.failed_runs > 0 {
        println!("FAIL {} runs aborted", report.failed_runs);
    }
    Ok(report.passed)
}

fn bound(instance: &Path, v0: usize, delta: f64, n: u64) -> Result<bool> {
    let inst = Instance::load(instance).with_context(|| format!("loading instance {}", instance.display()))?;
    println!("{}", regret_upper_bound(&inst, v0, delta, n)?);
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::SanityChi(a) => sanity_chi(a),
        Command::SanityV0(a) => sanity_v0(a),
        Command::Verify(a) => verify(a),
        Command::Bound { instance, v0, delta, n } => bound(instance, *v0, *delta, *n),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
