use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use ecomarket::config::parse_override;
use ecomarket::output::{ExperimentManifest, MANIFEST_FILE};
use ecomarket::{run_to_dir, Config, Experiment, HarnessError};
use serde_json::json;

/// Market ecology simulator and experiment runner.
#[derive(Parser, Debug)]
#[command(name = "ecomarket", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One run: daily series and a summary.
    Simulate(Common),
    /// Returns and market quality over a grid on the wealth simplex.
    Sweep(Common),
    /// Freely evolving ecologies from random or fixed initial wealth.
    Trajectories(Common),
    /// Community matrix at the configured wealth vector.
    Community(Common),
    /// Food web and trophic levels at the configured wealth vector.
    Trophic(Common),
    /// Volatility and mispricing regressed on relative wealth.
    Regress(Common),
    /// Ensemble convergence for a range of one parameter.
    Converge(Common),
    /// Kelly multiplier test and survival curves.
    Kelly(Common),
    /// Return distribution, clustering and mispricing of one run.
    StylizedFacts(Common),
    /// Re-runs the experiment recorded in a manifest.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Prints the default configuration.
    Defaults,
}

#[derive(Args, Debug)]
struct Common {
    /// Flat TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: out/<subcommand>).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    years: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    /// Any config key, as key=value. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn load(&self) -> anyhow::Result<Config> {
        let mut overrides = Vec::new();
        let named = [
            ("seed", self.seed.map(|v| v.to_string())),
            ("years", self.years.map(|v| v.to_string())),
            ("seeds", self.seeds.map(|v| v.to_string())),
            ("runs", self.runs.map(|v| v.to_string())),
            ("resolution", self.resolution.map(|v| v.to_string())),
        ];
        for (k, v) in named {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        }
        for s in &self.set {
            overrides.push(parse_override(s)?);
        }
        Ok(Config::load(&self.config, &overrides)?)
    }
}

fn execute(experiment: Experiment, cfg: &Config, out: Option<PathBuf>) -> anyhow::Result<()> {
    let dir = out.unwrap_or_else(|| PathBuf::from("out").join(experiment.name()));
    let manifest =
        run_to_dir(experiment, cfg, &dir).with_context(|| format!("{experiment} failed"))?;
    let line = json!({
        "experiment": manifest.experiment,
        "config_hash": manifest.config_hash,
        "manifest": dir.join(MANIFEST_FILE),
        "outputs": manifest.outputs,
    });
    println!("{line}");
    Ok(())
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let (experiment, common) = match cli.command {
        Command::Simulate(c) => (Experiment::Simulate, c),
        Command::Sweep(c) => (Experiment::Sweep, c),
        Command::Trajectories(c) => (Experiment::Trajectories, c),
        Command::Community(c) => (Experiment::Community, c),
        Command::Trophic(c) => (Experiment::Trophic, c),
        Command::Regress(c) => (Experiment::Regress, c),
        Command::Converge(c) => (Experiment::Converge, c),
        Command::Kelly(c) => (Experiment::Kelly, c),
        Command::StylizedFacts(c) => (Experiment::StylizedFacts, c),
        Command::Rerun { manifest, out } => {
            let m = ExperimentManifest::read(&manifest)?;
            let experiment: Experiment = m.experiment.parse()?;
            let dir = out.or_else(|| manifest.parent().map(PathBuf::from));
            return execute(experiment, &m.config, dir);
        }
        Command::Defaults => {
            print!("{}", Config::default().to_toml());
            return Ok(());
        }
    };
    let cfg = common.load()?;
    execute(experiment, &cfg, common.out)
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    e.chain()
        .find_map(|c| c.downcast_ref::<HarnessError>())
        .map(HarnessError::kind)
        .unwrap_or("internal")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // help and version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": "usage", "message": e.to_string().trim_end() })
            );
            return ExitCode::from(2);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!(
                "{}",
                json!({ "error": error_kind(&e), "message": format!("{e:#}") })
            );
            ExitCode::FAILURE
        }
    }
}
