use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use hmec::harness::{self, AblationMode, Config, Preset, SchedulerKind};
use hmec::Error;

#[derive(Parser)]
#[command(name = "hmec", version, about = "Edge-offloading simulator and scheduler benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run schedulers over one trajectory; writes metrics.csv, summary.csv, placement.csv.
    Run(Common),
    /// Sweep UE counts x schedulers x seeds; writes sweep.csv and sweep_summary.csv.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads for independent sweep cells.
        #[arg(long, env = harness::WORKERS_ENV)]
        workers: Option<usize>,
    },
    /// Run a controller and its ablation on the same trajectory.
    Ablate {
        #[command(flatten)]
        common: Common,
        /// dnn_no_incremental or drl_no_refinement.
        #[arg(long, value_parser = parse_mode)]
        mode: AblationMode,
    },
    /// Pre-train the supervised network; writes net.txt, dnn_checkpoint.json, pretrain.csv.
    Pretrain(Common),
    /// Print the resolved configuration as TOML.
    Config(Common),
}

#[derive(Args)]
struct Common {
    /// TOML config file; defaults to the selected preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides experiment.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated scheduler list, e.g. dnn-are,greedy.
    #[arg(long, value_delimiter = ',', value_parser = parse_kind)]
    scheduler: Vec<SchedulerKind>,
    #[arg(long, value_parser = parse_preset, default_value = "desk")]
    preset: Preset,
}

fn parse_kind(s: &str) -> Result<SchedulerKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_mode(s: &str) -> Result<AblationMode, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl Common {
    fn resolve(&self) -> hmec::Result<Config> {
        let mut cfg = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::preset(self.preset),
        };
        if let Some(seed) = self.seed {
            cfg.experiment.seed = seed;
        }
        if !self.scheduler.is_empty() {
            cfg.experiment.schedulers = self.scheduler.clone();
            cfg.sweep.schedulers = self.scheduler.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn execute(cmd: Command) -> hmec::Result<()> {
    match cmd {
        Command::Run(c) => {
            let cfg = c.resolve()?;
            let out = harness::run_experiment(&cfg)?;
            out.write(&c.out)?;
            for s in &out.summary {
                println!("{:<11} objective {:.4} ± {:.4}  reward {:.4}", s.scheduler, s.mean_objective, s.std_objective, s.mean_reward);
            }
        }
        Command::Sweep { common, workers } => {
            let cfg = common.resolve()?;
            let out = harness::sweep_ues(&cfg, workers)?;
            out.write(&common.out)?;
            for c in &out.cells {
                println!("N={:<4} {:<11} {:.4} ± {:.4}", c.n_ues, c.scheduler, c.mean_objective, c.std_objective);
            }
        }
        Command::Ablate { common, mode } => {
            let cfg = common.resolve()?;
            let out = harness::ablation(&cfg, mode)?;
            out.write(&common.out)?;
            for s in &out.run.summary {
                println!("{:<11} final reward {:.4}  mean test loss {:?}", s.scheduler, s.final_reward, s.mean_test_loss);
            }
        }
        Command::Pretrain(c) => {
            let cfg = c.resolve()?;
            let pre = harness::pretrain_to_dir(&cfg, &c.out)?;
            let r = &pre.report;
            println!("{} samples from {} worlds, loss {:.4} -> {:.4} in {} passes", r.samples, r.worlds, r.initial_loss, r.final_loss, r.iterations);
        }
        Command::Config(c) => print!("{}", c.resolve()?.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::Config { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
