//! Experiment wiring: configuration, world trajectories, scheduler runs, UE-count sweeps,
//! ablations and CSV output.

mod config;
mod output;
mod run;
mod sweep;

pub use config::{Config, ExperimentConfig, Preset, RosterConfig, SchedulerKind, SweepConfig};
pub use output::{mean_std, read_csv, write_csv, MetricsRow, PlacementRow, SummaryRow, SweepCell, SweepRow};
pub use run::{
    ablation, build_scheduler, pretrain, pretrain_to_dir, run_experiment, run_on, trajectory, world_digest, AblationMode,
    AblationOutput, RunOutput,
};
pub use sweep::{sweep_ues, workers_from_env, SweepOutput, WORKERS_ENV};
