use std::path::Path;

use rayon::prelude::*;

use super::config::Config;
use super::output::{mean_std, write_csv, SweepCell, SweepRow};
use super::run::{run_on, trajectory};
use crate::{Error, Result};

/// Environment variable that overrides the sweep worker count.
pub const WORKERS_ENV: &str = "HMEC_WORKERS";

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub cells: Vec<SweepCell>,
}

impl SweepOutput {
    /// `sweep.csv` (one row per count, scheduler and seed) and `sweep_summary.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_csv(&dir.join("sweep.csv"), &self.rows)?;
        write_csv(&dir.join("sweep_summary.csv"), &self.cells)
    }

    pub fn cell(&self, n_ues: usize, scheduler: &str) -> Option<&SweepCell> {
        self.cells.iter().find(|c| c.n_ues == n_ues && c.scheduler == scheduler)
    }
}

/// Every `(count, seed)` pair runs all sweep schedulers on one fixed-population trajectory
/// of `warmup_epochs + measure_epochs` epochs; only the measured epochs are averaged.
/// Learning controllers are pre-trained and normalized at the cell's UE count.
///
/// `workers = None` uses the rayon default.
pub fn sweep_ues(cfg: &Config, workers: Option<usize>) -> Result<SweepOutput> {
    cfg.validate()?;
    let sw = &cfg.sweep;
    let jobs: Vec<(usize, u64)> = sw.ue_counts.iter().flat_map(|&n| sw.seeds.iter().map(move |&s| (n, s))).collect();
    let run_job = |&(n, seed): &(usize, u64)| -> Result<Vec<SweepRow>> {
        let mut c = cfg.clone();
        c.experiment.seed = seed;
        c.experiment.ue_count = n;
        c.experiment.ue_count_end = None;
        c.experiment.epochs = sw.warmup_epochs + sw.measure_epochs;
        c.experiment.eval_every = 0;
        c.dnn.pretrain_ue_counts = vec![n];
        c.drl.norm_ue_counts = vec![n];
        let worlds = trajectory(&c)?;
        let out = run_on(&c, &worlds, &sw.schedulers)?;
        Ok(sw
            .schedulers
            .iter()
            .map(|k| {
                let objs: Vec<f64> = out.rows_for(k.name()).skip(sw.warmup_epochs).map(|r| r.objective).collect();
                SweepRow { config_hash: cfg.hash(), n_ues: n, scheduler: k.name().to_string(), seed, objective: mean_std(&objs).0 }
            })
            .collect())
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    let per_job: Vec<Vec<SweepRow>> = pool.install(|| jobs.par_iter().map(run_job).collect::<Result<_>>())?;

    let mut rows: Vec<SweepRow> = per_job.into_iter().flatten().collect();
    let order = |name: &str| sw.schedulers.iter().position(|k| k.name() == name).unwrap_or(usize::MAX);
    rows.sort_by_key(|a| (a.n_ues, order(&a.scheduler), a.seed));
    let mut cells = Vec::new();
    for &n in &sw.ue_counts {
        for k in &sw.schedulers {
            let objs: Vec<f64> = rows.iter().filter(|r| r.n_ues == n && r.scheduler == k.name()).map(|r| r.objective).collect();
            let (mean_objective, std_objective) = mean_std(&objs);
            cells.push(SweepCell {
                config_hash: cfg.hash(),
                n_ues: n,
                scheduler: k.name().to_string(),
                seeds: objs.len(),
                mean_objective,
                std_objective,
            });
        }
    }
    Ok(SweepOutput { rows, cells })
}

/// Worker count from [`WORKERS_ENV`], if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::{Preset, SchedulerKind};
    use crate::harness::run::run_experiment;

    #[test]
    fn cardinality_and_local_closed_form() {
        let mut cfg = Config::preset(Preset::Desk);
        cfg.sweep.ue_counts = vec![3, 5];
        cfg.sweep.seeds = vec![1, 2];
        cfg.sweep.schedulers = vec![SchedulerKind::Greedy, SchedulerKind::Local];
        cfg.sweep.warmup_epochs = 1;
        cfg.sweep.measure_epochs = 2;
        let out = sweep_ues(&cfg, Some(1)).unwrap();
        assert_eq!(out.rows.len(), 2 * 2 * 2);
        assert_eq!(out.cells.len(), 4);
        for r in out.rows.iter().filter(|r| r.scheduler == "local") {
            let mut c = cfg.clone();
            c.experiment.seed = r.seed;
            c.experiment.ue_count = r.n_ues;
            c.experiment.ue_count_end = None;
            c.experiment.epochs = 3;
            let worlds = trajectory(&c).unwrap();
            let expected: f64 = worlds[1..]
                .iter()
                .map(|w| w.ues.iter().map(|u| u.task.weight * u.task.required_cycles / u.local_capacity_cps).sum::<f64>())
                .sum::<f64>()
                / 2.0;
            assert!((r.objective - expected).abs() <= 1e-12 * expected);
        }
    }

    #[test]
    fn degenerate_sweep_matches_run_summary() {
        let mut cfg = Config::preset(Preset::Desk);
        cfg.sweep.ue_counts = vec![6];
        cfg.sweep.seeds = vec![3];
        cfg.sweep.schedulers = vec![SchedulerKind::Random];
        cfg.sweep.warmup_epochs = 0;
        cfg.sweep.measure_epochs = 4;
        let sweep = sweep_ues(&cfg, Some(1)).unwrap();

        cfg.experiment.seed = 3;
        cfg.experiment.ue_count = 6;
        cfg.experiment.ue_count_end = None;
        cfg.experiment.epochs = 4;
        cfg.experiment.eval_every = 0;
        cfg.experiment.schedulers = vec![SchedulerKind::Random];
        let run = run_experiment(&cfg).unwrap();
        assert_eq!(sweep.rows[0].objective, run.summary[0].mean_objective);
    }
}
