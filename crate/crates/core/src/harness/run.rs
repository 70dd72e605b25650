use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{Config, SchedulerKind};
use super::output::{mean_std, write_csv, MetricsRow, PlacementRow, SummaryRow};
use crate::env::{init_world_with, WorldState};
use crate::optim::{solve_global, Solution};
use crate::placement::place_mobile_nodes;
use crate::problem::Instance;
use crate::sched::{
    features_for, pretrain_dnn, samples_from, save_checkpoint, Baseline, BaselineKind, DnnAre, DnnConfig, DrlAre,
    DrlConfig, Exploration, Oracle, PretrainReport, Pretrained, Scheduler,
};
use crate::{mix_seed, rng_for, Error, Result};

const FINAL_WINDOW: usize = 50;

/// The world sequence every scheduler of a run is evaluated on.
///
/// UEs move, tasks churn and the population follows the configured ramp; mobile nodes are
/// re-placed by k-means each epoch unless placement is frozen.
pub fn trajectory(cfg: &Config) -> Result<Vec<WorldState>> {
    let e = &cfg.experiment;
    let mut rng = rng_for(e.seed, 1);
    let mut world = init_world_with(&cfg.scenario, e.ue_count_at(0), &cfg.roster_nodes(), &mut rng)?;
    let mut worlds = Vec::with_capacity(e.epochs);
    for t in 0..e.epochs {
        if t > 0 {
            world = world.step_mobility(&mut rng);
            world.resize_ues(e.ue_count_at(t), &mut rng);
        }
        if t == 0 || !e.freeze_placement {
            world.nodes = place_mobile_nodes(&world, mix_seed(e.seed, t as u64));
        }
        worlds.push(world.clone());
    }
    Ok(worlds)
}

/// Short content hash of the UE and node state, to check that paired runs saw the same world.
pub fn world_digest(w: &WorldState) -> String {
    let mut h = Sha256::new();
    h.update(w.epoch.to_le_bytes());
    for u in &w.ues {
        for v in [u.position.x, u.position.y, u.task.required_cycles, u.task.data_bits, u.task.weight, u.local_capacity_cps] {
            h.update(v.to_le_bytes());
        }
    }
    for n in &w.nodes {
        for v in [n.position.x, n.position.y, n.altitude, n.capacity_cps] {
            h.update(v.to_le_bytes());
        }
    }
    for f in &w.fading {
        h.update(f.to_le_bytes());
    }
    hex::encode(&h.finalize()[..6])
}

pub(crate) fn pretrain_seed(seed: u64) -> u64 {
    mix_seed(seed, 0x7074)
}

/// Pre-train the supervised controller's network as configured.
pub fn pretrain(cfg: &Config) -> Result<Pretrained> {
    pretrain_dnn(&cfg.sampler(), &cfg.net, &cfg.dnn, &cfg.optimizer, pretrain_seed(cfg.experiment.seed))
}

/// Build one scheduler. Supervised variants share `pre`, computed on first use.
pub fn build_scheduler(kind: SchedulerKind, cfg: &Config, pre: &mut Option<Pretrained>) -> Result<Box<dyn Scheduler>> {
    let seed = cfg.experiment.seed;
    Ok(match kind {
        SchedulerKind::DnnAre | SchedulerKind::DnnFrozen => {
            if pre.is_none() {
                *pre = Some(pretrain(cfg)?);
            }
            let dnn = DnnConfig { incremental: kind == SchedulerKind::DnnAre, ..cfg.dnn.clone() };
            let p = pre.clone().expect("pre-trained above");
            Box::new(DnnAre::new(p, cfg.net.clone(), dnn, cfg.optimizer.clone(), mix_seed(seed, 0x646e)))
        }
        SchedulerKind::DrlAre | SchedulerKind::DrlRandom => {
            let exploration = if kind == SchedulerKind::DrlAre { Exploration::Refine } else { Exploration::RandomSearch };
            let drl = DrlConfig { exploration, ..cfg.drl.clone() };
            Box::new(DrlAre::new(&cfg.sampler(), cfg.net.clone(), drl, cfg.optimizer.clone(), mix_seed(seed, 0x646c))?)
        }
        SchedulerKind::Oracle => Box::new(Oracle::new(cfg.optimizer.clone(), mix_seed(seed, 0x6f72))),
        SchedulerKind::Random => Box::new(Baseline::new(BaselineKind::Random, mix_seed(seed, 0x6273))),
        SchedulerKind::Greedy => Box::new(Baseline::new(BaselineKind::Greedy, mix_seed(seed, 0x6273))),
        SchedulerKind::Local => Box::new(Baseline::new(BaselineKind::Local, mix_seed(seed, 0x6273))),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub config_hash: String,
    pub metrics: Vec<MetricsRow>,
    pub summary: Vec<SummaryRow>,
    pub placement: Vec<PlacementRow>,
    pub pretrain: Option<PretrainReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PretrainRow {
    config_hash: String,
    seed: u64,
    worlds: usize,
    samples: usize,
    iterations: usize,
    initial_loss: f64,
    final_loss: f64,
    test_loss: Option<f64>,
    optimizer_evals: u64,
}

fn pretrain_row(hash: &str, seed: u64, r: &PretrainReport) -> PretrainRow {
    PretrainRow {
        config_hash: hash.to_string(),
        seed,
        worlds: r.worlds,
        samples: r.samples,
        iterations: r.iterations,
        initial_loss: r.initial_loss,
        final_loss: r.final_loss,
        test_loss: r.test_loss,
        optimizer_evals: r.optimizer_evals,
    }
}

impl RunOutput {
    /// `metrics.csv`, `summary.csv`, `placement.csv` and, when a network was pre-trained,
    /// `pretrain.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_csv(&dir.join("metrics.csv"), &self.metrics)?;
        write_csv(&dir.join("summary.csv"), &self.summary)?;
        write_csv(&dir.join("placement.csv"), &self.placement)?;
        if let Some(r) = &self.pretrain {
            let seed = self.metrics.first().map_or(0, |m| m.seed);
            write_csv(&dir.join("pretrain.csv"), &[pretrain_row(&self.config_hash, seed, r)])?;
        }
        Ok(())
    }

    pub fn rows_for<'a>(&'a self, scheduler: &'a str) -> impl Iterator<Item = &'a MetricsRow> + 'a {
        self.metrics.iter().filter(move |m| m.scheduler == scheduler)
    }
}

/// Run every configured scheduler over the configured trajectory.
pub fn run_experiment(cfg: &Config) -> Result<RunOutput> {
    cfg.validate()?;
    let worlds = trajectory(cfg)?;
    run_on(cfg, &worlds, &cfg.experiment.schedulers)
}

/// Run `kinds` over a given world sequence.
pub fn run_on(cfg: &Config, worlds: &[WorldState], kinds: &[SchedulerKind]) -> Result<RunOutput> {
    let hash = cfg.hash();
    let seed = cfg.experiment.seed;
    let digests: Vec<String> = worlds.iter().map(world_digest).collect();
    let learners = kinds.iter().any(|k| {
        matches!(k, SchedulerKind::DnnAre | SchedulerKind::DnnFrozen | SchedulerKind::DrlAre | SchedulerKind::DrlRandom)
    });
    let eval_every = cfg.experiment.eval_every;
    let labels: Vec<Option<Solution>> = worlds
        .iter()
        .enumerate()
        .map(|(t, w)| {
            if learners && eval_every > 0 && t % eval_every == 0 && w.n_ues() > 0 {
                solve_global(&Instance::new(w), &cfg.optimizer, mix_seed(seed, 0x6576_0000 + t as u64)).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut pre = None;
    let mut metrics = Vec::with_capacity(worlds.len() * kinds.len());
    let mut summary = Vec::with_capacity(kinds.len());
    for &kind in kinds {
        let mut sched = build_scheduler(kind, cfg, &mut pre)?;
        let name = sched.name().to_string();
        let mut updates = 0;
        let mut evals_total = 0;
        let first = metrics.len();
        for (t, world) in worlds.iter().enumerate() {
            let clock = Instant::now();
            let snap = sched.decide(world)?;
            let latency = clock.elapsed().as_secs_f64() * 1e3;
            let test_loss = match &labels[t] {
                Some(sol) => {
                    let inst = Instance::new(world);
                    sched.loss_on(&samples_from(&inst, &features_for(world, &snap.avg_alloc), &sol.assignment))
                }
                None => None,
            };
            let report = sched.learn(world, &snap)?;
            updates += report.updated as u64;
            evals_total += report.optimizer_evals;
            metrics.push(MetricsRow {
                config_hash: hash.clone(),
                seed,
                epoch: world.epoch,
                scheduler: name.clone(),
                n_ues: world.n_ues(),
                objective: snap.objective,
                reward: snap.reward(),
                mean_entropy: snap.mean_entropy(),
                train_loss: sched.train_loss(),
                test_loss,
                decisions_latency_ms: cfg.experiment.record_timing.then_some(latency),
                optimizer_evals: report.optimizer_evals,
                world_digest: digests[t].clone(),
            });
        }
        let rows = &metrics[first..];
        let objectives: Vec<f64> = rows.iter().map(|r| r.objective).collect();
        let (mean_objective, std_objective) = mean_std(&objectives);
        let rewards: Vec<f64> = rows.iter().map(|r| r.reward).collect();
        let tail = &rewards[rewards.len().saturating_sub(FINAL_WINDOW)..];
        let tests: Vec<f64> = rows.iter().filter_map(|r| r.test_loss).collect();
        summary.push(SummaryRow {
            config_hash: hash.clone(),
            seed,
            scheduler: name,
            epochs: rows.len(),
            mean_objective,
            std_objective,
            mean_reward: mean_std(&rewards).0,
            final_reward: mean_std(tail).0,
            mean_test_loss: (!tests.is_empty()).then(|| mean_std(&tests).0),
            updates,
            optimizer_evals: evals_total,
        });
    }

    let placement = worlds
        .iter()
        .flat_map(|w| {
            let hash = &hash;
            w.nodes.iter().enumerate().map(move |(j, n)| PlacementRow {
                config_hash: hash.clone(),
                seed,
                epoch: w.epoch,
                node: j,
                kind: n.kind.to_string(),
                x: n.position.x,
                y: n.position.y,
                altitude: n.altitude,
            })
        })
        .collect();
    Ok(RunOutput { config_hash: hash, metrics, summary, placement, pretrain: pre.map(|p| p.report) })
}

/// Pre-train and write `net.txt`, `dnn_checkpoint.json` and `pretrain.csv` into `dir`.
pub fn pretrain_to_dir(cfg: &Config, dir: &Path) -> Result<Pretrained> {
    let pre = pretrain(cfg)?;
    std::fs::create_dir_all(dir)?;
    pre.net.save(&dir.join("net.txt"))?;
    let ctl = DnnAre::new(pre.clone(), cfg.net.clone(), cfg.dnn.clone(), cfg.optimizer.clone(), 0);
    save_checkpoint(&dir.join("dnn_checkpoint.json"), &ctl.checkpoint())?;
    write_csv(&dir.join("pretrain.csv"), &[pretrain_row(&cfg.hash(), cfg.experiment.seed, &pre.report)])?;
    Ok(pre)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AblationMode {
    /// Supervised controller with and without incremental learning.
    DnnNoIncremental,
    /// Policy controller trained on refined vs. random-search actions.
    DrlNoRefinement,
}

impl AblationMode {
    pub fn name(self) -> &'static str {
        match self {
            AblationMode::DnnNoIncremental => "dnn_no_incremental",
            AblationMode::DrlNoRefinement => "drl_no_refinement",
        }
    }

    /// The full variant and its ablation.
    pub fn pair(self) -> [SchedulerKind; 2] {
        match self {
            AblationMode::DnnNoIncremental => [SchedulerKind::DnnAre, SchedulerKind::DnnFrozen],
            AblationMode::DrlNoRefinement => [SchedulerKind::DrlAre, SchedulerKind::DrlRandom],
        }
    }
}

impl FromStr for AblationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "dnn_no_incremental" => Ok(AblationMode::DnnNoIncremental),
            "drl_no_refinement" => Ok(AblationMode::DrlNoRefinement),
            _ => Err(Error::InvalidArgument(format!("unknown ablation {s:?}; expected dnn_no_incremental or drl_no_refinement"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationOutput {
    pub mode: AblationMode,
    pub run: RunOutput,
}

const PAIRED_FIELDS: [&str; 5] = ["objective", "reward", "mean_entropy", "train_loss", "test_loss"];

impl AblationOutput {
    /// Wide table: shared environment columns, then each variant's curves side by side.
    pub fn paired_table(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let [a, b] = self.mode.pair();
        let mut header: Vec<String> =
            ["config_hash", "seed", "epoch", "n_ues", "world_digest"].iter().map(|s| s.to_string()).collect();
        for k in [a, b] {
            header.extend(PAIRED_FIELDS.iter().map(|f| format!("{}_{f}", k.name().replace('-', "_"))));
        }
        let ra: Vec<&MetricsRow> = self.run.rows_for(a.name()).collect();
        let rb: Vec<&MetricsRow> = self.run.rows_for(b.name()).collect();
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
        let rows = ra
            .iter()
            .zip(&rb)
            .map(|(x, y)| {
                debug_assert_eq!(x.world_digest, y.world_digest);
                let mut row = vec![x.config_hash.clone(), x.seed.to_string(), x.epoch.to_string(), x.n_ues.to_string(), x.world_digest.clone()];
                for m in [x, y] {
                    row.extend([m.objective.to_string(), m.reward.to_string(), opt(m.mean_entropy), opt(m.train_loss), opt(m.test_loss)]);
                }
                row
            })
            .collect();
        (header, rows)
    }

    /// `ablation_<mode>.csv` plus the run's regular outputs.
    pub fn write(&self, dir: &Path) -> Result<()> {
        self.run.write(dir)?;
        let (header, rows) = self.paired_table();
        let mut w = csv::Writer::from_path(dir.join(format!("ablation_{}.csv", self.mode.name())))?;
        w.write_record(&header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Run a variant and its ablation on the same seeded world trajectory.
pub fn ablation(cfg: &Config, mode: AblationMode) -> Result<AblationOutput> {
    cfg.validate()?;
    let worlds = trajectory(cfg)?;
    Ok(AblationOutput { mode, run: run_on(cfg, &worlds, &mode.pair())? })
}
