use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::env::{default_roster, NodeSpec, Point, RosterCapacities, Scenario};
use crate::net::NetConfig;
use crate::optim::OptimizerBudget;
use crate::sched::{DnnConfig, DrlConfig, WorldSampler};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchedulerKind {
    /// Supervised controller with entropy-gated incremental learning.
    DnnAre,
    /// Same network, never updated after pre-training.
    DnnFrozen,
    /// Policy trained on refined actions.
    DrlAre,
    /// Policy trained on the best of random feasible actions.
    DrlRandom,
    /// Global optimizer every epoch.
    Oracle,
    Random,
    Greedy,
    Local,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 8] = [
        SchedulerKind::DnnAre,
        SchedulerKind::DnnFrozen,
        SchedulerKind::DrlAre,
        SchedulerKind::DrlRandom,
        SchedulerKind::Oracle,
        SchedulerKind::Random,
        SchedulerKind::Greedy,
        SchedulerKind::Local,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchedulerKind::DnnAre => "dnn-are",
            SchedulerKind::DnnFrozen => "dnn-frozen",
            SchedulerKind::DrlAre => "drl-are",
            SchedulerKind::DrlRandom => "drl-random",
            SchedulerKind::Oracle => "oracle",
            SchedulerKind::Random => "random",
            SchedulerKind::Greedy => "greedy",
            SchedulerKind::Local => "local",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheduler {s:?}; expected one of {}", names(&Self::ALL))))
    }
}

fn names(kinds: &[SchedulerKind]) -> String {
    kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(", ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub epochs: usize,
    /// UE count at epoch 0.
    pub ue_count: usize,
    /// UE count at the last epoch; the population ramps linearly in between.
    #[serde(default)]
    pub ue_count_end: Option<usize>,
    #[serde(default = "default_schedulers")]
    pub schedulers: Vec<SchedulerKind>,
    /// Place UAVs and GVs once at epoch 0 instead of every epoch.
    #[serde(default)]
    pub freeze_placement: bool,
    /// Fill `decisions_latency_ms`; wall-clock values make outputs non-reproducible.
    #[serde(default)]
    pub record_timing: bool,
    /// Epoch interval for test-loss evaluation on optimizer-labelled states (0 disables).
    #[serde(default = "one")]
    pub eval_every: usize,
}

fn default_schedulers() -> Vec<SchedulerKind> {
    vec![SchedulerKind::DnnAre, SchedulerKind::DrlAre, SchedulerKind::Random, SchedulerKind::Greedy, SchedulerKind::Local]
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// UE count at epoch `t`.
    pub fn ue_count_at(&self, t: usize) -> usize {
        match self.ue_count_end {
            Some(end) if self.epochs > 1 => {
                let frac = t as f64 / (self.epochs - 1) as f64;
                (self.ue_count as f64 + frac * (end as f64 - self.ue_count as f64)).round() as usize
            }
            _ => self.ue_count,
        }
    }
}

/// Node roster built from counts; ignored when `[[nodes]]` are given explicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RosterConfig {
    pub gs_position: Point,
    pub gs_capacity_cps: f64,
    pub gv_capacity_cps: f64,
    pub uav_capacity_cps: f64,
    pub ground_vehicles: usize,
    pub uavs: usize,
    pub uav_coverage_m: f64,
}

impl Default for RosterConfig {
    fn default() -> Self {
        let caps = RosterCapacities::default();
        Self {
            gs_position: Point::new(25.0, 25.0),
            gs_capacity_cps: caps.gs,
            gv_capacity_cps: caps.gv,
            uav_capacity_cps: caps.uav,
            ground_vehicles: 1,
            uavs: 2,
            uav_coverage_m: 25.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub ue_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    pub schedulers: Vec<SchedulerKind>,
    /// Epochs run before measuring, so online learners can adapt.
    pub warmup_epochs: usize,
    pub measure_epochs: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            ue_counts: (1..=10).map(|k| 10 * k).collect(),
            seeds: vec![1, 2, 3, 4, 5],
            schedulers: default_schedulers(),
            warmup_epochs: 200,
            measure_epochs: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub experiment: ExperimentConfig,
    #[serde(default)]
    pub scenario: Scenario,
    #[serde(default)]
    pub roster: RosterConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub optimizer: OptimizerBudget,
    #[serde(default)]
    pub net: NetConfig,
    #[serde(default)]
    pub dnn: DnnConfig,
    #[serde(default)]
    pub drl: DrlConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Ten UEs ramping to fifty over 200 epochs; runs in minutes on one core.
    Desk,
    /// Fifty UEs with the full memory and replay sizes.
    Paper,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Preset::Desk),
            "paper" => Ok(Preset::Paper),
            _ => Err(Error::InvalidArgument(format!("unknown preset {s:?}; expected desk or paper"))),
        }
    }
}

impl Config {
    pub fn preset(p: Preset) -> Self {
        let experiment = ExperimentConfig {
            seed: 1,
            epochs: 200,
            ue_count: 10,
            ue_count_end: None,
            schedulers: default_schedulers(),
            freeze_placement: false,
            record_timing: false,
            eval_every: 1,
        };
        let base = Config {
            experiment,
            scenario: Scenario::default(),
            roster: RosterConfig::default(),
            nodes: Vec::new(),
            optimizer: OptimizerBudget::default(),
            net: NetConfig::default(),
            dnn: DnnConfig::default(),
            drl: DrlConfig::default(),
            sweep: SweepConfig::default(),
        };
        match p {
            Preset::Desk => Config {
                experiment: ExperimentConfig { ue_count_end: Some(50), ..base.experiment },
                dnn: DnnConfig { memory_capacity: 1000, min_samples: 1000, ..base.dnn },
                sweep: SweepConfig { ue_counts: vec![10, 20, 50], ..base.sweep },
                ..base
            },
            Preset::Paper => Config {
                experiment: ExperimentConfig { ue_count: 50, epochs: 500, ..base.experiment },
                dnn: DnnConfig { pretrain_ue_counts: vec![50], ..base.dnn },
                drl: DrlConfig { norm_ue_counts: vec![50], ..base.drl },
                ..base
            },
        }
    }

    pub fn from_toml_str(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config { path: origin.to_path_buf(), message: e.to_string() })?;
        cfg.validate().map_err(|e| match e {
            Error::Config { .. } => e,
            other => Error::Config { path: origin.to_path_buf(), message: other.to_string() },
        })?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::from_toml_str(&text, path)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the canonical TOML form.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        if e.epochs == 0 {
            return Err(Error::InvalidArgument("experiment.epochs must be >= 1".into()));
        }
        if e.ue_count == 0 || e.ue_count_end == Some(0) {
            return Err(Error::InvalidArgument("experiment.ue_count and ue_count_end must be >= 1".into()));
        }
        if e.schedulers.is_empty() {
            return Err(Error::InvalidArgument("experiment.schedulers is empty".into()));
        }
        if self.sweep.ue_counts.contains(&0) || self.sweep.measure_epochs == 0 {
            return Err(Error::InvalidArgument("sweep.ue_counts must be >= 1 and sweep.measure_epochs >= 1".into()));
        }
        self.scenario.validate()?;
        self.optimizer.validate()?;
        self.net.validate()?;
        self.dnn.validate()?;
        self.drl.validate()?;
        let nodes = self.roster_nodes();
        if nodes.is_empty() {
            return Err(Error::InvalidArgument("the roster has no nodes".into()));
        }
        crate::env::init_world(&self.scenario, 1, &nodes, 0)?;
        Ok(())
    }

    /// Explicit `[[nodes]]` when present, otherwise the roster built from `[roster]`.
    pub fn roster_nodes(&self) -> Vec<NodeSpec> {
        if !self.nodes.is_empty() {
            return self.nodes.clone();
        }
        let r = &self.roster;
        let caps = RosterCapacities { gs: r.gs_capacity_cps, gv: r.gv_capacity_cps, uav: r.uav_capacity_cps };
        default_roster(&self.scenario, r.gs_position, caps, r.ground_vehicles, r.uavs, r.uav_coverage_m)
    }

    pub fn sampler(&self) -> WorldSampler {
        WorldSampler { scenario: self.scenario.clone(), roster: self.roster_nodes(), place_nodes: true }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        for p in [Preset::Desk, Preset::Paper] {
            let cfg = Config::preset(p);
            cfg.validate().unwrap();
            let back = Config::from_toml_str(&cfg.to_toml(), Path::new("preset.toml")).unwrap();
            assert_eq!(back, cfg);
            assert_eq!(back.hash(), cfg.hash());
        }
        let paper = Config::preset(Preset::Paper);
        assert_eq!(paper.experiment.ue_count, 50);
        assert_eq!(paper.roster_nodes().len(), 4);
        assert_eq!(paper.net.hidden, vec![64, 32]);
        assert_eq!((paper.drl.buffer_capacity, paper.drl.batch_size), (10_000, 1000));
    }

    #[test]
    fn missing_field_is_named() {
        let err = Config::from_toml_str("[experiment]\nseed = 1\nue_count = 10\n", Path::new("x.toml")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("epochs") && msg.contains("x.toml"), "{msg}");
        let err = Config::from_toml_str("[experiment]\nseed = 1\nepochs = 3\nue_count = 10\nbogus = 2\n", Path::new("x.toml"))
            .unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn ramp_hits_both_ends() {
        let mut e = Config::preset(Preset::Desk).experiment;
        e.ue_count = 10;
        e.ue_count_end = Some(100);
        e.epochs = 10;
        assert_eq!(e.ue_count_at(0), 10);
        assert_eq!(e.ue_count_at(9), 100);
        assert_eq!(e.ue_count_at(3), 40);
    }

    #[test]
    fn scheduler_names_parse() {
        for k in SchedulerKind::ALL {
            assert_eq!(k.name().parse::<SchedulerKind>().unwrap(), k);
        }
        assert!("dqn".parse::<SchedulerKind>().is_err());
    }
}
