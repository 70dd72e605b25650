//! Online schedulers: the two learning controllers and three fixed baselines.
//!
//! Every scheduler turns a [`WorldState`] into an [`EpochSnapshot`] whose executed assignment is
//! always feasible, and may then learn from that snapshot before the next epoch.

mod baseline;
mod dnn;
mod drl;
mod memory;

pub use baseline::{Baseline, BaselineKind, Oracle};
pub use dnn::{pretrain_dnn, DnnAre, DnnCheckpoint, DnnConfig, PretrainReport, Pretrained};
pub use drl::{DrlAre, DrlCheckpoint, DrlConfig, Exploration};
pub use memory::{ReplayBuffer, SampleMemory, Transition};

use std::collections::VecDeque;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::env::{init_world, NodeSpec, Scenario, WorldState};
use crate::net::{entropy, raw_features, Mlp, NormStats, Sample};
use crate::optim::{repair, solve_global, OptimizerBudget, Solution};
use crate::placement::place_mobile_nodes;
use crate::problem::{avg_alloc_from, objective, Assignment, AvgAllocProfile, Instance, LOCAL};
use crate::{mix_seed, Error, Result};

/// Version written into every controller checkpoint.
pub const CHECKPOINT_VERSION: u32 = 1;

/// What a scheduler decided for one UE before repair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDecision {
    pub assoc: usize,
    pub fraction: f64,
    /// Association distribution; empty for schedulers without a network.
    pub probs: Vec<f64>,
}

/// The epoch register: inputs, raw outputs and the executed (repaired) assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSnapshot {
    pub epoch: u64,
    /// Raw (un-normalized) feature vector per UE.
    pub inputs: Vec<Vec<f64>>,
    pub avg_alloc: AvgAllocProfile,
    pub raw: Vec<RawDecision>,
    pub executed: Assignment,
    pub objective: f64,
}

impl EpochSnapshot {
    pub fn n_ues(&self) -> usize {
        self.raw.len()
    }

    /// Mean output entropy over the epoch's UEs, or `None` for network-free schedulers.
    pub fn mean_entropy(&self) -> Option<f64> {
        if self.raw.iter().any(|d| d.probs.is_empty()) {
            return None;
        }
        if self.raw.is_empty() {
            return Some(0.0);
        }
        Some(self.raw.iter().map(|d| entropy(&d.probs)).sum::<f64>() / self.raw.len() as f64)
    }

    /// Reciprocal of the epoch objective; zero for an empty epoch.
    pub fn reward(&self) -> f64 {
        reward(self.objective)
    }
}

pub fn reward(objective: f64) -> f64 {
    if objective > 0.0 {
        1.0 / objective
    } else {
        0.0
    }
}

/// What a learning step did.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LearnReport {
    /// The incremental-learning gate fired (DNN) or a policy update ran (DRL).
    pub updated: bool,
    pub train_loss: Option<f64>,
    pub optimizer_evals: u64,
}

pub trait Scheduler {
    fn name(&self) -> &str;

    fn decide(&mut self, world: &WorldState) -> Result<EpochSnapshot>;

    fn learn(&mut self, _world: &WorldState, _snapshot: &EpochSnapshot) -> Result<LearnReport> {
        Ok(LearnReport::default())
    }

    /// Mean loss of the scheduler's network on raw-feature samples.
    fn loss_on(&self, _samples: &[Sample]) -> Option<f64> {
        None
    }

    /// Loss on the scheduler's own training data as of the last `learn` call.
    fn train_loss(&self) -> Option<f64> {
        None
    }
}

/// Draws pre-training and normalization worlds: UEs from the scenario, nodes from a roster,
/// optionally re-placed by k-means.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldSampler {
    pub scenario: Scenario,
    pub roster: Vec<NodeSpec>,
    pub place_nodes: bool,
}

impl WorldSampler {
    pub fn sample(&self, n_ues: usize, seed: u64) -> Result<WorldState> {
        let mut world = init_world(&self.scenario, n_ues, &self.roster, seed)?;
        if self.place_nodes {
            world.nodes = place_mobile_nodes(&world, mix_seed(seed, 0x706c));
        }
        Ok(world)
    }
}

/// Rolling window of executed assignments, the source of the average-allocation feature.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AllocHistory {
    window: usize,
    recent: VecDeque<Assignment>,
}

impl AllocHistory {
    pub fn new(window: usize) -> Self {
        Self { window, recent: VecDeque::new() }
    }

    /// Profile from the stored epochs; full capacity for nodes nobody used.
    pub fn profile(&self, capacities: &[f64]) -> AvgAllocProfile {
        avg_alloc_from(self.recent.iter(), capacities)
    }

    pub fn push(&mut self, executed: &Assignment) {
        if self.window == 0 {
            return;
        }
        if self.recent.len() == self.window {
            self.recent.pop_front();
        }
        self.recent.push_back(executed.clone());
    }
}

/// Repair a raw association and materialize the per-node optimal split.
pub fn execute(inst: &Instance, raw_assoc: &[usize]) -> Assignment {
    let draft = Assignment { assoc: raw_assoc.to_vec(), alloc: vec![0.0; raw_assoc.len()] };
    inst.assignment(&repair(inst, &draft).assoc)
}

/// Fraction of the serving capacity granted to UE `i`: one for local execution.
pub fn fraction_of(inst: &Instance, asg: &Assignment, i: usize) -> f64 {
    match asg.assoc[i] {
        LOCAL => 1.0,
        code => (asg.alloc[i] / inst.capacities()[code - 1]).clamp(f64::MIN_POSITIVE, 1.0),
    }
}

pub fn features_for(world: &WorldState, avg_alloc: &AvgAllocProfile) -> Vec<Vec<f64>> {
    (0..world.n_ues()).map(|i| raw_features(&world.gains(i), &world.ues[i].task, avg_alloc.as_slice())).collect()
}

/// Raw-feature samples for every UE of `world` labelled by `solution`.
pub fn samples_from(inst: &Instance, inputs: &[Vec<f64>], solution: &Assignment) -> Vec<Sample> {
    inputs
        .iter()
        .enumerate()
        .map(|(i, x)| Sample {
            input: x.clone(),
            target_assoc: solution.assoc[i],
            target_fraction: fraction_of(inst, solution, i),
        })
        .collect()
}

/// Run the global optimizer on `world` and label each UE's state under `avg_alloc`.
pub fn label_world(
    world: &WorldState,
    avg_alloc: &AvgAllocProfile,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<(Vec<Sample>, Solution)> {
    let inst = Instance::new(world);
    let sol = solve_global(&inst, budget, seed)?;
    let inputs = features_for(world, avg_alloc);
    Ok((samples_from(&inst, &inputs, &sol.assignment), sol))
}

/// One forward pass per UE, argmax association, repair and optimal split.
pub(crate) fn net_decide(
    net: &Mlp,
    norm: &NormStats,
    history: &AllocHistory,
    world: &WorldState,
) -> Result<EpochSnapshot> {
    let inst = Instance::new(world);
    let avg_alloc = history.profile(inst.capacities());
    let inputs = features_for(world, &avg_alloc);
    let raw: Vec<RawDecision> = inputs
        .iter()
        .map(|x| {
            let out = net.forward(&norm.apply(x));
            RawDecision { assoc: out.argmax(), fraction: out.fraction, probs: out.assoc_probs }
        })
        .collect();
    let assoc: Vec<usize> = raw.iter().map(|d| d.assoc).collect();
    finish_snapshot(world, &inst, inputs, avg_alloc, raw, &assoc)
}

pub(crate) fn finish_snapshot(
    world: &WorldState,
    inst: &Instance,
    inputs: Vec<Vec<f64>>,
    avg_alloc: AvgAllocProfile,
    raw: Vec<RawDecision>,
    assoc: &[usize],
) -> Result<EpochSnapshot> {
    let executed = execute(inst, assoc);
    let objective = objective(world, &executed)?;
    Ok(EpochSnapshot { epoch: world.epoch, inputs, avg_alloc, raw, executed, objective })
}

pub(crate) fn normalized(norm: &NormStats, samples: &[Sample]) -> Vec<Sample> {
    samples.iter().map(|s| Sample { input: norm.apply(&s.input), ..s.clone() }).collect()
}

pub fn save_checkpoint<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(file, value)?;
    Ok(())
}

/// Load a checkpoint written by [`save_checkpoint`], checking its `version` field.
pub fn load_checkpoint<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("version").and_then(|v| v.as_u64()) {
        Some(v) if v == CHECKPOINT_VERSION as u64 => Ok(serde_json::from_value(value)?),
        Some(v) => Err(Error::Format(format!("unsupported checkpoint version {v}"))),
        None => Err(Error::Format("checkpoint has no version field".into())),
    }
}
