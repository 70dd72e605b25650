use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{features_for, finish_snapshot, fraction_of, AllocHistory, EpochSnapshot, LearnReport, RawDecision, Scheduler};
use crate::env::WorldState;
use crate::optim::{solve_global, OptimizerBudget};
use crate::problem::{Instance, LOCAL};
use crate::{mix_seed, rng_for, Result, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineKind {
    /// Uniform over local and every node able to serve the UE.
    Random,
    /// Nearest covering node by 3-D distance.
    Greedy,
    Local,
}

impl BaselineKind {
    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::Greedy => "greedy",
            BaselineKind::Local => "local",
        }
    }
}

pub struct Baseline {
    kind: BaselineKind,
    rng: SimRng,
    history: AllocHistory,
}

impl Baseline {
    pub fn new(kind: BaselineKind, seed: u64) -> Self {
        Self { kind, rng: rng_for(seed, 0x6273), history: AllocHistory::new(10) }
    }
}

impl Scheduler for Baseline {
    fn name(&self) -> &str {
        self.kind.name()
    }

    fn decide(&mut self, world: &WorldState) -> Result<EpochSnapshot> {
        let inst = Instance::new(world);
        let assoc: Vec<usize> = match self.kind {
            BaselineKind::Local => vec![LOCAL; inst.n_ues()],
            BaselineKind::Greedy => inst.nearest_node_assoc(),
            BaselineKind::Random => {
                (0..inst.n_ues()).map(|i| *inst.allowed(i).choose(&mut self.rng).expect("local always allowed")).collect()
            }
        };
        let avg_alloc = self.history.profile(inst.capacities());
        let inputs = features_for(world, &avg_alloc);
        let split = inst.assignment(&assoc);
        let raw = (0..assoc.len())
            .map(|i| RawDecision { assoc: assoc[i], fraction: fraction_of(&inst, &split, i), probs: Vec::new() })
            .collect();
        finish_snapshot(world, &inst, inputs, avg_alloc, raw, &assoc)
    }

    fn learn(&mut self, _world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        self.history.push(&snapshot.executed);
        Ok(LearnReport::default())
    }
}

/// Runs the global optimizer on every epoch; the reference the learners are measured against.
pub struct Oracle {
    budget: OptimizerBudget,
    seed: u64,
    history: AllocHistory,
    evals: u64,
}

impl Oracle {
    pub fn new(budget: OptimizerBudget, seed: u64) -> Self {
        Self { budget, seed, history: AllocHistory::new(10), evals: 0 }
    }
}

impl Scheduler for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn decide(&mut self, world: &WorldState) -> Result<EpochSnapshot> {
        let inst = Instance::new(world);
        let sol = solve_global(&inst, &self.budget, mix_seed(self.seed, world.epoch))?;
        self.evals = sol.evals;
        let avg_alloc = self.history.profile(inst.capacities());
        let inputs = features_for(world, &avg_alloc);
        let raw = (0..inst.n_ues())
            .map(|i| RawDecision { assoc: sol.assoc()[i], fraction: fraction_of(&inst, &sol.assignment, i), probs: Vec::new() })
            .collect();
        finish_snapshot(world, &inst, inputs, avg_alloc, raw, sol.assoc())
    }

    fn learn(&mut self, _world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        self.history.push(&snapshot.executed);
        Ok(LearnReport { optimizer_evals: self.evals, ..Default::default() })
    }
}
