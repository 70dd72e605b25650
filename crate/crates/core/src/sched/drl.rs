//! Reinforcement controller: the policy's repaired action is executed, action refinement improves
//! it into a training target stored with an improvement priority, and prioritized replay updates
//! the policy for the next epoch.

use serde::{Deserialize, Serialize};

use super::{
    features_for, fraction_of, net_decide, reward, AllocHistory, EpochSnapshot, LearnReport, ReplayBuffer, Scheduler,
    WorldSampler, CHECKPOINT_VERSION,
};
use crate::env::WorldState;
use crate::net::{Mlp, NetConfig, NormStats, Sample, Sgd};
use crate::optim::{random_search, refine_action, OptimizerBudget};
use crate::problem::{avg_alloc_from, Instance};
use crate::{mix_seed, rng_for, Error, Result};

/// How the stored target action is found from the executed one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Exploration {
    /// Simulated annealing plus neighbourhood polish.
    #[default]
    Refine,
    /// Best of uniformly random feasible association vectors.
    RandomSearch,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DrlConfig {
    pub buffer_capacity: usize,
    /// Transitions drawn from the buffer per epoch.
    pub batch_size: usize,
    /// Gradient-step size within the drawn batch.
    pub minibatch: usize,
    pub priority_alpha: f64,
    pub priority_epsilon: f64,
    pub exploration: Exploration,
    /// Greedy-labelled worlds used to fit the input normalization.
    pub norm_worlds: usize,
    pub norm_ue_counts: Vec<usize>,
    pub history_window: usize,
}

impl Default for DrlConfig {
    fn default() -> Self {
        Self {
            buffer_capacity: 10_000,
            batch_size: 1000,
            minibatch: 64,
            priority_alpha: 0.6,
            priority_epsilon: 1e-6,
            exploration: Exploration::Refine,
            norm_worlds: 50,
            norm_ue_counts: vec![10],
            history_window: 10,
        }
    }
}

impl DrlConfig {
    pub fn validate(&self) -> Result<()> {
        if self.buffer_capacity == 0 || self.batch_size == 0 || self.minibatch == 0 || self.norm_worlds == 0 {
            return Err(Error::InvalidArgument("drl: buffer_capacity, batch_size, minibatch, norm_worlds must be >= 1".into()));
        }
        if self.norm_ue_counts.is_empty() || self.norm_ue_counts.contains(&0) {
            return Err(Error::InvalidArgument("drl.norm_ue_counts must be non-empty and positive".into()));
        }
        if !(self.priority_alpha >= 0.0) || !(self.priority_epsilon > 0.0) {
            return Err(Error::InvalidArgument("drl: priority_alpha >= 0 and priority_epsilon > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrlCheckpoint {
    pub version: u32,
    pub net: Mlp,
    pub norm: NormStats,
    pub buffer: ReplayBuffer,
    pub history: AllocHistory,
}

pub struct DrlAre {
    name: String,
    net: Mlp,
    norm: NormStats,
    buffer: ReplayBuffer,
    history: AllocHistory,
    opt: Sgd,
    cfg: DrlConfig,
    budget: OptimizerBudget,
    seed: u64,
    last_loss: Option<f64>,
}

impl DrlAre {
    /// A freshly initialized policy. Normalization is fitted on worlds labelled by the
    /// nearest-node rule, so no optimizer runs before deployment.
    pub fn new(sampler: &WorldSampler, net_cfg: NetConfig, cfg: DrlConfig, budget: OptimizerBudget, seed: u64) -> Result<Self> {
        net_cfg.validate()?;
        cfg.validate()?;
        budget.validate()?;
        let mut rows = Vec::new();
        for k in 0..cfg.norm_worlds {
            let n = cfg.norm_ue_counts[k % cfg.norm_ue_counts.len()];
            let world = sampler.sample(n, mix_seed(seed ^ 0x6472, k as u64))?;
            let inst = Instance::new(&world);
            let greedy = inst.assignment(&inst.nearest_node_assoc());
            rows.extend(features_for(&world, &avg_alloc_from([&greedy], inst.capacities())));
        }
        let norm = NormStats::fit(rows.iter().map(|r| r.as_slice()))?;
        let net = Mlp::new(sampler.roster.len(), &net_cfg.hidden, mix_seed(seed, 0x706f));
        let cp = DrlCheckpoint {
            version: CHECKPOINT_VERSION,
            net,
            norm,
            buffer: ReplayBuffer::new(cfg.buffer_capacity, cfg.priority_alpha),
            history: AllocHistory::new(cfg.history_window),
        };
        Ok(Self::restore(cp, net_cfg, cfg, budget, seed))
    }

    pub fn restore(cp: DrlCheckpoint, net_cfg: NetConfig, cfg: DrlConfig, budget: OptimizerBudget, seed: u64) -> Self {
        let name = match cfg.exploration {
            Exploration::Refine => "drl-are",
            Exploration::RandomSearch => "drl-random",
        };
        Self {
            name: name.to_string(),
            opt: Sgd::from_config(&net_cfg),
            net: cp.net,
            norm: cp.norm,
            buffer: cp.buffer,
            history: cp.history,
            cfg,
            budget,
            seed,
            last_loss: None,
        }
    }

    pub fn checkpoint(&self) -> DrlCheckpoint {
        DrlCheckpoint {
            version: CHECKPOINT_VERSION,
            net: self.net.clone(),
            norm: self.norm.clone(),
            buffer: self.buffer.clone(),
            history: self.history.clone(),
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    /// Refine the executed action, store per-UE transitions and take one pass over a
    /// prioritized batch.
    pub fn update(&mut self, world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        if snapshot.n_ues() == 0 {
            return Ok(LearnReport::default());
        }
        let inst = Instance::new(world);
        let epoch_seed = mix_seed(self.seed, snapshot.epoch);
        let start = &snapshot.executed.assoc;
        let found = match self.cfg.exploration {
            Exploration::Refine => refine_action(&inst, start, &self.budget, epoch_seed),
            Exploration::RandomSearch => random_search(&inst, start, &self.budget, epoch_seed),
        };
        let priority = (reward(found.objective) - reward(inst.evaluate(start))).max(0.0) + self.cfg.priority_epsilon;
        for (i, x) in snapshot.inputs.iter().enumerate() {
            let sample = Sample {
                input: self.norm.apply(x),
                target_assoc: found.assignment.assoc[i],
                target_fraction: fraction_of(&inst, &found.assignment, i),
            };
            self.buffer.push(sample, priority)?;
        }

        let mut rng = rng_for(epoch_seed, 0x7065);
        let drawn = self.buffer.sample_indices(self.cfg.batch_size, &mut rng);
        let mut total = 0.0;
        let mut batch = Vec::with_capacity(self.cfg.minibatch);
        for chunk in drawn.chunks(self.cfg.minibatch) {
            batch.clear();
            batch.extend(chunk.iter().map(|&k| self.buffer.get(k).sample.clone()));
            total += self.opt.train_step(&mut self.net, &batch)? * chunk.len() as f64;
        }
        self.last_loss = Some(total / drawn.len() as f64);
        Ok(LearnReport {
            updated: true,
            train_loss: self.last_loss,
            optimizer_evals: found.evals,
        })
    }
}

impl Scheduler for DrlAre {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, world: &WorldState) -> Result<EpochSnapshot> {
        net_decide(&self.net, &self.norm, &self.history, world)
    }

    fn learn(&mut self, world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        let report = self.update(world, snapshot)?;
        self.history.push(&snapshot.executed);
        Ok(report)
    }

    fn loss_on(&self, samples: &[Sample]) -> Option<f64> {
        let normalized: Vec<Sample> = samples.iter().map(|s| Sample { input: self.norm.apply(&s.input), ..s.clone() }).collect();
        Some(self.net.loss(&normalized, self.opt.fraction_weight))
    }

    fn train_loss(&self) -> Option<f64> {
        self.last_loss
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_roster, Point, Scenario};

    fn setup(exploration: Exploration) -> (WorldSampler, DrlAre) {
        let sc = Scenario::default();
        let roster = default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 25.0);
        let sampler = WorldSampler { scenario: sc, roster, place_nodes: true };
        let net = NetConfig { hidden: vec![16], ..Default::default() };
        let cfg = DrlConfig { norm_worlds: 5, batch_size: 50, exploration, ..Default::default() };
        let ctl = DrlAre::new(&sampler, net, cfg, OptimizerBudget::default(), 3).unwrap();
        (sampler, ctl)
    }

    #[test]
    fn stored_targets_never_lose_reward() {
        for exploration in [Exploration::Refine, Exploration::RandomSearch] {
            let (sampler, mut ctl) = setup(exploration);
            for e in 0..5 {
                let w = sampler.sample(8, e).unwrap();
                let snap = ctl.decide(&w).unwrap();
                ctl.learn(&w, &snap).unwrap();
                let inst = Instance::new(&w);
                let stored: Vec<usize> =
                    ctl.buffer().entries().skip(ctl.buffer().len() - 8).map(|t| t.sample.target_assoc).collect();
                let raw = inst.evaluate(&snap.executed.assoc);
                assert!(inst.evaluate(&stored) <= raw);
                let p = ctl.buffer().get(ctl.buffer().len() - 1).priority;
                let expected = (reward(inst.evaluate(&stored)) - reward(raw)).max(0.0) + 1e-6;
                assert!((p - expected).abs() <= 1e-9 * p);
            }
            assert_eq!(ctl.buffer().len(), 40);
        }
    }

    #[test]
    fn refined_equal_to_raw_gives_epsilon_priority() {
        let (sampler, mut ctl) = setup(Exploration::Refine);
        ctl.budget.sa_steps = 0;
        let w = sampler.sample(5, 1).unwrap();
        let snap = ctl.decide(&w).unwrap();
        ctl.learn(&w, &snap).unwrap();
        assert!(ctl.buffer().entries().all(|t| t.priority == 1e-6));
    }

    #[test]
    fn checkpoint_round_trips_through_json() {
        let (sampler, mut ctl) = setup(Exploration::Refine);
        let w = sampler.sample(6, 2).unwrap();
        let snap = ctl.decide(&w).unwrap();
        ctl.learn(&w, &snap).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("drl.json");
        crate::sched::save_checkpoint(&path, &ctl.checkpoint()).unwrap();
        let back: DrlCheckpoint = crate::sched::load_checkpoint(&path).unwrap();
        assert_eq!(back, ctl.checkpoint());
    }
}
