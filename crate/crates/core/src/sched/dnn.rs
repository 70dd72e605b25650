//! Supervised controller: offline pre-training on optimizer-labelled worlds, then online
//! decisions with entropy-gated incremental fine-tuning over a FIFO sample memory.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{
    features_for, label_world, net_decide, samples_from, normalized, AllocHistory, EpochSnapshot, LearnReport, SampleMemory, Scheduler,
    WorldSampler, CHECKPOINT_VERSION,
};
use crate::env::WorldState;
use crate::net::{Mlp, NetConfig, NormStats, Sample, Sgd};
use crate::optim::OptimizerBudget;
use crate::problem::Instance;
use crate::{mix_seed, rng_for, Error, Result, SimRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DnnConfig {
    pub memory_capacity: usize,
    /// Mean-entropy gate in nats; `None` means `0.2 * ln(M + 1)`.
    pub entropy_threshold: Option<f64>,
    pub fine_tune_steps: usize,
    /// Disable to get the frozen (no incremental learning) variant.
    pub incremental: bool,
    pub pretrain_worlds: usize,
    /// Keep drawing worlds past `pretrain_worlds` until the corpus has this many samples.
    pub min_samples: usize,
    /// UE counts cycled through while drawing pre-training worlds.
    pub pretrain_ue_counts: Vec<usize>,
    /// Extra pre-training rounds that label worlds seen through the current network's own
    /// decisions and retrain on the grown corpus.
    pub rollout_rounds: usize,
    /// Fraction of the corpus held out to report a test loss after pre-training.
    pub holdout: f64,
    /// Epochs averaged into the allocation feature.
    pub history_window: usize,
}

impl Default for DnnConfig {
    fn default() -> Self {
        Self {
            memory_capacity: 5000,
            entropy_threshold: None,
            fine_tune_steps: 50,
            incremental: true,
            pretrain_worlds: 100,
            min_samples: 5000,
            pretrain_ue_counts: vec![10],
            rollout_rounds: 2,
            holdout: 0.2,
            history_window: 10,
        }
    }
}

impl DnnConfig {
    pub fn threshold(&self, n_nodes: usize) -> f64 {
        self.entropy_threshold.unwrap_or(0.2 * ((n_nodes + 1) as f64).ln())
    }

    pub fn validate(&self) -> Result<()> {
        if self.memory_capacity == 0 || self.pretrain_ue_counts.contains(&0) {
            return Err(Error::InvalidArgument("dnn: memory_capacity and pretrain_ue_counts must be >= 1".into()));
        }
        if self.pretrain_ue_counts.is_empty() {
            return Err(Error::InvalidArgument("dnn.pretrain_ue_counts is empty".into()));
        }
        if matches!(self.entropy_threshold, Some(t) if !(t > 0.0)) {
            return Err(Error::InvalidArgument("dnn.entropy_threshold must be > 0".into()));
        }
        if !(0.0..1.0).contains(&self.holdout) {
            return Err(Error::InvalidArgument("dnn.holdout must be in [0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainReport {
    pub worlds: usize,
    pub samples: usize,
    pub iterations: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
    /// Loss on the held-out part of the corpus; `None` when nothing was held out.
    pub test_loss: Option<f64>,
    pub optimizer_evals: u64,
}

/// Output of [`pretrain_dnn`]. `corpus` keeps raw (un-normalized) features.
#[derive(Debug, Clone, PartialEq)]
pub struct Pretrained {
    pub net: Mlp,
    pub norm: NormStats,
    pub corpus: Vec<Sample>,
    pub report: PretrainReport,
}

/// Label random worlds with the global optimizer and fit a network to the labels.
///
/// Worlds of the same UE count are labelled in sequence and each sees the allocation profile
/// of the solutions before it. Each rollout round then runs the current network over
/// `pretrain_worlds` fresh worlds, labels the inputs it saw and retrains from scratch.
pub fn pretrain_dnn(
    sampler: &WorldSampler,
    net_cfg: &NetConfig,
    cfg: &DnnConfig,
    budget: &OptimizerBudget,
    seed: u64,
) -> Result<Pretrained> {
    net_cfg.validate()?;
    cfg.validate()?;
    budget.validate()?;
    if cfg.pretrain_worlds == 0 {
        return Err(Error::InvalidArgument("pre-training needs at least one world".into()));
    }
    let mut corpus = Vec::new();
    let mut worlds = 0;
    let mut evals = 0;
    let mut histories: Vec<AllocHistory> = cfg.pretrain_ue_counts.iter().map(|_| AllocHistory::new(cfg.history_window)).collect();
    while worlds < cfg.pretrain_worlds || corpus.len() < cfg.min_samples {
        let group = worlds % cfg.pretrain_ue_counts.len();
        let n = cfg.pretrain_ue_counts[group];
        let world_seed = mix_seed(seed, worlds as u64);
        let world = sampler.sample(n, world_seed)?;
        let inst = Instance::new(&world);
        let sol = crate::optim::solve_global(&inst, budget, world_seed)?;
        let inputs = features_for(&world, &histories[group].profile(inst.capacities()));
        corpus.extend(samples_from(&inst, &inputs, &sol.assignment));
        histories[group].push(&sol.assignment);
        evals += sol.evals;
        worlds += 1;
    }

    let n_nodes = sampler.roster.len();
    let train_on = |corpus: &[Sample]| -> Result<(Mlp, NormStats, f64, f64, usize, Option<f64>)> {
        let norm = NormStats::fit(corpus.iter().map(|s| s.input.as_slice()))?;
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut rng = rng_for(seed, 0x7072);
        order.shuffle(&mut rng);
        let n_test = ((corpus.len() as f64) * cfg.holdout).floor() as usize;
        let pick = |ids: &[usize]| -> Vec<Sample> { normalized(&norm, &ids.iter().map(|&k| corpus[k].clone()).collect::<Vec<_>>()) };
        let test = pick(&order[..n_test]);
        let train = pick(&order[n_test..]);
        let mut net = Mlp::new(n_nodes, &net_cfg.hidden, mix_seed(seed, 0x696e));
        let mut opt = Sgd::from_config(net_cfg);
        let (initial_loss, final_loss, iterations) = fit(&mut net, &mut opt, &train, &test, net_cfg, &mut rng)?;
        let test_loss = (!test.is_empty()).then(|| net.loss(&test, net_cfg.fraction_weight));
        Ok((net, norm, initial_loss, final_loss, iterations, test_loss))
    };
    let (mut net, mut norm, mut initial_loss, mut final_loss, mut iterations, mut test_loss) = train_on(&corpus)?;
    for round in 0..cfg.rollout_rounds {
        let mut histories: Vec<AllocHistory> = cfg.pretrain_ue_counts.iter().map(|_| AllocHistory::new(cfg.history_window)).collect();
        for k in 0..cfg.pretrain_worlds {
            let group = k % cfg.pretrain_ue_counts.len();
            let n = cfg.pretrain_ue_counts[group];
            let world_seed = mix_seed(seed, ((round as u64 + 1) << 32) + k as u64);
            let world = sampler.sample(n, world_seed)?;
            let snap = net_decide(&net, &norm, &histories[group], &world)?;
            let inst = Instance::new(&world);
            let sol = crate::optim::solve_global(&inst, budget, world_seed)?;
            corpus.extend(samples_from(&inst, &snap.inputs, &sol.assignment));
            histories[group].push(&snap.executed);
            evals += sol.evals;
            worlds += 1;
        }
        (net, norm, initial_loss, final_loss, iterations, test_loss) = train_on(&corpus)?;
    }
    Ok(Pretrained {
        net,
        norm,
        report: PretrainReport { worlds, samples: corpus.len(), iterations, initial_loss, final_loss, test_loss, optimizer_evals: evals },
        corpus,
    })
}

/// Shuffled minibatch passes until the monitored loss plateaus or the iteration cap is reached.
///
/// The monitored loss is the held-out loss when `held_out` is non-empty, otherwise the pass loss;
/// the weights with the best monitored loss are kept. Returns the training loss before and after
/// and the number of passes run.
fn fit(
    net: &mut Mlp,
    opt: &mut Sgd,
    train: &[Sample],
    held_out: &[Sample],
    cfg: &NetConfig,
    rng: &mut SimRng,
) -> Result<(f64, f64, usize)> {
    let lambda = cfg.fraction_weight;
    let initial = net.loss(train, lambda);
    let monitor = |net: &Mlp, pass_loss: f64| if held_out.is_empty() { pass_loss } else { net.loss(held_out, lambda) };
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch = cfg.batch_size.min(train.len()).max(1);
    let mut best = (monitor(net, initial), net.clone());
    let mut since_best = 0;
    let mut iterations = 0;
    let mut buf = Vec::with_capacity(batch);
    while iterations < cfg.iterations {
        order.shuffle(rng);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            buf.clear();
            buf.extend(chunk.iter().map(|&k| train[k].clone()));
            total += opt.train_step(net, &buf)? * chunk.len() as f64;
        }
        iterations += 1;
        let watched = monitor(net, total / train.len() as f64);
        if watched < best.0 * (1.0 - 1e-6) {
            best = (watched, net.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.plateau_patience {
                break;
            }
        }
    }
    *net = best.1;
    Ok((initial, net.loss(train, lambda), iterations))
}

/// Serializable controller state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DnnCheckpoint {
    pub version: u32,
    pub net: Mlp,
    pub norm: NormStats,
    pub memory: SampleMemory,
    pub history: AllocHistory,
    pub pushes_since_fit: usize,
    pub updates: u64,
}

pub struct DnnAre {
    name: String,
    net: Mlp,
    norm: NormStats,
    memory: SampleMemory,
    history: AllocHistory,
    opt: Sgd,
    net_cfg: NetConfig,
    cfg: DnnConfig,
    budget: OptimizerBudget,
    seed: u64,
    pushes_since_fit: usize,
    updates: u64,
}

impl DnnAre {
    /// Deploy a pre-trained network; the memory is pre-filled with the newest corpus samples.
    pub fn new(pre: Pretrained, net_cfg: NetConfig, cfg: DnnConfig, budget: OptimizerBudget, seed: u64) -> Self {
        let mut memory = SampleMemory::new(cfg.memory_capacity);
        for s in pre.corpus {
            memory.push(s);
        }
        let cp = DnnCheckpoint {
            version: CHECKPOINT_VERSION,
            net: pre.net,
            norm: pre.norm,
            memory,
            history: AllocHistory::new(cfg.history_window),
            pushes_since_fit: 0,
            updates: 0,
        };
        Self::restore(cp, net_cfg, cfg, budget, seed)
    }

    pub fn restore(cp: DnnCheckpoint, net_cfg: NetConfig, cfg: DnnConfig, budget: OptimizerBudget, seed: u64) -> Self {
        let name = if cfg.incremental { "dnn-are" } else { "dnn-frozen" }.to_string();
        Self {
            name,
            opt: Sgd::from_config(&net_cfg),
            net: cp.net,
            norm: cp.norm,
            memory: cp.memory,
            history: cp.history,
            net_cfg,
            cfg,
            budget,
            seed,
            pushes_since_fit: cp.pushes_since_fit,
            updates: cp.updates,
        }
    }

    pub fn checkpoint(&self) -> DnnCheckpoint {
        DnnCheckpoint {
            version: CHECKPOINT_VERSION,
            net: self.net.clone(),
            norm: self.norm.clone(),
            memory: self.memory.clone(),
            history: self.history.clone(),
            pushes_since_fit: self.pushes_since_fit,
            updates: self.updates,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn net(&self) -> &Mlp {
        &self.net
    }

    pub fn norm(&self) -> &NormStats {
        &self.norm
    }

    pub fn memory(&self) -> &SampleMemory {
        &self.memory
    }

    /// Number of times the entropy gate has fired.
    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn threshold(&self) -> f64 {
        self.cfg.threshold(self.net.n_classes() - 1)
    }

    /// Mean loss over the whole memory.
    pub fn memory_loss(&self) -> f64 {
        let raw: Vec<Sample> = self.memory.samples().cloned().collect();
        self.net.loss(&normalized(&self.norm, &raw), self.net_cfg.fraction_weight)
    }

    /// Entropy gate, labelling, FIFO push and fine-tuning. A no-op when the mean entropy of the
    /// snapshot is at most the threshold.
    pub fn incremental_update(&mut self, world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        let Some(h) = snapshot.mean_entropy() else {
            return Ok(LearnReport::default());
        };
        if snapshot.n_ues() == 0 || h <= self.threshold() {
            return Ok(LearnReport::default());
        }
        let epoch_seed = mix_seed(self.seed, snapshot.epoch);
        let (samples, sol) = label_world(world, &snapshot.avg_alloc, &self.budget, epoch_seed)?;
        for s in samples {
            self.memory.push(s);
            self.pushes_since_fit += 1;
        }
        if 2 * self.pushes_since_fit >= self.memory.capacity() {
            let fresh = NormStats::fit(self.memory.samples().map(|s| s.input.as_slice()))?;
            self.norm.transfer(&fresh, &mut self.net)?;
            self.norm = fresh;
            self.pushes_since_fit = 0;
        }
        let mut rng = rng_for(epoch_seed, 0x6674);
        let batch = self.net_cfg.batch_size.min(self.memory.len());
        let mut loss = 0.0;
        for _ in 0..self.cfg.fine_tune_steps {
            let raw = self.memory.sample_uniform(batch, &mut rng);
            loss = self.opt.train_step(&mut self.net, &normalized(&self.norm, &raw))?;
        }
        self.updates += 1;
        Ok(LearnReport {
            updated: true,
            train_loss: (self.cfg.fine_tune_steps > 0).then_some(loss),
            optimizer_evals: sol.evals,
        })
    }
}

impl Scheduler for DnnAre {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&mut self, world: &WorldState) -> Result<EpochSnapshot> {
        net_decide(&self.net, &self.norm, &self.history, world)
    }

    fn learn(&mut self, world: &WorldState, snapshot: &EpochSnapshot) -> Result<LearnReport> {
        let report = if self.cfg.incremental { self.incremental_update(world, snapshot)? } else { LearnReport::default() };
        self.history.push(&snapshot.executed);
        Ok(report)
    }

    fn loss_on(&self, samples: &[Sample]) -> Option<f64> {
        Some(self.net.loss(&normalized(&self.norm, samples), self.net_cfg.fraction_weight))
    }

    fn train_loss(&self) -> Option<f64> {
        Some(self.memory_loss())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_roster, Point, Scenario};
    use crate::sched::RawDecision;

    fn sampler() -> WorldSampler {
        let sc = Scenario::default();
        let roster = default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 25.0);
        WorldSampler { scenario: sc, roster, place_nodes: true }
    }

    fn small_cfg() -> (NetConfig, DnnConfig, OptimizerBudget) {
        let net = NetConfig { hidden: vec![16], iterations: 60, ..Default::default() };
        let dnn = DnnConfig { pretrain_worlds: 8, min_samples: 0, memory_capacity: 100, fine_tune_steps: 5, ..Default::default() };
        let budget = OptimizerBudget { population: 20, generations: 20, ..Default::default() };
        (net, dnn, budget)
    }

    #[test]
    fn zero_worlds_is_an_error() {
        let (net, mut dnn, budget) = small_cfg();
        dnn.pretrain_worlds = 0;
        assert!(pretrain_dnn(&sampler(), &net, &dnn, &budget, 0).is_err());
    }

    #[test]
    fn pretraining_is_deterministic_and_learns() {
        let (net, dnn, budget) = small_cfg();
        let a = pretrain_dnn(&sampler(), &net, &dnn, &budget, 7).unwrap();
        let b = pretrain_dnn(&sampler(), &net, &dnn, &budget, 7).unwrap();
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.net, b.net);
        assert_eq!((a.report.worlds, a.report.samples), (24, 240));
        assert!(a.report.final_loss < a.report.initial_loss);
    }

    #[test]
    fn gate_is_a_noop_for_confident_outputs_and_fires_for_uniform_ones() {
        let (net_cfg, dnn, budget) = small_cfg();
        let s = sampler();
        let pre = pretrain_dnn(&s, &net_cfg, &dnn, &budget, 1).unwrap();
        let mut ctl = DnnAre::new(pre, net_cfg, DnnConfig { entropy_threshold: Some(0.8), ..dnn }, budget, 1);
        let world = s.sample(10, 99).unwrap();
        let mut snap = ctl.decide(&world).unwrap();
        let before = ctl.checkpoint();

        for d in &mut snap.raw {
            d.probs = vec![0.0; 5];
            d.probs[d.assoc] = 1.0;
        }
        assert!(!ctl.incremental_update(&world, &snap).unwrap().updated);
        assert_eq!(ctl.checkpoint(), before);

        for d in &mut snap.raw {
            *d = RawDecision { probs: vec![0.2; 5], ..d.clone() };
        }
        let r = ctl.incremental_update(&world, &snap).unwrap();
        assert!(r.updated && r.optimizer_evals > 0);
        assert_ne!(ctl.net(), &before.net);
        assert_eq!(ctl.memory().len(), 100);
        assert_eq!(ctl.memory().seqs().last(), before.memory.seqs().last().map(|s| s + 10));
    }

    #[test]
    fn decisions_are_feasible_and_repeatable_for_any_ue_count() {
        let (net_cfg, dnn, budget) = small_cfg();
        let s = sampler();
        let pre = pretrain_dnn(&s, &net_cfg, &dnn, &budget, 2).unwrap();
        let mut ctl = DnnAre::new(pre, net_cfg, dnn, budget, 2);
        for n in [1, 10, 37] {
            let w = s.sample(n, n as u64).unwrap();
            let a = ctl.decide(&w).unwrap();
            assert_eq!(a.raw.len(), n);
            assert_eq!(a, ctl.decide(&w).unwrap());
            assert!(crate::problem::feasible(&w, &a.executed).is_feasible());
        }
        let mut empty = s.sample(3, 0).unwrap();
        empty.resize_ues(0, &mut rng_for(0, 0));
        let snap = ctl.decide(&empty).unwrap();
        assert!(snap.raw.is_empty() && snap.objective == 0.0);
    }
}
