use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::net::Sample;
use crate::{Error, Result};

/// Fixed-capacity FIFO of labelled samples. Each sample carries a monotone sequence tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleMemory {
    capacity: usize,
    next_seq: u64,
    entries: VecDeque<(u64, Sample)>,
}

impl SampleMemory {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "memory capacity must be positive");
        Self { capacity, next_seq: 0, entries: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Append, evicting and returning the oldest entry when full.
    pub fn push(&mut self, sample: Sample) -> Option<(u64, Sample)> {
        let evicted = if self.entries.len() == self.capacity { self.entries.pop_front() } else { None };
        self.entries.push_back((self.next_seq, sample));
        self.next_seq += 1;
        evicted
    }

    pub fn samples(&self) -> impl Iterator<Item = &Sample> {
        self.entries.iter().map(|(_, s)| s)
    }

    pub fn seqs(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|(q, _)| *q)
    }

    pub fn get(&self, k: usize) -> &Sample {
        &self.entries[k].1
    }

    /// `k` samples drawn uniformly with replacement.
    pub fn sample_uniform<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<Sample> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        (0..k).map(|_| self.entries[rng.gen_range(0..self.entries.len())].1.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub seq: u64,
    /// Normalized state with the refined action as target.
    pub sample: Sample,
    pub priority: f64,
}

/// Fixed-capacity FIFO replay buffer with proportional prioritized sampling.
///
/// Entry `k` is drawn with probability `p_k^alpha / sum_l p_l^alpha`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    alpha: f64,
    next_seq: u64,
    entries: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, alpha: f64) -> Self {
        assert!(capacity > 0, "buffer capacity must be positive");
        Self { capacity, alpha, next_seq: 0, entries: VecDeque::with_capacity(capacity.min(1 << 16)) }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &Transition> {
        self.entries.iter()
    }

    pub fn get(&self, k: usize) -> &Transition {
        &self.entries[k]
    }

    pub fn push(&mut self, sample: Sample, priority: f64) -> Result<Option<Transition>> {
        if !(priority > 0.0 && priority.is_finite()) {
            return Err(Error::InvalidArgument(format!("replay priority must be positive and finite, got {priority}")));
        }
        let evicted = if self.entries.len() == self.capacity { self.entries.pop_front() } else { None };
        self.entries.push_back(Transition { seq: self.next_seq, sample, priority });
        self.next_seq += 1;
        Ok(evicted)
    }

    /// Sampling probability of entry `k`.
    pub fn probability(&self, k: usize) -> f64 {
        let total: f64 = self.entries.iter().map(|t| t.priority.powf(self.alpha)).sum();
        self.entries[k].priority.powf(self.alpha) / total
    }

    /// `k` entry indices drawn with replacement in proportion to `priority^alpha`.
    pub fn sample_indices<R: Rng>(&self, k: usize, rng: &mut R) -> Vec<usize> {
        if self.entries.is_empty() {
            return Vec::new();
        }
        let mut prefix = Vec::with_capacity(self.entries.len());
        let mut acc = 0.0;
        for t in &self.entries {
            acc += t.priority.powf(self.alpha);
            prefix.push(acc);
        }
        (0..k)
            .map(|_| {
                let u = rng.gen::<f64>() * acc;
                prefix.partition_point(|&c| c <= u).min(prefix.len() - 1)
            })
            .collect()
    }
}
