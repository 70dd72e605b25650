//! Global sample generators and the local action-refinement engine.
//!
//! All searches run over association vectors only; allocations always come from the
//! closed-form per-node split (see [`Instance::assignment`]).

mod exhaustive;
mod genetic;
mod refine;
mod repair;

pub use exhaustive::solve_exhaustive;
pub use genetic::solve_heuristic;
pub use refine::{random_search, refine_action};
pub use repair::repair;

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::problem::{Assignment, Instance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    /// Exhaustive when the space fits in `max_evals`, otherwise heuristic.
    #[default]
    Auto,
    Exhaustive,
    Heuristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerBudget {
    pub tier: Tier,
    /// Largest search space the exhaustive tier will enumerate.
    pub max_evals: u64,
    pub population: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub tournament: usize,
    /// Multiplier on the auto-estimated starting temperature.
    pub sa_initial_temp: f64,
    pub sa_cooling: f64,
    pub sa_steps: usize,
    /// Neighbourhoods up to this size are also polished by full Hamming-1 enumeration.
    pub knn_limit: usize,
}

impl Default for OptimizerBudget {
    fn default() -> Self {
        Self {
            tier: Tier::Auto,
            max_evals: 4096,
            population: 60,
            generations: 100,
            crossover_rate: 0.9,
            tournament: 3,
            sa_initial_temp: 1.0,
            sa_cooling: 0.95,
            sa_steps: 500,
            knn_limit: 256,
        }
    }
}

impl OptimizerBudget {
    pub fn validate(&self) -> Result<()> {
        if self.max_evals < 1 {
            return Err(Error::InvalidArgument("optimizer.max_evals must be >= 1".into()));
        }
        if !(self.sa_cooling > 0.0 && self.sa_cooling < 1.0) {
            return Err(Error::InvalidArgument(format!("optimizer.sa_cooling must be in (0, 1), got {}", self.sa_cooling)));
        }
        if self.population < 2 || self.tournament < 1 {
            return Err(Error::InvalidArgument("optimizer.population must be >= 2 and tournament >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) || !(self.sa_initial_temp >= 0.0) {
            return Err(Error::InvalidArgument("optimizer.crossover_rate in [0, 1], sa_initial_temp >= 0".into()));
        }
        Ok(())
    }
}

/// An optimizer result: the association, its materialized allocation and its objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub assignment: Assignment,
    pub objective: f64,
    /// Objective evaluations spent (moves count as one each).
    pub evals: u64,
}

impl Solution {
    fn from_assoc(inst: &Instance, assoc: Vec<usize>, objective: f64, evals: u64) -> Self {
        Solution { assignment: inst.assignment(&assoc), objective, evals }
    }

    pub fn assoc(&self) -> &[usize] {
        &self.assignment.assoc
    }
}

/// Total order used for every "best" selection: objective, then lexicographic association.
pub(crate) fn better(a: (f64, &[usize]), b: (f64, &[usize])) -> bool {
    match a.0.total_cmp(&b.0) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.1 < b.1,
    }
}

/// Label an instance with the configured global tier.
pub fn solve_global(inst: &Instance, budget: &OptimizerBudget, seed: u64) -> Result<Solution> {
    match budget.tier {
        Tier::Exhaustive => solve_exhaustive(inst, budget),
        Tier::Heuristic => Ok(solve_heuristic(inst, budget, seed)),
        Tier::Auto if inst.space_size() <= budget.max_evals as f64 => solve_exhaustive(inst, budget),
        Tier::Auto => Ok(solve_heuristic(inst, budget, seed)),
    }
}
