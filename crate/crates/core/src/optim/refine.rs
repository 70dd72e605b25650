//! Local action refinement around a feasible starting association.
//!
//! Simulated annealing over single-UE reassignment moves with Metropolis acceptance and
//! geometric cooling once per sweep of as many moves as there are movable UEs, tracking the
//! best point ever visited. When the full Hamming-1
//! neighbourhood has at most `knn_limit` members, the best point is then polished by
//! steepest-descent enumeration of that neighbourhood.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{better, OptimizerBudget, Solution};
use crate::problem::Instance;
use crate::{rng_for, SimRng};

const TEMP_PROBES: usize = 20;

/// Improve `start` without ever returning something worse.
///
/// A budget with `sa_steps == 0` returns `start` unchanged.
pub fn refine_action(inst: &Instance, start: &[usize], budget: &OptimizerBudget, seed: u64) -> Solution {
    let start_value = inst.evaluate(start);
    let mut evals = 1u64;
    if budget.sa_steps == 0 || inst.n_ues() == 0 {
        return Solution::from_assoc(inst, start.to_vec(), start_value, evals);
    }
    let mut rng = rng_for(seed, 0x7361);
    let movable: Vec<usize> = (0..inst.n_ues()).filter(|&i| inst.allowed(i).len() > 1).collect();
    if movable.is_empty() {
        return Solution::from_assoc(inst, start.to_vec(), start_value, evals);
    }

    let mut cur = inst.incremental(start);
    let mut best = (start_value, start.to_vec());

    let mut temp = initial_temperature(inst, &cur, &movable, &mut rng) * budget.sa_initial_temp;
    evals += TEMP_PROBES as u64;
    for step in 0..budget.sa_steps {
        let (i, code) = random_move(inst, cur.assoc(), &movable, &mut rng);
        let delta = cur.delta(i, code);
        evals += 1;
        if delta <= 0.0 || (temp > 0.0 && rng.gen::<f64>() < (-delta / temp).exp()) {
            cur.apply(i, code);
            let v = cur.value();
            if better((v, cur.assoc()), (best.0, &best.1)) {
                best = (v, cur.assoc().to_vec());
            }
        }
        if (step + 1) % movable.len() == 0 {
            temp *= budget.sa_cooling;
        }
    }

    let neighbourhood: usize = movable.iter().map(|&i| inst.allowed(i).len() - 1).sum();
    if neighbourhood <= budget.knn_limit {
        let (v, assoc, spent) = descend(inst, best.1);
        evals += spent;
        best = (v, assoc);
    }
    // Incremental values accumulate rounding.
    let value = inst.evaluate(&best.1).min(best.0);
    if value > start_value {
        return Solution::from_assoc(inst, start.to_vec(), start_value, evals);
    }
    Solution::from_assoc(inst, best.1, value, evals)
}

/// Standard deviation of objective changes over random single-UE moves.
fn initial_temperature(inst: &Instance, cur: &crate::problem::IncrementalObjective<'_>, movable: &[usize], rng: &mut SimRng) -> f64 {
    let deltas: Vec<f64> = (0..TEMP_PROBES)
        .map(|_| {
            let (i, code) = random_move(inst, cur.assoc(), movable, rng);
            cur.delta(i, code)
        })
        .collect();
    let mean = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let var = deltas.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / (deltas.len() - 1) as f64;
    let sd = var.sqrt();
    if sd > 0.0 {
        sd
    } else {
        1e-12 * cur.value().abs().max(1e-12)
    }
}

fn random_move(inst: &Instance, assoc: &[usize], movable: &[usize], rng: &mut SimRng) -> (usize, usize) {
    let i = *movable.choose(rng).expect("movable non-empty");
    let allowed = inst.allowed(i);
    let k = rng.gen_range(0..allowed.len() - 1);
    let pos = allowed.iter().position(|&c| c == assoc[i]).unwrap_or(allowed.len() - 1);
    let code = if k >= pos { allowed[k + 1] } else { allowed[k] };
    (i, code)
}

/// Steepest descent over the Hamming-1 neighbourhood until no move improves.
fn descend(inst: &Instance, start: Vec<usize>) -> (f64, Vec<usize>, u64) {
    let mut cur = inst.incremental(&start);
    let mut evals = 0u64;
    loop {
        let mut best_move: Option<(f64, usize, usize)> = None;
        for i in 0..inst.n_ues() {
            for &code in inst.allowed(i) {
                if code == cur.assoc()[i] {
                    continue;
                }
                let d = cur.delta(i, code);
                evals += 1;
                if d < -1e-15 * cur.value().abs() && best_move.is_none_or(|(bd, _, _)| d < bd) {
                    best_move = Some((d, i, code));
                }
            }
        }
        match best_move {
            Some((_, i, code)) => cur.apply(i, code),
            None => break,
        }
    }
    (inst.evaluate(cur.assoc()), cur.assoc().to_vec(), evals)
}

/// Uniform random exploration: `sa_steps` independent feasible association vectors,
/// keeping the best of them and `start`.
pub fn random_search(inst: &Instance, start: &[usize], budget: &OptimizerBudget, seed: u64) -> Solution {
    let mut rng = rng_for(seed, 0x7273);
    let mut best = (inst.evaluate(start), start.to_vec());
    let mut cand = vec![0usize; inst.n_ues()];
    for _ in 0..budget.sa_steps {
        for (i, c) in cand.iter_mut().enumerate() {
            *c = *inst.allowed(i).choose(&mut rng).expect("local always allowed");
        }
        let v = inst.evaluate(&cand);
        if v < best.0 {
            best = (v, cand.clone());
        }
    }
    Solution::from_assoc(inst, best.1, best.0, budget.sa_steps as u64 + 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optim::testutil::small_world;
    use crate::optim::{solve_exhaustive, solve_heuristic};

    fn random_start(inst: &Instance, seed: u64) -> Vec<usize> {
        let mut rng = rng_for(seed, 5);
        (0..inst.n_ues()).map(|i| *inst.allowed(i).choose(&mut rng).unwrap()).collect()
    }

    #[test]
    fn never_worse_and_optimum_is_kept() {
        let budget = OptimizerBudget::default();
        for seed in 0..20 {
            let inst = Instance::new(&small_world(seed, 4, 3));
            let exact = solve_exhaustive(&inst, &budget).unwrap();
            let r = refine_action(&inst, exact.assoc(), &budget, seed);
            assert!(r.objective <= exact.objective);
            let start = random_start(&inst, seed);
            let r = refine_action(&inst, &start, &budget, seed);
            assert!(r.objective <= inst.evaluate(&start));
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let inst = Instance::new(&small_world(2, 6, 4));
        let start = random_start(&inst, 2);
        let budget = OptimizerBudget { sa_steps: 0, ..Default::default() };
        assert_eq!(refine_action(&inst, &start, &budget, 0).assoc(), &start[..]);
    }

    #[test]
    fn reaches_exhaustive_optimum_on_tiny_instances() {
        let budget = OptimizerBudget::default();
        let mut hits = 0;
        for seed in 0..100 {
            let inst = Instance::new(&small_world(seed, 3, 2));
            let exact = solve_exhaustive(&inst, &budget).unwrap();
            let r = refine_action(&inst, &random_start(&inst, seed), &budget, seed);
            if r.objective <= exact.objective * (1.0 + 1e-12) {
                hits += 1;
            }
        }
        assert!(hits >= 90, "{hits}/100");
    }

    #[test]
    fn annealing_without_polish_still_improves_large_instances() {
        let budget = OptimizerBudget { knn_limit: 0, sa_steps: 2000, ..Default::default() };
        let inst = Instance::new(&small_world(9, 40, 4));
        let start = vec![0; 40];
        let r = refine_action(&inst, &start, &budget, 1);
        assert!(r.objective < inst.evaluate(&start));
        let ga = solve_heuristic(&inst, &OptimizerBudget::default(), 1);
        assert!(r.objective < 1.5 * ga.objective);
    }

    #[test]
    fn random_search_keeps_start_when_nothing_beats_it() {
        let inst = Instance::new(&small_world(3, 5, 3));
        let exact = solve_exhaustive(&inst, &OptimizerBudget::default()).unwrap();
        let r = random_search(&inst, exact.assoc(), &OptimizerBudget::default(), 0);
        assert_eq!(r.objective, exact.objective);
    }
}
