//! Integer-coded genetic algorithm over association vectors.
//!
//! Genes take values from each UE's coverage-feasible code set, so crossover and mutation never
//! produce a C2 violation. The initial population contains the all-local vector, the
//! nearest-node vector and random vectors; elitism keeps the best individual.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{better, OptimizerBudget, Solution};
use crate::problem::{Instance, LOCAL};
use crate::rng_for;

struct Individual {
    genes: Vec<usize>,
    fitness: f64,
}

pub fn solve_heuristic(inst: &Instance, budget: &OptimizerBudget, seed: u64) -> Solution {
    let n = inst.n_ues();
    if n == 0 {
        return Solution::from_assoc(inst, Vec::new(), 0.0, 0);
    }
    let mut rng = rng_for(seed, 0x6761);
    let mut evals = 0u64;
    let eval = |genes: Vec<usize>, evals: &mut u64| {
        *evals += 1;
        Individual { fitness: inst.evaluate(&genes), genes }
    };
    let random_genes = |rng: &mut crate::SimRng| -> Vec<usize> {
        (0..n).map(|i| *inst.allowed(i).choose(rng).expect("local is always allowed")).collect()
    };

    let pop_size = budget.population.max(2);
    let mut pop = Vec::with_capacity(pop_size);
    pop.push(eval(vec![LOCAL; n], &mut evals));
    pop.push(eval(inst.nearest_node_assoc(), &mut evals));
    while pop.len() < pop_size {
        let g = random_genes(&mut rng);
        pop.push(eval(g, &mut evals));
    }

    let mut best = best_of(&pop).clone_parts();
    let mutation = 1.0 / n as f64;
    for _ in 0..budget.generations {
        let mut next = Vec::with_capacity(pop_size);
        next.push(Individual { genes: best.1.clone(), fitness: best.0 });
        while next.len() < pop_size {
            let a = tournament(&pop, budget.tournament, &mut rng);
            let b = tournament(&pop, budget.tournament, &mut rng);
            let mut child = if rng.gen::<f64>() < budget.crossover_rate {
                (0..n).map(|i| if rng.gen::<bool>() { pop[a].genes[i] } else { pop[b].genes[i] }).collect()
            } else {
                pop[a].genes.clone()
            };
            for (i, g) in child.iter_mut().enumerate() {
                if rng.gen::<f64>() < mutation {
                    *g = *inst.allowed(i).choose(&mut rng).expect("non-empty");
                }
            }
            next.push(eval(child, &mut evals));
        }
        pop = next;
        let gen_best = best_of(&pop);
        if better((gen_best.fitness, &gen_best.genes), (best.0, &best.1)) {
            best = gen_best.clone_parts();
        }
    }
    Solution::from_assoc(inst, best.1, best.0, evals)
}

impl Individual {
    fn clone_parts(&self) -> (f64, Vec<usize>) {
        (self.fitness, self.genes.clone())
    }
}

fn best_of(pop: &[Individual]) -> &Individual {
    pop.iter()
        .reduce(|a, b| if better((b.fitness, &b.genes), (a.fitness, &a.genes)) { b } else { a })
        .expect("non-empty population")
}

fn tournament(pop: &[Individual], size: usize, rng: &mut crate::SimRng) -> usize {
    let mut winner = rng.gen_range(0..pop.len());
    for _ in 1..size {
        let c = rng.gen_range(0..pop.len());
        if better((pop[c].fitness, &pop[c].genes), (pop[winner].fitness, &pop[winner].genes)) {
            winner = c;
        }
    }
    winner
}
