use super::{better, OptimizerBudget, Solution};
use crate::problem::Instance;
use crate::{Error, Result};

/// Enumerate every coverage-feasible association vector and return the best one.
///
/// Fails with [`Error::SearchSpaceTooLarge`] when `(M + 1)^N` exceeds `budget.max_evals`.
pub fn solve_exhaustive(inst: &Instance, budget: &OptimizerBudget) -> Result<Solution> {
    let size = inst.space_size();
    if size > budget.max_evals as f64 {
        return Err(Error::SearchSpaceTooLarge { size, budget: budget.max_evals });
    }
    let n = inst.n_ues();
    // mixed-radix counter over each UE's allowed codes
    let mut digits = vec![0usize; n];
    let mut assoc: Vec<usize> = (0..n).map(|i| inst.allowed(i)[0]).collect();
    let mut best = (inst.evaluate(&assoc), assoc.clone());
    let mut evals = 1u64;
    'outer: loop {
        let mut pos = 0;
        loop {
            if pos == n {
                break 'outer;
            }
            let allowed = inst.allowed(pos);
            digits[pos] += 1;
            if digits[pos] < allowed.len() {
                assoc[pos] = allowed[digits[pos]];
                break;
            }
            digits[pos] = 0;
            assoc[pos] = allowed[0];
            pos += 1;
        }
        let v = inst.evaluate(&assoc);
        evals += 1;
        if better((v, &assoc), (best.0, &best.1)) {
            best = (v, assoc.clone());
        }
    }
    Ok(Solution::from_assoc(inst, best.1, best.0, evals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{init_world, NodeSpec, Point, Scenario, Task};
    use crate::optim::testutil::small_world;
    use crate::problem::{objective, LOCAL};

    #[test]
    fn two_ues_one_gs_by_hand() {
        let sc = Scenario::default();
        let nodes = vec![NodeSpec::ground_station(Point::new(25.0, 25.0), 50e9)];
        let mut w = init_world(&sc, 2, &nodes, 0).unwrap();
        w.ues[0].position = Point::new(20.0, 25.0);
        w.ues[1].position = Point::new(0.0, 0.0);
        w.ues[0].task = Task { required_cycles: 1e9, data_bits: 5e5, weight: 1.0 };
        w.ues[1].task = Task { required_cycles: 0.6e9, data_bits: 1e6, weight: 1.0 };
        let inst = Instance::new(&w);
        let sol = solve_exhaustive(&inst, &OptimizerBudget::default()).unwrap();
        assert_eq!(sol.evals, 4);

        // hand summation of all four candidates
        let l = [1.0, 0.6];
        let c = [5e5 / w.rate(0, 0), 1e6 / w.rate(1, 0)];
        let cands = [
            ([0, 0], l[0] + l[1]),
            ([1, 0], c[0] + 1e9 / 50e9 + l[1]),
            ([0, 1], l[0] + c[1] + 0.6e9 / 50e9),
            ([1, 1], c[0] + c[1] + (1e9f64.sqrt() + 0.6e9f64.sqrt()).powi(2) / 50e9),
        ];
        let (best_assoc, best_val) =
            cands.iter().min_by(|a, b| a.1.partial_cmp(&b.1).unwrap()).map(|(a, v)| (a.to_vec(), *v)).unwrap();
        assert_eq!(sol.assoc(), &best_assoc[..]);
        assert!((sol.objective - best_val).abs() < 1e-12);
        assert!((objective(&w, &sol.assignment).unwrap() - best_val).abs() < 1e-9);
    }

    #[test]
    fn dominant_local_execution() {
        let sc = Scenario { ue_capacity_cps: 1e15, ..Default::default() };
        let w = small_world(4, 4, 3);
        let mut w = w;
        w.scenario = sc;
        for ue in &mut w.ues {
            ue.local_capacity_cps = 1e15;
        }
        let inst = Instance::new(&w);
        let sol = solve_exhaustive(&inst, &OptimizerBudget::default()).unwrap();
        assert!(sol.assoc().iter().all(|&a| a == LOCAL));
    }

    #[test]
    fn single_ue_takes_min_of_local_and_edge() {
        let sc = Scenario::default();
        let nodes = vec![NodeSpec::ground_station(Point::new(25.0, 25.0), 0.5e9)];
        let w = init_world(&sc, 1, &nodes, 2).unwrap();
        let inst = Instance::new(&w);
        let sol = solve_exhaustive(&inst, &OptimizerBudget::default()).unwrap();
        let local = inst.evaluate(&[0]);
        let edge = inst.evaluate(&[1]);
        assert_eq!(sol.objective, local.min(edge));
        if sol.assoc()[0] == 1 {
            assert_eq!(sol.assignment.alloc[0], 0.5e9);
        }
    }

    #[test]
    fn too_large_space_is_rejected() {
        let w = small_world(1, 8, 4);
        let err = solve_exhaustive(&Instance::new(&w), &OptimizerBudget::default()).unwrap_err();
        assert!(matches!(err, Error::SearchSpaceTooLarge { .. }));
    }
}
