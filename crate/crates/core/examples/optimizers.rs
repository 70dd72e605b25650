//! Solve one small instance three ways: exhaustive enumeration, the genetic heuristic and
//! simulated-annealing refinement from the nearest-node start.
//!
//! cargo run --release --example optimizers

use hmec::env::random_world;
use hmec::optim::{refine_action, solve_exhaustive, solve_heuristic, OptimizerBudget};
use hmec::problem::{feasible, optimal_split, Instance};

fn main() -> hmec::Result<()> {
    let world = random_world(5, 5, 4);
    let inst = Instance::new(&world);
    let budget = OptimizerBudget::default();

    let exact = solve_exhaustive(&inst, &budget)?;
    let ga = solve_heuristic(&inst, &budget, 1);
    let start = inst.nearest_node_assoc();
    let refined = refine_action(&inst, &start, &budget, 1);

    println!("search space {} associations", inst.space_size());
    println!("exhaustive  {:.4} s  {:?}  ({} evals)", exact.objective, exact.assoc(), exact.evals);
    println!("genetic     {:.4} s  {:?}  ({} evals)", ga.objective, ga.assoc(), ga.evals);
    println!("nearest     {:.4} s  {:?}", inst.evaluate(&start), start);
    println!("refined     {:.4} s  {:?}  ({} evals)", refined.objective, refined.assoc(), refined.evals);
    println!("exhaustive optimum feasible: {}", feasible(&world, &exact.assignment));

    let split = optimal_split(&[1e9, 4e9], 50e9);
    println!("split of 50e9 cycles/s over F = [1e9, 4e9]: [{:.4e}, {:.4e}]", split[0], split[1]);
    Ok(())
}
