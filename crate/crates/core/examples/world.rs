//! Build a world, inspect channel gains and uplink rates, then let UEs move for a few epochs.
//!
//! cargo run --release --example world

use hmec::env::{default_roster, init_world, Point, RosterCapacities, Scenario};
use hmec::rng_for;

fn main() -> hmec::Result<()> {
    let sc = Scenario::default();
    let nodes = default_roster(&sc, Point::new(25.0, 25.0), RosterCapacities::default(), 1, 2, 25.0);
    let mut world = init_world(&sc, 5, &nodes, 7)?;

    for (j, n) in world.nodes.iter().enumerate() {
        println!("node {j}: {} at ({:.1}, {:.1}) alt {:.0} m, {:.1e} cycles/s", n.kind, n.position.x, n.position.y, n.altitude, n.capacity_cps);
    }
    for (i, ue) in world.ues.iter().enumerate() {
        let rates: Vec<String> = (0..world.n_nodes()).map(|j| format!("{:.2}", world.rate(i, j) / 1e6)).collect();
        println!(
            "ue {i} at ({:.1}, {:.1}): F {:.2e} cycles, D {:.2e} bits, rates [{}] Mbit/s",
            ue.position.x,
            ue.position.y,
            ue.task.required_cycles,
            ue.task.data_bits,
            rates.join(", ")
        );
    }

    let mut rng = rng_for(7, 1);
    for _ in 0..3 {
        world = world.step_mobility(&mut rng);
        let p = world.ues[0].position;
        println!("epoch {}: ue 0 at ({:.2}, {:.2})", world.epoch, p.x, p.y);
    }
    Ok(())
}
