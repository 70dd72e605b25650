//! Position UAVs at k-means centroids of the UEs and ground vehicles on the road.
//!
//! cargo run --release --example placement

use hmec::env::{default_roster, init_world, Point, RosterCapacities, Scenario};
use hmec::placement::{cluster_ues, place_mobile_nodes};

fn main() -> hmec::Result<()> {
    let sc = Scenario::default();
    let nodes = default_roster(&sc, Point::new(25.0, 25.0), RosterCapacities::default(), 1, 2, 25.0);
    let world = init_world(&sc, 40, &nodes, 3)?;

    let points: Vec<Point> = world.ues.iter().map(|u| u.position).collect();
    let c = cluster_ues(&points, 3, 11, sc.zone().center());
    println!("k-means: {} iterations, wcss {:.1} -> {:.1}", c.iterations, c.wcss_trace[0], c.wcss_trace.last().unwrap());

    for (before, after) in world.nodes.iter().zip(place_mobile_nodes(&world, 11)) {
        println!(
            "{:<3} ({:5.1}, {:5.1}) -> ({:5.1}, {:5.1})",
            after.kind, before.position.x, before.position.y, after.position.x, after.position.y
        );
    }
    Ok(())
}
