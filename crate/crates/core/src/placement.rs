//! Positions the mobile edge nodes each epoch by clustering UE locations.
//!
//! `k = n_uavs + n_gvs` k-means centroids are computed; the centroids closest to the road go to
//! the ground vehicles (projected onto the in-zone road segment), the rest become UAV ground
//! positions. Ground stations never move.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::env::{LineCoeffs, NodeKind, NodeSpec, Point, WorldState, Zone};
use crate::rng_for;

pub const KMEANS_MAX_ITERS: usize = 100;

/// Result of one k-means run.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Point>,
    pub labels: Vec<usize>,
    /// Within-cluster sum of squares after every assignment step.
    pub wcss_trace: Vec<f64>,
    pub iterations: usize,
}

/// k-means with k-means++ seeding; stops at an assignment fixed point or [`KMEANS_MAX_ITERS`].
///
/// With fewer distinct points than `k`, the distinct points become centroids and the rest are
/// placed at `fallback` (typically the zone center).
pub fn cluster_ues(points: &[Point], k: usize, seed: u64, fallback: Point) -> Clustering {
    assert!(k >= 1, "k must be at least 1");
    let mut distinct: Vec<Point> = Vec::new();
    for &p in points {
        if !distinct.contains(&p) {
            distinct.push(p);
        }
    }
    if distinct.len() < k {
        let mut centroids = distinct;
        centroids.resize(k, fallback);
        let labels = points.iter().map(|&p| nearest(&centroids, p)).collect();
        return Clustering { centroids, labels, wcss_trace: Vec::new(), iterations: 0 };
    }

    let mut rng = rng_for(seed, 0x6b6d);
    let mut centroids = plus_plus_init(&distinct, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    let mut wcss_trace = Vec::new();
    let mut iterations = 0;
    while iterations < KMEANS_MAX_ITERS {
        iterations += 1;
        let mut changed = false;
        let mut wcss = 0.0;
        for (l, &p) in labels.iter_mut().zip(points) {
            let c = nearest(&centroids, p);
            wcss += p.distance_sq(centroids[c]);
            if *l != c {
                *l = c;
                changed = true;
            }
        }
        wcss_trace.push(wcss);
        if !changed {
            break;
        }
        let mut sum = vec![Point::default(); k];
        let mut count = vec![0usize; k];
        for (&l, &p) in labels.iter().zip(points) {
            sum[l].x += p.x;
            sum[l].y += p.y;
            count[l] += 1;
        }
        for c in 0..k {
            // an emptied cluster keeps its previous centroid
            if count[c] > 0 {
                centroids[c] = Point::new(sum[c].x / count[c] as f64, sum[c].y / count[c] as f64);
            }
        }
    }
    Clustering { centroids, labels, wcss_trace, iterations }
}

fn nearest(centroids: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, &q) in centroids.iter().enumerate() {
        let d = p.distance_sq(q);
        if d < best_d {
            best_d = d;
            best = c;
        }
    }
    best
}

fn plus_plus_init<R: Rng>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut centroids = vec![*points.choose(rng).expect("non-empty")];
    while centroids.len() < k {
        let d2: Vec<f64> = points.iter().map(|&p| p.distance_sq(centroids[nearest(&centroids, p)])).collect();
        let total: f64 = d2.iter().sum();
        let mut pick = rng.gen::<f64>() * total;
        let mut chosen = points.len() - 1;
        for (i, d) in d2.iter().enumerate() {
            if *d > 0.0 && pick < *d {
                chosen = i;
                break;
            }
            pick -= d;
        }
        // guard against drawing an existing centroid through rounding
        if d2[chosen] == 0.0 {
            chosen = (0..points.len()).max_by(|&a, &b| d2[a].total_cmp(&d2[b])).unwrap();
        }
        centroids.push(points[chosen]);
    }
    centroids
}

/// Orthogonal projection onto the road, clamped to the part of the line inside the zone.
pub fn project_to_road(point: Point, road: LineCoeffs, zone: Zone) -> Point {
    let foot = road.project(point);
    let Some((p, q)) = road.clip_to(zone) else {
        return foot;
    };
    let (dx, dy) = (q.x - p.x, q.y - p.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p;
    }
    let t = (((foot.x - p.x) * dx + (foot.y - p.y) * dy) / len2).clamp(0.0, 1.0);
    if t == 0.0 {
        p
    } else if t == 1.0 {
        q
    } else {
        // Project once more from the clamped parameter so the residual stays at rounding level.
        road.project(Point::new(p.x + t * dx, p.y + t * dy))
    }
}

/// New node list with UAV and GV positions recomputed from the world's UE layout.
pub fn place_mobile_nodes(world: &WorldState, seed: u64) -> Vec<NodeSpec> {
    let mut nodes = world.nodes.clone();
    let gv_idx: Vec<usize> = (0..nodes.len()).filter(|&j| nodes[j].kind == NodeKind::Gv).collect();
    let uav_idx: Vec<usize> = (0..nodes.len()).filter(|&j| nodes[j].kind == NodeKind::Uav).collect();
    let k = gv_idx.len() + uav_idx.len();
    if k == 0 || world.ues.is_empty() {
        return nodes;
    }
    let sc = &world.scenario;
    let zone = sc.zone();
    let points: Vec<Point> = world.ues.iter().map(|u| u.position).collect();
    let clustering = cluster_ues(&points, k, seed, zone.center());

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        sc.road
            .distance(clustering.centroids[a])
            .total_cmp(&sc.road.distance(clustering.centroids[b]))
            .then(a.cmp(&b))
    });
    for (&j, &c) in gv_idx.iter().zip(&order) {
        nodes[j].position = project_to_road(clustering.centroids[c], sc.road, zone);
    }
    for (&j, &c) in uav_idx.iter().zip(&order[gv_idx.len()..]) {
        nodes[j].position = zone.clamp(clustering.centroids[c]);
        nodes[j].altitude = sc.uav_altitude_m;
    }
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{default_roster, init_world, Scenario, ROAD_TOLERANCE_M};

    fn zone() -> Zone {
        Zone { width: 50.0, height: 50.0 }
    }

    /// Minimum WCSS over every 2-partition, by enumeration.
    fn brute_force_two_means(points: &[Point]) -> Vec<Point> {
        let n = points.len();
        let mut best = (f64::INFINITY, vec![]);
        for mask in 1..(1u32 << n) - 1 {
            let mut groups = [vec![], vec![]];
            for (i, &p) in points.iter().enumerate() {
                groups[((mask >> i) & 1) as usize].push(p);
            }
            let cents: Vec<Point> = groups
                .iter()
                .map(|g| {
                    let s = g.iter().fold(Point::default(), |a, p| Point::new(a.x + p.x, a.y + p.y));
                    Point::new(s.x / g.len() as f64, s.y / g.len() as f64)
                })
                .collect();
            let cost: f64 =
                groups.iter().zip(&cents).map(|(g, c)| g.iter().map(|p| p.distance_sq(*c)).sum::<f64>()).sum();
            if cost < best.0 {
                best = (cost, cents);
            }
        }
        best.1
    }

    #[test]
    fn four_points_two_clusters() {
        let pts = [Point::new(0.0, 0.0), Point::new(0.0, 2.0), Point::new(10.0, 0.0), Point::new(10.0, 2.0)];
        let oracle = brute_force_two_means(&pts);
        let mut expected: Vec<(f64, f64)> = oracle.iter().map(|p| (p.x, p.y)).collect();
        expected.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(expected, vec![(0.0, 1.0), (10.0, 1.0)]);
        for seed in 0..10 {
            let c = cluster_ues(&pts, 2, seed, zone().center());
            let mut got: Vec<(f64, f64)> = c.centroids.iter().map(|p| (p.x, p.y)).collect();
            got.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(got, expected, "seed {seed}");
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = [Point::new(1.0, 2.0), Point::new(3.0, 8.0), Point::new(5.0, 5.0)];
        let c = cluster_ues(&pts, 1, 0, zone().center());
        assert!((c.centroids[0].x - 3.0).abs() < 1e-12 && (c.centroids[0].y - 5.0).abs() < 1e-12);
        let same = [Point::new(4.0, 4.0); 5];
        assert_eq!(cluster_ues(&same, 1, 0, zone().center()).centroids, vec![Point::new(4.0, 4.0)]);
    }

    #[test]
    fn too_few_distinct_points_fall_back() {
        let pts = [Point::new(1.0, 1.0), Point::new(1.0, 1.0), Point::new(2.0, 2.0)];
        let c = cluster_ues(&pts, 4, 0, zone().center());
        assert_eq!(c.centroids, vec![Point::new(1.0, 1.0), Point::new(2.0, 2.0), zone().center(), zone().center()]);
    }

    #[test]
    fn projection_of_origin() {
        let road = LineCoeffs::new(3.0, 2.0, -180.0);
        let unclamped = road.project(Point::new(0.0, 0.0));
        assert!((unclamped.x - 540.0 / 13.0).abs() < 1e-12);
        assert!((unclamped.y - 360.0 / 13.0).abs() < 1e-12);
        // Numeric cross-check: minimize distance along the line by golden-section search.
        let along = |t: f64| Point::new(t, (180.0 - 3.0 * t) / 2.0);
        let (mut lo, mut hi) = (-100.0, 200.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let a = hi - g * (hi - lo);
            let b = lo + g * (hi - lo);
            if along(a).norm() < along(b).norm() {
                hi = b;
            } else {
                lo = a;
            }
        }
        assert!((along(lo).x - unclamped.x).abs() < 1e-6);
        let p = project_to_road(Point::new(0.0, 0.0), road, zone());
        assert!((p.x - 540.0 / 13.0).abs() < 1e-9 && (p.y - 360.0 / 13.0).abs() < 1e-9);
    }

    #[test]
    fn on_line_point_is_fixed_and_outside_clamps() {
        let road = LineCoeffs::new(3.0, 2.0, -180.0);
        let on = Point::new(40.0, 30.0);
        let p = project_to_road(on, road, zone());
        assert!(p.distance(on) < 1e-12);
        // Foot of (50, 0) is x ~ 53.8, beyond the zone; clamp to the (50, 15) end.
        let p = project_to_road(Point::new(50.0, 0.0), road, zone());
        assert!((p.x - 50.0).abs() < 1e-9 && (p.y - 15.0).abs() < 1e-9);
    }

    #[test]
    fn gv_goes_to_the_centroid_nearest_the_road() {
        let sc = Scenario::default();
        let nodes = default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 25.0);
        let mut w = init_world(&sc, 30, &nodes, 1).unwrap();
        let blobs = [Point::new(5.0, 5.0), Point::new(5.0, 45.0), Point::new(45.0, 40.0)];
        for (i, ue) in w.ues.iter_mut().enumerate() {
            let b = blobs[i % 3];
            ue.position = Point::new(b.x + (i as f64 * 0.1) % 1.0, b.y + (i as f64 * 0.07) % 1.0);
        }
        let placed = place_mobile_nodes(&w, 9);
        assert_eq!(placed[0], nodes[0]);
        let gv = placed[1].position;
        assert!(sc.road.distance(gv) <= ROAD_TOLERANCE_M);
        assert!(gv.distance(Point::new(45.0, 40.0)) < 15.0, "gv at {gv:?}");
        for uav in &placed[2..] {
            let near_blob = blobs[..2].iter().any(|b| b.distance(uav.position) < 2.0);
            assert!(near_blob, "uav at {:?}", uav.position);
        }
        assert_eq!(placed, place_mobile_nodes(&w, 9));
    }

    #[test]
    fn lone_gv_is_projected_mean() {
        let sc = Scenario::default();
        let nodes = vec![NodeSpec::ground_vehicle(Point::new(40.0, 30.0), 30e9)];
        let w = init_world(&sc, 10, &nodes, 3).unwrap();
        let placed = place_mobile_nodes(&w, 0);
        let n = w.n_ues() as f64;
        let mean = w.ues.iter().fold(Point::default(), |a, u| Point::new(a.x + u.position.x / n, a.y + u.position.y / n));
        let expected = project_to_road(mean, sc.road, sc.zone());
        assert!(placed[0].position.distance(expected) < 1e-9);
    }
}
