//! The physical scenario: zone, edge nodes, moving UEs, their tasks and the radio channel.
//!
//! A [`WorldState`] is an immutable snapshot of one epoch. [`WorldState::step_mobility`]
//! produces the next epoch's world from an explicit generator, so a trajectory is fully
//! determined by the scenario and the seed of that generator.

mod channel;
mod geometry;

pub use channel::{link_rate, ChannelModel};
pub use geometry::{LineCoeffs, Point, Zone};

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::{rng_for, Error, Result, SimRng};

/// Tolerance on the road-line residual for ground vehicles, meters.
pub const ROAD_TOLERANCE_M: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TaskDistribution {
    pub cycles_min: f64,
    pub cycles_max: f64,
    pub data_bits_min: f64,
    pub data_bits_max: f64,
    pub weight: f64,
}

impl Default for TaskDistribution {
    fn default() -> Self {
        Self { cycles_min: 0.5e9, cycles_max: 1.5e9, data_bits_min: 1e5, data_bits_max: 1e6, weight: 1.0 }
    }
}

impl TaskDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Task {
        Task {
            required_cycles: uniform(rng, self.cycles_min, self.cycles_max),
            data_bits: uniform(rng, self.data_bits_min, self.data_bits_max),
            weight: self.weight,
        }
    }
}

/// When tasks are redrawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskChurn {
    /// Every UE gets a fresh task each epoch.
    #[default]
    PerEpoch,
    /// Tasks drawn once at creation are kept.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub zone_width: f64,
    pub zone_height: f64,
    pub epoch_seconds: f64,
    pub bandwidth_hz: f64,
    pub tx_power_watts: f64,
    pub noise_watts: f64,
    pub road: LineCoeffs,
    pub ue_max_speed: f64,
    pub ue_capacity_cps: f64,
    pub uav_altitude_m: f64,
    pub channel: ChannelModel,
    pub tasks: TaskDistribution,
    pub churn: TaskChurn,
    pub rng_seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            zone_width: 50.0,
            zone_height: 50.0,
            epoch_seconds: 3.0,
            bandwidth_hz: 1e6,
            tx_power_watts: 0.1,
            noise_watts: 1e-10,
            road: LineCoeffs::new(3.0, 2.0, -180.0),
            ue_max_speed: 1.0,
            ue_capacity_cps: 1e9,
            uav_altitude_m: 10.0,
            channel: ChannelModel::default(),
            tasks: TaskDistribution::default(),
            churn: TaskChurn::PerEpoch,
            rng_seed: 0,
        }
    }
}

impl Scenario {
    pub fn zone(&self) -> Zone {
        Zone { width: self.zone_width, height: self.zone_height }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("zone_width", self.zone_width),
            ("zone_height", self.zone_height),
            ("epoch_seconds", self.epoch_seconds),
            ("bandwidth_hz", self.bandwidth_hz),
            ("tx_power_watts", self.tx_power_watts),
            ("noise_watts", self.noise_watts),
            ("ue_capacity_cps", self.ue_capacity_cps),
            ("channel.reference_gain", self.channel.reference_gain),
            ("tasks.cycles_min", self.tasks.cycles_min),
            ("tasks.data_bits_min", self.tasks.data_bits_min),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidScenario(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !(self.ue_max_speed >= 0.0) || !(self.uav_altitude_m >= 0.0) || !(self.tasks.weight >= 0.0) {
            return Err(Error::InvalidScenario(
                "ue_max_speed, uav_altitude_m and tasks.weight must be non-negative".into(),
            ));
        }
        if self.tasks.cycles_max < self.tasks.cycles_min || self.tasks.data_bits_max < self.tasks.data_bits_min {
            return Err(Error::InvalidScenario("task ranges must satisfy min <= max".into()));
        }
        if self.channel.air_exponent <= 0.0 || self.channel.ground_exponent <= 0.0 {
            return Err(Error::InvalidScenario("path-loss exponents must be positive".into()));
        }
        if self.road.is_degenerate() {
            return Err(Error::InvalidScenario("road coefficients need a^2 + b^2 > 0".into()));
        }
        if self.road.clip_to(self.zone()).is_none() {
            return Err(Error::InvalidScenario("road line does not cross the zone".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Gs,
    Gv,
    Uav,
}

impl std::fmt::Display for NodeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NodeKind::Gs => "GS",
            NodeKind::Gv => "GV",
            NodeKind::Uav => "UAV",
        })
    }
}

/// An edge node. Ground stations and ground vehicles have unbounded coverage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub kind: NodeKind,
    pub position: Point,
    pub altitude: f64,
    pub capacity_cps: f64,
    pub coverage_radius_m: f64,
}

impl NodeSpec {
    pub fn ground_station(position: Point, capacity_cps: f64) -> Self {
        Self { kind: NodeKind::Gs, position, altitude: 0.0, capacity_cps, coverage_radius_m: f64::INFINITY }
    }

    pub fn ground_vehicle(position: Point, capacity_cps: f64) -> Self {
        Self { kind: NodeKind::Gv, position, altitude: 0.0, capacity_cps, coverage_radius_m: f64::INFINITY }
    }

    pub fn uav(position: Point, altitude: f64, capacity_cps: f64, coverage_radius_m: f64) -> Self {
        Self { kind: NodeKind::Uav, position, altitude, capacity_cps, coverage_radius_m }
    }

    /// 3-D distance to a UE on the ground.
    pub fn distance_3d(&self, ue: Point) -> f64 {
        self.position.distance(ue).hypot(self.altitude)
    }

    pub fn covers(&self, ue: Point) -> bool {
        self.distance_3d(ue) <= self.coverage_radius_m
    }

    fn validate(&self, index: usize, scenario: &Scenario) -> Result<()> {
        let fail = |reason: String| Err(Error::InvalidNode { index, reason });
        if !(self.capacity_cps > 0.0) {
            return fail(format!("capacity_cps must be positive, got {}", self.capacity_cps));
        }
        if !(self.coverage_radius_m > 0.0) {
            return fail(format!("coverage_radius_m must be positive, got {}", self.coverage_radius_m));
        }
        if !scenario.zone().contains(self.position) {
            return fail(format!("position ({}, {}) lies outside the zone", self.position.x, self.position.y));
        }
        if self.kind == NodeKind::Gv {
            let off = scenario.road.distance(self.position);
            if off > ROAD_TOLERANCE_M {
                return fail(format!("ground vehicle is {off:.3e} m off the road line"));
            }
        }
        Ok(())
    }
}

/// Per-UE workload: `F` cycles, `D` bits to upload when offloaded, latency weight `w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub required_cycles: f64,
    pub data_bits: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeState {
    pub position: Point,
    pub velocity: Point,
    pub waypoint: Point,
    pub local_capacity_cps: f64,
    pub task: Task,
}

/// One epoch of the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    pub scenario: Scenario,
    pub epoch: u64,
    pub ues: Vec<UeState>,
    pub nodes: Vec<NodeSpec>,
    /// Small-scale power factor per (UE, node), row-major; all ones unless Rayleigh fading is on.
    pub fading: Vec<f64>,
}

/// Build the epoch-0 world: UEs uniform over the zone with fresh tasks.
pub fn init_world(scenario: &Scenario, n_ues: usize, node_specs: &[NodeSpec], seed: u64) -> Result<WorldState> {
    let mut rng = rng_for(seed, 0);
    init_world_with(scenario, n_ues, node_specs, &mut rng)
}

/// [`init_world`] drawing from a caller-owned generator.
pub fn init_world_with(
    scenario: &Scenario,
    n_ues: usize,
    node_specs: &[NodeSpec],
    rng: &mut SimRng,
) -> Result<WorldState> {
    scenario.validate()?;
    if n_ues == 0 {
        return Err(Error::InvalidArgument("a world needs at least one UE".into()));
    }
    if node_specs.is_empty() {
        return Err(Error::InvalidArgument("a world needs at least one edge node".into()));
    }
    for (i, node) in node_specs.iter().enumerate() {
        node.validate(i, scenario)?;
    }
    let mut world = WorldState {
        scenario: scenario.clone(),
        epoch: 0,
        ues: Vec::with_capacity(n_ues),
        nodes: node_specs.to_vec(),
        fading: Vec::new(),
    };
    for _ in 0..n_ues {
        let ue = spawn_ue(scenario, rng);
        world.ues.push(ue);
    }
    world.redraw_fading(rng);
    Ok(world)
}

fn spawn_ue<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> UeState {
    let zone = scenario.zone();
    let position = random_point(zone, rng);
    let mut ue = UeState {
        position,
        velocity: Point::default(),
        waypoint: position,
        local_capacity_cps: scenario.ue_capacity_cps,
        task: scenario.tasks.sample(rng),
    };
    new_leg(&mut ue, scenario, rng);
    ue
}

/// Draw a fresh waypoint and speed for a random-waypoint leg.
fn new_leg<R: Rng + ?Sized>(ue: &mut UeState, scenario: &Scenario, rng: &mut R) {
    ue.waypoint = random_point(scenario.zone(), rng);
    // speed uniform in (0, max]
    let speed = scenario.ue_max_speed * (1.0 - rng.gen::<f64>());
    let dx = ue.waypoint.x - ue.position.x;
    let dy = ue.waypoint.y - ue.position.y;
    let len = dx.hypot(dy);
    ue.velocity = if len > 0.0 { Point::new(dx / len * speed, dy / len * speed) } else { Point::default() };
}

fn random_point<R: Rng + ?Sized>(zone: Zone, rng: &mut R) -> Point {
    Point::new(uniform(rng, 0.0, zone.width), uniform(rng, 0.0, zone.height))
}

fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

impl WorldState {
    pub fn n_ues(&self) -> usize {
        self.ues.len()
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// Channel gain between UE `i` and node `j`, fading included.
    pub fn gain(&self, i: usize, j: usize) -> f64 {
        let g = self.scenario.channel.gain(self.ues[i].position, &self.nodes[j]);
        (g * self.fading[i * self.nodes.len() + j]).min(1.0)
    }

    pub fn gains(&self, i: usize) -> Vec<f64> {
        (0..self.nodes.len()).map(|j| self.gain(i, j)).collect()
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        link_rate(self.gain(i, j), &self.scenario)
    }

    /// Advance one epoch: random-waypoint motion, clamping, task churn and fading.
    pub fn step_mobility(&self, rng: &mut SimRng) -> WorldState {
        let mut next = self.clone();
        next.epoch += 1;
        let sc = &self.scenario;
        let zone = sc.zone();
        for ue in &mut next.ues {
            let speed = ue.velocity.norm();
            let mut budget = speed * sc.epoch_seconds;
            let to_wp = ue.position.distance(ue.waypoint);
            if speed <= 0.0 || budget <= 0.0 {
                // stationary UEs keep their spot
            } else if to_wp <= budget {
                ue.position = ue.waypoint;
                budget = 0.0;
            } else {
                ue.position.x += ue.velocity.x / speed * budget;
                ue.position.y += ue.velocity.y / speed * budget;
            }
            let clamped = zone.clamp(ue.position);
            let arrived = ue.position == ue.waypoint && budget == 0.0;
            if clamped != ue.position || arrived {
                ue.position = clamped;
                new_leg(ue, sc, rng);
            }
            if sc.churn == TaskChurn::PerEpoch {
                ue.task = sc.tasks.sample(rng);
            }
        }
        next.redraw_fading(rng);
        next
    }

    /// Grow or shrink the UE population to `n`, keeping existing UEs in order.
    pub fn resize_ues(&mut self, n: usize, rng: &mut SimRng) {
        if n < self.ues.len() {
            self.ues.truncate(n);
            self.fading.truncate(n * self.nodes.len());
        } else {
            while self.ues.len() < n {
                let ue = spawn_ue(&self.scenario, rng);
                self.ues.push(ue);
            }
            self.redraw_fading(rng);
        }
    }

    fn redraw_fading(&mut self, rng: &mut SimRng) {
        let len = self.ues.len() * self.nodes.len();
        if self.scenario.channel.rayleigh {
            self.fading = (0..len).map(|_| Exp1.sample(rng)).collect();
        } else {
            self.fading = vec![1.0; len];
        }
    }

    /// Check every node against the scenario (zone, road, capacity, coverage).
    pub fn validate_nodes(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            node.validate(i, &self.scenario)?;
        }
        Ok(())
    }
}

/// Default roster: one GS at the given point, GVs spread along the in-zone road segment,
/// UAVs at evenly spaced points around the zone center.
pub fn default_roster(
    scenario: &Scenario,
    gs_position: Point,
    capacities: RosterCapacities,
    n_gvs: usize,
    n_uavs: usize,
    uav_coverage_m: f64,
) -> Vec<NodeSpec> {
    let mut nodes = vec![NodeSpec::ground_station(gs_position, capacities.gs)];
    if let Some((p, q)) = scenario.road.clip_to(scenario.zone()) {
        for k in 0..n_gvs {
            let t = (k as f64 + 1.0) / (n_gvs as f64 + 1.0);
            let at = Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y));
            nodes.push(NodeSpec::ground_vehicle(at, capacities.gv));
        }
    }
    let c = scenario.zone().center();
    let r = scenario.zone_width.min(scenario.zone_height) / 4.0;
    for k in 0..n_uavs {
        let angle = std::f64::consts::TAU * k as f64 / n_uavs.max(1) as f64;
        let at = scenario.zone().clamp(Point::new(c.x + r * angle.cos(), c.y + r * angle.sin()));
        nodes.push(NodeSpec::uav(at, scenario.uav_altitude_m, capacities.uav, uav_coverage_m));
    }
    nodes
}

/// A random small world for tests and demos: one GS at the zone center, then (for `m >= 2`) one
/// GV at a random road point, then UAVs at random positions with 30 m coverage.
pub fn random_world(seed: u64, n: usize, m: usize) -> WorldState {
    let sc = Scenario::default();
    let mut rng = rng_for(seed, 77);
    let (p, q) = sc.road.clip_to(sc.zone()).expect("default road crosses the zone");
    let mut nodes = vec![NodeSpec::ground_station(sc.zone().center(), 50e9)];
    for j in 1..m {
        if j == 1 {
            let t: f64 = rng.gen();
            nodes.push(NodeSpec::ground_vehicle(Point::new(p.x + t * (q.x - p.x), p.y + t * (q.y - p.y)), 30e9));
        } else {
            let at = Point::new(rng.gen_range(0.0..50.0), rng.gen_range(0.0..50.0));
            nodes.push(NodeSpec::uav(at, 10.0, 15e9, 30.0));
        }
    }
    init_world(&sc, n, &nodes, seed).expect("default scenario is valid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosterCapacities {
    pub gs: f64,
    pub gv: f64,
    pub uav: f64,
}

impl Default for RosterCapacities {
    fn default() -> Self {
        Self { gs: 50e9, gv: 30e9, uav: 15e9 }
    }
}
