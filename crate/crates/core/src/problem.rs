//! Decision space and weighted-latency objective.
//!
//! An association code of `0` means local execution; code `j >= 1` means edge node `j - 1`
//! of the world's node list. Allocations are absolute CPU cycles per second.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::env::{UeState, WorldState};
use crate::sched::EpochSnapshot;
use crate::{Error, Result};

/// Association code for local execution.
pub const LOCAL: usize = 0;

/// Relative slack accepted on per-node capacity sums.
const CAPACITY_RTOL: f64 = 1e-9;

/// One association code and allocation per UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub assoc: Vec<usize>,
    pub alloc: Vec<f64>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.assoc.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assoc.is_empty()
    }

    /// Every UE executes locally with its own capacity.
    pub fn all_local(world: &WorldState) -> Self {
        Self {
            assoc: vec![LOCAL; world.n_ues()],
            alloc: world.ues.iter().map(|u| u.local_capacity_cps).collect(),
        }
    }
}

/// Per-node average allocation granted to each served UE over recent epochs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AvgAllocProfile(pub Vec<f64>);

impl AvgAllocProfile {
    /// Nothing observed yet: every node reports its full capacity.
    pub fn fallback(capacities: &[f64]) -> Self {
        Self(capacities.to_vec())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Where a task runs, for [`latency`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Execution {
    Local,
    Edge { rate_bps: f64 },
}

/// Unweighted latency of one task, seconds.
///
/// Local execution uses the UE's own capacity and ignores `f`.
pub fn latency(ue: &UeState, exec: Execution, f: f64) -> f64 {
    match exec {
        Execution::Local => ue.task.required_cycles / ue.local_capacity_cps,
        Execution::Edge { rate_bps } => ue.task.data_bits / rate_bps + ue.task.required_cycles / f,
    }
}

/// A broken constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// C1: the association vector is malformed or names a non-existent target.
    Association { ue: usize, code: usize, n_targets: usize },
    /// C1: vector lengths disagree with the UE count.
    Length { expected: usize, assoc: usize, alloc: usize },
    /// C2: UE outside the serving UAV's coverage.
    Coverage { ue: usize, node: usize, distance_m: f64, radius_m: f64 },
    /// C3: node oversubscribed.
    Capacity { node: usize, allocated: f64, capacity: f64 },
    /// C3: offloaded UE granted no compute.
    Allocation { ue: usize, alloc: f64 },
}

impl Violation {
    pub fn constraint(&self) -> &'static str {
        match self {
            Violation::Association { .. } | Violation::Length { .. } => "C1",
            Violation::Coverage { .. } => "C2",
            Violation::Capacity { .. } | Violation::Allocation { .. } => "C3",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.constraint())?;
        match self {
            Violation::Association { ue, code, n_targets } => {
                write!(f, "UE {ue}: association code {code} outside 0..{n_targets}")
            }
            Violation::Length { expected, assoc, alloc } => {
                write!(f, "expected {expected} entries, got assoc={assoc} alloc={alloc}")
            }
            Violation::Coverage { ue, node, distance_m, radius_m } => {
                write!(f, "UE {ue} is {distance_m:.2} m from node {node}, coverage {radius_m:.2} m")
            }
            Violation::Capacity { node, allocated, capacity } => {
                write!(f, "node {node} allocates {allocated:.4e} of {capacity:.4e} cycles/s")
            }
            Violation::Allocation { ue, alloc } => write!(f, "UE {ue} offloaded with allocation {alloc}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeasibilityReport {
    pub violations: Vec<Violation>,
}

impl FeasibilityReport {
    pub fn is_feasible(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for FeasibilityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("feasible");
        }
        for (k, v) in self.violations.iter().enumerate() {
            if k > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Check C1-C3 for `asg` against `world`.
pub fn feasible(world: &WorldState, asg: &Assignment) -> FeasibilityReport {
    let n = world.n_ues();
    let m = world.n_nodes();
    let mut violations = Vec::new();
    if asg.assoc.len() != n || asg.alloc.len() != n {
        violations.push(Violation::Length { expected: n, assoc: asg.assoc.len(), alloc: asg.alloc.len() });
        return FeasibilityReport { violations };
    }
    let mut used = vec![0.0; m];
    for (i, (&code, &f)) in asg.assoc.iter().zip(&asg.alloc).enumerate() {
        if code > m {
            violations.push(Violation::Association { ue: i, code, n_targets: m + 1 });
            continue;
        }
        if code == LOCAL {
            continue;
        }
        let j = code - 1;
        let node = &world.nodes[j];
        let ue = world.ues[i].position;
        if !node.covers(ue) {
            violations.push(Violation::Coverage {
                ue: i,
                node: j,
                distance_m: node.distance_3d(ue),
                radius_m: node.coverage_radius_m,
            });
        }
        if !(f > 0.0) || !f.is_finite() {
            violations.push(Violation::Allocation { ue: i, alloc: f });
        } else {
            used[j] += f;
        }
    }
    for (j, node) in world.nodes.iter().enumerate() {
        if used[j] > node.capacity_cps * (1.0 + CAPACITY_RTOL) {
            violations.push(Violation::Capacity { node: j, allocated: used[j], capacity: node.capacity_cps });
        }
    }
    FeasibilityReport { violations }
}

/// Total weighted latency of a feasible assignment, seconds.
pub fn objective(world: &WorldState, asg: &Assignment) -> Result<f64> {
    let report = feasible(world, asg);
    if !report.is_feasible() {
        return Err(Error::Infeasible(report.violations));
    }
    let total = asg
        .assoc
        .iter()
        .zip(&asg.alloc)
        .enumerate()
        .map(|(i, (&code, &f))| {
            let ue = &world.ues[i];
            let exec = if code == LOCAL {
                Execution::Local
            } else {
                Execution::Edge { rate_bps: world.rate(i, code - 1) }
            };
            ue.task.weight * latency(ue, exec, f)
        })
        .sum();
    Ok(total)
}

/// Split `capacity` among tasks to minimize `sum F_k / f_k`: `f_k = C sqrt(F_k) / sum sqrt(F_j)`.
pub fn optimal_split(cycles: &[f64], capacity: f64) -> Vec<f64> {
    let roots: Vec<f64> = cycles.iter().map(|f| f.sqrt()).collect();
    split_by_roots(&roots, capacity)
}

/// Weighted form minimizing `sum w_k F_k / f_k`; allocations scale with `sqrt(w_k F_k)`.
pub fn optimal_split_weighted(cycles: &[f64], weights: &[f64], capacity: f64) -> Vec<f64> {
    let roots: Vec<f64> = cycles.iter().zip(weights).map(|(f, w)| (w.max(1e-12) * f).sqrt()).collect();
    split_by_roots(&roots, capacity)
}

fn split_by_roots(roots: &[f64], capacity: f64) -> Vec<f64> {
    if roots.is_empty() {
        return Vec::new();
    }
    let total: f64 = roots.iter().sum();
    let mut out: Vec<f64> = roots.iter().map(|r| capacity * r / total).collect();
    // Push the rounding residue onto the largest share so the sum is C to the last ulp or so.
    let residue = capacity - out.iter().sum::<f64>();
    if let Some(k) = (0..out.len()).max_by(|&a, &b| out[a].total_cmp(&out[b])) {
        out[k] += residue;
    }
    out
}

/// Pooled per-node mean allocation over the executed assignments of `history`.
///
/// Nodes that served nobody report their full capacity.
pub fn compute_avg_alloc(history: &[EpochSnapshot], capacities: &[f64]) -> AvgAllocProfile {
    avg_alloc_from(history.iter().map(|s| &s.executed), capacities)
}

pub fn avg_alloc_from<'a>(assignments: impl IntoIterator<Item = &'a Assignment>, capacities: &[f64]) -> AvgAllocProfile {
    let m = capacities.len();
    let mut sum = vec![0.0; m];
    let mut count = vec![0usize; m];
    for asg in assignments {
        for (&code, &f) in asg.assoc.iter().zip(&asg.alloc) {
            if code != LOCAL && code <= m {
                sum[code - 1] += f;
                count[code - 1] += 1;
            }
        }
    }
    AvgAllocProfile(
        (0..m).map(|j| if count[j] == 0 { capacities[j] } else { sum[j] / count[j] as f64 }).collect(),
    )
}

/// A world flattened into per-(UE, node) cost tables for fast repeated evaluation.
///
/// For a fixed association the inner allocation is solved in closed form, so the objective is
/// `sum_local w F / f_loc + sum_off w D / r + sum_j (sum_{i on j} sqrt(w_i F_i))^2 / C_j`.
#[derive(Debug, Clone)]
pub struct Instance {
    n: usize,
    m: usize,
    cycles: Vec<f64>,
    weights: Vec<f64>,
    local_cap: Vec<f64>,
    /// `w F / f_loc` per UE.
    local_cost: Vec<f64>,
    /// `sqrt(w F)` per UE.
    root_wf: Vec<f64>,
    /// `w D / r` per (UE, node).
    comm_cost: Vec<f64>,
    covered: Vec<bool>,
    distance: Vec<f64>,
    capacity: Vec<f64>,
    allowed: Vec<Vec<usize>>,
}

impl Instance {
    pub fn new(world: &WorldState) -> Self {
        let n = world.n_ues();
        let m = world.n_nodes();
        let mut inst = Instance {
            n,
            m,
            cycles: Vec::with_capacity(n),
            weights: Vec::with_capacity(n),
            local_cap: Vec::with_capacity(n),
            local_cost: Vec::with_capacity(n),
            root_wf: Vec::with_capacity(n),
            comm_cost: Vec::with_capacity(n * m),
            covered: Vec::with_capacity(n * m),
            distance: Vec::with_capacity(n * m),
            capacity: world.nodes.iter().map(|nd| nd.capacity_cps).collect(),
            allowed: Vec::with_capacity(n),
        };
        for (i, ue) in world.ues.iter().enumerate() {
            let t = ue.task;
            inst.cycles.push(t.required_cycles);
            inst.weights.push(t.weight);
            inst.local_cap.push(ue.local_capacity_cps);
            inst.local_cost.push(t.weight * t.required_cycles / ue.local_capacity_cps);
            inst.root_wf.push((t.weight.max(1e-12) * t.required_cycles).sqrt());
            let mut allowed = vec![LOCAL];
            for (j, node) in world.nodes.iter().enumerate() {
                let rate = world.rate(i, j);
                inst.comm_cost.push(t.weight * t.data_bits / rate);
                let ok = node.covers(ue.position) && rate > 0.0;
                inst.covered.push(ok);
                inst.distance.push(node.distance_3d(ue.position));
                if ok {
                    allowed.push(j + 1);
                }
            }
            inst.allowed.push(allowed);
        }
        inst
    }

    pub fn n_ues(&self) -> usize {
        self.n
    }

    pub fn n_nodes(&self) -> usize {
        self.m
    }

    pub fn cycles(&self, i: usize) -> f64 {
        self.cycles[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn local_capacity(&self, i: usize) -> f64 {
        self.local_cap[i]
    }

    pub fn capacities(&self) -> &[f64] {
        &self.capacity
    }

    /// Association codes UE `i` may take without violating coverage.
    pub fn allowed(&self, i: usize) -> &[usize] {
        &self.allowed[i]
    }

    pub fn is_allowed(&self, i: usize, code: usize) -> bool {
        code == LOCAL || (code <= self.m && self.covered[i * self.m + code - 1])
    }

    /// 3-D distance from UE `i` to node `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distance[i * self.m + j]
    }

    /// `(M + 1)^N` as a float (it overflows integers quickly).
    pub fn space_size(&self) -> f64 {
        ((self.m + 1) as f64).powi(self.n as i32)
    }

    /// Weighted cost of UE `i` that does not depend on other UEs (local time or upload time).
    pub fn standalone_cost(&self, i: usize, code: usize) -> f64 {
        if code == LOCAL {
            self.local_cost[i]
        } else {
            self.comm_cost[i * self.m + code - 1]
        }
    }

    /// Closed-form objective of an association vector; infinite when a code is not allowed.
    pub fn evaluate(&self, assoc: &[usize]) -> f64 {
        debug_assert_eq!(assoc.len(), self.n);
        let mut node_roots = [0.0f64; 16];
        let mut heap;
        let roots: &mut [f64] = if self.m <= node_roots.len() {
            &mut node_roots[..self.m]
        } else {
            heap = vec![0.0; self.m];
            &mut heap
        };
        let mut total = 0.0;
        for (i, &code) in assoc.iter().enumerate() {
            if !self.is_allowed(i, code) {
                return f64::INFINITY;
            }
            total += self.standalone_cost(i, code);
            if code != LOCAL {
                roots[code - 1] += self.root_wf[i];
            }
        }
        for (s, c) in roots.iter().zip(&self.capacity) {
            total += s * s / c;
        }
        total
    }

    /// Materialize allocations for `assoc` with the per-node optimal split.
    pub fn assignment(&self, assoc: &[usize]) -> Assignment {
        let mut alloc = vec![0.0; self.n];
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); self.m];
        for (i, &code) in assoc.iter().enumerate() {
            if code == LOCAL {
                alloc[i] = self.local_cap[i];
            } else if code <= self.m {
                members[code - 1].push(i);
            }
        }
        for (j, ids) in members.iter().enumerate() {
            let cycles: Vec<f64> = ids.iter().map(|&i| self.cycles[i]).collect();
            let weights: Vec<f64> = ids.iter().map(|&i| self.weights[i]).collect();
            for (&i, f) in ids.iter().zip(optimal_split_weighted(&cycles, &weights, self.capacity[j])) {
                alloc[i] = f;
            }
        }
        Assignment { assoc: assoc.to_vec(), alloc }
    }

    /// Greedy baseline: nearest coverage-feasible node by 3-D distance, local if none covers.
    pub fn nearest_node_assoc(&self) -> Vec<usize> {
        (0..self.n)
            .map(|i| {
                (0..self.m)
                    .filter(|&j| self.covered[i * self.m + j])
                    .min_by(|&a, &b| self.distance(i, a).total_cmp(&self.distance(i, b)))
                    .map_or(LOCAL, |j| j + 1)
            })
            .collect()
    }

    /// Running per-node sums for O(1) move evaluation, see [`IncrementalObjective`].
    pub fn incremental(&self, assoc: &[usize]) -> IncrementalObjective<'_> {
        let mut roots = vec![0.0; self.m];
        let mut standalone = 0.0;
        for (i, &code) in assoc.iter().enumerate() {
            standalone += self.standalone_cost(i, code);
            if code != LOCAL {
                roots[code - 1] += self.root_wf[i];
            }
        }
        IncrementalObjective { inst: self, assoc: assoc.to_vec(), roots, standalone }
    }
}

/// An association vector with cached per-node root sums, so single-UE moves cost O(1).
#[derive(Debug, Clone)]
pub struct IncrementalObjective<'a> {
    inst: &'a Instance,
    assoc: Vec<usize>,
    roots: Vec<f64>,
    standalone: f64,
}

impl IncrementalObjective<'_> {
    pub fn assoc(&self) -> &[usize] {
        &self.assoc
    }

    pub fn value(&self) -> f64 {
        self.standalone + self.roots.iter().zip(&self.inst.capacity).map(|(s, c)| s * s / c).sum::<f64>()
    }

    /// Objective change if UE `i` moved to `code`.
    pub fn delta(&self, i: usize, code: usize) -> f64 {
        let from = self.assoc[i];
        if from == code {
            return 0.0;
        }
        let inst = self.inst;
        let r = inst.root_wf[i];
        let mut d = inst.standalone_cost(i, code) - inst.standalone_cost(i, from);
        if from != LOCAL {
            let (s, c) = (self.roots[from - 1], inst.capacity[from - 1]);
            d += ((s - r) * (s - r) - s * s) / c;
        }
        if code != LOCAL {
            let (s, c) = (self.roots[code - 1], inst.capacity[code - 1]);
            d += ((s + r) * (s + r) - s * s) / c;
        }
        d
    }

    pub fn apply(&mut self, i: usize, code: usize) {
        let from = self.assoc[i];
        if from == code {
            return;
        }
        let inst = self.inst;
        let r = inst.root_wf[i];
        self.standalone += inst.standalone_cost(i, code) - inst.standalone_cost(i, from);
        if from != LOCAL {
            self.roots[from - 1] -= r;
        }
        if code != LOCAL {
            self.roots[code - 1] += r;
        }
        self.assoc[i] = code;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{init_world, NodeSpec, Point, Scenario, Task};

    fn one_gs_world(n: usize) -> WorldState {
        let sc = Scenario::default();
        let nodes = vec![NodeSpec::ground_station(Point::new(25.0, 25.0), 50e9)];
        let mut w = init_world(&sc, n, &nodes, 1).unwrap();
        for ue in &mut w.ues {
            ue.task = Task { required_cycles: 1e9, data_bits: 1e6, weight: 1.0 };
        }
        w
    }

    #[test]
    fn latency_examples() {
        let w = one_gs_world(1);
        let ue = &w.ues[0];
        assert_eq!(latency(ue, Execution::Local, 123.0), 1.0);
        let edge = latency(ue, Execution::Edge { rate_bps: 2e6 }, 50e9);
        assert!((edge - 0.52).abs() < 1e-12);
        let mut dry = ue.clone();
        dry.task.data_bits = 0.0;
        assert_eq!(latency(&dry, Execution::Edge { rate_bps: 2e6 }, 50e9), 1e9 / 50e9);
    }

    #[test]
    fn all_local_sums_unit_latencies() {
        let w = one_gs_world(7);
        assert!((objective(&w, &Assignment::all_local(&w)).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn weight_scales_single_offload() {
        let mut w = one_gs_world(1);
        w.ues[0].task.weight = 2.0;
        let rate = w.rate(0, 0);
        let asg = Assignment { assoc: vec![1], alloc: vec![50e9] };
        let expected = 2.0 * (1e6 / rate + 1e9 / 50e9);
        assert!((objective(&w, &asg).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn oversubscribed_gs_reports_c3() {
        let w = one_gs_world(2);
        let asg = Assignment { assoc: vec![1, 1], alloc: vec![30e9, 30e9] };
        let rep = feasible(&w, &asg);
        assert!(!rep.is_feasible());
        assert!(matches!(rep.violations[0], Violation::Capacity { node: 0, .. }));
        assert_eq!(rep.violations[0].constraint(), "C3");
        assert!(matches!(objective(&w, &asg), Err(Error::Infeasible(_))));
    }

    #[test]
    fn out_of_coverage_reports_c2() {
        let sc = Scenario::default();
        let nodes = vec![NodeSpec::uav(Point::new(0.0, 0.0), 0.0, 15e9, 20.0)];
        let mut w = init_world(&sc, 1, &nodes, 0).unwrap();
        w.ues[0].position = Point::new(25.0, 0.0);
        let rep = feasible(&w, &Assignment { assoc: vec![1], alloc: vec![1e9] });
        assert_eq!(rep.violations.len(), 1);
        assert_eq!(rep.violations[0].constraint(), "C2");
        assert!(rep.to_string().contains("C2 UE 0"));
    }

    #[test]
    fn bad_code_and_length_report_c1() {
        let w = one_gs_world(2);
        let rep = feasible(&w, &Assignment { assoc: vec![0, 5], alloc: vec![1e9, 1e9] });
        assert_eq!(rep.violations[0].constraint(), "C1");
        let rep = feasible(&w, &Assignment { assoc: vec![0], alloc: vec![1e9] });
        assert!(matches!(rep.violations[0], Violation::Length { .. }));
    }

    #[test]
    fn all_local_always_feasible() {
        for seed in 0..20 {
            let sc = Scenario::default();
            let nodes = crate::env::default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 5.0);
            let w = init_world(&sc, 15, &nodes, seed).unwrap();
            assert!(feasible(&w, &Assignment::all_local(&w)).is_feasible());
        }
    }

    #[test]
    fn split_examples() {
        let f = optimal_split(&[1e9, 4e9], 50e9);
        assert!((f[0] - 50e9 / 3.0).abs() / 50e9 < 1e-12);
        assert!((f[1] - 100e9 / 3.0).abs() / 50e9 < 1e-12);
        assert_eq!(optimal_split(&[7e8], 15e9), vec![15e9]);
        for f in optimal_split(&[2e9; 5], 10e9) {
            assert!((f - 2e9).abs() < 1e-3);
        }
        assert!(optimal_split(&[], 1.0).is_empty());
    }

    #[test]
    fn avg_alloc_examples() {
        let caps = [50e9, 30e9];
        let a = Assignment { assoc: vec![1, 1, 0], alloc: vec![10e9, 20e9, 1e9] };
        assert_eq!(avg_alloc_from([&a], &caps).0, vec![15e9, 30e9]);
        assert_eq!(avg_alloc_from([], &caps).0, caps.to_vec());
        let b = Assignment { assoc: vec![1, 1], alloc: vec![5e9, 15e9] };
        let c = Assignment { assoc: vec![1, 1], alloc: vec![15e9, 25e9] };
        assert_eq!(avg_alloc_from([&b, &c], &caps).0[0], 15e9);
    }

    #[test]
    fn closed_form_matches_materialized_objective() {
        let sc = Scenario::default();
        let nodes = crate::env::default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 25.0);
        let w = init_world(&sc, 9, &nodes, 3).unwrap();
        let inst = Instance::new(&w);
        let assoc: Vec<usize> = (0..9).map(|i| inst.allowed(i)[i % inst.allowed(i).len()]).collect();
        let asg = inst.assignment(&assoc);
        let direct = objective(&w, &asg).unwrap();
        assert!((direct - inst.evaluate(&assoc)).abs() < 1e-9 * direct);
    }

    #[test]
    fn incremental_delta_matches_full_evaluation() {
        let sc = Scenario::default();
        let nodes = crate::env::default_roster(&sc, Point::new(25.0, 25.0), Default::default(), 1, 2, 30.0);
        let w = init_world(&sc, 12, &nodes, 8).unwrap();
        let inst = Instance::new(&w);
        let mut inc = inst.incremental(&inst.nearest_node_assoc());
        for i in 0..12 {
            for &code in inst.allowed(i) {
                let mut moved = inc.assoc().to_vec();
                moved[i] = code;
                let d = inc.delta(i, code);
                assert!((inc.value() + d - inst.evaluate(&moved)).abs() < 1e-9);
            }
            let code = *inst.allowed(i).last().unwrap();
            inc.apply(i, code);
            assert!((inc.value() - inst.evaluate(inc.assoc())).abs() < 1e-9);
        }
    }
}
