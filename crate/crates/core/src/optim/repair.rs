use crate::problem::{optimal_split_weighted, Assignment, Instance, LOCAL};

/// Make an assignment feasible.
///
/// UEs with an invalid code or outside their node's coverage move to the nearest covering node
/// (local if none covers). Every node that ends up oversubscribed, or with a member holding a
/// non-positive allocation, is re-split with the closed-form rule. Feasible input is returned
/// unchanged.
pub fn repair(inst: &Instance, asg: &Assignment) -> Assignment {
    let n = inst.n_ues();
    let m = inst.n_nodes();
    let mut out = asg.clone();
    out.assoc.resize(n, LOCAL);
    out.alloc.resize(n, 0.0);
    let mut dirty = vec![false; m];

    for i in 0..n {
        let code = out.assoc[i];
        if inst.is_allowed(i, code) {
            continue;
        }
        let target = (0..m)
            .filter(|&j| inst.is_allowed(i, j + 1))
            .min_by(|&a, &b| inst.distance(i, a).total_cmp(&inst.distance(i, b)))
            .map_or(LOCAL, |j| j + 1);
        out.assoc[i] = target;
        match target {
            LOCAL => out.alloc[i] = inst.local_capacity(i),
            code => dirty[code - 1] = true,
        }
    }

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); m];
    for i in 0..n {
        if out.assoc[i] != LOCAL {
            members[out.assoc[i] - 1].push(i);
        }
    }
    for (j, ids) in members.iter().enumerate() {
        let used: f64 = ids.iter().map(|&i| out.alloc[i]).sum();
        let bad = ids.iter().any(|&i| !(out.alloc[i] > 0.0) || !out.alloc[i].is_finite());
        if dirty[j] || bad || used > inst.capacities()[j] * (1.0 + 1e-9) {
            let cycles: Vec<f64> = ids.iter().map(|&i| inst.cycles(i)).collect();
            let weights: Vec<f64> = ids.iter().map(|&i| inst.weight(i)).collect();
            for (&i, f) in ids.iter().zip(optimal_split_weighted(&cycles, &weights, inst.capacities()[j])) {
                out.alloc[i] = f;
            }
        }
    }
    out
}
