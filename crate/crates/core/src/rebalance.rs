//! Idle-vehicle rebalancing as a minimum-cost transportation problem.

use thiserror::Error;

use crate::zonegrid::{ZoneGrid, ZoneId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RebalanceError {
    #[error("net rebalancing rates do not balance: sum {sum:.3e} against total {total:.3e}")]
    Balance { sum: f64, total: f64 },
    #[error("expected {expected} net rates, got {got}")]
    Length { expected: usize, got: usize },
    #[error("net rate for zone {0} is not finite")]
    NotFinite(ZoneId),
    #[error("zone {0} cannot be rebalanced to itself")]
    SameZone(ZoneId),
    #[error("unknown zone {0}")]
    UnknownZone(usize),
    #[error("arc cost {from}->{to} must be finite and non-negative")]
    BadCost { from: ZoneId, to: ZoneId },
}

/// Travel time (hr) of an empty vehicle from a random point of zone i to a
/// random point of zone j. Aligned pairs add the lateral Φ/3.
pub fn rebalancing_cost(grid: &ZoneGrid, speed: f64, i: ZoneId, j: ZoneId) -> Result<f64, RebalanceError> {
    for z in [i, j] {
        if z.0 == 0 || z.0 > grid.len() {
            return Err(RebalanceError::UnknownZone(z.0));
        }
    }
    if i == j {
        return Err(RebalanceError::SameZone(i));
    }
    Ok(cost_idx(grid, speed, i.index(), j.index()))
}

fn cost_idx(grid: &ZoneGrid, speed: f64, i: usize, j: usize) -> f64 {
    let l = grid.distance_idx(i, j);
    match grid.dir_idx(i, j) {
        Some(d) if d.is_diagonal() => l / speed,
        _ => (l + grid.phi() / 3.0) / speed,
    }
}

/// Rebalancing flows b_ij (veh/hr) and the vehicles they keep busy.
#[derive(Debug, Clone, PartialEq)]
pub struct RebalancePlan {
    k: usize,
    /// Row-major K×K flows; the diagonal is zero.
    pub flows: Vec<f64>,
    /// Row-major K×K counts n_ij00 = b_ij × travel time.
    pub vehicles: Vec<f64>,
    /// M_b, the sum of `vehicles` (veh, equivalently veh-hr/hr).
    pub vehicle_hours: f64,
}

impl RebalancePlan {
    pub fn empty(k: usize) -> Self {
        RebalancePlan { k, flows: vec![0.0; k * k], vehicles: vec![0.0; k * k], vehicle_hours: 0.0 }
    }

    pub fn zones(&self) -> usize {
        self.k
    }

    pub fn flow(&self, i: ZoneId, j: ZoneId) -> f64 {
        self.flows[i.index() * self.k + j.index()]
    }

    /// Objective value Σ b_ij × cost_ij.
    pub fn objective(&self) -> f64 {
        self.vehicle_hours
    }

    pub fn net_outflow(&self, i: usize) -> f64 {
        let k = self.k;
        (0..k).map(|j| self.flows[i * k + j] - self.flows[j * k + i]).sum()
    }
}

/// Minimum-cost flows with net outflow ρ_i from each zone over the complete
/// zone digraph. Numerical drift in Σρ is removed by subtracting the mean;
/// drift beyond 1e-6 of Σ|ρ| is rejected.
pub fn solve_transportation(grid: &ZoneGrid, speed: f64, rho: &[f64]) -> Result<RebalancePlan, RebalanceError> {
    let total: f64 = rho.iter().map(|r| r.abs()).sum();
    solve_transportation_tol(grid, speed, rho, 1e-6 * total)
}

/// As [`solve_transportation`] with an explicit bound on |Σρ|, for callers
/// whose ρ carries solver error on a scale other than Σ|ρ|.
pub fn solve_transportation_tol(grid: &ZoneGrid, speed: f64, rho: &[f64], drift_tol: f64) -> Result<RebalancePlan, RebalanceError> {
    let k = grid.len();
    if rho.len() != k {
        return Err(RebalanceError::Length { expected: k, got: rho.len() });
    }
    let cost: Vec<f64> = (0..k * k)
        .map(|q| {
            let (i, j) = (q / k, q % k);
            if i == j {
                0.0
            } else {
                cost_idx(grid, speed, i, j)
            }
        })
        .collect();
    min_cost_transport(&cost, rho, drift_tol)
}

/// Minimum-cost flows over the complete digraph with row-major K×K arc
/// costs (diagonal ignored, off-diagonal non-negative).
pub fn min_cost_transport(cost: &[f64], rho: &[f64], drift_tol: f64) -> Result<RebalancePlan, RebalanceError> {
    let k = rho.len();
    if cost.len() != k * k {
        return Err(RebalanceError::Length { expected: k * k, got: cost.len() });
    }
    if let Some(q) = (0..k * k).find(|&q| q / k != q % k && !(cost[q].is_finite() && cost[q] >= 0.0)) {
        return Err(RebalanceError::BadCost { from: ZoneId::from_index(q / k), to: ZoneId::from_index(q % k) });
    }
    if let Some(i) = rho.iter().position(|r| !r.is_finite()) {
        return Err(RebalanceError::NotFinite(ZoneId::from_index(i)));
    }
    let total: f64 = rho.iter().map(|r| r.abs()).sum();
    let sum: f64 = rho.iter().sum();
    if total == 0.0 {
        return Ok(RebalancePlan::empty(k));
    }
    if sum.abs() > drift_tol {
        return Err(RebalanceError::Balance { sum, total });
    }
    let mean = sum / k as f64;
    let mut excess: Vec<f64> = rho.iter().map(|r| r - mean).collect();
    let eps = 1e-13 * total;

    // Ties between optimal plans lean toward lexicographically smaller flow
    // vectors: earlier arcs carry a slightly larger cost. The grading is
    // concave in the arc index so that swapping two assignments never ties,
    // and far below any real cost difference.
    let top = cost.iter().fold(0.0f64, |m, &c| m.max(c));
    let n = (k * k) as f64;
    let graded: Vec<f64> = cost
        .iter()
        .enumerate()
        .map(|(q, &c)| c + 1e-11 * top * ((n - q as f64) / n).sqrt())
        .collect();
    let mut flows = vec![0.0; k * k];

    // Successive shortest paths from all surplus zones at once. Forward arcs
    // are uncapacitated; a backward arc j→i carries at most the flow on i→j.
    loop {
        let sources: Vec<usize> = (0..k).filter(|&i| excess[i] > eps).collect();
        if sources.is_empty() || !(0..k).any(|i| excess[i] < -eps) {
            break;
        }
        let mut dist = vec![f64::INFINITY; k];
        let mut pred: Vec<Option<(usize, bool)>> = vec![None; k];
        for &s in &sources {
            dist[s] = 0.0;
        }
        for _ in 0..k {
            let mut changed = false;
            for u in 0..k {
                if !dist[u].is_finite() {
                    continue;
                }
                for w in (0..k).filter(|&w| w != u) {
                    let fwd = dist[u] + graded[u * k + w];
                    if fwd < dist[w] - 1e-15 {
                        dist[w] = fwd;
                        pred[w] = Some((u, true));
                        changed = true;
                    }
                    if flows[w * k + u] > eps {
                        let back = dist[u] - graded[w * k + u];
                        if back < dist[w] - 1e-15 {
                            dist[w] = back;
                            pred[w] = Some((u, false));
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                break;
            }
        }
        let Some(sink) = (0..k)
            .filter(|&i| excess[i] < -eps && dist[i].is_finite())
            .min_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b)))
        else {
            break;
        };

        let mut path = Vec::new();
        let mut node = sink;
        let mut amount = -excess[sink];
        while let Some((prev, forward)) = pred[node] {
            if !forward {
                amount = amount.min(flows[node * k + prev]);
            }
            path.push((prev, node, forward));
            node = prev;
        }
        amount = amount.min(excess[node]);
        for &(u, w, forward) in &path {
            if forward {
                flows[u * k + w] += amount;
            } else {
                flows[w * k + u] -= amount;
            }
        }
        excess[node] -= amount;
        excess[sink] += amount;
    }

    for i in 0..k {
        for j in (i + 1)..k {
            let both = flows[i * k + j].min(flows[j * k + i]);
            if both > 0.0 {
                flows[i * k + j] -= both;
                flows[j * k + i] -= both;
            }
        }
    }
    for f in flows.iter_mut() {
        if *f < eps {
            *f = 0.0;
        }
    }
    let vehicles: Vec<f64> = flows.iter().zip(cost).map(|(f, c)| f * c).collect();
    let vehicle_hours = vehicles.iter().sum();
    Ok(RebalancePlan { k, flows, vehicles, vehicle_hours })
}
