//! Steady-state equations of the queuing network.
//!
//! The unknowns are the seeker counts: n_i0i0 on the diagonal of a K×K
//! row-major vector and n_i0j0 off it. Given those, suitable counts, pickup
//! rates and assignment rates follow in closed form, and the cross-zone
//! flows follow from a triangular linear system: every cross-zone flow moves
//! one step closer to its destination, so processing zones in decreasing
//! distance to each destination solves it by forward substitution. What
//! remains is one conservation residual per seeker state.

mod newton;

pub use newton::*;

use crate::design::DesignVars;
use crate::matching::{
    local_fraction, per_vehicle_intensities, pickup_rates, suitable_counts, Intensities, MatchError, PickupRates,
    SeekerCounts, SuitableCounts,
};
use crate::scenario::Scenario;
use crate::states::{StateKind, StateSpace};
use crate::zonegrid::{Direction, ZoneGrid};

/// Mean pickup distance to the nearest of N suitable vehicles, in units of
/// Φ/√N.
pub const PICKUP_DISTANCE: f64 = 0.63;

/// Flows that cross zone borders, with the deliveries fed by them.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossZone {
    k: usize,
    /// c_i0i0
    pub enter_local: Vec<f64>,
    /// c_i0ii
    pub enter_local_pair: Vec<f64>,
    /// `[i][j]` = c_i0j0
    pub enter_remote: Vec<f64>,
    /// `[i][j]` = c_i0ij
    pub enter_local_remote: Vec<f64>,
    /// `[i][j][m]` = c_i0jm, m ∈ Ω̃_ij
    pub enter_pair: Vec<f64>,
    /// `[i][j]` = g_i0j0
    pub exit_remote: Vec<f64>,
    /// `[i][j][m]` = g_i0jm
    pub exit_pair: Vec<f64>,
    /// d_i0i0
    pub deliver_local: Vec<f64>,
    /// d_i0ii
    pub deliver_local_pair: Vec<f64>,
    /// `[i][j]` = d_i0ij
    pub deliver_local_remote: Vec<f64>,
}

impl CrossZone {
    fn zeros(k: usize) -> Self {
        CrossZone {
            k,
            enter_local: vec![0.0; k],
            enter_local_pair: vec![0.0; k],
            enter_remote: vec![0.0; k * k],
            enter_local_remote: vec![0.0; k * k],
            enter_pair: vec![0.0; k * k * k],
            exit_remote: vec![0.0; k * k],
            exit_pair: vec![0.0; k * k * k],
            deliver_local: vec![0.0; k],
            deliver_local_pair: vec![0.0; k],
            deliver_local_remote: vec![0.0; k * k],
        }
    }

    pub fn zones(&self) -> usize {
        self.k
    }
}

/// Zones `i2` upstream of `i` toward `j` with the share of their flow that
/// enters `i`.
fn upstream_shares<'a>(
    grid: &'a ZoneGrid,
    design: &'a DesignVars,
    i: usize,
    j: usize,
) -> impl Iterator<Item = (usize, f64)> + 'a {
    let steps = grid.steps(i, j);
    (0..4).filter_map(move |slot| {
        let up = grid.neighbor_idx(i, slot)?;
        if up == j || grid.steps(up, j) != steps + 1 {
            return None;
        }
        let share = design.frac_idx(grid, up, j, i);
        (share > 0.0).then_some((up, share))
    })
}

/// Solves the linear cross-zone block (border crossings, the deliveries
/// they feed, and the exponential exit rates) given pickups and
/// per-vehicle assignment intensities.
pub fn solve_cross_zone_linear(
    scenario: &Scenario,
    design: &DesignVars,
    pickups: &PickupRates,
    theta: &Intensities,
) -> CrossZone {
    let grid = scenario.grid();
    let k = grid.len();
    let t = scenario.phi() / scenario.speed();
    let mut cz = CrossZone::zeros(k);

    // Two-passenger vehicles, grouped by the closer destination j.
    for j in 0..k {
        let order = grid.upstream_order(j);
        for &i in &order {
            for &m in grid.omega_far_idx(i, j) {
                let inflow: f64 = upstream_shares(grid, design, i, j)
                    .map(|(up, share)| cz.exit_pair[(up * k + j) * k + m] * share)
                    .sum();
                let tri = (i * k + j) * k + m;
                cz.enter_pair[tri] = inflow;
                let mut picked = pickups.rr(i, j, m);
                if m != j {
                    picked += pickups.rr(i, m, j);
                }
                cz.exit_pair[tri] = inflow + picked;
            }
        }
        for up in grid_neighbors(grid, j) {
            let share = design.frac_idx(grid, up, j, j);
            if share == 0.0 {
                continue;
            }
            for &m in grid.omega_far_idx(up, j) {
                let flow = cz.exit_pair[(up * k + j) * k + m] * share;
                if m == j {
                    cz.enter_local_pair[j] += flow;
                } else {
                    cz.enter_local_remote[j * k + m] += flow;
                }
            }
        }
    }

    for i in 0..k {
        cz.deliver_local_pair[i] = cz.enter_local_pair[i] + pickups.local_local[i];
        for j in (0..k).filter(|&j| j != i) {
            cz.deliver_local_remote[i * k + j] =
                cz.enter_local_remote[i * k + j] + pickups.local_remote[i * k + j] + pickups.remote_local[i * k + j];
        }
    }

    // Single-seeker vehicles.
    for j in 0..k {
        for &i in &grid.upstream_order(j) {
            let pair = i * k + j;
            let inflow: f64 = upstream_shares(grid, design, i, j)
                .map(|(up, share)| cz.exit_remote[up * k + j] * share)
                .sum();
            cz.enter_remote[pair] = inflow;
            let th = theta.remote[pair];
            cz.exit_remote[pair] = inflow * (-th * t).exp()
                + (pickups.idle_remote[pair] + cz.deliver_local_remote[pair]) * (-th * t / 2.0).exp();
        }
        cz.enter_local[j] = grid_neighbors(grid, j)
            .map(|up| cz.exit_remote[up * k + j] * design.frac_idx(grid, up, j, j))
            .sum();
    }

    for i in 0..k {
        let th = theta.local[i];
        cz.deliver_local[i] = cz.enter_local[i] * (-th * 5.0 * t / 6.0).exp()
            + (pickups.idle_local[i] + cz.enter_local_pair[i]) * (-th * 2.0 * t / 3.0).exp()
            + pickups.local_local[i] * (-th * t / 2.0).exp();
    }
    cz
}

fn grid_neighbors(grid: &ZoneGrid, i: usize) -> impl Iterator<Item = usize> + '_ {
    (0..4).filter_map(move |slot| grid.neighbor_idx(i, slot))
}

/// Mean time in a state entered at the start of a window of length `t`
/// and left early at rate `theta`: (1 - e^{-θt})/θ.
fn holding(theta: f64, t: f64) -> f64 {
    let z = theta * t;
    if z < 1e-12 {
        t
    } else {
        -(-z).exp_m1() / theta
    }
}

/// Everything that follows in closed form from the seeker counts.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembled {
    pub counts: SuitableCounts,
    pub pickups: PickupRates,
    pub theta: Intensities,
    /// a_i000
    pub assign_idle: Vec<f64>,
    /// a_i0i0
    pub assign_local: Vec<f64>,
    /// `[i][j]` = a_i0j0
    pub assign_remote: Vec<f64>,
    pub cross: CrossZone,
    /// ρ_i = Σ_j (b_ij - b_ji), read off the idle-state balance.
    pub net_rebalance: Vec<f64>,
}

pub fn assemble(scenario: &Scenario, design: &DesignVars, x: &[f64]) -> Result<Assembled, MatchError> {
    let grid = scenario.grid();
    let k = grid.len();
    let local: Vec<f64> = (0..k).map(|i| x[i * k + i]).collect();
    let n = SeekerCounts { idle: &design.n_idle, local: &local, remote: x };
    let counts = suitable_counts(grid, n);
    let pickups = pickup_rates(scenario, &counts, n)?;
    let theta = per_vehicle_intensities(scenario, &counts)?;

    let mut assign_idle = vec![0.0; k];
    let mut assign_local = vec![0.0; k];
    let mut assign_remote = vec![0.0; k * k];
    for i in 0..k {
        assign_idle[i] = pickups.idle_local[i];
        assign_local[i] = pickups.local_local[i];
        for j in (0..k).filter(|&j| j != i) {
            assign_idle[i] += pickups.idle_remote[i * k + j];
            assign_local[i] += pickups.local_remote[i * k + j];
            assign_remote[i * k + j] =
                pickups.remote_local[i * k + j] + grid.omega_idx(i, j).iter().map(|&m| pickups.rr(i, j, m)).sum::<f64>();
        }
    }
    let cross = solve_cross_zone_linear(scenario, design, &pickups, &theta);
    let net_rebalance = (0..k).map(|i| cross.deliver_local[i] - assign_idle[i]).collect();
    Ok(Assembled { counts, pickups, theta, assign_idle, assign_local, assign_remote, cross, net_rebalance })
}

/// Conservation residuals at the seeker states, in flow units (veh/hr):
/// index i*K+i for (i,0,i,0) and i*K+j for (i,0,j,0).
pub fn residual(scenario: &Scenario, design: &DesignVars, x: &[f64]) -> Result<Vec<f64>, MatchError> {
    let a = assemble(scenario, design, x)?;
    Ok(flow_residual(scenario.zones(), &a))
}

fn flow_residual(k: usize, a: &Assembled) -> Vec<f64> {
    let (p, c) = (&a.pickups, &a.cross);
    let mut f = vec![0.0; k * k];
    for i in 0..k {
        f[i * k + i] = a.assign_local[i] + c.deliver_local[i] - c.enter_local[i] - c.deliver_local_pair[i] - p.idle_local[i];
        for j in (0..k).filter(|&j| j != i) {
            let q = i * k + j;
            f[q] = c.exit_remote[q] + a.assign_remote[q] - p.idle_remote[q] - c.enter_remote[q] - c.deliver_local_remote[q];
        }
    }
    f
}

/// The same balance in vehicle units: seeker count minus the count implied
/// by its inflows and exponential holding times. Equals the flow residual
/// divided by the per-vehicle assignment intensity, but stays well posed
/// when that intensity is zero.
pub fn count_residual(scenario: &Scenario, design: &DesignVars, x: &[f64]) -> Result<(Vec<f64>, Assembled), MatchError> {
    let a = assemble(scenario, design, x)?;
    let k = scenario.zones();
    let t = scenario.phi() / scenario.speed();
    let (p, c) = (&a.pickups, &a.cross);
    let mut f = vec![0.0; k * k];
    for i in 0..k {
        let th = a.theta.local[i];
        f[i * k + i] = x[i * k + i]
            - (c.enter_local[i] * holding(th, 5.0 * t / 6.0)
                + (p.idle_local[i] + c.enter_local_pair[i]) * holding(th, 2.0 * t / 3.0)
                + p.local_local[i] * holding(th, t / 2.0));
        for j in (0..k).filter(|&j| j != i) {
            let q = i * k + j;
            let th = a.theta.remote[q];
            f[q] = x[q]
                - (c.enter_remote[q] * holding(th, t)
                    + (p.idle_remote[q] + c.deliver_local_remote[q]) * holding(th, t / 2.0));
        }
    }
    Ok((f, a))
}

/// Counts of the states not solved for directly, from arrival rates and
/// mean state durations.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedCounts {
    k: usize,
    /// n_ii00
    pub assigned_empty: Vec<f64>,
    /// n_iii0
    pub assigned_local: Vec<f64>,
    /// `[i][j]` = n_iij0
    pub assigned_remote: Vec<f64>,
    /// n_i0ii
    pub full_local: Vec<f64>,
    /// `[i][j]` = n_i0ij
    pub full_local_remote: Vec<f64>,
    /// `[i][j][m]` = n_i0jm
    pub full_pair: Vec<f64>,
}

fn inv_pow_1_5(lambda: f64, big_n: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda / big_n.powf(1.5)
    }
}

pub fn little_law_counts(scenario: &Scenario, design: &DesignVars, a: &Assembled, x: &[f64]) -> DerivedCounts {
    let grid = scenario.grid();
    let k = grid.len();
    let (phi, v) = (scenario.phi(), scenario.speed());
    let lam = |i: usize, j: usize| scenario.lambda(i, j);
    let (nc, p, c) = (&a.counts, &a.pickups, &a.cross);
    let mut out = DerivedCounts {
        k,
        assigned_empty: vec![0.0; k],
        assigned_local: vec![0.0; k],
        assigned_remote: vec![0.0; k * k],
        full_local: vec![0.0; k],
        full_local_remote: vec![0.0; k * k],
        full_pair: vec![0.0; k * k * k],
    };
    for i in 0..k {
        let intra: Vec<f64> = (0..4).map(|s| inv_pow_1_5(lam(i, i), nc.intra[i][s])).collect();
        let inter = |j: usize| inv_pow_1_5(lam(i, j), nc.inter[i * k + j]);
        let others = || (0..k).filter(move |&j| j != i);

        let idle_sum: f64 = intra.iter().map(|v| v / 4.0).sum::<f64>() + others().map(inter).sum::<f64>();
        out.assigned_empty[i] = PICKUP_DISTANCE * phi * design.n_idle[i] / v * idle_sum;

        let mut local_sum = 0.0;
        for (s, d) in Direction::DIAGONAL.iter().enumerate() {
            local_sum += intra[s] / 9.0;
            local_sum += grid.group_idx(i, *d).iter().map(|&j| inter(j) / 2.0).sum::<f64>();
        }
        for d in Direction::CARDINAL {
            local_sum += grid.group_idx(i, d).iter().map(|&j| inter(j)).sum::<f64>();
        }
        out.assigned_local[i] = PICKUP_DISTANCE * phi * x[i * k + i] / (2.0 * v) * local_sum;

        for j in others() {
            let q = i * k + j;
            let mut sum: f64 = (0..4)
                .filter(|&s| grid.intra_dest_idx(i, s).contains(&j))
                .map(|s| intra[s] / 4.0)
                .sum();
            sum += grid.omega_idx(i, j).iter().map(|&m| inter(m)).sum::<f64>();
            out.assigned_remote[q] = PICKUP_DISTANCE * phi * x[q] / v * sum;

            out.full_local_remote[q] = c.enter_local_remote[q] * 5.0 * phi / (6.0 * v)
                + (p.local_remote[q] + p.remote_local[q]) * 2.0 * phi / (3.0 * v);

            for &m in grid.omega_far_idx(i, j) {
                let tri = q * k + m;
                let mut picked = p.rr(i, j, m);
                if m != j {
                    picked += p.rr(i, m, j);
                }
                out.full_pair[tri] = c.enter_pair[tri] * phi / v + picked * phi / (2.0 * v);
            }
        }
        out.full_local[i] = c.enter_local_pair[i] * 5.0 * phi / (8.0 * v) + p.local_local[i] * phi / (2.0 * v);
    }
    out
}

impl DerivedCounts {
    pub fn zones(&self) -> usize {
        self.k
    }
}

/// Fully solved steady state for one design.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    k: usize,
    pub n_idle: Vec<f64>,
    /// Row-major K×K: n_i0i0 on the diagonal, n_i0j0 off it.
    pub seekers: Vec<f64>,
    pub rates: Assembled,
    pub derived: DerivedCounts,
    /// Max-norm of the flow-form seeker residual.
    pub residual_norm: f64,
    pub iterations: usize,
}

impl FlowSolution {
    pub fn zones(&self) -> usize {
        self.k
    }

    pub fn net_rebalance(&self) -> &[f64] {
        &self.rates.net_rebalance
    }

    /// Active vehicles in zone i: every non-rebalancing state count.
    pub fn active_in_zone(&self, i: usize) -> f64 {
        let k = self.k;
        let d = &self.derived;
        let mut m = self.n_idle[i] + d.assigned_empty[i] + self.seekers[i * k + i] + d.assigned_local[i] + d.full_local[i];
        for j in (0..k).filter(|&j| j != i) {
            let q = i * k + j;
            m += self.seekers[q] + d.full_local_remote[q] + d.assigned_remote[q];
            m += d.full_pair[q * k..(q + 1) * k].iter().sum::<f64>();
        }
        m
    }

    /// Passenger-weighted active count in zone i.
    pub fn passengers_in_zone(&self, i: usize) -> f64 {
        let k = self.k;
        let d = &self.derived;
        let mut p = d.assigned_empty[i] + self.seekers[i * k + i] + 2.0 * (d.assigned_local[i] + d.full_local[i]);
        for j in (0..k).filter(|&j| j != i) {
            let q = i * k + j;
            p += self.seekers[q] + 2.0 * d.full_local_remote[q] + 2.0 * d.assigned_remote[q];
            p += 2.0 * d.full_pair[q * k..(q + 1) * k].iter().sum::<f64>();
        }
        p
    }

    /// Counts aligned with a state space; rebalancing entries are taken
    /// from `rebalancing[i*K+j]` when given.
    pub fn state_counts(&self, space: &StateSpace, rebalancing: Option<&[f64]>) -> Vec<f64> {
        let k = self.k;
        let d = &self.derived;
        space
            .states()
            .iter()
            .enumerate()
            .map(|(n, s)| {
                let i = s.s0.index();
                let z = |o: Option<crate::zonegrid::ZoneId>| o.map(|z| z.index());
                match space.kind(n) {
                    StateKind::Idle => self.n_idle[i],
                    StateKind::AssignedEmpty => d.assigned_empty[i],
                    StateKind::SeekerLocal => self.seekers[i * k + i],
                    StateKind::SeekerRemote => self.seekers[i * k + z(s.s2).unwrap()],
                    StateKind::AssignedWithSeekerLocal => d.assigned_local[i],
                    StateKind::AssignedWithSeekerRemote => d.assigned_remote[i * k + z(s.s2).unwrap()],
                    StateKind::FullLocalLocal => d.full_local[i],
                    StateKind::FullLocalRemote => d.full_local_remote[i * k + z(s.s3).unwrap()],
                    StateKind::FullRemoteRemote => d.full_pair[(i * k + z(s.s2).unwrap()) * k + z(s.s3).unwrap()],
                    StateKind::Rebalancing => rebalancing.map_or(0.0, |r| r[i * k + z(s.s1).unwrap()]),
                }
            })
            .collect()
    }
}

/// Every balance of the network re-derived from a solution's stored rates,
/// with assignment rates recomputed as intensity × count.
#[derive(Debug, Clone, PartialEq)]
pub struct BalanceCheck {
    pub max_abs: f64,
    pub max_rate: f64,
    pub worst: &'static str,
}

pub fn check_balances(scenario: &Scenario, design: &DesignVars, sol: &FlowSolution) -> BalanceCheck {
    let grid = scenario.grid();
    let k = grid.len();
    let r = &sol.rates;
    let (p, c, th) = (&r.pickups, &r.cross, &r.theta);
    let t = scenario.phi() / scenario.speed();
    let x = &sol.seekers;
    let mut worst = (0.0f64, "none");
    let mut max_rate = 0.0f64;
    let mut note = |name: &'static str, v: f64, scale: &[f64]| {
        for s in scale {
            max_rate = max_rate.max(s.abs());
        }
        if v.abs() > worst.0 {
            worst = (v.abs(), name);
        }
    };

    for i in 0..k {
        // Assignment rates recomputed from per-vehicle intensities.
        let mut idle_theta = 0.0;
        for s in 0..4 {
            if scenario.lambda(i, i) > 0.0 {
                idle_theta += scenario.lambda(i, i) / 4.0 / r.counts.intra[i][s];
            }
        }
        for j in (0..k).filter(|&j| j != i) {
            if scenario.lambda(i, j) > 0.0 {
                idle_theta += scenario.lambda(i, j) / r.counts.inter[i * k + j];
            }
        }
        let a_idle = idle_theta * sol.n_idle[i];
        let a_local = th.local[i] * x[i * k + i];

        note("idle", r.net_rebalance[i] + a_idle - c.deliver_local[i], &[a_idle, c.deliver_local[i]]);
        let picked_idle: f64 = p.idle_local[i] + (0..k).filter(|&j| j != i).map(|j| p.idle_remote[i * k + j]).sum::<f64>();
        note("assigned", picked_idle - a_idle, &[a_idle]);
        note(
            "seeker-local",
            a_local + c.deliver_local[i] - c.enter_local[i] - c.deliver_local_pair[i] - p.idle_local[i],
            &[a_local, c.enter_local[i], p.idle_local[i]],
        );
        let picked_local: f64 = p.local_local[i] + (0..k).filter(|&j| j != i).map(|j| p.local_remote[i * k + j]).sum::<f64>();
        note("assigned-local", picked_local - a_local, &[a_local]);
        note("full-local", c.deliver_local_pair[i] - p.local_local[i] - c.enter_local_pair[i], &[c.deliver_local_pair[i]]);

        let ups = |j: usize, target: usize| -> Vec<(usize, f64)> {
            grid_neighbors(grid, target)
                .filter(|&u| u != j && grid.steps(u, j) == grid.steps(target, j) + 1)
                .map(|u| (u, design.frac_idx(grid, u, j, target)))
                .collect()
        };
        let into_i = ups(i, i);
        let cross_local: f64 = into_i.iter().map(|&(u, s)| c.exit_remote[u * k + i] * s).sum();
        note("border-local", c.enter_local[i] - cross_local, &[c.enter_local[i]]);
        let cross_local_pair: f64 = into_i.iter().map(|&(u, s)| c.exit_pair[(u * k + i) * k + i] * s).sum();
        note("border-local-pair", c.enter_local_pair[i] - cross_local_pair, &[c.enter_local_pair[i]]);

        let th_i = th.local[i];
        let delivered = c.enter_local[i] * (-th_i * 5.0 * t / 6.0).exp()
            + (p.idle_local[i] + c.enter_local_pair[i]) * (-th_i * 2.0 * t / 3.0).exp()
            + p.local_local[i] * (-th_i * t / 2.0).exp();
        note("delivery", c.deliver_local[i] - delivered, &[delivered]);

        for j in (0..k).filter(|&j| j != i) {
            let q = i * k + j;
            let a_remote = th.remote[q] * x[q];
            note(
                "seeker-remote",
                c.exit_remote[q] + a_remote - p.idle_remote[q] - c.enter_remote[q] - c.deliver_local_remote[q],
                &[c.exit_remote[q], a_remote, p.idle_remote[q], c.enter_remote[q]],
            );
            let picked: f64 = p.remote_local[q] + grid.omega_idx(i, j).iter().map(|&m| p.rr(i, j, m)).sum::<f64>();
            note("assigned-remote", picked - a_remote, &[a_remote]);
            note(
                "full-local-remote",
                c.deliver_local_remote[q] - c.enter_local_remote[q] - p.local_remote[q] - p.remote_local[q],
                &[c.deliver_local_remote[q]],
            );
            let cross_remote: f64 = ups(j, i).iter().map(|&(u, s)| c.exit_remote[u * k + j] * s).sum();
            note("border-remote", c.enter_remote[q] - cross_remote, &[c.enter_remote[q]]);
            let cross_lr: f64 = into_i.iter().map(|&(u, s)| c.exit_pair[(u * k + i) * k + j] * s).sum();
            note("border-local-remote", c.enter_local_remote[q] - cross_lr, &[c.enter_local_remote[q]]);
            let th_q = th.remote[q];
            let exit = c.enter_remote[q] * (-th_q * t).exp()
                + (p.idle_remote[q] + c.deliver_local_remote[q]) * (-th_q * t / 2.0).exp();
            note("exit", c.exit_remote[q] - exit, &[exit]);
            for &m in grid.omega_far_idx(i, j) {
                let tri = q * k + m;
                let mut picked = p.rr(i, j, m);
                if m != j {
                    picked += p.rr(i, m, j);
                }
                note("full-pair", c.exit_pair[tri] - c.enter_pair[tri] - picked, &[c.exit_pair[tri]]);
                let cross_pair: f64 = ups(j, i).iter().map(|&(u, s)| c.exit_pair[(u * k + j) * k + m] * s).sum();
                note("border-pair", c.enter_pair[tri] - cross_pair, &[c.enter_pair[tri]]);
            }
        }
    }
    BalanceCheck { max_abs: worst.0, max_rate, worst: worst.1 }
}

/// Reduced system size: one residual per seeker state.
pub fn residual_len(grid: &ZoneGrid) -> usize {
    grid.len() * grid.len()
}

/// Occupancy-time seed for the seeker counts.
pub fn heuristic_guess(scenario: &Scenario) -> Vec<f64> {
    let k = scenario.zones();
    let t = scenario.phi() / scenario.speed();
    let mut x = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..k {
            x[i * k + j] = if i == j {
                scenario.lambda(i, i) * t / 8.0
            } else {
                0.5 * scenario.lambda(i, j) * t
            };
        }
    }
    x
}

/// Coefficient on n_i0i0 in N_ij, exposed for diagnostics.
pub fn local_seeker_fraction(grid: &ZoneGrid, i: usize, j: usize) -> f64 {
    local_fraction(grid, i, j)
}
