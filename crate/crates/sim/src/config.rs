//! Simulation inputs, outputs and the event log.

use std::io::Write;

use rideshare_core::optimize::Evaluation;
use rideshare_core::{DesignVars, Scenario, StateKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("horizon {horizon} h must exceed warmup {warmup} h, and warmup must be non-negative")]
    Window { horizon: f64, warmup: f64 },
    #[error("demand scale must be finite and non-negative, got {0}")]
    DemandScale(f64),
    #[error("fleet must hold at least one vehicle")]
    NoFleet,
    #[error("initial placement puts {placed} vehicles in {zones} zones for a fleet of {fleet}")]
    Placement { placed: usize, zones: usize, fleet: usize },
    #[error("expected {expected} rebalancing rates, got {got}")]
    RebalanceLength { expected: usize, got: usize },
    #[error("rebalancing rate {from}->{to} must be finite and non-negative")]
    RebalanceRate { from: usize, to: usize },
    #[error("invalid design: {0}")]
    Design(#[from] rideshare_core::DesignError),
    #[error("event log: {0}")]
    Log(#[from] csv::Error),
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub scenario: Scenario,
    pub design: DesignVars,
    /// Row-major K×K rebalancing dispatch rates b_ij (veh/hr).
    pub rebalance: Vec<f64>,
    pub fleet: usize,
    /// Vehicles placed idle in each zone at time zero.
    pub placement: Vec<usize>,
    /// Hours.
    pub horizon: f64,
    /// Hours discarded before averaging.
    pub warmup: f64,
    pub seed: u64,
    pub event_log: bool,
    /// Queued callers beyond which the run is flagged as starved.
    pub starvation_queue: usize,
    /// Multiplies every caller rate; 0 switches demand off.
    pub demand_scale: f64,
}

/// Largest-remainder split of `total` in proportion to `weights`.
pub fn apportion(weights: &[f64], total: usize) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0) {
        let mut out = vec![total / weights.len(); weights.len()];
        for slot in out.iter_mut().take(total % weights.len()) {
            *slot += 1;
        }
        return out;
    }
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut out: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let short = total - out.iter().sum::<usize>();
    for &i in order.iter().take(short) {
        out[i] += 1;
    }
    out
}

/// Mean straight-line trip time (hr) of the scenario's demand.
pub fn mean_trip_time(scenario: &Scenario) -> f64 {
    let grid = scenario.grid();
    let mut weighted = 0.0;
    for i in grid.zone_ids() {
        for j in grid.zone_ids() {
            let l = if i == j { 2.0 * grid.phi() / 3.0 } else { grid.zone_distance(i, j).unwrap_or(0.0) };
            weighted += scenario.rate(i, j) * l;
        }
    }
    let total = scenario.total_demand();
    if total > 0.0 {
        weighted / total / scenario.speed()
    } else {
        grid.phi() / scenario.speed()
    }
}

impl SimConfig {
    /// A run of an evaluated design: fleet ⌈M⌉ placed in proportion to each
    /// zone's active vehicles plus the rebalancing vehicles leaving it, with
    /// the evaluation's rebalancing flows and a warmup of ten mean trip
    /// times.
    pub fn from_evaluation(scenario: &Scenario, design: &DesignVars, eval: &Evaluation, horizon: f64, seed: u64) -> Self {
        let k = scenario.zones();
        let fleet = eval.report.total_fleet.ceil().max(1.0) as usize;
        let weights: Vec<f64> = (0..k)
            .map(|i| eval.report.per_zone_active[i] + eval.plan.vehicles[i * k..(i + 1) * k].iter().sum::<f64>())
            .collect();
        let warmup = (10.0 * mean_trip_time(scenario)).min(horizon / 2.0);
        SimConfig {
            scenario: scenario.clone(),
            design: design.clone(),
            rebalance: eval.plan.flows.clone(),
            fleet,
            placement: apportion(&weights, fleet),
            horizon,
            warmup,
            seed,
            event_log: false,
            starvation_queue: 1000,
            demand_scale: 1.0,
        }
    }

    /// A fleet of `fleet` idle vehicles spread evenly, without rebalancing.
    pub fn idle_fleet(scenario: &Scenario, design: &DesignVars, fleet: usize, horizon: f64, seed: u64) -> Self {
        let k = scenario.zones();
        SimConfig {
            scenario: scenario.clone(),
            design: design.clone(),
            rebalance: vec![0.0; k * k],
            fleet,
            placement: apportion(&vec![1.0; k], fleet),
            horizon,
            warmup: (10.0 * mean_trip_time(scenario)).min(horizon / 2.0),
            seed,
            event_log: false,
            starvation_queue: 1000,
            demand_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let k = self.scenario.zones();
        if !(self.warmup >= 0.0 && self.horizon > self.warmup && self.horizon.is_finite()) {
            return Err(SimError::Window { horizon: self.horizon, warmup: self.warmup });
        }
        if !(self.demand_scale >= 0.0 && self.demand_scale.is_finite()) {
            return Err(SimError::DemandScale(self.demand_scale));
        }
        if self.fleet == 0 {
            return Err(SimError::NoFleet);
        }
        let placed: usize = self.placement.iter().sum();
        if self.placement.len() != k || placed != self.fleet {
            return Err(SimError::Placement { placed, zones: self.placement.len(), fleet: self.fleet });
        }
        if self.rebalance.len() != k * k {
            return Err(SimError::RebalanceLength { expected: k * k, got: self.rebalance.len() });
        }
        if let Some(q) = self.rebalance.iter().position(|b| !(b.is_finite() && *b >= 0.0)) {
            return Err(SimError::RebalanceRate { from: q / k + 1, to: q % k + 1 });
        }
        self.design.validate(self.scenario.grid())?;
        Ok(())
    }
}

/// Time-averaged vehicles in one state family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KindAverage {
    pub kind: StateKind,
    pub per_zone: Vec<f64>,
    pub total: f64,
}

/// Post-warmup averages of one or more runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetrics {
    pub fleet: usize,
    /// Post-warmup hours covered.
    pub hours: f64,
    pub states: Vec<KindAverage>,
    /// Time-averaged vehicles not idle, rebalancing included.
    pub busy_vehicles: f64,
    pub idle_vehicles: f64,
    /// Row-major K×K mean door-to-door hours; `None` where nobody was served.
    pub door_to_door_by_od: Vec<Option<f64>>,
    pub mean_door_to_door: f64,
    /// Deliveries per hour after warmup.
    pub served_rate: f64,
    /// Whole-run caller accounting.
    pub generated: u64,
    pub served: u64,
    pub queued: u64,
    pub in_service: u64,
    /// Per zone, shares of pickups made by idle vehicles, seekers bound for
    /// the same zone, and seekers bound elsewhere.
    pub pickup_shares: Vec<[f64; 3]>,
    /// Mean vehicle-to-caller distance at assignment (km).
    pub mean_pickup_distance: f64,
    pub missed_dispatches: u64,
    pub max_queue: usize,
    pub starved: bool,
    /// Matches or zone crossings that broke the detour rules; zero unless
    /// the engine is wrong.
    pub rule_violations: u64,
    pub events: u64,
}

impl SimMetrics {
    pub fn kind_total(&self, kind: StateKind) -> f64 {
        self.states.iter().find(|s| s.kind == kind).map_or(0.0, |s| s.total)
    }

    /// Combines replications: time averages weighted by hours, trip means
    /// by the trips behind them.
    pub fn merge(runs: &[SimMetrics]) -> Option<SimMetrics> {
        let first = runs.first()?;
        let hours: f64 = runs.iter().map(|r| r.hours).sum();
        let tw = |f: &dyn Fn(&SimMetrics) -> f64| runs.iter().map(|r| f(r) * r.hours).sum::<f64>() / hours;
        let states = first
            .states
            .iter()
            .enumerate()
            .map(|(n, s)| KindAverage {
                kind: s.kind,
                per_zone: (0..s.per_zone.len()).map(|z| tw(&|r| r.states[n].per_zone[z])).collect(),
                total: tw(&|r| r.states[n].total),
            })
            .collect();
        let served_weight = |r: &SimMetrics| r.served_rate * r.hours;
        let total_served: f64 = runs.iter().map(served_weight).sum();
        let by_trips = |f: &dyn Fn(&SimMetrics) -> f64| {
            if total_served > 0.0 {
                runs.iter().map(|r| f(r) * served_weight(r)).sum::<f64>() / total_served
            } else {
                0.0
            }
        };
        let door_to_door_by_od = (0..first.door_to_door_by_od.len())
            .map(|q| {
                let (mut s, mut w) = (0.0, 0.0);
                for r in runs {
                    if let Some(v) = r.door_to_door_by_od[q] {
                        s += v * served_weight(r);
                        w += served_weight(r);
                    }
                }
                (w > 0.0).then(|| s / w)
            })
            .collect();
        let pickup_shares = (0..first.pickup_shares.len())
            .map(|z| {
                let mut out = [0.0; 3];
                for (c, slot) in out.iter_mut().enumerate() {
                    *slot = tw(&|r| r.pickup_shares[z][c]);
                }
                out
            })
            .collect();
        Some(SimMetrics {
            fleet: first.fleet,
            hours,
            states,
            busy_vehicles: tw(&|r| r.busy_vehicles),
            idle_vehicles: tw(&|r| r.idle_vehicles),
            door_to_door_by_od,
            mean_door_to_door: by_trips(&|r| r.mean_door_to_door),
            served_rate: tw(&|r| r.served_rate),
            generated: runs.iter().map(|r| r.generated).sum(),
            served: runs.iter().map(|r| r.served).sum(),
            queued: runs.iter().map(|r| r.queued).sum(),
            in_service: runs.iter().map(|r| r.in_service).sum(),
            pickup_shares,
            mean_pickup_distance: by_trips(&|r| r.mean_pickup_distance),
            missed_dispatches: runs.iter().map(|r| r.missed_dispatches).sum(),
            max_queue: runs.iter().map(|r| r.max_queue).max().unwrap_or(0),
            starved: runs.iter().any(|r| r.starved),
            rule_violations: runs.iter().map(|r| r.rule_violations).sum(),
            events: runs.iter().map(|r| r.events).sum(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub time: f64,
    pub event: &'static str,
    pub vehicle: usize,
    pub before: String,
    pub after: String,
    pub zone: usize,
}

pub fn write_event_log<W: Write>(rows: &[LogRow], out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
