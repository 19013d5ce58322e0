//! Fleet size, passenger hours and cost per passenger.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equations::FlowSolution;
use crate::rebalance::RebalancePlan;
use crate::scenario::Scenario;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("total demand must be positive to price a passenger trip")]
    NoDemand,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerformanceReport {
    /// M_i (veh).
    pub per_zone_active: Vec<f64>,
    /// M_b (veh).
    pub rebalancing: f64,
    /// M = ΣM_i + M_b (veh, equivalently veh-hr/hr).
    pub total_fleet: f64,
    /// P (pax-hr/hr).
    pub passenger_hours: f64,
    /// γM ($/hr).
    pub agency_cost: f64,
    /// βP ($/hr).
    pub passenger_cost: f64,
    /// Z ($/pax).
    pub cost_per_pax: f64,
    /// P/Σλ (hr).
    pub mean_door_to_door: f64,
}

impl PerformanceReport {
    pub fn active_total(&self) -> f64 {
        self.per_zone_active.iter().sum()
    }
}

/// (M_i per zone, M_b, M).
pub fn fleet_metrics(solution: &FlowSolution, plan: &RebalancePlan) -> (Vec<f64>, f64, f64) {
    let per_zone: Vec<f64> = (0..solution.zones()).map(|i| solution.active_in_zone(i)).collect();
    let mb = plan.vehicle_hours;
    let m = per_zone.iter().sum::<f64>() + mb;
    (per_zone, mb, m)
}

pub fn passenger_hours(solution: &FlowSolution) -> f64 {
    (0..solution.zones()).map(|i| solution.passengers_in_zone(i)).sum()
}

/// Z = (γM + βP) / Σλ.
pub fn system_cost(vehicle_cost: f64, value_of_time: f64, fleet: f64, pax_hours: f64, total_demand: f64) -> Result<f64, EvalError> {
    if !(total_demand > 0.0) {
        return Err(EvalError::NoDemand);
    }
    Ok((vehicle_cost * fleet + value_of_time * pax_hours) / total_demand)
}

pub fn performance_report(scenario: &Scenario, solution: &FlowSolution, plan: &RebalancePlan) -> PerformanceReport {
    let (per_zone_active, rebalancing, total_fleet) = fleet_metrics(solution, plan);
    let p = passenger_hours(solution);
    let total = scenario.total_demand();
    let z = system_cost(scenario.vehicle_cost(), scenario.value_of_time(), total_fleet, p, total)
        .expect("scenarios carry positive demand");
    PerformanceReport {
        per_zone_active,
        rebalancing,
        total_fleet,
        passenger_hours: p,
        agency_cost: scenario.vehicle_cost() * total_fleet,
        passenger_cost: scenario.value_of_time() * p,
        cost_per_pax: z,
        mean_door_to_door: p / total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_formula_edges() {
        assert_eq!(system_cost(0.0, 20.0, 100.0, 50.0, 10.0), Ok(100.0));
        assert_eq!(system_cost(52.0, 0.0, 100.0, 50.0, 10.0), Ok(520.0));
        assert_eq!(system_cost(52.0, 20.0, 1.0, 1.0, 0.0), Err(EvalError::NoDemand));
    }

    #[test]
    fn cost_monotone_in_prices() {
        let base = system_cost(52.0, 20.0, 100.0, 50.0, 10.0).unwrap();
        assert!(system_cost(60.0, 20.0, 100.0, 50.0, 10.0).unwrap() >= base);
        assert!(system_cost(52.0, 25.0, 100.0, 50.0, 10.0).unwrap() >= base);
    }
}
