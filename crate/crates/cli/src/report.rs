//! On-disk report schema and its canonical JSON form.

use std::collections::BTreeMap;

use rideshare_core::{enumerate_states, DesignFile, FlowSolution, PerformanceReport, RebalancePlan, Scenario, VehicleState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo { name: env!("CARGO_PKG_NAME").into(), version: env!("CARGO_PKG_VERSION").into() }
    }
}

/// SHA-256 of the scenario's canonical JSON, hex encoded.
pub fn scenario_digest(scenario: &Scenario) -> String {
    let text = serde_json::to_string(&scenario.to_file()).expect("scenario serializes");
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Rounds to 12 significant digits.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_value(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Number(n) if n.is_f64() => {
            let x = sig12(n.as_f64().expect("f64 number"));
            if let Some(r) = serde_json::Number::from_f64(x) {
                *n = r;
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(round_value),
        serde_json::Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float cut to 12 significant digits. Applying it
/// to its own parsed output reproduces the same text.
pub fn to_canonical_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report serializes");
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
    text.push('\n');
    text
}

/// Steady state with every count and rate keyed by state name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionView {
    pub residual_norm: f64,
    pub iterations: usize,
    /// Vehicles per state, rebalancing states included.
    pub counts: BTreeMap<String, f64>,
    /// Assignment rates out of each state that can take a caller.
    pub assign: BTreeMap<String, f64>,
    /// Border-crossing rates into each state.
    pub enter: BTreeMap<String, f64>,
    /// Exit rates out of each state toward the next zone.
    pub exit: BTreeMap<String, f64>,
    /// Delivery rates out of each state.
    pub deliver: BTreeMap<String, f64>,
    /// Net idle-vehicle creation ρ per zone.
    pub net_rebalance: Vec<f64>,
}

impl SolutionView {
    pub fn new(scenario: &Scenario, sol: &FlowSolution, plan: &RebalancePlan) -> Self {
        let k = scenario.zones();
        let space = enumerate_states(scenario.grid());
        let counts = sol
            .state_counts(&space, Some(&plan.vehicles))
            .into_iter()
            .enumerate()
            .map(|(n, c)| (space.state_of(n).name(), c))
            .collect();
        let valid = |s: VehicleState| space.index_of(&s).is_ok();
        let per_state = |entries: &mut dyn Iterator<Item = (VehicleState, f64)>| -> BTreeMap<String, f64> {
            entries.filter(|(s, _)| valid(*s)).map(|(s, v)| (s.name(), v)).collect()
        };
        let r = &sol.rates;
        let c = &r.cross;
        let zones = || 0..k;
        let pairs = || (0..k).flat_map(move |i| (0..k).filter(move |&j| j != i).map(move |j| (i, j)));
        let triples = || pairs().flat_map(move |(i, j)| (0..k).map(move |m| (i, j, m)));
        let st = |a: usize, b: usize, c: usize, d: usize| VehicleState::new(a, b, c, d);

        let assign = per_state(
            &mut zones()
                .map(|i| (st(i + 1, 0, 0, 0), r.assign_idle[i]))
                .chain(zones().map(|i| (st(i + 1, 0, i + 1, 0), r.assign_local[i])))
                .chain(pairs().map(|(i, j)| (st(i + 1, 0, j + 1, 0), r.assign_remote[i * k + j]))),
        );
        let enter = per_state(
            &mut zones()
                .map(|i| (st(i + 1, 0, i + 1, 0), c.enter_local[i]))
                .chain(zones().map(|i| (st(i + 1, 0, i + 1, i + 1), c.enter_local_pair[i])))
                .chain(pairs().map(|(i, j)| (st(i + 1, 0, j + 1, 0), c.enter_remote[i * k + j])))
                .chain(pairs().map(|(i, j)| (st(i + 1, 0, i + 1, j + 1), c.enter_local_remote[i * k + j])))
                .chain(triples().map(|(i, j, m)| (st(i + 1, 0, j + 1, m + 1), c.enter_pair[(i * k + j) * k + m]))),
        );
        let exit = per_state(
            &mut pairs()
                .map(|(i, j)| (st(i + 1, 0, j + 1, 0), c.exit_remote[i * k + j]))
                .chain(triples().map(|(i, j, m)| (st(i + 1, 0, j + 1, m + 1), c.exit_pair[(i * k + j) * k + m]))),
        );
        let deliver = per_state(
            &mut zones()
                .map(|i| (st(i + 1, 0, i + 1, 0), c.deliver_local[i]))
                .chain(zones().map(|i| (st(i + 1, 0, i + 1, i + 1), c.deliver_local_pair[i])))
                .chain(pairs().map(|(i, j)| (st(i + 1, 0, i + 1, j + 1), c.deliver_local_remote[i * k + j]))),
        );
        SolutionView {
            residual_norm: sol.residual_norm,
            iterations: sol.iterations,
            counts,
            assign,
            enter,
            exit,
            deliver,
            net_rebalance: sol.net_rebalance().to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanView {
    /// b_ij keyed "i->j" over every ordered pair.
    pub flows: BTreeMap<String, f64>,
    /// Vehicles en route per pair, keyed as `flows`.
    pub vehicles: BTreeMap<String, f64>,
    pub vehicle_hours: f64,
}

impl PlanView {
    pub fn new(plan: &RebalancePlan) -> Self {
        let k = plan.zones();
        let keyed = |v: &[f64]| -> BTreeMap<String, f64> {
            (0..k * k).filter(|q| q / k != q % k).map(|q| (format!("{}->{}", q / k + 1, q % k + 1), v[q])).collect()
        };
        PlanView { flows: keyed(&plan.flows), vehicles: keyed(&plan.vehicles), vehicle_hours: plan.vehicle_hours }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Feasible,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub tool: ToolInfo,
    pub scenario_digest: String,
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<String>,
    pub design: DesignFile,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub performance: Option<PerformanceReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rebalancing: Option<PlanView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solution: Option<SolutionView>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(sig12(1.0 / 3.0), 0.333333333333);
        assert_eq!(sig12(2401.123456789012345), 2401.12345679);
        assert_eq!(sig12(-1e-20 / 3.0), -3.33333333333e-21);
        assert_eq!(sig12(0.0), 0.0);
        let x = sig12(std::f64::consts::PI);
        assert_eq!(sig12(x), x);
    }

    #[test]
    fn report_round_trips() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
        let sc = rideshare_core::load_scenario(dir.join("s1.json")).unwrap();
        let design = rideshare_core::load_design(dir.join("s1_reported.json"), sc.grid()).unwrap();
        let eval = rideshare_core::evaluate_design(&sc, &design, None).unwrap();
        let report = ReportFile {
            tool: ToolInfo::current(),
            scenario_digest: scenario_digest(&sc),
            status: Status::Feasible,
            diagnostics: None,
            design: design.to_file(sc.grid()),
            performance: Some(eval.report.clone()),
            rebalancing: Some(PlanView::new(&eval.plan)),
            solution: Some(SolutionView::new(&sc, &eval.solution, &eval.plan)),
        };
        let text = to_canonical_json(&report);
        let back: ReportFile = serde_json::from_str(&text).unwrap();
        assert_eq!(to_canonical_json(&back), text);
        let m = back.performance.unwrap().total_fleet;
        assert!((m - eval.report.total_fleet).abs() <= 1e-11 * m);
    }

    #[test]
    fn digest_tracks_the_scenario() {
        let text = |rate: f64| format!(
            r#"{{"grid": {{"rows": 1, "cols": 2}}, "phi_km": 2, "speed_kmh": 20, "value_of_time": 15, "demand": [[{rate}, 1], [1, 1]]}}"#
        );
        let a = rideshare_core::parse_scenario(&text(1.0)).unwrap();
        let b = rideshare_core::parse_scenario(&text(2.0)).unwrap();
        assert_eq!(scenario_digest(&a), scenario_digest(&a.clone()));
        assert_ne!(scenario_digest(&a), scenario_digest(&b));
    }

    #[test]
    fn canonical_json_is_a_fixed_point() {
        let v = serde_json::json!({"a": [1.0 / 7.0, 3], "b": {"c": 1e300 / 3.0}});
        let once = to_canonical_json(&v);
        let parsed: serde_json::Value = serde_json::from_str(&once).unwrap();
        assert_eq!(to_canonical_json(&parsed), once);
        assert!(once.contains("0.142857142857"));
    }
}
