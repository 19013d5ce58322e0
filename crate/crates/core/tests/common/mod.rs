#![allow(dead_code)]

use std::path::PathBuf;

use rideshare_core::{load_design, load_scenario, DesignVars, Scenario, Zone, ZoneGrid, ZoneId};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn scenario(name: &str) -> Scenario {
    load_scenario(fixtures().join(format!("{name}.json"))).unwrap()
}

pub fn design(name: &str, scenario: &Scenario) -> DesignVars {
    load_design(fixtures().join(format!("{name}.json")), scenario.grid()).unwrap()
}

/// The irregular sixteen-zone study region used for the worked examples.
/// Rows grow north; ids run west to east, south to north.
pub fn sixteen_zone_region() -> ZoneGrid {
    let cells: [(usize, i64, i64); 16] = [
        (1, 0, 0),
        (2, 0, 1),
        (3, 0, 2),
        (4, 1, 0),
        (5, 1, 1),
        (6, 1, 2),
        (7, 2, 0),
        (8, 2, 1),
        (9, 2, 2),
        (10, 2, 3),
        (11, 3, 0),
        (12, 3, 1),
        (13, 3, 2),
        (14, 3, 3),
        (15, 4, 1),
        (16, 4, 2),
    ];
    let zones = cells.iter().map(|&(id, row, col)| Zone { id: ZoneId(id), row, col }).collect();
    ZoneGrid::from_zones(zones, 1.0).unwrap()
}

pub fn ids(v: &[usize]) -> Vec<ZoneId> {
    v.iter().map(|&i| ZoneId(i)).collect()
}

pub fn sorted(mut v: Vec<ZoneId>) -> Vec<ZoneId> {
    v.sort();
    v
}
