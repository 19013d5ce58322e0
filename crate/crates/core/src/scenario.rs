//! Scenario parameters, scenario files, and trip-record ingestion.

use std::fs;
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::zonegrid::{GridError, Zone, ZoneGrid, ZoneId};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid grid: {0}")]
    Grid(#[from] GridError),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field_err(field: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Field { field: field.into(), message: message.into() }
}

/// Default operating cost per vehicle-hour: driver wage plus a per-km
/// vehicle cost at the cruising speed.
pub fn default_vehicle_cost(speed_kmh: f64) -> f64 {
    40.0 + 0.48 * speed_kmh
}

/// Physical and economic parameters plus the (already scaled) demand matrix.
#[derive(Debug, Clone)]
pub struct Scenario {
    grid: ZoneGrid,
    speed: f64,
    value_of_time: f64,
    vehicle_cost: f64,
    demand: Vec<f64>,
    demand_scale: f64,
}

impl Scenario {
    /// `demand` is row = origin, in trips/hr before scaling. The stored
    /// matrix is `demand * demand_scale`.
    pub fn new(
        grid: ZoneGrid,
        speed: f64,
        value_of_time: f64,
        vehicle_cost: Option<f64>,
        demand: &[Vec<f64>],
        demand_scale: f64,
    ) -> Result<Self, ScenarioError> {
        let k = grid.len();
        if !(speed > 0.0 && speed.is_finite()) {
            return Err(field_err("speed_kmh", format!("must be positive, got {speed}")));
        }
        if !(value_of_time >= 0.0 && value_of_time.is_finite()) {
            return Err(field_err("value_of_time", format!("must be non-negative, got {value_of_time}")));
        }
        let vehicle_cost = vehicle_cost.unwrap_or_else(|| default_vehicle_cost(speed));
        if !(vehicle_cost >= 0.0 && vehicle_cost.is_finite()) {
            return Err(field_err("vehicle_cost", format!("must be non-negative, got {vehicle_cost}")));
        }
        if !(demand_scale >= 1.0 && demand_scale.is_finite()) {
            return Err(field_err("demand_scale", format!("must be at least 1, got {demand_scale}")));
        }
        if demand.len() != k {
            return Err(field_err("demand", format!("expected {k} rows, got {}", demand.len())));
        }
        let mut flat = Vec::with_capacity(k * k);
        for (i, row) in demand.iter().enumerate() {
            if row.len() != k {
                return Err(field_err(
                    format!("demand[{i}]"),
                    format!("expected {k} entries, got {}", row.len()),
                ));
            }
            for (j, &rate) in row.iter().enumerate() {
                if !(rate >= 0.0 && rate.is_finite()) {
                    return Err(field_err(format!("demand[{i}][{j}]"), format!("rate must be non-negative, got {rate}")));
                }
                flat.push(rate * demand_scale);
            }
        }
        if flat.iter().sum::<f64>() <= 0.0 {
            return Err(field_err("demand", "total trip rate must be positive"));
        }
        Ok(Scenario { grid, speed, value_of_time, vehicle_cost, demand: flat, demand_scale })
    }

    pub fn grid(&self) -> &ZoneGrid {
        &self.grid
    }

    pub fn zones(&self) -> usize {
        self.grid.len()
    }

    pub fn phi(&self) -> f64 {
        self.grid.phi()
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn value_of_time(&self) -> f64 {
        self.value_of_time
    }

    pub fn vehicle_cost(&self) -> f64 {
        self.vehicle_cost
    }

    pub fn demand_scale(&self) -> f64 {
        self.demand_scale
    }

    /// λ_ij in trips/hr after scaling.
    pub fn rate(&self, i: ZoneId, j: ZoneId) -> f64 {
        self.demand[i.index() * self.zones() + j.index()]
    }

    /// Row-major K×K demand, row = origin.
    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn demand_rows(&self) -> Vec<Vec<f64>> {
        self.demand.chunks(self.zones()).map(|r| r.to_vec()).collect()
    }

    pub fn total_demand(&self) -> f64 {
        self.demand.iter().sum()
    }

    pub fn max_rate(&self) -> f64 {
        self.demand.iter().cloned().fold(0.0, f64::max)
    }

    /// Same parameters with a different demand matrix (unscaled).
    pub fn with_demand(&self, demand: &[Vec<f64>]) -> Result<Self, ScenarioError> {
        Scenario::new(
            self.grid.clone(),
            self.speed,
            self.value_of_time,
            Some(self.vehicle_cost),
            demand,
            1.0,
        )
    }

    pub fn with_costs(&self, value_of_time: f64, vehicle_cost: f64) -> Result<Self, ScenarioError> {
        Scenario::new(
            self.grid.clone(),
            self.speed,
            value_of_time,
            Some(vehicle_cost),
            &self.demand_rows(),
            1.0,
        )
    }

    pub(crate) fn lambda(&self, i: usize, j: usize) -> f64 {
        self.demand[i * self.grid.len() + j]
    }

    pub fn to_file(&self) -> ScenarioFile {
        let (min_r, max_r, min_c, max_c) = self.grid.bounds();
        let rows = (max_r - min_r + 1) as usize;
        let cols = (max_c - min_c + 1) as usize;
        let mut ids = vec![vec![0usize; cols]; rows];
        for z in self.grid.zones() {
            ids[(max_r - z.row) as usize][(z.col - min_c) as usize] = z.id.0;
        }
        ScenarioFile {
            grid: GridSpec { rows, cols, mask: None, zone_ids: Some(ids) },
            phi_km: self.grid.phi(),
            speed_kmh: self.speed,
            value_of_time: self.value_of_time,
            vehicle_cost: Some(self.vehicle_cost),
            demand: self.demand_rows(),
            demand_scale: None,
        }
    }
}

/// Grid portion of a scenario file. Row 0 of `mask`/`zone_ids` is the
/// northmost row of cells.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_ids: Option<Vec<Vec<usize>>>,
}

impl GridSpec {
    pub fn build(&self, phi: f64) -> Result<ZoneGrid, ScenarioError> {
        let (rows, cols) = (self.rows, self.cols);
        if rows == 0 || cols == 0 {
            return Err(field_err("grid", "rows and cols must be positive"));
        }
        let check_shape = |name: &str, n_rows: usize, row_lens: Vec<usize>| -> Result<(), ScenarioError> {
            if n_rows != rows || row_lens.iter().any(|&l| l != cols) {
                return Err(field_err(format!("grid.{name}"), format!("must be {rows}x{cols}")));
            }
            Ok(())
        };
        if let Some(m) = &self.mask {
            check_shape("mask", m.len(), m.iter().map(|r| r.len()).collect())?;
        }
        let mut zones = Vec::new();
        if let Some(ids) = &self.zone_ids {
            check_shape("zone_ids", ids.len(), ids.iter().map(|r| r.len()).collect())?;
            for (r, row) in ids.iter().enumerate() {
                for (c, &id) in row.iter().enumerate() {
                    let masked_out = self.mask.as_ref().is_some_and(|m| !m[r][c]);
                    if id != 0 && !masked_out {
                        zones.push(Zone { id: ZoneId(id), row: (rows - 1 - r) as i64, col: c as i64 });
                    }
                }
            }
        } else {
            let mut next = 1;
            for r in 0..rows {
                for c in 0..cols {
                    let occupied = self.mask.as_ref().is_none_or(|m| m[r][c]);
                    if occupied {
                        zones.push(Zone { id: ZoneId(next), row: (rows - 1 - r) as i64, col: c as i64 });
                        next += 1;
                    }
                }
            }
        }
        Ok(ZoneGrid::from_zones(zones, phi)?)
    }
}

/// On-disk scenario schema.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub grid: GridSpec,
    pub phi_km: f64,
    pub speed_kmh: f64,
    pub value_of_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vehicle_cost: Option<f64>,
    pub demand: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_scale: Option<f64>,
}

impl ScenarioFile {
    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        if !(self.phi_km > 0.0 && self.phi_km.is_finite()) {
            return Err(field_err("phi_km", format!("must be positive, got {}", self.phi_km)));
        }
        let grid = self.grid.build(self.phi_km)?;
        Scenario::new(
            grid,
            self.speed_kmh,
            self.value_of_time,
            self.vehicle_cost,
            &self.demand,
            self.demand_scale.unwrap_or(1.0),
        )
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let file: ScenarioFile = serde_json::from_str(text)?;
    file.into_scenario()
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    parse_scenario(&text)
}

/// λ_ij = total_rate / K² for every pair.
pub fn homogeneous_scenario(
    grid: ZoneGrid,
    total_rate: f64,
    speed: f64,
    value_of_time: f64,
    vehicle_cost: Option<f64>,
) -> Result<Scenario, ScenarioError> {
    if !(total_rate > 0.0) {
        return Err(field_err("total_rate", "must be positive"));
    }
    let k = grid.len();
    let rate = total_rate / (k * k) as f64;
    Scenario::new(grid, speed, value_of_time, vehicle_cost, &vec![vec![rate; k]; k], 1.0)
}

/// Trip end given either as a zone id or as planar coordinates (km east and
/// north of the south-west corner of the grid's bounding box).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Location {
    Zone(ZoneId),
    Point { x: f64, y: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripRecord {
    pub pickup: Location,
    pub dropoff: Location,
    pub timestamp: NaiveDateTime,
}

/// Daily time-of-day interval `[start, end)`; wraps past midnight when
/// `end <= start`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyWindow {
    pub start: NaiveTime,
    pub end: NaiveTime,
}

impl DailyWindow {
    pub fn whole_day() -> Self {
        let midnight = NaiveTime::from_hms_opt(0, 0, 0).unwrap();
        DailyWindow { start: midnight, end: midnight }
    }

    pub fn hours(&self) -> f64 {
        let secs = (self.end - self.start).num_seconds();
        let secs = if secs <= 0 { secs + 86_400 } else { secs };
        secs as f64 / 3600.0
    }

    pub fn contains(&self, t: NaiveTime) -> bool {
        if self.start < self.end {
            t >= self.start && t < self.end
        } else {
            t >= self.start || t < self.end
        }
    }
}

impl std::str::FromStr for DailyWindow {
    type Err = String;

    /// `HH[:MM]-HH[:MM]`, e.g. `7-10` or `22:30-01:00`.
    fn from_str(s: &str) -> Result<Self, String> {
        let time = |t: &str| {
            let t = t.trim();
            let (h, m) = t.split_once(':').unwrap_or((t, "0"));
            let (h, m) = (h.parse::<u32>().ok(), m.parse::<u32>().ok());
            h.zip(m)
                .and_then(|(h, m)| if h == 24 && m == 0 { NaiveTime::from_hms_opt(0, 0, 0) } else { NaiveTime::from_hms_opt(h, m, 0) })
                .ok_or_else(|| format!("bad time `{t}`"))
        };
        let (a, b) = s.split_once('-').ok_or_else(|| format!("bad window `{s}`, expected start-end"))?;
        Ok(DailyWindow { start: time(a)?, end: time(b)? })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IngestError {
    #[error("days must be at least 1")]
    NoDays,
    #[error("no records survived filtering ({skipped} unparseable, {outside} outside grid, {out_of_window} outside window)")]
    AllDropped { skipped: usize, outside: usize, out_of_window: usize },
    #[error("trip file: {0}")]
    Csv(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct TripParseError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestResult {
    /// Row-major K×K hourly rates.
    pub demand: Vec<f64>,
    pub used: usize,
    pub skipped: usize,
    pub outside: usize,
    pub out_of_window: usize,
}

impl IngestResult {
    pub fn rows(&self, k: usize) -> Vec<Vec<f64>> {
        self.demand.chunks(k).map(|r| r.to_vec()).collect()
    }
}

/// Zone containing a point. Points on a shared edge belong to the zone on
/// the lower-left side; if that cell is empty, another cell touching the
/// point is used.
pub fn locate_point(grid: &ZoneGrid, x: f64, y: f64) -> Option<ZoneId> {
    let (min_r, max_r, min_c, max_c) = grid.bounds();
    let phi = grid.phi();
    let width = (max_c - min_c + 1) as f64 * phi;
    let height = (max_r - min_r + 1) as f64 * phi;
    if !(x >= 0.0 && y >= 0.0 && x <= width && y <= height) {
        return None;
    }
    let candidates = |v: f64, max_index: i64| -> Vec<i64> {
        let q = v / phi;
        let on_edge = q.fract() == 0.0;
        let primary = if on_edge { (q as i64 - 1).max(0) } else { q.floor() as i64 };
        let mut out = vec![primary.min(max_index)];
        if on_edge && (q as i64) <= max_index && q as i64 != out[0] {
            out.push(q as i64);
        }
        out
    };
    for dc in candidates(x, max_c - min_c) {
        for dr in candidates(y, max_r - min_r) {
            if let Some(id) = grid.zone_at(min_r + dr, min_c + dc) {
                return Some(id);
            }
        }
    }
    None
}

fn resolve(grid: &ZoneGrid, loc: Location) -> Option<ZoneId> {
    match loc {
        Location::Zone(id) => (id.0 >= 1 && id.0 <= grid.len()).then_some(id),
        Location::Point { x, y } => locate_point(grid, x, y),
    }
}

/// Aggregates trip records into hourly zone-to-zone rates: counts per OD
/// pair inside the daily window, divided by window hours times `days`.
pub fn ingest_trips<I>(records: I, grid: &ZoneGrid, window: DailyWindow, days: u32) -> Result<IngestResult, IngestError>
where
    I: IntoIterator<Item = Result<TripRecord, TripParseError>>,
{
    if days == 0 {
        return Err(IngestError::NoDays);
    }
    let k = grid.len();
    let mut counts = vec![0u64; k * k];
    let (mut used, mut skipped, mut outside, mut out_of_window) = (0, 0, 0, 0);
    for rec in records {
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                log::warn!("skipping trip record: {e}");
                skipped += 1;
                continue;
            }
        };
        let (Some(o), Some(d)) = (resolve(grid, rec.pickup), resolve(grid, rec.dropoff)) else {
            outside += 1;
            continue;
        };
        if !window.contains(rec.timestamp.time()) {
            out_of_window += 1;
            continue;
        }
        counts[o.index() * k + d.index()] += 1;
        used += 1;
    }
    if used == 0 {
        return Err(IngestError::AllDropped { skipped, outside, out_of_window });
    }
    let denom = window.hours() * days as f64;
    Ok(IngestResult {
        demand: counts.iter().map(|&c| c as f64 / denom).collect(),
        used,
        skipped,
        outside,
        out_of_window,
    })
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Some(t.naive_local());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(t);
        }
    }
    NaiveDate::parse_from_str(s, "%Y-%m-%d").ok().map(|d| d.and_hms_opt(0, 0, 0).unwrap())
}

/// Reads trip records from CSV with a header row. Pickup and dropoff are
/// each given either by a `*_zone` column or by `*_x`/`*_y` columns.
pub fn read_trips_csv<R: std::io::Read>(reader: R) -> Result<Vec<Result<TripRecord, TripParseError>>, IngestError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| IngestError::Csv(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let end_columns = |prefix: &str| -> Result<EndColumns, IngestError> {
        if let Some(z) = col(&format!("{prefix}_zone")) {
            Ok(EndColumns::Zone(z))
        } else if let (Some(x), Some(y)) = (col(&format!("{prefix}_x")), col(&format!("{prefix}_y"))) {
            Ok(EndColumns::Point(x, y))
        } else {
            Err(IngestError::Csv(format!("missing {prefix}_zone or {prefix}_x/{prefix}_y columns")))
        }
    };
    let pickup = end_columns("pickup")?;
    let dropoff = end_columns("dropoff")?;
    let ts = col("timestamp").ok_or_else(|| IngestError::Csv("missing timestamp column".into()))?;

    let mut out = Vec::new();
    for (n, row) in rdr.records().enumerate() {
        let line = n + 2;
        let parsed = row
            .map_err(|e| TripParseError { line, message: e.to_string() })
            .and_then(|row| {
                let fail = |message: String| TripParseError { line, message };
                let pickup = pickup.read(&row).map_err(fail)?;
                let dropoff = dropoff.read(&row).map_err(fail)?;
                let raw = row.get(ts).unwrap_or("");
                let timestamp = parse_timestamp(raw).ok_or_else(|| fail(format!("bad timestamp `{raw}`")))?;
                Ok(TripRecord { pickup, dropoff, timestamp })
            });
        out.push(parsed);
    }
    Ok(out)
}

enum EndColumns {
    Zone(usize),
    Point(usize, usize),
}

impl EndColumns {
    fn read(&self, row: &csv::StringRecord) -> Result<Location, String> {
        let num = |c: usize| -> Result<f64, String> {
            let raw = row.get(c).unwrap_or("");
            raw.parse::<f64>().map_err(|_| format!("bad number `{raw}`"))
        };
        match *self {
            EndColumns::Zone(c) => {
                let raw = row.get(c).unwrap_or("");
                let id: usize = raw.parse().map_err(|_| format!("bad zone id `{raw}`"))?;
                Ok(Location::Zone(ZoneId(id)))
            }
            EndColumns::Point(x, y) => Ok(Location::Point { x: num(x)?, y: num(y)? }),
        }
    }
}
