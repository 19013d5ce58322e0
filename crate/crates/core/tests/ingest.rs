mod common;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rideshare_core::scenario::{
    homogeneous_scenario, ingest_trips, read_trips_csv, DailyWindow, IngestError, Location, TripParseError, TripRecord,
};
use rideshare_core::{parse_scenario, ScenarioError, ZoneGrid, ZoneId};

fn at(day: u32, h: u32, m: u32) -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2019, 3, day).unwrap().and_hms_opt(h, m, 0).unwrap()
}

fn window(h0: u32, h1: u32) -> DailyWindow {
    DailyWindow { start: NaiveTime::from_hms_opt(h0, 0, 0).unwrap(), end: NaiveTime::from_hms_opt(h1, 0, 0).unwrap() }
}

fn trip(o: usize, d: usize, t: NaiveDateTime) -> Result<TripRecord, TripParseError> {
    Ok(TripRecord { pickup: Location::Zone(ZoneId(o)), dropoff: Location::Zone(ZoneId(d)), timestamp: t })
}

#[test]
fn two_trips_over_two_hours() {
    let grid = ZoneGrid::rectangular(2, 2, 1.0).unwrap();
    let recs = vec![trip(1, 3, at(4, 7, 5)), trip(1, 3, at(4, 8, 59))];
    let out = ingest_trips(recs, &grid, window(7, 9), 1).unwrap();
    assert_eq!(out.rows(4)[0][2], 1.0);
    assert_eq!(out.used, 2);
}

/// Random records over the irregular region: zone ids (some invalid),
/// interior points (some in empty cells or outside the box), parse
/// failures, and timestamps across three days.
fn random_stream(rng: &mut ChaCha8Rng, n: usize) -> Vec<Result<TripRecord, TripParseError>> {
    (0..n)
        .map(|line| {
            if rng.random_bool(0.02) {
                return Err(TripParseError { line, message: "garbled".into() });
            }
            let end = |rng: &mut ChaCha8Rng| {
                if rng.random_bool(0.5) {
                    Location::Zone(ZoneId(rng.random_range(0..18)))
                } else {
                    // The bounding box is 4 km × 5 km; sample a bit beyond it.
                    Location::Point { x: rng.random_range(-0.5..4.5), y: rng.random_range(-0.5..5.5) }
                }
            };
            let pickup = end(rng);
            let dropoff = end(rng);
            let t = at(rng.random_range(4..7), rng.random_range(0..24), rng.random_range(0..60));
            Ok(TripRecord { pickup, dropoff, timestamp: t })
        })
        .collect()
}

/// Independent zone lookup: scan the zone list for the unit cell that
/// contains the point.
fn naive_zone(grid: &ZoneGrid, loc: Location) -> Option<usize> {
    match loc {
        Location::Zone(z) => (1..=grid.len()).contains(&z.0).then_some(z.0),
        Location::Point { x, y } => grid
            .zones()
            .iter()
            .find(|z| {
                let (x0, y0) = (z.col as f64 * grid.phi(), z.row as f64 * grid.phi());
                x > x0 && x < x0 + grid.phi() && y > y0 && y < y0 + grid.phi()
            })
            .map(|z| z.id.0),
    }
}

#[test]
fn ingestion_matches_a_naive_recount() {
    let grid = common::sixteen_zone_region();
    let k = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let stream = random_stream(&mut rng, 10_000);
    let w = window(7, 10);
    let out = ingest_trips(stream.clone(), &grid, w, 3).unwrap();

    let mut counts = vec![0usize; k * k];
    let (mut skipped, mut outside, mut late) = (0, 0, 0);
    for rec in &stream {
        let Ok(r) = rec else {
            skipped += 1;
            continue;
        };
        match (naive_zone(&grid, r.pickup), naive_zone(&grid, r.dropoff)) {
            (Some(o), Some(d)) => {
                let h = r.timestamp.time().format("%H").to_string().parse::<u32>().unwrap();
                if (7..10).contains(&h) {
                    counts[(o - 1) * k + d - 1] += 1;
                } else {
                    late += 1;
                }
            }
            _ => outside += 1,
        }
    }
    let expected: Vec<f64> = counts.iter().map(|&c| c as f64 / 9.0).collect();
    assert_eq!(out.demand, expected);
    assert_eq!((out.skipped, out.outside, out.out_of_window), (skipped, outside, late));
    assert_eq!(out.used + skipped + outside + late, 10_000);
}

#[test]
fn synthetic_nine_zone_stream_totals_9520_per_hour() {
    let grid = ZoneGrid::rectangular(3, 3, 4.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // 9520 trips inside a one-hour window on each of two days, plus noise
    // outside the window.
    let mut recs = Vec::new();
    for day in [4, 5] {
        for n in 0..9520 {
            let (o, d) = (n % 9 + 1, (n / 9) % 9 + 1);
            recs.push(trip(o, d, at(day, 8, rng.random_range(0..60))));
        }
        for _ in 0..500 {
            recs.push(trip(1, 2, at(day, rng.random_range(10..20), 0)));
        }
    }
    let out = ingest_trips(recs, &grid, window(8, 9), 2).unwrap();
    let total: f64 = out.demand.iter().sum();
    assert!((total - 9520.0).abs() < 1e-9);
    assert_eq!(out.out_of_window, 1000);
}

#[test]
fn degenerate_streams_are_errors() {
    let grid = ZoneGrid::rectangular(1, 2, 1.0).unwrap();
    assert_eq!(ingest_trips(vec![trip(1, 2, at(4, 8, 0))], &grid, window(8, 9), 0), Err(IngestError::NoDays));
    let late = vec![trip(1, 2, at(4, 12, 0)), trip(1, 7, at(4, 8, 0))];
    assert_eq!(
        ingest_trips(late, &grid, window(8, 9), 1),
        Err(IngestError::AllDropped { skipped: 0, outside: 1, out_of_window: 1 })
    );
}

#[test]
fn csv_columns_and_bad_rows() {
    let grid = ZoneGrid::rectangular(2, 2, 1.0).unwrap();
    let text = "pickup_zone,dropoff_x,dropoff_y,timestamp\n\
                1,1.5,0.5,2019-03-04T08:10:00\n\
                2,0.5,1.5,2019-03-04 08:20:00\n\
                3,0.5,0.5,not a time\n";
    let recs = read_trips_csv(text.as_bytes()).unwrap();
    assert_eq!(recs.len(), 3);
    assert!(recs[2].is_err());
    let out = ingest_trips(recs, &grid, window(8, 9), 1).unwrap();
    // (1.5, 0.5) is the south-east cell, zone 4; (0.5, 1.5) the north-west, zone 1.
    assert_eq!(out.rows(4)[0][3], 1.0);
    assert_eq!(out.rows(4)[1][0], 1.0);
    assert_eq!(out.skipped, 1);
    assert!(read_trips_csv("pickup,dropoff_zone,timestamp\n".as_bytes()).is_err());
}

proptest! {
    #[test]
    fn ingestion_is_additive(seed in 0u64..500, split in 0usize..400) {
        let grid = common::sixteen_zone_region();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let stream = random_stream(&mut rng, 400);
        let w = DailyWindow::whole_day();
        let all = ingest_trips(stream.clone(), &grid, w, 2);
        let a = ingest_trips(stream[..split].to_vec(), &grid, w, 2);
        let b = ingest_trips(stream[split..].to_vec(), &grid, w, 2);
        let (Ok(all), Ok(a), Ok(b)) = (all, a, b) else { return Ok(()) };
        for ((t, x), y) in all.demand.iter().zip(&a.demand).zip(&b.demand) {
            prop_assert!((t - x - y).abs() < 1e-12);
        }
        prop_assert_eq!(all.used, a.used + b.used);
    }

    #[test]
    fn demand_scale_multiplies_rates(q in 1.0f64..5.0, base in 1.0f64..500.0) {
        let file = |scale: f64| format!(
            r#"{{"grid": {{"rows": 1, "cols": 2}}, "phi_km": 2, "speed_kmh": 20, "value_of_time": 15,
                "demand": [[{base}, 1], [2, 3]], "demand_scale": {scale}}}"#
        );
        let one = parse_scenario(&file(1.0)).unwrap();
        let scaled = parse_scenario(&file(q)).unwrap();
        for (a, b) in one.demand().iter().zip(scaled.demand()) {
            prop_assert!((a * q - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}

#[test]
fn scenario_files() {
    let s1 = common::scenario("s1");
    assert_eq!(s1.total_demand(), 8000.0);
    assert_eq!(s1.vehicle_cost(), 52.0);

    let mono = common::scenario("monocentric_3x3");
    assert!((mono.total_demand() - 9520.0).abs() < 1e-9);
    let mut file = mono.to_file();
    file.demand_scale = Some(2.0);
    let doubled = file.into_scenario().unwrap();
    assert!((doubled.total_demand() - 19040.0).abs() < 1e-8);
    // Omitted vehicle cost follows the speed convention.
    assert!((mono.vehicle_cost() - (40.0 + 0.48 * 25.0)).abs() < 1e-12);

    let negative = r#"{"grid": {"rows": 1, "cols": 1}, "phi_km": 1, "speed_kmh": 20, "value_of_time": 15, "demand": [[-1]]}"#;
    match parse_scenario(negative) {
        Err(e @ ScenarioError::Field { .. }) => assert!(e.to_string().contains("demand")),
        other => panic!("expected a field error, got {other:?}"),
    }
}

#[test]
fn homogeneous_demand() {
    let s = homogeneous_scenario(ZoneGrid::rectangular(2, 2, 5.0).unwrap(), 8000.0, 25.0, 20.0, None).unwrap();
    assert!(s.demand().iter().all(|&v| v == 500.0));
    let s = homogeneous_scenario(ZoneGrid::rectangular(1, 1, 5.0).unwrap(), 100.0, 25.0, 20.0, None).unwrap();
    assert_eq!(s.demand(), &[100.0]);
    let s = homogeneous_scenario(ZoneGrid::rectangular(3, 3, 5.0).unwrap(), 9000.0, 25.0, 20.0, None).unwrap();
    assert!(s.demand().iter().all(|&v| (v - 9000.0 / 81.0).abs() < 1e-12));
}
