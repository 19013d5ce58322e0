//! One function per subcommand.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rideshare_core::optimize::{OptimReport, OptimizeError};
use rideshare_core::scenario::{ingest_trips, read_trips_csv, DailyWindow};
use rideshare_core::{evaluate_design, load_design, load_scenario, solve_transportation, OptimizerConfig, Scenario};
use rideshare_sim::{apportion, oracle_table, run_discrete_event_logged, run_replications, write_event_log, OracleRow, SimConfig, SimMetrics};
use serde::{Deserialize, Serialize};

use crate::report::{scenario_digest, to_canonical_json, PlanView, ReportFile, SolutionView, Status, ToolInfo};

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

fn usage(message: impl ToString) -> Failure {
    Failure { code: 1, message: message.to_string() }
}

fn model(message: impl ToString) -> Failure {
    Failure { code: 2, message: message.to_string() }
}

type CmdResult = Result<(), Failure>;

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn scenario(path: &Path) -> Result<Scenario, Failure> {
    load_scenario(path).map_err(usage)
}

/// Rows of (metric, zone, value); zone is "all" for system totals.
fn write_metric_csv(path: &Path, rows: &[(&str, String, f64)]) -> CmdResult {
    let fail = |e: csv::Error| usage(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(["metric", "zone", "value"]).map_err(fail)?;
    for (metric, zone, value) in rows {
        w.write_record([metric.to_string(), zone.clone(), crate::report::sig12(*value).to_string()]).map_err(fail)?;
    }
    w.flush().map_err(|e| usage(format!("cannot write {}: {e}", path.display())))
}

fn zone_metrics(n_idle: &[f64], per_zone_active: &[f64], rebalancing: f64, fleet: f64, z: f64) -> Vec<(&'static str, String, f64)> {
    let mut rows = Vec::new();
    for (i, v) in n_idle.iter().enumerate() {
        rows.push(("idle_vehicles", (i + 1).to_string(), *v));
    }
    for (i, v) in per_zone_active.iter().enumerate() {
        rows.push(("active_vehicles", (i + 1).to_string(), *v));
    }
    rows.push(("rebalancing_vehicles", "all".into(), rebalancing));
    rows.push(("fleet", "all".into(), fleet));
    rows.push(("cost_per_passenger", "all".into(), z));
    rows
}

pub fn evaluate(scenario_path: &Path, design_path: &Path, out: &Path, emit_csv: Option<&Path>) -> CmdResult {
    let sc = scenario(scenario_path)?;
    let design = load_design(design_path, sc.grid()).map_err(usage)?;
    let mut report = ReportFile {
        tool: ToolInfo::current(),
        scenario_digest: scenario_digest(&sc),
        status: Status::Feasible,
        diagnostics: None,
        design: design.to_file(sc.grid()),
        performance: None,
        rebalancing: None,
        solution: None,
    };
    match evaluate_design(&sc, &design, None) {
        Ok(eval) => {
            let p = &eval.report;
            println!(
                "active {:.1}  rebalancing {:.1}  fleet {:.1} veh  door-to-door {:.3} hr  cost {:.3} $/pax",
                p.active_total(),
                p.rebalancing,
                p.total_fleet,
                p.mean_door_to_door,
                p.cost_per_pax
            );
            if let Some(path) = emit_csv {
                write_metric_csv(path, &zone_metrics(&design.n_idle, &p.per_zone_active, p.rebalancing, p.total_fleet, p.cost_per_pax))?;
            }
            report.solution = Some(SolutionView::new(&sc, &eval.solution, &eval.plan));
            report.rebalancing = Some(PlanView::new(&eval.plan));
            report.performance = Some(eval.report);
            write(out, &to_canonical_json(&report))
        }
        Err(e) => {
            report.status = Status::Infeasible;
            report.diagnostics = Some(e.reason.clone());
            write(out, &to_canonical_json(&report))?;
            Err(model(e))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimFile {
    pub tool: ToolInfo,
    pub scenario_digest: String,
    pub seed: u64,
    pub multistarts: usize,
    pub max_iters: usize,
    #[serde(flatten)]
    pub result: OptimReport,
    pub rebalancing: PlanView,
}

pub fn optimize(
    scenario_path: &Path,
    seed: u64,
    multistarts: usize,
    max_iters: usize,
    workers: usize,
    out: &Path,
    emit_csv: Option<&Path>,
) -> CmdResult {
    let sc = scenario(scenario_path)?;
    let config = OptimizerConfig { seed, multistarts, max_iters, workers, ..OptimizerConfig::default() };
    let res = rideshare_core::optimize(&sc, &config).map_err(|e| match e {
        OptimizeError::Config(_) => usage(e),
        _ => model(e),
    })?;
    let p = &res.best_report;
    println!("best cost {:.4} $/pax  fleet {:.1} veh  idle {:?}", p.cost_per_pax, p.total_fleet, rounded(&res.best_design.n_idle));
    if let Some(path) = emit_csv {
        write_metric_csv(path, &zone_metrics(&res.best_design.n_idle, &p.per_zone_active, p.rebalancing, p.total_fleet, p.cost_per_pax))?;
    }
    let file = OptimFile {
        tool: ToolInfo::current(),
        scenario_digest: scenario_digest(&sc),
        seed,
        multistarts,
        max_iters,
        result: res.to_report(&sc),
        rebalancing: PlanView::new(&res.best_plan),
    };
    write(out, &to_canonical_json(&file))
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 100.0).round() / 100.0).collect()
}

pub struct SimArgs {
    pub scenario: PathBuf,
    pub design: PathBuf,
    pub hours: f64,
    pub seed: u64,
    pub replications: usize,
    pub workers: usize,
    pub fleet: Option<usize>,
    pub event_log: Option<PathBuf>,
    pub out: PathBuf,
}

/// What the analytic model predicts for the simulated quantities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticView {
    pub fleet: f64,
    /// Fleet less idle vehicles: the analytic counterpart of busy vehicles.
    pub busy_vehicles: f64,
    pub mean_door_to_door: f64,
    pub served_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimFile {
    pub tool: ToolInfo,
    pub scenario_digest: String,
    pub seed: u64,
    pub replications: usize,
    pub horizon: f64,
    pub warmup: f64,
    pub analytic: AnalyticView,
    pub simulated: SimMetrics,
}

pub fn simulate(args: &SimArgs) -> CmdResult {
    let sc = scenario(&args.scenario)?;
    let design = load_design(&args.design, sc.grid()).map_err(usage)?;
    let eval = evaluate_design(&sc, &design, None).map_err(model)?;
    let mut config = SimConfig::from_evaluation(&sc, &design, &eval, args.hours, args.seed);
    if let Some(fleet) = args.fleet {
        let weights: Vec<f64> = config.placement.iter().map(|&n| n as f64).collect();
        config.placement = apportion(&weights, fleet);
        config.fleet = fleet;
    }
    config.validate().map_err(usage)?;
    if args.replications == 0 {
        return Err(usage("replications must be at least 1"));
    }

    let metrics = if let Some(path) = &args.event_log {
        config.event_log = true;
        let (first, rows) = run_discrete_event_logged(&config).map_err(usage)?;
        let file = fs::File::create(path).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
        write_event_log(&rows, std::io::BufWriter::new(file)).map_err(usage)?;
        config.event_log = false;
        if args.replications == 1 {
            first
        } else {
            run_replications(&config, args.replications, args.workers).map_err(usage)?
        }
    } else {
        run_replications(&config, args.replications, args.workers).map_err(usage)?
    };

    let analytic = AnalyticView {
        fleet: eval.report.total_fleet,
        busy_vehicles: eval.report.total_fleet - design.n_idle.iter().sum::<f64>(),
        mean_door_to_door: eval.report.mean_door_to_door,
        served_rate: sc.total_demand(),
    };
    println!(
        "served {:.1}/hr (demand {:.1})  busy {:.1} (analytic {:.1})  door-to-door {:.3} hr (analytic {:.3})",
        metrics.served_rate, analytic.served_rate, metrics.busy_vehicles, analytic.busy_vehicles, metrics.mean_door_to_door, analytic.mean_door_to_door
    );
    if metrics.starved {
        log::warn!("caller queue exceeded {} at peak ({}); the fleet cannot keep up", config.starvation_queue, metrics.max_queue);
    }
    if metrics.rule_violations > 0 {
        log::warn!("{} matching-rule violations", metrics.rule_violations);
    }
    let file = SimFile {
        tool: ToolInfo::current(),
        scenario_digest: scenario_digest(&sc),
        seed: args.seed,
        replications: args.replications,
        horizon: config.horizon,
        warmup: config.warmup,
        analytic,
        simulated: metrics,
    };
    write(&args.out, &to_canonical_json(&file))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleFile {
    pub tool: ToolInfo,
    pub samples: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub rows: Vec<OracleRow>,
}

pub fn oracle(samples: usize, seed: u64, tol: f64, out: Option<&Path>) -> CmdResult {
    if samples < 2 {
        return Err(usage("need at least 2 samples"));
    }
    let rows = oracle_table(samples, seed, tol);
    let stdout = std::io::stdout();
    let mut w = stdout.lock();
    let line = |w: &mut std::io::StdoutLock, s: String| writeln!(w, "{s}").map_err(|e| usage(e.to_string()));
    line(&mut w, format!("{:<34} {:>10} {:>10} {:>10} {:>9}  result", "constant", "expected", "estimate", "std err", "rel err"))?;
    for r in &rows {
        line(
            &mut w,
            format!(
                "{:<34} {:>10.6} {:>10.6} {:>10.2e} {:>9.4}%  {}",
                r.name,
                r.expected,
                r.estimate.mean,
                r.estimate.std_err,
                100.0 * r.rel_err,
                if r.pass { "PASS" } else { "FAIL" }
            ),
        )?;
    }
    if let Some(path) = out {
        let file = OracleFile { tool: ToolInfo::current(), samples, seed, tolerance: tol, rows: rows.clone() };
        write(path, &to_canonical_json(&file))?;
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        return Err(model(format!("{failed} of {} constants outside {tol}", rows.len())));
    }
    Ok(())
}

pub fn ingest(trips: &Path, template: &Path, window: Option<&str>, days: u32, out: &Path) -> CmdResult {
    let sc = scenario(template)?;
    let window = match window {
        Some(w) => w.parse::<DailyWindow>().map_err(usage)?,
        None => DailyWindow::whole_day(),
    };
    let file = fs::File::open(trips).map_err(|e| usage(format!("cannot read {}: {e}", trips.display())))?;
    let records = read_trips_csv(std::io::BufReader::new(file)).map_err(usage)?;
    let res = ingest_trips(records, sc.grid(), window, days).map_err(usage)?;
    let ingested = sc.with_demand(&res.rows(sc.zones())).map_err(usage)?;
    println!(
        "{} trips used, {} unparseable, {} outside the grid, {} outside the window; total {:.3} trips/hr",
        res.used,
        res.skipped,
        res.outside,
        res.out_of_window,
        ingested.total_demand()
    );
    write(out, &to_canonical_json(&ingested.to_file()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RebalanceFile {
    pub tool: ToolInfo,
    pub scenario_digest: String,
    pub rho: Vec<f64>,
    pub plan: PlanView,
}

pub fn rebalance(scenario_path: &Path, rho_path: &Path, out: &Path) -> CmdResult {
    let sc = scenario(scenario_path)?;
    let text = fs::read_to_string(rho_path).map_err(|e| usage(format!("cannot read {}: {e}", rho_path.display())))?;
    let rho: Vec<f64> = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", rho_path.display())))?;
    let plan = solve_transportation(sc.grid(), sc.speed(), &rho).map_err(usage)?;
    let k = plan.zones();
    for q in (0..k * k).filter(|&q| plan.flows[q] > 0.0) {
        println!("b {}->{} = {}", q / k + 1, q % k + 1, crate::report::sig12(plan.flows[q]));
    }
    println!("rebalancing vehicles {:.4}", plan.vehicle_hours);
    let file = RebalanceFile { tool: ToolInfo::current(), scenario_digest: scenario_digest(&sc), rho, plan: PlanView::new(&plan) };
    write(out, &to_canonical_json(&file))
}
