//! Design search: projected gradient descent with backtracking over the free
//! path fractions and idle counts, restarted from seeded random designs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::design::{DesignFile, DesignVars, FreePair};
use crate::equations::{FlowSolution, GuessCache, SolverConfig, SteadyStateSolver};
use crate::evaluate::{performance_report, PerformanceReport};
use crate::rebalance::{solve_transportation_tol, RebalancePlan};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub multistarts: usize,
    pub max_iters: usize,
    /// Relative central-difference step; the absolute step is
    /// max(grad_step·|x|, grad_step/10).
    pub grad_step: f64,
    pub no_improve_patience: usize,
    /// $/pax assigned to designs that cannot be solved.
    pub infeasible_penalty: f64,
    pub seed: u64,
    /// Upper bounds on idle counts; defaults to ten times [`idle_heuristic`].
    pub idle_upper: Option<Vec<f64>>,
    /// Threads used to run starts; results do not depend on it.
    pub workers: usize,
    pub solver: SolverConfig,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            multistarts: 8,
            max_iters: 80,
            grad_step: 1e-4,
            no_improve_patience: 6,
            infeasible_penalty: 1e4,
            seed: 20190101,
            idle_upper: None,
            workers: 1,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid optimizer configuration: {0}")]
    Config(String),
    #[error("scenario has no demand")]
    NoDemand,
    #[error("every start was infeasible; last reason: {last_reason}")]
    AllInfeasible { starts: usize, last_reason: String },
}

/// Why a design could not be priced.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("infeasible design: {reason}")]
pub struct Infeasible {
    pub reason: String,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub z: f64,
    pub report: PerformanceReport,
    pub solution: FlowSolution,
    pub plan: RebalancePlan,
}

/// Solve, route rebalancing and price one design. The cache only seeds the
/// Newton solve.
pub fn evaluate_design(scenario: &Scenario, design: &DesignVars, cache: Option<&GuessCache>) -> Result<Evaluation, Infeasible> {
    evaluate_with(scenario, design, cache, &SolverConfig::default())
}

fn evaluate_with(
    scenario: &Scenario,
    design: &DesignVars,
    cache: Option<&GuessCache>,
    solver: &SolverConfig,
) -> Result<Evaluation, Infeasible> {
    if !(scenario.total_demand() > 0.0) {
        return Err(Infeasible { reason: "scenario has no demand".into() });
    }
    let solver = SteadyStateSolver::new(solver.clone());
    let solution = solver.solve(scenario, design, None, cache).map_err(|e| Infeasible { reason: e.to_string() })?;
    // ρ inherits the solver's residual, which scales with demand.
    let drift_tol = 1e-8 * scenario.total_demand();
    let plan = solve_transportation_tol(scenario.grid(), scenario.speed(), solution.net_rebalance(), drift_tol)
        .map_err(|e| Infeasible { reason: e.to_string() })?;
    let report = performance_report(scenario, &solution, &plan);
    if !report.cost_per_pax.is_finite() {
        return Err(Infeasible { reason: "non-finite cost".into() });
    }
    Ok(Evaluation { z: report.cost_per_pax, report, solution, plan })
}

/// Idle vehicles needed to cover 5% of a zone's trip ends for one
/// zone-crossing time, floored at one vehicle.
pub fn idle_heuristic(scenario: &Scenario) -> Vec<f64> {
    let k = scenario.zones();
    let crossing = scenario.phi() / scenario.speed();
    (0..k)
        .map(|i| {
            let ends: f64 = (0..k).map(|j| scenario.lambda(i, j) + scenario.lambda(j, i)).sum();
            (0.05 * ends * crossing).max(1.0)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub start: usize,
    pub iter: usize,
    pub z: f64,
    pub feasible: bool,
    /// Best Z of this start so far.
    pub best_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartSummary {
    pub start: usize,
    /// None when the start never found a feasible design.
    pub best_z: Option<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub best_design: DesignVars,
    pub best_report: PerformanceReport,
    pub best_solution: FlowSolution,
    pub best_plan: RebalancePlan,
    pub trace: Vec<TraceEntry>,
    pub starts_summary: Vec<StartSummary>,
}

/// Serializable view of an [`OptimResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimReport {
    pub design: DesignFile,
    pub report: PerformanceReport,
    pub trace: Vec<TraceEntry>,
    pub starts: Vec<StartSummary>,
}

impl OptimResult {
    pub fn to_report(&self, scenario: &Scenario) -> OptimReport {
        OptimReport {
            design: self.best_design.to_file(scenario.grid()),
            report: self.best_report.clone(),
            trace: self.trace.clone(),
            starts: self.starts_summary.clone(),
        }
    }
}

/// Free coordinates: one fraction per free pair, then the K idle counts.
struct Space {
    pairs: Vec<FreePair>,
    upper: Vec<f64>,
}

impl Space {
    fn dim(&self) -> usize {
        self.pairs.len() + self.upper.len()
    }

    fn bound(&self, c: usize) -> f64 {
        if c < self.pairs.len() {
            1.0
        } else {
            self.upper[c - self.pairs.len()]
        }
    }

    fn project(&self, x: &mut [f64]) {
        for (c, v) in x.iter_mut().enumerate() {
            *v = v.clamp(0.0, self.bound(c));
        }
    }

    fn design(&self, scenario: &Scenario, x: &[f64]) -> DesignVars {
        let np = self.pairs.len();
        let grid = scenario.grid();
        let mut d = DesignVars::even(grid, x[np..].to_vec());
        for (p, &v) in self.pairs.iter().zip(x) {
            d.set_free_value(grid, p, v);
        }
        d
    }

    fn coords(&self, scenario: &Scenario, d: &DesignVars) -> Vec<f64> {
        let mut x: Vec<f64> = self.pairs.iter().map(|p| d.free_value(scenario.grid(), p)).collect();
        x.extend(&d.n_idle);
        x
    }

    fn random(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let mut x: Vec<f64> = self.pairs.iter().map(|_| rng.random::<f64>()).collect();
        for &ub in &self.upper {
            // Log-uniform over three decades below the bound.
            let lo = (ub * 1e-3).ln();
            x.push((lo + rng.random::<f64>() * (ub.ln() - lo)).exp());
        }
        x
    }
}

struct StartOutcome {
    best: Option<(Vec<f64>, f64)>,
    trace: Vec<TraceEntry>,
    iterations: usize,
    last_reason: String,
}

struct Objective<'a> {
    scenario: &'a Scenario,
    space: &'a Space,
    config: &'a OptimizerConfig,
    cache: GuessCache,
    last_reason: String,
}

impl Objective<'_> {
    fn z(&mut self, x: &[f64]) -> (f64, bool) {
        let d = self.space.design(self.scenario, x);
        match evaluate_with(self.scenario, &d, Some(&self.cache), &self.config.solver) {
            Ok(e) => (e.z, true),
            Err(e) => {
                self.last_reason = e.reason;
                (self.config.infeasible_penalty, false)
            }
        }
    }

    fn gradient(&mut self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        let mut probe = x.to_vec();
        for c in 0..x.len() {
            let h = (self.config.grad_step * x[c].abs()).max(self.config.grad_step / 10.0);
            let hi = (x[c] + h).min(self.space.bound(c));
            let lo = (x[c] - h).max(0.0);
            if hi <= lo {
                continue;
            }
            probe[c] = hi;
            let (zp, _) = self.z(&probe);
            probe[c] = lo;
            let (zm, _) = self.z(&probe);
            probe[c] = x[c];
            g[c] = (zp - zm) / (hi - lo);
        }
        g
    }
}

fn run_start(scenario: &Scenario, space: &Space, config: &OptimizerConfig, start: usize) -> StartOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add((start as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
    let mut obj = Objective { scenario, space, config, cache: GuessCache::new(), last_reason: String::new() };
    let mut trace = Vec::new();

    let mut x = Vec::new();
    let mut z = config.infeasible_penalty;
    let mut feasible = false;
    for _ in 0..10 {
        x = space.random(&mut rng);
        (z, feasible) = obj.z(&x);
        if feasible {
            break;
        }
    }
    if !feasible {
        let d = DesignVars::even(scenario.grid(), space.upper.iter().map(|u| u / 10.0).collect());
        x = space.coords(scenario, &d);
        (z, feasible) = obj.z(&x);
    }
    let mut best = feasible.then(|| (x.clone(), z));
    trace.push(TraceEntry { start, iter: 0, z, feasible, best_z: z });
    if !feasible {
        return StartOutcome { best, trace, iterations: 0, last_reason: obj.last_reason };
    }

    // Descent runs in coordinates scaled by each upper bound.
    let scale: Vec<f64> = (0..space.dim()).map(|c| space.bound(c)).collect();
    let mut t: Option<f64> = None;
    let mut stale = 0;
    let mut iterations = 0;
    for iter in 1..=config.max_iters {
        iterations = iter;
        let g = obj.gradient(&x);
        let gy: Vec<f64> = g.iter().zip(&scale).map(|(gi, s)| gi * s).collect();
        let gmax = gy.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            break;
        }
        let mut step = t.unwrap_or(0.05 / gmax);
        let mut accepted = None;
        while step * gmax > 1e-10 {
            let mut trial: Vec<f64> = x.iter().zip(&gy).zip(&scale).map(|((xi, gi), s)| xi - step * gi * s).collect();
            space.project(&mut trial);
            let decrease: f64 = x.iter().zip(&trial).zip(&g).map(|((a, b), gi)| gi * (a - b)).sum();
            if decrease <= 0.0 {
                break;
            }
            let (zt, ft) = obj.z(&trial);
            if ft && zt <= z - 1e-4 * decrease {
                accepted = Some((trial, zt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, zn)) = accepted else {
            trace.push(TraceEntry { start, iter, z, feasible: true, best_z: z });
            break;
        };
        t = Some(step * 2.0);
        let improved = zn < z * (1.0 - 1e-9);
        x = xn;
        z = zn;
        best = Some((x.clone(), z));
        trace.push(TraceEntry { start, iter, z, feasible: true, best_z: z });
        stale = if improved { 0 } else { stale + 1 };
        if stale >= config.no_improve_patience {
            break;
        }
    }
    StartOutcome { best, trace, iterations, last_reason: obj.last_reason }
}

/// Multistart search. Identical scenario and config give identical results
/// regardless of `workers`.
pub fn optimize(scenario: &Scenario, config: &OptimizerConfig) -> Result<OptimResult, OptimizeError> {
    if config.multistarts == 0 {
        return Err(OptimizeError::Config("multistarts must be at least 1".into()));
    }
    if !(config.grad_step > 0.0 && config.grad_step < 0.1) {
        return Err(OptimizeError::Config("grad_step must lie in (0, 0.1)".into()));
    }
    if !(scenario.total_demand() > 0.0) {
        return Err(OptimizeError::NoDemand);
    }
    let k = scenario.zones();
    let upper = match &config.idle_upper {
        Some(u) if u.len() != k => return Err(OptimizeError::Config(format!("expected {k} idle bounds, got {}", u.len()))),
        Some(u) if u.iter().any(|v| !(v.is_finite() && *v > 0.0)) => {
            return Err(OptimizeError::Config("idle bounds must be positive".into()))
        }
        Some(u) => u.clone(),
        None => idle_heuristic(scenario).iter().map(|h| 10.0 * h).collect(),
    };
    let space = Space { pairs: DesignVars::free_pairs(scenario.grid()), upper };

    let starts: Vec<usize> = (0..config.multistarts).collect();
    let workers = config.workers.clamp(1, config.multistarts);
    let mut outcomes: Vec<(usize, StartOutcome)> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let mine: Vec<usize> = starts.iter().copied().filter(|st| st % workers == w).collect();
                let space = &space;
                s.spawn(move || mine.into_iter().map(|st| (st, run_start(scenario, space, config, st))).collect::<Vec<_>>())
            })
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("optimizer worker panicked")).collect()
    });
    outcomes.sort_by_key(|(st, _)| *st);

    let mut trace = Vec::new();
    let mut summary = Vec::new();
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut last_reason = String::new();
    for (st, out) in outcomes {
        summary.push(StartSummary { start: st, best_z: out.best.as_ref().map(|b| b.1), iterations: out.iterations });
        trace.extend(out.trace);
        if !out.last_reason.is_empty() {
            last_reason = out.last_reason;
        }
        if let Some((x, z)) = out.best {
            if best.as_ref().is_none_or(|b| z < b.1) {
                best = Some((x, z));
            }
        }
    }
    let Some((x, _)) = best else {
        return Err(OptimizeError::AllInfeasible { starts: config.multistarts, last_reason });
    };
    let design = space.design(scenario, &x);
    let eval = evaluate_with(scenario, &design, None, &config.solver)
        .map_err(|e| OptimizeError::AllInfeasible { starts: config.multistarts, last_reason: e.reason })?;
    log::info!("best design Z = {:.6} $/pax", eval.z);
    Ok(OptimResult {
        best_design: design,
        best_report: eval.report,
        best_solution: eval.solution,
        best_plan: eval.plan,
        trace,
        starts_summary: summary,
    })
}
