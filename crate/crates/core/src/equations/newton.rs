//! Damped Newton solve of the seeker-count system.

use std::collections::VecDeque;
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{assemble, count_residual, flow_residual, heuristic_guess, little_law_counts, FlowSolution};
use crate::design::{DesignError, DesignVars};
use crate::matching::MatchError;
use crate::scenario::Scenario;
use crate::zonegrid::ZoneId;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid design: {0}")]
    Design(#[from] DesignError),
    #[error("{0}")]
    Unservable(#[from] MatchError),
    #[error("no convergence after {guesses} initial guesses (best residual {best_residual:.3e})")]
    NoConvergence { guesses: usize, best_residual: f64 },
    #[error("negative {what} = {value:.3e} at the solution")]
    Negative { what: String, value: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub max_guesses: usize,
    /// Flow residual tolerance relative to 1 + max λ.
    pub rel_tol: f64,
    /// Solve from every guess and warn when converged points disagree.
    pub probe_uniqueness: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { max_iters: 60, max_guesses: 5, rel_tol: 1e-10, probe_uniqueness: false }
    }
}

/// Recently converged solves, used to seed later ones. Only ever advisory:
/// every solve is accepted on its own residual.
#[derive(Debug, Default)]
pub struct GuessCache {
    entries: Mutex<VecDeque<(Vec<f64>, Vec<f64>)>>,
}

const CACHE_CAPACITY: usize = 32;

impl GuessCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// Seeker counts of the cached design closest to `key`.
    pub fn nearest(&self, key: &[f64]) -> Option<Vec<f64>> {
        let entries = self.entries.lock().unwrap();
        entries
            .iter()
            .filter(|(k, _)| k.len() == key.len())
            .map(|(k, x)| {
                let d: f64 = k.iter().zip(key).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, x)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, x)| x.clone())
    }

    pub fn insert(&self, key: Vec<f64>, x: Vec<f64>) {
        let mut entries = self.entries.lock().unwrap();
        if let Some(pos) = entries.iter().position(|(k, _)| *k == key) {
            entries.remove(pos);
        }
        entries.push_front((key, x));
        entries.truncate(CACHE_CAPACITY);
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, Default)]
pub struct SteadyStateSolver {
    pub config: SolverConfig,
}

struct Attempt {
    x: Vec<f64>,
    iterations: usize,
    flow_norm: f64,
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

impl SteadyStateSolver {
    pub fn new(config: SolverConfig) -> Self {
        SteadyStateSolver { config }
    }

    pub fn solve(
        &self,
        scenario: &Scenario,
        design: &DesignVars,
        init: Option<&[f64]>,
        cache: Option<&GuessCache>,
    ) -> Result<FlowSolution, SolveError> {
        design.validate(scenario.grid())?;
        let n = scenario.zones() * scenario.zones();
        let key = design.key_vector();

        let mut guesses: Vec<Vec<f64>> = Vec::new();
        if let Some(x) = init.filter(|x| x.len() == n) {
            guesses.push(x.to_vec());
        }
        if let Some(x) = cache.and_then(|c| c.nearest(&key)) {
            guesses.push(x);
        }
        let h = heuristic_guess(scenario);
        for scale in [1.0, 0.1, 4.0, 0.01, 20.0] {
            guesses.push(h.iter().map(|v| v * scale).collect());
        }
        guesses.truncate(self.config.max_guesses.max(1));

        let mut best_residual = f64::INFINITY;
        let mut last_unservable = None;
        let mut found: Option<Attempt> = None;
        for guess in &guesses {
            match self.newton(scenario, design, guess) {
                Ok(attempt) => {
                    if attempt.flow_norm <= self.tolerance(scenario) {
                        match &found {
                            None => {
                                found = Some(attempt);
                                if !self.config.probe_uniqueness {
                                    break;
                                }
                            }
                            Some(first) => {
                                let scale = 1.0 + max_abs(&first.x);
                                let gap = first.x.iter().zip(&attempt.x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                                if gap > 1e-6 * scale {
                                    log::warn!("steady state not unique: guesses converged {gap:.3e} apart");
                                }
                            }
                        }
                    } else {
                        best_residual = best_residual.min(attempt.flow_norm);
                    }
                }
                Err(e) => last_unservable = Some(e),
            }
        }

        let Some(attempt) = found else {
            if best_residual.is_infinite() {
                if let Some(e) = last_unservable {
                    return Err(e.into());
                }
            }
            return Err(SolveError::NoConvergence { guesses: guesses.len(), best_residual });
        };
        if let Some(c) = cache {
            c.insert(key, attempt.x.clone());
        }
        self.finish(scenario, design, attempt)
    }

    fn tolerance(&self, scenario: &Scenario) -> f64 {
        self.config.rel_tol * (1.0 + scenario.max_rate())
    }

    fn finish(&self, scenario: &Scenario, design: &DesignVars, attempt: Attempt) -> Result<FlowSolution, SolveError> {
        let x = attempt.x;
        let rates = assemble(scenario, design, &x)?;
        let derived = little_law_counts(scenario, design, &rates, &x);
        let tol = 1e-9 * (1.0 + scenario.max_rate());
        let c = &rates.cross;
        let groups: [(&str, &[f64]); 8] = [
            ("seeker count", &x),
            ("border crossing", &c.enter_pair),
            ("exit rate", &c.exit_remote),
            ("delivery rate", &c.deliver_local),
            ("pickup count", &derived.assigned_remote),
            ("pickup count", &derived.assigned_local),
            ("two-passenger count", &derived.full_pair),
            ("two-passenger count", &derived.full_local_remote),
        ];
        self.check_supply(scenario, design, &rates, tol)?;
        for (what, values) in groups {
            if let Some(&v) = values.iter().find(|&&v| v < -tol || v.is_nan()) {
                return Err(SolveError::Negative { what: what.to_string(), value: v });
            }
        }
        Ok(FlowSolution {
            k: scenario.zones(),
            n_idle: design.n_idle.clone(),
            seekers: x,
            rates,
            derived,
            residual_norm: attempt.flow_norm,
            iterations: attempt.iterations,
        })
    }

    /// Without idle vehicles or inflow, a zone's callers can only be served
    /// by seekers that are re-matched before ever delivering; the equations
    /// then hold for any vanishing seeker count, which is not a real supply.
    fn check_supply(&self, scenario: &Scenario, design: &DesignVars, a: &super::Assembled, tol: f64) -> Result<(), SolveError> {
        let k = scenario.zones();
        let c = &a.cross;
        for i in 0..k {
            let demand: f64 = (0..k).map(|j| scenario.lambda(i, j)).sum();
            if demand == 0.0 || design.n_idle[i] > 0.0 {
                continue;
            }
            let row = i * k..(i + 1) * k;
            let inflow = c.enter_local[i]
                + c.enter_local_pair[i]
                + c.enter_remote[row.clone()].iter().sum::<f64>()
                + c.enter_local_remote[row].iter().sum::<f64>()
                + c.enter_pair[i * k * k..(i + 1) * k * k].iter().sum::<f64>();
            if inflow <= tol {
                return Err(MatchError::NoSupply { zone: ZoneId::from_index(i) }.into());
            }
        }
        Ok(())
    }

    fn flow_norm(&self, scenario: &Scenario, a: &super::Assembled) -> f64 {
        max_abs(&flow_residual(scenario.zones(), a))
    }

    /// Newton iterations on the count-form residual from one guess. Errors
    /// only when the guess itself cannot be evaluated.
    fn newton(&self, scenario: &Scenario, design: &DesignVars, guess: &[f64]) -> Result<Attempt, MatchError> {
        let n = guess.len();
        let tol = self.tolerance(scenario);
        let mut x: Vec<f64> = guess.iter().map(|v| v.max(0.0)).collect();
        let (mut f, a0) = count_residual(scenario, design, &x)?;
        let mut flow = self.flow_norm(scenario, &a0);
        for it in 0..self.config.max_iters {
            let count_tol = 1e-9 * (1.0 + max_abs(&x));
            if flow <= tol && max_abs(&f) <= count_tol {
                return Ok(Attempt { x, iterations: it, flow_norm: flow });
            }
            let Ok(jac) = fd_jacobian(scenario, design, &x, &f) else { break };
            let rhs = DVector::from_iterator(n, f.iter().map(|v| -v));
            let Some(step) = jac.lu().solve(&rhs) else { break };

            let f_norm = norm2(&f);
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, di)| (xi + t * di).max(0.0)).collect();
                if let Ok((ft, at)) = count_residual(scenario, design, &trial) {
                    if norm2(&ft) <= (1.0 - 1e-4 * t) * f_norm || (norm2(&ft) <= f_norm && t < 1e-6) {
                        x = trial;
                        f = ft;
                        flow = self.flow_norm(scenario, &at);
                        accepted = true;
                        break;
                    }
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        let count_tol = 1e-9 * (1.0 + max_abs(&x));
        let flow_norm = if max_abs(&f) <= count_tol { flow } else { flow.max(tol * 2.0) };
        Ok(Attempt { x, iterations: self.config.max_iters, flow_norm })
    }
}

/// Forward-difference Jacobian of the count-form residual. Steps are taken
/// upward so clamped coordinates stay feasible.
fn fd_jacobian(scenario: &Scenario, design: &DesignVars, x: &[f64], f: &[f64]) -> Result<DMatrix<f64>, MatchError> {
    let n = x.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut xp = x.to_vec();
    for col in 0..n {
        let h = 1e-7 * x[col].abs().max(1e-2);
        xp[col] = x[col] + h;
        let (fp, _) = count_residual(scenario, design, &xp)?;
        for row in 0..n {
            jac[(row, col)] = (fp[row] - f[row]) / h;
        }
        xp[col] = x[col];
    }
    Ok(jac)
}

/// Row-major forward-difference Jacobian of the count-form residual, as the
/// solver uses it.
pub fn residual_jacobian(scenario: &Scenario, design: &DesignVars, x: &[f64]) -> Result<Vec<f64>, MatchError> {
    let (f, _) = count_residual(scenario, design, x)?;
    let n = x.len();
    let jac = fd_jacobian(scenario, design, x, &f)?;
    Ok((0..n * n).map(|q| jac[(q / n, q % n)]).collect())
}

/// Solves with default settings and no cache.
pub fn solve_steady_state(scenario: &Scenario, design: &DesignVars, init: Option<&[f64]>) -> Result<FlowSolution, SolveError> {
    SteadyStateSolver::default().solve(scenario, design, init, None)
}
