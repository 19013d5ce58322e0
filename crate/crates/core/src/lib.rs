//! Steady-state planning model for a shared ride-hailing fleet serving a
//! region split into square zones.
//!
//! Vehicles carry at most two passengers. Given demand rates between zones,
//! the number of idle vehicles per zone and how two-passenger trips split
//! between diagonal paths, [`equations`] solves the conservation balances,
//! [`rebalance`] routes surplus idle vehicles, [`evaluate`] turns the result
//! into fleet size and cost per passenger, and [`optimize`] searches the
//! design space.

pub mod design;
pub mod equations;
pub mod evaluate;
pub mod matching;
pub mod optimize;
pub mod rebalance;
pub mod scenario;
pub mod states;
pub mod zonegrid;

pub use design::{load_design, parse_design, DesignError, DesignFile, DesignVars, FreePair};
pub use equations::{check_balances, solve_steady_state, FlowSolution, GuessCache, SolveError, SolverConfig, SteadyStateSolver};
pub use evaluate::{performance_report, system_cost, EvalError, PerformanceReport};
pub use optimize::{evaluate_design, optimize, Evaluation, OptimResult, OptimizerConfig};
pub use rebalance::{rebalancing_cost, min_cost_transport, solve_transportation, solve_transportation_tol, RebalanceError, RebalancePlan};
pub use scenario::{load_scenario, parse_scenario, Scenario, ScenarioError, ScenarioFile};
pub use states::{enumerate_states, StateKind, StateSpace, VehicleState};
pub use zonegrid::{Direction, GridError, Zone, ZoneGrid, ZoneId};
