//! Independent checks of the analytic model: Monte-Carlo estimates of its
//! geometric constants and a discrete-event simulation of the operating
//! policy.

pub mod config;
pub mod engine;
pub mod oracles;

pub use config::{apportion, mean_trip_time, write_event_log, KindAverage, LogRow, SimConfig, SimError, SimMetrics};
pub use engine::{run_discrete_event, run_discrete_event_logged, run_replications};
pub use oracles::{mc_case4_fractions, mc_expected_distances, mc_intra_feasible_fraction, oracle_table, Estimate, OracleRow};
