//! Scenario runner and analysis front end for the lazy-blockchain light
//! client: tournaments, single games, parameter sweeps, the optimal-degree
//! calculator, and the naive-client comparison demo.

pub mod commands;
pub mod tuning;

pub use commands::{
    apply_vary, csv_row, game_csv_rows, parse_vary, run_attack_demo, run_scenario,
    run_single_game, run_sweep, AttackReport, ScenarioRun, CSV_HEADER, GAME_CSV_HEADER,
};
pub use tuning::{game_duration, optimal_degree, TuningError};
