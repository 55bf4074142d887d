use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use lazylight_cli::{commands, tuning};
use lazylight_sim::scenario::Scenario;

#[derive(Parser)]
#[command(name = "lazylight", about = "Light clients for lazy blockchains: dispute games, tournaments, and tuning", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario's tournament; exits 0 iff the honest commitment won.
    Tournament {
        scenario: PathBuf,
        /// Write the metrics row (plus header) here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write the full event transcript (JSON lines) here.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Also write per-game rows next to the CSV.
        #[arg(long)]
        per_game: bool,
    },
    /// Run the single two-prover challenge game of a scenario.
    Bisect {
        scenario: PathBuf,
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Tree degree minimizing the game duration for a channel.
    OptimalDegree {
        #[arg(long)]
        delta_ms: f64,
        #[arg(long)]
        bandwidth_mbps: f64,
        #[arg(long, default_value_t = 256)]
        hash_bits: u32,
    },
    /// Evaluate the game-duration model.
    Duration {
        #[arg(long)]
        ledger: f64,
        #[arg(long)]
        m: f64,
        #[arg(long)]
        delta_ms: f64,
        #[arg(long)]
        bandwidth_mbps: f64,
        #[arg(long, default_value_t = 256)]
        hash_bits: u32,
    },
    /// Compare a naive reveal dialogue against one dispute game on the
    /// alternating spend chain.
    AttackDemo {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 4)]
        m: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Re-run a scenario across parameter values (m=... or ledger_len=...).
    Sweep {
        scenario: PathBuf,
        #[arg(long)]
        vary: String,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn load_scenario(path: &PathBuf) -> Result<Scenario> {
    let json = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Scenario::from_json(&json)?)
}

fn run() -> Result<ExitCode> {
    match Cli::parse().cmd {
        Cmd::Tournament { scenario, csv, transcript, per_game } => {
            let sc = load_scenario(&scenario)?;
            let run = commands::run_scenario(&sc)?;
            let mut out = String::from(commands::CSV_HEADER);
            out.push('\n');
            out.push_str(&commands::csv_row(0, &sc, &run));
            out.push('\n');
            if let Some(path) = &csv {
                fs::write(path, &out)?;
                if per_game {
                    let mut games = String::from(commands::GAME_CSV_HEADER);
                    games.push('\n');
                    games.push_str(&commands::game_csv_rows(0, &run.outcome.games));
                    fs::write(path.with_extension("games.csv"), games)?;
                }
            }
            if let Some(path) = transcript {
                fs::write(path, &run.transcript)?;
            }
            print!("{out}");
            println!(
                "winner={} commitment={} honest_won={}",
                run.outcome.winner,
                run.outcome.winner_commit.0,
                run.honest_won
            );
            Ok(if run.honest_won { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Bisect { scenario, transcript } => {
            let sc = load_scenario(&scenario)?;
            let (outcome, record, events) = commands::run_single_game(&sc)?;
            if let Some(path) = transcript {
                fs::write(path, &events)?;
            }
            println!(
                "result={:?} reason={:?} pinpoint={} exchanges={} rounds={} bytes={}",
                outcome.result,
                outcome.reason,
                outcome.pinpoint.map_or(String::from("-"), |p| p.index.to_string()),
                record.exchanges,
                record.rounds,
                record.bytes,
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OptimalDegree { delta_ms, bandwidth_mbps, hash_bits } => {
            let m = tuning::optimal_degree(delta_ms / 1e3, bandwidth_mbps * 1e6, hash_bits as f64)?;
            println!("{m}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Duration { ledger, m, delta_ms, bandwidth_mbps, hash_bits } => {
            let d = tuning::game_duration(
                ledger,
                m,
                delta_ms / 1e3,
                bandwidth_mbps * 1e6,
                hash_bits as f64,
            )?;
            println!("{d:.6}");
            Ok(ExitCode::SUCCESS)
        }
        Cmd::AttackDemo { n, m, seed } => {
            let report = commands::run_attack_demo(n, m, seed)?;
            println!(
                "n={} final_tx_valid={} naive_reveals={} game_messages={} game_exchanges={} message_bound={}",
                report.n,
                report.final_tx_valid,
                report.naive_reveals,
                report.game_messages,
                report.game_exchanges,
                report.message_bound,
            );
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sweep { scenario, vary, csv } => {
            let sc = load_scenario(&scenario)?;
            let (key, values) = commands::parse_vary(&vary)?;
            let (table, _) = commands::run_sweep(&sc, &key, &values)?;
            if let Some(path) = csv {
                fs::write(path, &table)?;
            }
            print!("{table}");
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
