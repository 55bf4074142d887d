//! Command implementations shared by the binary and the test suites.

use anyhow::{bail, Context, Result};

use lazylight_sim::scenario::{build_fixture, Scenario};
use lazylight_sim::tournament::TournamentOutcome;
use lazylight_sim::{attack, run_game, GameRecord, GameResult, Outcome};

/// A completed scenario run.
pub struct ScenarioRun {
    pub outcome: TournamentOutcome,
    pub honest_won: bool,
    pub transcript: String,
}

/// Runs the scenario's tournament to completion.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioRun> {
    let mut fx = build_fixture(scenario).context("assembling scenario")?;
    let outcome =
        lazylight_sim::run_tournament(&mut fx.verifier, &mut fx.net, &mut fx.provers)?;
    let honest_won = fx.honest.contains(&outcome.winner);
    Ok(ScenarioRun { outcome, honest_won, transcript: fx.verifier.transcript.to_jsonl() })
}

pub const CSV_HEADER: &str =
    "scenario_id,n_provers,ledger_len,m,games,rounds,bytes,sim_seconds,winner,honest_won";

pub fn csv_row(scenario_id: u64, scenario: &Scenario, run: &ScenarioRun) -> String {
    format!(
        "{},{},{},{},{},{},{},{:.6},{},{}",
        scenario_id,
        scenario.provers.len(),
        scenario.ledger.length,
        scenario.network.arity,
        run.outcome.games_played,
        run.outcome.rounds,
        run.outcome.bytes,
        run.outcome.sim_seconds,
        run.outcome.winner,
        run.honest_won,
    )
}

pub const GAME_CSV_HEADER: &str = "scenario_id,game,challenger,responder,result,reason,exchanges,oracle_exchanges,rounds,bytes,bisect_size";

pub fn game_csv_rows(scenario_id: u64, games: &[GameRecord]) -> String {
    let mut out = String::new();
    for g in games {
        out.push_str(&format!(
            "{},{},{},{},{:?},{:?},{},{},{},{},{}\n",
            scenario_id,
            g.game,
            g.challenger,
            g.responder,
            g.result,
            g.reason,
            g.exchanges,
            g.oracle_exchanges,
            g.rounds,
            g.bytes,
            g.bisect_size.map_or(String::from(""), |s| s.to_string()),
        ));
    }
    out
}

/// Runs the single two-prover challenge game of a scenario. The larger
/// claimant challenges; a tie hands the role to the first listed prover.
pub fn run_single_game(scenario: &Scenario) -> Result<(Outcome, GameRecord, String)> {
    if scenario.provers.len() != 2 {
        bail!("a bisection scenario needs exactly two provers");
    }
    let mut fx = build_fixture(scenario)?;
    let (a, b) = (fx.provers[0].claimed_size(), fx.provers[1].claimed_size());
    let [first, second] = &mut fx.provers[..] else { unreachable!() };
    let (outcome, record) = if b > a {
        run_game(&mut fx.verifier, &mut fx.net, second, first, None)
    } else {
        run_game(&mut fx.verifier, &mut fx.net, first, second, None)
    };
    Ok((outcome, record, fx.verifier.transcript.to_jsonl()))
}

/// The sweep key/value list: `m=2,16,300` or `ledger_len=1000,100000`.
pub fn parse_vary(vary: &str) -> Result<(String, Vec<u64>)> {
    let (key, values) = vary.split_once('=').context("expected key=v1,v2,...")?;
    let key = key.trim().to_string();
    if key != "m" && key != "ledger_len" {
        bail!("unsupported sweep key {key:?} (use m or ledger_len)");
    }
    let values = values
        .split(',')
        .map(|v| v.trim().parse::<u64>().context("sweep values must be integers"))
        .collect::<Result<Vec<u64>>>()?;
    if values.is_empty() {
        bail!("empty sweep");
    }
    Ok((key, values))
}

pub fn apply_vary(scenario: &Scenario, key: &str, value: u64) -> Scenario {
    let mut s = scenario.clone();
    match key {
        "m" => s.network.arity = value as u32,
        "ledger_len" => s.ledger.length = value,
        _ => unreachable!("validated key"),
    }
    s
}

/// Runs the sweep and returns the metrics CSV plus each point's run.
pub fn run_sweep(scenario: &Scenario, key: &str, values: &[u64]) -> Result<(String, Vec<ScenarioRun>)> {
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    let mut runs = Vec::with_capacity(values.len());
    for (i, &v) in values.iter().enumerate() {
        let point = apply_vary(scenario, key, v);
        let run = run_scenario(&point)?;
        csv.push_str(&csv_row(i as u64, &point, &run));
        csv.push('\n');
        runs.push(run);
    }
    Ok((csv, runs))
}

/// The comparison the naive-reveal fixture supports: how many transactions
/// a proof-by-counterexample dialogue exposes before the final verdict
/// settles, against the message count of one dispute game over the same
/// history.
pub struct AttackReport {
    pub n: u64,
    pub final_tx_valid: bool,
    pub naive_reveals: u64,
    pub game_messages: u64,
    pub game_exchanges: u32,
    pub message_bound: u64,
    pub honest_won: bool,
}

pub fn run_attack_demo(n: u64, arity: u32, seed: u64) -> Result<AttackReport> {
    if n < 2 {
        bail!("the spend chain needs at least two transactions");
    }
    let cfg = lazylight_sim::NetworkConfig {
        delta_s: 0.001,
        bandwidth_bps: 1_000_000.0,
        arity,
        alpha: 2,
        liveness_u: 3,
        soundness_nu: 3,
        seed,
    };
    let mut fx = attack::build_attack_fixture(n, &cfg);
    let [honest, adversary] = &mut fx.provers[..] else { unreachable!() };
    let (outcome, record) = run_game(&mut fx.verifier, &mut fx.net, honest, adversary, None);
    if outcome.result != GameResult::ChallengerWins {
        bail!("the honest challenger must win the demo game");
    }
    Ok(AttackReport {
        n,
        final_tx_valid: attack::final_tx_valid(n),
        naive_reveals: attack::naive_reveal_count(n),
        game_messages: record.messages,
        game_exchanges: record.exchanges,
        message_bound: 4 * ceil_log(arity, n + 1) + 8,
        honest_won: true,
    })
}

fn ceil_log(base: u32, value: u64) -> u64 {
    let mut k = 0u64;
    let mut acc = 1u64;
    while acc < value {
        acc = acc.saturating_mul(base as u64);
        k += 1;
    }
    k
}
