//! The command-line surface: exit codes, CSV shape and stability, and the
//! shipped example scenarios.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lazylight"))
}

fn scenario_path(name: &str) -> String {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name);
    root.canonicalize().unwrap().to_string_lossy().into_owned()
}

#[test]
fn tournament_exits_zero_when_honest_wins() {
    let dir = tempdir();
    let csv = dir.join("out.csv");
    let out = bin()
        .args([
            "tournament",
            &scenario_path("tournament_small.json"),
            "--csv",
            csv.to_str().unwrap(),
            "--per-game",
        ])
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let table = std::fs::read_to_string(&csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "scenario_id,n_provers,ledger_len,m,games,rounds,bytes,sim_seconds,winner,honest_won"
    );
    let row = lines.next().unwrap();
    assert!(row.ends_with(",true"), "row: {row}");
    assert!(std::fs::read_to_string(dir.join("out.games.csv")).unwrap().lines().count() > 1);
}

#[test]
fn tournament_exits_nonzero_without_an_honest_winner() {
    // all-adversarial prover set: whatever wins, it is not flagged honest
    let dir = tempdir();
    let path = dir.join("no_honest.json");
    let json = std::fs::read_to_string(scenario_path("tournament_small.json"))
        .unwrap()
        .replace("{ \"strategy\": \"honest\" },", "");
    std::fs::write(&path, json).unwrap();
    let out = bin().args(["tournament", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bisect_reports_the_pinpoint() {
    let out = bin()
        .args(["bisect", &scenario_path("bisect_corrupt_leaf.json")])
        .output()
        .unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("result=ChallengerWins"), "stdout: {stdout}");
    assert!(stdout.contains("pinpoint=120"), "stdout: {stdout}");
}

#[test]
fn sweep_emits_one_row_per_point_and_is_stable() {
    let run = || {
        let out = bin()
            .args([
                "sweep",
                &scenario_path("bisect_corrupt_leaf.json"),
                "--vary",
                "m=2,4,16",
            ])
            .output()
            .unwrap();
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        String::from_utf8(out.stdout).unwrap()
    };
    let first = run();
    assert_eq!(first.lines().count(), 4, "header plus three points");
    let second = run();
    assert_eq!(first, second, "same scenario and seed must give identical CSV bytes");
}

#[test]
fn attack_demo_prints_both_counts() {
    let out = bin().args(["attack-demo", "--n", "40", "--m", "4"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("naive_reveals=39"), "stdout: {stdout}");
    assert!(stdout.contains("final_tx_valid=false"), "stdout: {stdout}");
}

#[test]
fn malformed_scenario_reports_an_error() {
    let dir = tempdir();
    let path = dir.join("broken.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = bin().args(["tournament", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(!out.stderr.is_empty());
}

fn tempdir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lazylight-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}
