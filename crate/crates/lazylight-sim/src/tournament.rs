//! Multi-prover elimination: pair the largest surviving claim against each
//! newcomer in decreasing size order, replaying against the next-largest
//! survivor whenever the incumbent loses.

use std::collections::HashMap;

use serde::Serialize;

use lazylight::execution::{apply_mut, Key, SmtProof, StateCommitment};

use crate::game::{run_game, GameRecord, GameResult, Verifier};
use crate::message::Message;
use crate::net::{PartyId, SimNet, VERIFIER};
use crate::prover::ProverNode;
use crate::transcript::Event;

#[derive(Debug, thiserror::Error)]
pub enum TournamentError {
    #[error("no provers")]
    NoProvers,
}

#[derive(Clone, Debug, Serialize)]
pub struct TournamentOutcome {
    pub winner: PartyId,
    pub winner_commit: StateCommitment,
    pub games_played: u32,
    pub games: Vec<GameRecord>,
    pub rounds: u64,
    pub bytes: u64,
    pub sim_seconds: f64,
    /// Elimination order; a removed prover never re-enters the survivor set.
    pub eliminated: Vec<PartyId>,
}

fn pair_mut(provers: &mut [ProverNode], a: usize, b: usize) -> (&mut ProverNode, &mut ProverNode) {
    assert_ne!(a, b);
    if a < b {
        let (left, right) = provers.split_at_mut(b);
        (&mut left[a], &mut right[0])
    } else {
        let (left, right) = provers.split_at_mut(a);
        (&mut right[0], &mut left[b])
    }
}

/// Collects every prover's size answer over one query round-trip.
fn collect_sizes(
    verifier: &mut Verifier,
    net: &mut SimNet,
    provers: &mut [ProverNode],
) -> HashMap<PartyId, u64> {
    for p in provers.iter() {
        net.send(VERIFIER, p.id, Message::GetSize, false);
    }
    let mut sizes = HashMap::new();
    for _ in 0..2 {
        for env in net.advance_round() {
            if env.to == VERIFIER {
                if let Message::SizeIs(s) = env.msg {
                    sizes.insert(env.from, s);
                    verifier.transcript.push(Event::SizeRecorded { prover: env.from, size: s });
                }
            } else if let Some(idx) = provers.iter().position(|p| p.id == env.to) {
                if let Some(reply) = provers[idx].on_message(&env.msg) {
                    net.send(env.to, VERIFIER, reply, false);
                }
            }
        }
    }
    sizes
}

/// Runs the elimination over all provers (at least one assumed honest) and
/// returns the surviving claimant with its state commitment.
pub fn run_tournament(
    verifier: &mut Verifier,
    net: &mut SimNet,
    provers: &mut [ProverNode],
) -> Result<TournamentOutcome, TournamentError> {
    if provers.is_empty() {
        return Err(TournamentError::NoProvers);
    }
    let sizes = collect_sizes(verifier, net, provers);
    // decreasing claimed size; answering no size at all forfeits up front
    let mut order: Vec<usize> = (0..provers.len()).collect();
    order.sort_by_key(|&i| {
        (std::cmp::Reverse(sizes.get(&provers[i].id).copied().unwrap_or(0)), provers[i].id)
    });

    let size_of = |provers: &[ProverNode], idx: usize| -> u64 {
        sizes.get(&provers[idx].id).copied().unwrap_or(0)
    };

    let mut survivors: Vec<usize> = vec![order[0]];
    let mut largest = order[0];
    let mut games: Vec<GameRecord> = Vec::new();
    let mut eliminated: Vec<PartyId> = Vec::new();

    for &newcomer in &order[1..] {
        loop {
            let (chal_idx, resp_idx) = if size_of(provers, largest) > size_of(provers, newcomer) {
                (largest, newcomer)
            } else {
                (newcomer, largest)
            };
            let expected = (size_of(provers, chal_idx), size_of(provers, resp_idx));
            let (chal, resp) = pair_mut(provers, chal_idx, resp_idx);
            let (outcome, record) = run_game(verifier, net, chal, resp, Some(expected));

            match outcome.result {
                GameResult::Merged => {
                    // identical claims carry the same commitment; fold the
                    // newcomer into the survivor set without a game
                    survivors.push(newcomer);
                    break;
                }
                GameResult::NestedMmrs => {
                    games.push(record);
                    survivors.push(newcomer);
                    break;
                }
                _ => {
                    let loser_id = outcome
                        .loser(provers[chal_idx].id, provers[resp_idx].id)
                        .expect("decisive game");
                    games.push(record);
                    let loser_idx = if loser_id == provers[largest].id { largest } else { newcomer };
                    if loser_idx == largest {
                        survivors.retain(|&s| s != largest);
                        eliminated.push(provers[largest].id);
                        if survivors.is_empty() {
                            survivors.push(newcomer);
                            largest = newcomer;
                            break;
                        }
                        largest = *survivors
                            .iter()
                            .max_by_key(|&&s| (size_of(provers, s), std::cmp::Reverse(provers[s].id)))
                            .expect("non-empty survivors");
                        // replay against the same newcomer
                        continue;
                    } else {
                        eliminated.push(provers[newcomer].id);
                        break;
                    }
                }
            }
        }
    }

    // the surviving commitment, fetched over the wire like any other answer
    let winner_id = provers[largest].id;
    net.send(VERIFIER, winner_id, Message::GetClaim, false);
    let mut winner_commit = None;
    for _ in 0..2 {
        for env in net.advance_round() {
            if env.to == VERIFIER {
                if let Message::ClaimIs(c) = env.msg {
                    winner_commit = Some(c.state_commit);
                }
            } else if env.to == winner_id {
                if let Some(reply) = provers[largest].on_message(&env.msg) {
                    net.send(winner_id, VERIFIER, reply, false);
                }
            }
        }
    }
    let winner_commit = winner_commit.expect("winner answers the final claim query");

    verifier.transcript.push(Event::TournamentDone {
        winner: winner_id,
        state: winner_commit.0,
        games: games.len() as u32,
        rounds: net.round(),
    });

    Ok(TournamentOutcome {
        winner: winner_id,
        winner_commit,
        games_played: games.len() as u32,
        games,
        rounds: net.round(),
        bytes: net.stats.payload_bytes,
        sim_seconds: net.sim_seconds(&verifier.cfg),
        eliminated,
    })
}

/// A state element answer from the winning prover: the value plus its
/// sparse-tree proof against the winner's claimed commitment. Absent keys
/// come back as zero with a non-inclusion proof over the same path.
#[derive(Clone, Debug)]
pub struct StateAnswer {
    pub value: u64,
    pub proof: SmtProof,
}

pub fn final_state_query(prover: &ProverNode, key: Key) -> Option<StateAnswer> {
    let exec = prover.data.exec.as_ref()?;
    let mut st = exec.st0.clone();
    for tx in &exec.txs {
        apply_mut(&mut st, tx);
    }
    Some(StateAnswer { value: st.balance(key), proof: st.prove(key) })
}
