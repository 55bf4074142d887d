//! The verifier-mediated dispute games: bisection with full adjudication,
//! the zooming phase driven by the challenger, and the suffix monologue.
//!
//! Every message between the two provers passes through the verifier, one
//! network hop at a time. The verifier terminates a game the moment one of
//! the adjudication conditions fires:
//!
//! 1. the responder must answer within one round of receiving a query;
//! 2. responses must be syntactically valid;
//! 3. opened children must hash to the node they were opened from (the
//!    final reveal must hash to the selected leaf);
//! 4. the reveal of the entry before the pinpoint must carry a valid proof
//!    against the claimed peak it lives under;
//! 5. the revealed transaction pair must be adjacent on the union ledger,
//!    per the adjacency oracle;
//! 6. the revealed state commitments must be connected by the transition,
//!    per the execution oracle;
//! 7. a pinpoint at entry 0 must reveal the genesis pair.
//!
//! The responder wins if the challenger sends an invalid query or times
//! out, or if the full descent survives every condition.

use std::sync::Arc;

use serde::Serialize;

use lazylight::codec::Digest;
use lazylight::execution::{succinct_delta, StateCommitment};
use lazylight::ledger::{AugmentedEntry, HeaderChain};
use lazylight::merkle::{hash_inner, hash_leaf, level_sizes};
use lazylight::oracle::verify_adjacency;

use crate::message::{Claim, ClaimFault, Message, Query, Response, SuffixReveal};
use crate::net::{Expectations, NetStats, NetworkConfig, PartyId, SimNet, VERIFIER};
use crate::prover::ProverNode;
use crate::store::StubStore;
use crate::transcript::{Event, Transcript};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum GameResult {
    ChallengerWins,
    ResponderWins,
    /// Both provers stand: the shorter history is a verified prefix of the
    /// longer one. Only a completed suffix monologue produces this.
    NestedMmrs,
    /// Identical claims; no game was played.
    Merged,
}

/// Which adjudication rule ended the game.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Reason {
    Timeout,
    SyntacticInvalid,
    ChildrenHashMismatch,
    PrevProofInvalid,
    ConsensusOracleFalse,
    ExecutionOracleMismatch,
    GenesisMismatch,
    /// The challenger presented a full cap of valid extension entries; the
    /// responder's claim is too short to be honest.
    MonologueCapReached,
    InvalidClaim,
    EquivocatedSize,
    InvalidQuery,
    ChallengerTimeout,
    AllConditionsHold,
    NestedAgreement,
    IdenticalClaims,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pinpoint {
    pub index: u64,
    pub prev_entry: Option<Vec<u8>>,
    pub entry: Vec<u8>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub result: GameResult,
    pub reason: Reason,
    pub pinpoint: Option<Pinpoint>,
}

impl Outcome {
    fn of(result: GameResult, reason: Reason) -> Outcome {
        Outcome { result, reason, pinpoint: None }
    }

    /// The losing prover, if the game produced one.
    pub fn loser(&self, challenger: PartyId, responder: PartyId) -> Option<PartyId> {
        match self.result {
            GameResult::ChallengerWins => Some(responder),
            GameResult::ResponderWins => Some(challenger),
            GameResult::NestedMmrs | GameResult::Merged => None,
        }
    }
}

/// Per-game metrics.
#[derive(Clone, Debug, Serialize)]
pub struct GameRecord {
    pub game: u32,
    pub challenger: PartyId,
    pub responder: PartyId,
    pub result: GameResult,
    pub reason: Reason,
    pub pinpoint: Option<u64>,
    /// Interactive descent exchanges (openings plus the leaf reveal), or the
    /// single suffix exchange for a monologue.
    pub exchanges: u32,
    pub oracle_exchanges: u32,
    pub rounds: u64,
    pub bytes: u64,
    pub messages: u64,
    pub bisect_size: Option<u64>,
}

/// Oracle wiring for adjudication: real header-chain and witness checks, or
/// the stubbed reference used at scale (a revealed entry is accepted iff it
/// matches the honest reference history).
pub enum Mode {
    Real { chain: HeaderChain, genesis: StateCommitment },
    Stub { reference: Arc<StubStore> },
}

pub struct Verifier {
    pub cfg: NetworkConfig,
    pub mode: Mode,
    pub transcript: Transcript,
    expectations: Expectations,
    game: Option<GameCtx>,
    next_game: u32,
}

enum Phase {
    AwaitClaims,
    AwaitFirstMove,
    AwaitChildren,
    AwaitMove,
    AwaitLeaf,
    AwaitAdj,
    AwaitWitness,
    Done,
}

struct Descent {
    size: u64,
    offset: u64,
    level_sizes: Vec<u64>,
    /// Node currently being opened: its level, index within the level, and
    /// digest (the claimed peak at the start).
    parent_level: usize,
    parent_index: u64,
    parent_digest: Digest,
    children: Option<Children>,
    leaf_wait: Option<(u64, Digest)>,
}

struct Children {
    digests: Vec<Digest>,
    level: usize,
    base: u64,
}

struct Reveal {
    j: u64,
    entry: AugmentedEntry,
    entry_bytes: Vec<u8>,
    prev: Option<(AugmentedEntry, Vec<u8>)>,
}

struct GameCtx {
    id: u32,
    challenger: PartyId,
    responder: PartyId,
    expected_sizes: Option<(u64, u64)>,
    phase: Phase,
    chal_claim: Option<Claim>,
    resp_claim: Option<Claim>,
    resp_last_entry: Option<AugmentedEntry>,
    descent: Option<Descent>,
    reveal: Option<Reveal>,
    asked_chal_adj: bool,
    exchanges: u32,
    oracle_exchanges: u32,
    outcome: Option<Outcome>,
    start_round: u64,
    start_stats: NetStats,
    messages: u64,
}

impl Verifier {
    pub fn new(cfg: NetworkConfig, mode: Mode) -> Verifier {
        Verifier {
            cfg,
            mode,
            transcript: Transcript::new(),
            expectations: Expectations::default(),
            game: None,
            next_game: 0,
        }
    }

    /// Opens a game between a designated challenger and responder and
    /// requests both claims. `expected_sizes` binds the claims to earlier
    /// size answers (the tournament's equivocation check).
    pub fn begin_game(
        &mut self,
        net: &mut SimNet,
        challenger: PartyId,
        responder: PartyId,
        expected_sizes: Option<(u64, u64)>,
    ) {
        let id = self.next_game;
        self.next_game += 1;
        self.transcript.push(Event::GameStarted { game: id, challenger, responder });
        self.expectations.clear();
        net.send(VERIFIER, challenger, Message::GetClaim, false);
        net.send(VERIFIER, responder, Message::GetClaim, false);
        self.expectations.expect_reply(challenger, net.round());
        self.expectations.expect_reply(responder, net.round());
        self.game = Some(GameCtx {
            id,
            challenger,
            responder,
            expected_sizes,
            phase: Phase::AwaitClaims,
            chal_claim: None,
            resp_claim: None,
            resp_last_entry: None,
            descent: None,
            reveal: None,
            asked_chal_adj: false,
            exchanges: 0,
            oracle_exchanges: 0,
            outcome: None,
            start_round: net.round(),
            start_stats: net.stats,
            messages: 0,
        });
    }

    pub fn outcome(&self) -> Option<&Outcome> {
        self.game.as_ref().and_then(|g| g.outcome.as_ref())
    }

    /// Finalizes the game and returns its record.
    pub fn take_record(&mut self, net: &SimNet) -> (Outcome, GameRecord) {
        let g = self.game.take().expect("game in progress");
        let outcome = g.outcome.expect("game adjudicated");
        let record = GameRecord {
            game: g.id,
            challenger: g.challenger,
            responder: g.responder,
            result: outcome.result,
            reason: outcome.reason,
            pinpoint: outcome.pinpoint.as_ref().map(|p| p.index),
            exchanges: g.exchanges,
            oracle_exchanges: g.oracle_exchanges,
            rounds: net.round() - g.start_round,
            bytes: net.stats.payload_bytes - g.start_stats.payload_bytes,
            messages: g.messages,
            bisect_size: g.descent.as_ref().map(|d| d.size),
        };
        (outcome, record)
    }

    fn finish(&mut self, net: &SimNet, outcome: Outcome) {
        let g = self.game.as_mut().expect("game in progress");
        self.transcript.push(Event::Adjudicated {
            game: g.id,
            round: net.round(),
            result: format!("{:?}", outcome.result),
            reason: format!("{:?}", outcome.reason),
            pinpoint: outcome.pinpoint.as_ref().map(|p| p.index),
            exchanges: g.exchanges,
        });
        g.outcome = Some(outcome);
        g.phase = Phase::Done;
        self.expectations.clear();
    }

    pub fn note_delivery(&mut self) {
        if let Some(g) = self.game.as_mut() {
            g.messages += 1;
        }
    }

    /// Handles a message delivered to the verifier.
    pub fn on_deliver(&mut self, net: &mut SimNet, from: PartyId, msg: &Message) {
        let Some(g) = self.game.as_ref() else { return };
        if g.outcome.is_some() {
            return;
        }
        self.expectations.fulfill(from);
        let (challenger, responder) = (g.challenger, g.responder);
        match (&g.phase, msg) {
            (Phase::AwaitClaims, Message::ClaimIs(_)) if from == challenger || from == responder => {
                self.claim_received(net, from, msg)
            }
            (Phase::AwaitFirstMove, Message::Query(q)) if from == challenger => {
                self.first_move(net, q.clone())
            }
            (Phase::AwaitFirstMove, Message::Suffix(s)) if from == challenger => {
                self.suffix_received(net, s)
            }
            (Phase::AwaitChildren, Message::Response(r)) if from == responder => {
                self.children_received(net, r)
            }
            (Phase::AwaitMove, Message::Query(q)) if from == challenger => {
                self.descent_move(net, q.clone())
            }
            (Phase::AwaitLeaf, Message::Response(r)) if from == responder => {
                self.leaf_received(net, r)
            }
            (Phase::AwaitAdj, Message::AdjReply(p)) => self.adj_reply(net, from, p.clone()),
            (Phase::AwaitWitness, Message::WitnessReply(w)) if from == responder => {
                self.witness_reply(net, w.clone())
            }
            _ => {
                // out-of-protocol traffic is a fault of its sender
                let outcome = if from == responder {
                    Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid)
                } else {
                    Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery)
                };
                self.finish(net, outcome);
            }
        }
    }

    /// Flags whoever owes an overdue reply. Call once per round after
    /// deliveries are processed.
    pub fn check_timeouts(&mut self, net: &mut SimNet) {
        let Some(g) = self.game.as_ref() else { return };
        if g.outcome.is_some() {
            return;
        }
        let Some(party) = self.expectations.overdue(net.round()) else { return };
        let (id, challenger, responder) = (g.id, g.challenger, g.responder);
        self.transcript.push(Event::TimeoutFlagged { game: id, round: net.round(), party });
        let outcome = if party == responder {
            Outcome::of(GameResult::ChallengerWins, Reason::Timeout)
        } else if matches!(g.phase, Phase::AwaitAdj) && party == challenger {
            // a prover silent on an oracle request merely refuses; with no
            // prover left to ask, the adjacency check fails
            Outcome::of(GameResult::ChallengerWins, Reason::ConsensusOracleFalse)
        } else {
            Outcome::of(GameResult::ResponderWins, Reason::ChallengerTimeout)
        };
        self.finish(net, outcome);
    }

    fn claim_received(&mut self, net: &mut SimNet, from: PartyId, msg: &Message) {
        let g = self.game.as_mut().expect("game in progress");
        let Message::ClaimIs(claim) = msg else { unreachable!() };
        let (id, challenger) = (g.id, g.challenger);
        if from == challenger {
            g.chal_claim = Some(claim.clone());
        } else {
            g.resp_claim = Some(claim.clone());
        }
        self.transcript.record_claim(id, from, msg);
        let g = self.game.as_ref().expect("game in progress");
        let (Some(chal), Some(resp)) = (g.chal_claim.clone(), g.resp_claim.clone()) else {
            return;
        };
        let sizes = g.expected_sizes;
        let responder = g.responder;

        // initial verification; a failing claim loses before any game
        if let Err(fault) = chal.validate(sizes.map(|(c, _)| c)) {
            let reason = fault_reason(&fault);
            self.transcript.push(Event::ClaimRejected {
                game: id,
                prover: challenger,
                reason: format!("{fault:?}"),
            });
            self.finish(net, Outcome::of(GameResult::ResponderWins, reason));
            return;
        }
        let resp_entry = match resp.validate(sizes.map(|(_, r)| r)) {
            Ok(entry) => entry,
            Err(fault) => {
                let reason = fault_reason(&fault);
                self.transcript.push(Event::ClaimRejected {
                    game: id,
                    prover: responder,
                    reason: format!("{fault:?}"),
                });
                self.finish(net, Outcome::of(GameResult::ChallengerWins, reason));
                return;
            }
        };
        if chal == resp {
            self.finish(net, Outcome::of(GameResult::Merged, Reason::IdenticalClaims));
            return;
        }
        debug_assert!(
            chal.len >= resp.len,
            "designation must hand the larger claim to the challenger"
        );
        let g = self.game.as_mut().expect("game in progress");
        g.resp_last_entry = Some(resp_entry);
        g.phase = Phase::AwaitFirstMove;
        net.send(VERIFIER, challenger, Message::StartGame { opponent: resp }, false);
        self.expectations.expect_reply(challenger, net.round());
    }

    fn first_move(&mut self, net: &mut SimNet, q: Query) {
        let g = self.game.as_mut().expect("game in progress");
        let Query::Start { tree_index } = q else {
            self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
            return;
        };
        let resp = g.resp_claim.as_ref().expect("validated");
        let Some(&(size, peak)) = resp.peaks.get(tree_index as usize) else {
            self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
            return;
        };
        let offset: u64 = resp.peaks[..tree_index as usize].iter().map(|(s, _)| s).sum();
        let sizes = level_sizes(size, self.cfg.arity);
        let height = sizes.len() - 1;
        let descent = Descent {
            size,
            offset,
            level_sizes: sizes,
            parent_level: height,
            parent_index: 0,
            parent_digest: peak,
            children: None,
            leaf_wait: if size == 1 { Some((0, peak)) } else { None },
        };
        g.descent = Some(descent);
        g.exchanges += 1;
        g.phase = if size == 1 { Phase::AwaitLeaf } else { Phase::AwaitChildren };
        let (id, responder) = (g.id, g.responder);
        self.transcript.push(Event::QueryForwarded { game: id, round: net.round(), query: q });
        net.send(VERIFIER, responder, Message::Query(Query::Start { tree_index }), true);
        self.expectations.expect_reply(responder, net.round());
    }

    fn children_received(&mut self, net: &mut SimNet, r: &Response) {
        let g = self.game.as_mut().expect("game in progress");
        let Response::Children { digests } = r else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        };
        let m = self.cfg.arity as u64;
        let d = g.descent.as_mut().expect("descent in progress");
        let below = d.level_sizes[d.parent_level - 1];
        let base = d.parent_index * m;
        let expected = (below - base).min(m) as usize;
        if digests.len() != expected {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        }
        if hash_inner(digests) != d.parent_digest {
            self.finish(
                net,
                Outcome::of(GameResult::ChallengerWins, Reason::ChildrenHashMismatch),
            );
            return;
        }
        d.children = Some(Children { digests: digests.clone(), level: d.parent_level - 1, base });
        g.phase = Phase::AwaitMove;
        let (id, challenger) = (g.id, g.challenger);
        let fwd = Message::Response(r.clone());
        self.transcript.record_response(id, net.round(), &fwd);
        net.send(VERIFIER, challenger, fwd, true);
        self.expectations.expect_reply(challenger, net.round());
    }

    fn descent_move(&mut self, net: &mut SimNet, q: Query) {
        let g = self.game.as_mut().expect("game in progress");
        let d = g.descent.as_mut().expect("descent in progress");
        let children = d.children.as_ref().expect("children on record");
        match q {
            Query::Child { index } if children.level >= 1 => {
                if (index as usize) >= children.digests.len() {
                    self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
                    return;
                }
                d.parent_level = children.level;
                d.parent_index = children.base + index as u64;
                d.parent_digest = children.digests[index as usize];
                d.children = None;
                g.exchanges += 1;
                g.phase = Phase::AwaitChildren;
                let (id, responder) = (g.id, g.responder);
                self.transcript.push(Event::QueryForwarded {
                    game: id,
                    round: net.round(),
                    query: q.clone(),
                });
                net.send(VERIFIER, responder, Message::Query(q), true);
                self.expectations.expect_reply(responder, net.round());
            }
            Query::Leaf { index } if children.level == 0 => {
                if (index as usize) >= children.digests.len() {
                    self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
                    return;
                }
                let local = children.base + index as u64;
                d.leaf_wait = Some((local, children.digests[index as usize]));
                g.exchanges += 1;
                g.phase = Phase::AwaitLeaf;
                let (id, responder) = (g.id, g.responder);
                self.transcript.push(Event::QueryForwarded {
                    game: id,
                    round: net.round(),
                    query: q.clone(),
                });
                net.send(VERIFIER, responder, Message::Query(q), true);
                self.expectations.expect_reply(responder, net.round());
            }
            _ => {
                self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
            }
        }
    }

    fn leaf_received(&mut self, net: &mut SimNet, r: &Response) {
        let g = self.game.as_mut().expect("game in progress");
        let Response::Leaf { entry, prev } = r else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        };
        let d = g.descent.as_ref().expect("descent in progress");
        let (local, expected_digest) = d.leaf_wait.expect("leaf selection on record");
        let j = d.offset + local;

        // the reveal must hash to the leaf the descent selected
        if hash_leaf(entry) != expected_digest {
            self.finish(
                net,
                Outcome::of(GameResult::ChallengerWins, Reason::ChildrenHashMismatch),
            );
            return;
        }
        let Ok(decoded) = AugmentedEntry::decode(entry) else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        };

        // forward the reveal without the previous-entry material, which only
        // the verifier checks
        let (id, challenger) = (g.id, g.challenger);
        let fwd = Message::Response(Response::Leaf { entry: entry.clone(), prev: None });
        self.transcript.record_response(id, net.round(), &fwd);
        net.send(VERIFIER, challenger, fwd, true);

        if j == 0 {
            let ok = match &self.mode {
                Mode::Real { genesis, .. } => decoded.tx.is_none() && decoded.state == *genesis,
                Mode::Stub { reference } => decoded == reference.reference_entry(0),
            };
            let outcome = if ok {
                Outcome::of(GameResult::ResponderWins, Reason::AllConditionsHold)
            } else {
                Outcome {
                    result: GameResult::ChallengerWins,
                    reason: Reason::GenesisMismatch,
                    pinpoint: Some(Pinpoint { index: 0, prev_entry: None, entry: entry.clone() }),
                }
            };
            self.finish(net, outcome);
            return;
        }

        // condition 4: the entry before the pinpoint, proven against the
        // claimed peak of whichever tree holds it
        let Some(prev) = prev else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        };
        let resp_claim = g.resp_claim.as_ref().expect("validated");
        let Some((ptree, plocal)) = resp_claim.locate(j - 1) else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::PrevProofInvalid));
            return;
        };
        let peak = resp_claim.peaks[ptree].1;
        let located_ok = prev.tree_index as usize == ptree && prev.local_index == plocal;
        if !located_ok
            || !lazylight::merkle::verify_inclusion(&prev.proof, peak, plocal, &prev.entry)
        {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::PrevProofInvalid));
            return;
        }
        let Ok(prev_decoded) = AugmentedEntry::decode(&prev.entry) else {
            self.finish(net, Outcome::of(GameResult::ChallengerWins, Reason::SyntacticInvalid));
            return;
        };
        self.transcript.push(Event::QueryForwarded {
            game: id,
            round: net.round(),
            query: Query::Leaf { index: local as u32 },
        });

        let g = self.game.as_mut().expect("game in progress");
        g.reveal = Some(Reveal {
            j,
            entry: decoded,
            entry_bytes: entry.clone(),
            prev: Some((prev_decoded, prev.entry.clone())),
        });
        match &self.mode {
            Mode::Stub { reference } => {
                let reference = reference.clone();
                self.adjudicate_stub_reveal(net, &reference);
            }
            Mode::Real { .. } => {
                // condition 5 first: ask the responder for the adjacency proof
                let g = self.game.as_mut().expect("game in progress");
                let reveal = g.reveal.as_ref().expect("reveal on record");
                let prev_tx = reveal.prev.as_ref().and_then(|(p, _)| p.tx.clone());
                let Some(tx) = reveal.entry.tx.clone() else {
                    // a non-genesis entry with an empty transaction can never
                    // be adjacent to anything
                    let outcome = self.pinpointed(GameResult::ChallengerWins, Reason::ConsensusOracleFalse);
                    self.finish(net, outcome);
                    return;
                };
                g.phase = Phase::AwaitAdj;
                g.oracle_exchanges += 1;
                let responder = g.responder;
                net.send(VERIFIER, responder, Message::AdjRequest { prev: prev_tx, tx }, false);
                self.expectations.expect_reply(responder, net.round());
            }
        }
    }

    fn adjudicate_stub_reveal(&mut self, net: &mut SimNet, reference: &StubStore) {
        let g = self.game.as_ref().expect("game in progress");
        let reveal = g.reveal.as_ref().expect("reveal on record");
        let expected = reference.reference_entry(reveal.j);
        let outcome = if reveal.entry.tx != expected.tx {
            self.pinpointed(GameResult::ChallengerWins, Reason::ConsensusOracleFalse)
        } else if reveal.entry.state != expected.state {
            self.pinpointed(GameResult::ChallengerWins, Reason::ExecutionOracleMismatch)
        } else {
            Outcome::of(GameResult::ResponderWins, Reason::AllConditionsHold)
        };
        self.finish(net, outcome);
    }

    fn pinpointed(&self, result: GameResult, reason: Reason) -> Outcome {
        let g = self.game.as_ref().expect("game in progress");
        let reveal = g.reveal.as_ref().expect("reveal on record");
        Outcome {
            result,
            reason,
            pinpoint: Some(Pinpoint {
                index: reveal.j,
                prev_entry: reveal.prev.as_ref().map(|(_, b)| b.clone()),
                entry: reveal.entry_bytes.clone(),
            }),
        }
    }

    fn adj_reply(
        &mut self,
        net: &mut SimNet,
        from: PartyId,
        proof: Option<lazylight::oracle::AdjacencyProof>,
    ) {
        let (id, challenger, responder, prev_tx, pre, tx) = {
            let g = self.game.as_ref().expect("game in progress");
            let reveal = g.reveal.as_ref().expect("reveal on record");
            (
                g.id,
                g.challenger,
                g.responder,
                reveal.prev.as_ref().and_then(|(p, _)| p.tx.clone()),
                reveal.prev.as_ref().map(|(p, _)| p.state).expect("pinpoint above genesis"),
                reveal.entry.tx.clone().expect("checked before asking"),
            )
        };
        let accepted = {
            let Mode::Real { chain, .. } = &self.mode else { unreachable!("stub mode never asks") };
            proof
                .as_ref()
                .map(|p| verify_adjacency(chain, prev_tx.as_ref(), &tx, p))
                .unwrap_or(false)
        };
        self.transcript.push(Event::OracleAdjacency { game: id, prover: from, accepted });
        if accepted {
            // condition 6: request the transition witness from the responder
            let g = self.game.as_mut().expect("game in progress");
            g.phase = Phase::AwaitWitness;
            g.oracle_exchanges += 1;
            net.send(VERIFIER, responder, Message::WitnessRequest { pre, tx }, false);
            self.expectations.expect_reply(responder, net.round());
        } else if from == responder {
            // the adjacency oracle is an OR over the provers; try the other
            let g = self.game.as_mut().expect("game in progress");
            g.asked_chal_adj = true;
            g.oracle_exchanges += 1;
            net.send(VERIFIER, challenger, Message::AdjRequest { prev: prev_tx, tx }, false);
            self.expectations.expect_reply(challenger, net.round());
        } else {
            let outcome = self.pinpointed(GameResult::ChallengerWins, Reason::ConsensusOracleFalse);
            self.finish(net, outcome);
        }
    }

    fn witness_reply(
        &mut self,
        net: &mut SimNet,
        witness: Option<lazylight::execution::ExecutionWitness>,
    ) {
        let g = self.game.as_ref().expect("game in progress");
        let reveal = g.reveal.as_ref().expect("reveal on record");
        let (pre, _) = reveal.prev.as_ref().expect("j >= 1 here");
        let tx = reveal.entry.tx.clone().expect("checked before asking");
        let ok = witness
            .as_ref()
            .map(|w| succinct_delta(&pre.state, &tx, w) == Some(reveal.entry.state))
            .unwrap_or(false);
        let (id, responder) = (g.id, g.responder);
        self.transcript.push(Event::OracleWitness { game: id, prover: responder, accepted: ok });
        let outcome = if ok {
            Outcome::of(GameResult::ResponderWins, Reason::AllConditionsHold)
        } else {
            self.pinpointed(GameResult::ChallengerWins, Reason::ExecutionOracleMismatch)
        };
        self.finish(net, outcome);
    }

    fn suffix_received(&mut self, net: &mut SimNet, s: &SuffixReveal) {
        let g = self.game.as_mut().expect("game in progress");
        g.exchanges += 1;
        let (id, cap) = (g.id, self.cfg.monologue_cap());
        let chal = g.chal_claim.as_ref().expect("validated");
        let resp = g.resp_claim.as_ref().expect("validated");
        let (chal_len, resp_len) = (chal.len, resp.len);
        self.transcript.record_suffix(
            id,
            net.round(),
            s.entries.len() as u64,
            &Message::Suffix(s.clone()),
        );
        if chal_len <= resp_len {
            self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
            return;
        }
        let expected = (chal_len - resp_len).min(cap) as usize;
        if s.entries.len() != expected
            || s.adjacency.len() != expected
            || s.witnesses.len() != expected
        {
            self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
            return;
        }

        let mut prev = g.resp_last_entry.clone().expect("validated");
        for k in 0..expected {
            let Ok(entry) = AugmentedEntry::decode(&s.entries[k]) else {
                self.finish(net, Outcome::of(GameResult::ResponderWins, Reason::InvalidQuery));
                return;
            };
            let index = resp_len + k as u64;
            let Some(tx) = entry.tx.clone() else {
                self.finish(
                    net,
                    Outcome::of(GameResult::ResponderWins, Reason::ConsensusOracleFalse),
                );
                return;
            };
            let (adjacent, transition_ok) = match &self.mode {
                Mode::Real { chain, .. } => {
                    let adjacent = s.adjacency[k]
                        .as_ref()
                        .map(|p| verify_adjacency(chain, prev.tx.as_ref(), &tx, p))
                        .unwrap_or(false);
                    let transition_ok = adjacent
                        && s.witnesses[k]
                            .as_ref()
                            .map(|w| succinct_delta(&prev.state, &tx, w) == Some(entry.state))
                            .unwrap_or(false);
                    (adjacent, transition_ok)
                }
                Mode::Stub { reference } => {
                    let expected_entry = reference.reference_entry(index);
                    let adjacent = expected_entry.tx == entry.tx;
                    (adjacent, adjacent && expected_entry.state == entry.state)
                }
            };
            if !adjacent {
                self.finish(
                    net,
                    Outcome::of(GameResult::ResponderWins, Reason::ConsensusOracleFalse),
                );
                return;
            }
            if !transition_ok {
                self.finish(
                    net,
                    Outcome::of(GameResult::ResponderWins, Reason::ExecutionOracleMismatch),
                );
                return;
            }
            prev = entry;
        }

        let outcome = if chal_len - resp_len >= cap {
            // a full cap of verified extension entries: the responder's
            // history is too short to be an honest view
            Outcome::of(GameResult::ChallengerWins, Reason::MonologueCapReached)
        } else {
            Outcome::of(GameResult::NestedMmrs, Reason::NestedAgreement)
        };
        self.finish(net, outcome);
    }
}

fn fault_reason(fault: &ClaimFault) -> Reason {
    match fault {
        ClaimFault::Invalid(_) => Reason::InvalidClaim,
        ClaimFault::EquivocatedSize => Reason::EquivocatedSize,
    }
}

/// Runs one challenge game to completion. The caller designates the
/// challenger (the larger claimant, or the tournament's tie-break).
pub fn run_game(
    verifier: &mut Verifier,
    net: &mut SimNet,
    challenger: &mut ProverNode,
    responder: &mut ProverNode,
    expected_sizes: Option<(u64, u64)>,
) -> (Outcome, GameRecord) {
    challenger.reset_session();
    responder.reset_session();
    verifier.begin_game(net, challenger.id, responder.id, expected_sizes);
    let fuse = net.round() + 100_000;
    loop {
        let delivered = net.advance_round();
        for env in delivered {
            verifier.note_delivery();
            if env.to == VERIFIER {
                verifier.on_deliver(net, env.from, &env.msg);
            } else {
                let node: &mut ProverNode = if env.to == challenger.id {
                    challenger
                } else {
                    responder
                };
                if let Some(reply) = node.on_message(&env.msg) {
                    net.send(node.id, VERIFIER, reply, false);
                }
            }
        }
        verifier.check_timeouts(net);
        if verifier.outcome().is_some() {
            return verifier.take_record(net);
        }
        assert!(net.round() < fuse, "game did not terminate");
    }
}

/// Runs a bisection directly on one tree of the responder's claim,
/// bypassing the challenger's own zooming choice.
pub fn run_bisection(
    verifier: &mut Verifier,
    net: &mut SimNet,
    challenger: &mut ProverNode,
    responder: &mut ProverNode,
    tree_index: u32,
) -> (Outcome, GameRecord) {
    challenger.force_tree = Some(tree_index);
    let out = run_game(verifier, net, challenger, responder, None);
    challenger.force_tree = None;
    out
}
