//! Ordered record of queries, responses, and adjudications, serialized as
//! JSON lines for golden-transcript and determinism tests.

use serde::Serialize;

use lazylight::codec::{hash_tagged, Digest, DomainTag};

use crate::message::{Message, Query};
use crate::net::PartyId;

/// Compact digest of a message body so transcripts stay small while still
/// pinning every byte that went over the wire.
fn payload_digest(msg: &Message) -> Digest {
    let json = serde_json::to_vec(msg).expect("messages serialize");
    hash_tagged(DomainTag::Header, &json)
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    SizeRecorded { prover: PartyId, size: u64 },
    ClaimReceived { game: u32, prover: PartyId, len: u64, state: Digest, payload: Digest },
    ClaimRejected { game: u32, prover: PartyId, reason: String },
    GameStarted { game: u32, challenger: PartyId, responder: PartyId },
    QueryForwarded { game: u32, round: u64, query: Query },
    ResponseForwarded { game: u32, round: u64, kind: String, items: u64, payload: Digest },
    SuffixReceived { game: u32, round: u64, entries: u64, payload: Digest },
    OracleAdjacency { game: u32, prover: PartyId, accepted: bool },
    OracleWitness { game: u32, prover: PartyId, accepted: bool },
    TimeoutFlagged { game: u32, round: u64, party: PartyId },
    Adjudicated {
        game: u32,
        round: u64,
        result: String,
        reason: String,
        pinpoint: Option<u64>,
        exchanges: u32,
    },
    TournamentDone { winner: PartyId, state: Digest, games: u32, rounds: u64 },
}

/// Append-only event log.
#[derive(Default)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn new() -> Transcript {
        Transcript { events: Vec::new() }
    }

    pub fn push(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn record_response(&mut self, game: u32, round: u64, msg: &Message) {
        let (kind, items) = match msg {
            Message::Response(crate::message::Response::Children { digests }) => {
                ("children".to_string(), digests.len() as u64)
            }
            Message::Response(crate::message::Response::Leaf { .. }) => ("leaf".to_string(), 1),
            other => (format!("{other:?}"), 0),
        };
        self.push(Event::ResponseForwarded {
            game,
            round,
            kind,
            items,
            payload: payload_digest(msg),
        });
    }

    pub fn record_suffix(&mut self, game: u32, round: u64, entries: u64, msg: &Message) {
        self.push(Event::SuffixReceived { game, round, entries, payload: payload_digest(msg) });
    }

    pub fn record_claim(&mut self, game: u32, prover: PartyId, msg: &Message) {
        if let Message::ClaimIs(c) = msg {
            self.push(Event::ClaimReceived {
                game,
                prover,
                len: c.len,
                state: c.state_commit.0,
                payload: payload_digest(msg),
            });
        }
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// One JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            out.push_str(&serde_json::to_string(e).expect("events serialize"));
            out.push('\n');
        }
        out
    }
}
