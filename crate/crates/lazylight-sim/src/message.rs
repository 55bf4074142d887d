//! Wire messages exchanged through the verifier, with their serialized
//! sizes for the cost model.

use serde::{Deserialize, Serialize};

use lazylight::codec::{CodecError, Digest, DIGEST_LEN};
use lazylight::execution::{ExecutionWitness, StateCommitment, Transaction};
use lazylight::ledger::AugmentedEntry;
use lazylight::merkle::{segment_lengths, verify_inclusion, InclusionProof};
use lazylight::oracle::AdjacencyProof;
use lazylight::Encodable;

/// A prover's commitment: its peak list, claimed length, claimed latest
/// state commitment, and the revealed last entry with its proof against the
/// last peak.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Claim {
    /// (leaf count, root) per tree, largest first.
    pub peaks: Vec<(u64, Digest)>,
    /// Number of augmented entries committed to.
    pub len: u64,
    pub state_commit: StateCommitment,
    /// Encoded last augmented entry.
    pub last_entry: Vec<u8>,
    pub last_entry_proof: InclusionProof,
}

#[derive(Debug, PartialEq, Eq)]
pub enum ClaimFault {
    /// Shape or proof failure; the claimant loses before any game.
    Invalid(&'static str),
    /// Claimed length contradicts the earlier size answer.
    EquivocatedSize,
}

impl Claim {
    /// Initial verification: peak sizes must be the segment lengths of the
    /// claimed length, the claimed state must be the revealed last entry's
    /// commitment, and the last-entry proof must verify against the last
    /// peak. `expected_size` binds the claim to an earlier size answer.
    pub fn validate(&self, expected_size: Option<u64>) -> Result<AugmentedEntry, ClaimFault> {
        if let Some(size) = expected_size {
            if size != self.len {
                return Err(ClaimFault::EquivocatedSize);
            }
        }
        let segments = segment_lengths(self.len).map_err(|_| ClaimFault::Invalid("empty claim"))?;
        let sizes: Vec<u64> = self.peaks.iter().map(|(s, _)| *s).collect();
        if sizes != segments {
            return Err(ClaimFault::Invalid("peak sizes disagree with claimed length"));
        }
        let entry = AugmentedEntry::decode(&self.last_entry)
            .map_err(|_| ClaimFault::Invalid("undecodable last entry"))?;
        if entry.state != self.state_commit {
            return Err(ClaimFault::Invalid("state commitment is not the last entry's"));
        }
        let (last_size, last_root) = *self.peaks.last().unwrap();
        let last_local = last_size - 1;
        if !verify_inclusion(&self.last_entry_proof, last_root, last_local, &self.last_entry) {
            return Err(ClaimFault::Invalid("last-entry proof does not verify"));
        }
        Ok(entry)
    }

    /// Maps a global entry index to (tree index, local index) under the
    /// claimed peak sizes.
    pub fn locate(&self, global: u64) -> Option<(usize, u64)> {
        let mut offset = 0u64;
        for (t, (size, _)) in self.peaks.iter().enumerate() {
            if global < offset + size {
                return Some((t, global - offset));
            }
            offset += size;
        }
        None
    }

    pub fn encoded_len(&self) -> u64 {
        (8 + self.peaks.len() * (8 + DIGEST_LEN)
            + 8
            + DIGEST_LEN
            + 8
            + self.last_entry.len()
            + self.last_entry_proof.encoded_len()) as u64
    }
}

/// Challenger moves. The opening move names a tree (root number); later
/// moves carry one child index; the leaf move asks for entry contents.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    Start { tree_index: u32 },
    Child { index: u32 },
    Leaf { index: u32 },
}

impl Query {
    pub fn wire_len(&self) -> u64 {
        // one tag byte plus a child-index varint
        match self {
            Query::Start { .. } => 1 + 4,
            Query::Child { index } | Query::Leaf { index } => {
                1 + if *index < 128 { 1 } else { 4 }
            }
        }
    }
}

/// Reveal of the entry before the pinpointed one, proven against the peak
/// of the tree it lives in (the previous peak when the pinpoint is a tree's
/// first leaf).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrevReveal {
    pub entry: Vec<u8>,
    pub tree_index: u32,
    pub local_index: u64,
    pub proof: InclusionProof,
}

impl PrevReveal {
    pub fn wire_len(&self) -> u64 {
        (8 + self.entry.len() + 4 + 8 + self.proof.encoded_len()) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Response {
    Children { digests: Vec<Digest> },
    Leaf { entry: Vec<u8>, prev: Option<PrevReveal> },
}

impl Response {
    pub fn wire_len(&self) -> u64 {
        match self {
            Response::Children { digests } => (1 + 8 + digests.len() * DIGEST_LEN) as u64,
            Response::Leaf { entry, prev } => {
                (1 + 8 + entry.len()) as u64 + prev.as_ref().map_or(1, |p| 1 + p.wire_len())
            }
        }
    }
}

/// The challenger's monologue: the extension entries beyond the responder's
/// claimed length, with per-transition adjacency proofs and transition
/// witnesses (absent under a stubbed execution).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuffixReveal {
    pub entries: Vec<Vec<u8>>,
    pub adjacency: Vec<Option<AdjacencyProof>>,
    pub witnesses: Vec<Option<ExecutionWitness>>,
}

impl SuffixReveal {
    pub fn wire_len(&self) -> u64 {
        let entries: usize = self.entries.iter().map(|e| 8 + e.len()).sum();
        let adj: usize = self
            .adjacency
            .iter()
            .map(|a| 1 + a.as_ref().map_or(0, |p| p.encoded_len()))
            .sum();
        let wit: usize = self
            .witnesses
            .iter()
            .map(|w| 1 + w.as_ref().map_or(0, |w| w.encoded_len()))
            .sum();
        (8 + entries + adj + wit) as u64
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "msg", rename_all = "snake_case")]
pub enum Message {
    GetSize,
    SizeIs(u64),
    GetClaim,
    ClaimIs(Claim),
    /// Sent to the designated challenger with the opposing claim.
    StartGame { opponent: Claim },
    Query(Query),
    Response(Response),
    Suffix(SuffixReveal),
    AdjRequest { prev: Option<Transaction>, tx: Transaction },
    AdjReply(Option<AdjacencyProof>),
    WitnessRequest { pre: StateCommitment, tx: Transaction },
    WitnessReply(Option<ExecutionWitness>),
}

impl Message {
    /// Serialized size in bytes under the canonical wire encoding.
    pub fn wire_len(&self) -> u64 {
        let body = match self {
            Message::GetSize | Message::GetClaim => 0,
            Message::SizeIs(_) => 8,
            Message::ClaimIs(c) => c.encoded_len(),
            Message::StartGame { opponent } => opponent.encoded_len(),
            Message::Query(q) => q.wire_len(),
            Message::Response(r) => r.wire_len(),
            Message::Suffix(s) => s.wire_len(),
            Message::AdjRequest { prev, tx } => {
                1 + prev.as_ref().map_or(0, |p| p.encode().len() as u64)
                    + tx.encode().len() as u64
            }
            Message::AdjReply(p) => 1 + p.as_ref().map_or(0, |p| p.encoded_len() as u64),
            Message::WitnessRequest { tx, .. } => {
                DIGEST_LEN as u64 + tx.encode().len() as u64
            }
            Message::WitnessReply(w) => 1 + w.as_ref().map_or(0, |w| w.encoded_len() as u64),
        };
        1 + body
    }
}

/// Decodes an augmented entry, surfacing syntactic failures to the
/// adjudicator.
pub fn decode_entry(bytes: &[u8]) -> Result<AugmentedEntry, CodecError> {
    AugmentedEntry::decode(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn children_message_size_tracks_arity() {
        let msg = Message::Response(Response::Children { digests: vec![Digest::ZERO; 300] });
        let expected = 1 + 1 + 8 + 300 * DIGEST_LEN as u64;
        assert_eq!(msg.wire_len(), expected);
    }

    #[test]
    fn query_messages_are_small() {
        assert!(Message::Query(Query::Child { index: 3 }).wire_len() <= 3);
        assert!(Message::Query(Query::Child { index: 299 }).wire_len() <= 6);
    }
}
