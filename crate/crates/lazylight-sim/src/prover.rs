//! Prover machines: the honest reactive logic over an entry store, plus the
//! message-level deviations the adversary catalog is built from.
//!
//! Data-level strategies (corrupted leaves, truncation, fabricated tails)
//! are baked into a prover's store when the fixture is assembled; behavior
//! strategies intercept messages here.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lazylight::codec::Digest;
use lazylight::execution::{
    apply_mut, commit, make_witness, ExecutionWitness, SparseState, StateCommitment, Transaction,
};
use lazylight::ledger::Block;
use lazylight::merkle::{level_sizes, make_merkle_tree, MerkleTree};
use lazylight::oracle::{prove_adjacency, AdjacencyProof};
use lazylight::Encodable;

use crate::message::{Claim, Message, PrevReveal, Query, Response, SuffixReveal};
use crate::net::{NetworkConfig, PartyId};
use crate::store::EntryStore;

/// Execution-layer context a prover needs to answer oracle requests.
pub struct ExecContext {
    pub st0: SparseState,
    /// The prover's claimed transaction sequence (entry `i` holds `txs[i-1]`).
    pub txs: Vec<Transaction>,
    pub blocks: Arc<Vec<Block>>,
    pub block_size: u64,
    /// Stable dirty-ledger view length; adjacency beyond it is refused.
    pub view_len: u64,
    /// Canonical transaction positions, keyed by encoding.
    pub positions: Arc<HashMap<Vec<u8>, u64>>,
}

impl ExecContext {
    fn position_of(&self, tx: &Transaction) -> Option<u64> {
        self.positions.get(&tx.encode()).copied()
    }

    fn adjacency(&self, prev: Option<&Transaction>, tx: &Transaction) -> Option<AdjacencyProof> {
        prove_adjacency(&self.blocks, self.block_size, self.view_len, prev, tx, |t| {
            self.position_of(t)
        })
    }

    /// Witness for a transition out of the claimed commitment `pre`: folds
    /// the claimed transactions until some prefix state commits to `pre`.
    /// No reachable prefix means no witness can exist.
    fn witness(&self, pre: &StateCommitment, tx: &Transaction) -> Option<ExecutionWitness> {
        let mut st = self.st0.clone();
        if commit(&st) == *pre {
            return Some(make_witness(&st, tx));
        }
        for step in &self.txs {
            apply_mut(&mut st, step);
            if commit(&st) == *pre {
                return Some(make_witness(&st, tx));
            }
        }
        None
    }
}

/// A prover's committed data.
pub struct ProverData {
    pub store: Box<dyn EntryStore + Send + Sync>,
    pub exec: Option<ExecContext>,
    /// Ships a claim whose last-entry proof does not verify.
    pub tamper_claim_proof: bool,
}

impl ProverData {
    pub fn make_claim(&self) -> Claim {
        let len = self.store.total();
        let last = self.store.entry_bytes(len - 1);
        let (_, _, mut proof) = self.store.prove_entry(len - 1).expect("last entry provable");
        let entry = crate::message::decode_entry(&last).expect("own entries decode");
        if self.tamper_claim_proof {
            proof.leaf_index += 1;
        }
        Claim {
            peaks: self.store.peaks(),
            len,
            state_commit: entry.state,
            last_entry: last,
            last_entry_proof: proof,
        }
    }
}

/// Message-level strategies. `Honest` answers faithfully; the rest deviate
/// at a scripted point and are each expected to lose by one documented
/// verifier condition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Behavior {
    Honest,
    /// Goes silent at the `depth`-th game query received.
    Staller { depth: u32 },
    /// Answers the `depth`-th opening with random digests.
    GarbageChildren { depth: u32 },
    /// As challenger, opens with a malformed query.
    InvalidQueryChallenger,
    /// Answers size queries inconsistently with the later claim.
    EquivocatingSizes { offset: u64 },
}

/// The challenger's local comparison tree for one bisection.
enum Mirror {
    Whole(usize),
    Slice(MerkleTree),
}

enum Plan {
    Bisect { resp_tree: u32, size: u64, mirror: Mirror },
    Monologue { from: u64 },
}

#[derive(Default)]
struct Session {
    // responder side
    resp_tree: Option<u32>,
    resp_path: Vec<u32>,
    resp_node: u64,
    queries_seen: u32,
    opens_served: u32,
    stalled: bool,
    // challenger side
    plan: Option<Plan>,
    chal_path: Vec<u32>,
    chal_depth: u32,
    chal_height: u32,
}

/// One prover: committed data plus a scripted behavior.
pub struct ProverNode {
    pub id: PartyId,
    pub data: ProverData,
    pub behavior: Behavior,
    /// When set, bisect this tree of the opponent's claim instead of
    /// zooming.
    pub force_tree: Option<u32>,
    cfg: NetworkConfig,
    rng: ChaCha8Rng,
    session: Session,
}

impl ProverNode {
    pub fn new(id: PartyId, data: ProverData, behavior: Behavior, cfg: &NetworkConfig) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (id as u64).wrapping_mul(0x9E3779B97F4A7C15));
        ProverNode {
            id,
            data,
            behavior,
            force_tree: None,
            cfg: cfg.clone(),
            rng,
            session: Session::default(),
        }
    }

    /// Clears per-game state; the tournament calls this between games.
    pub fn reset_session(&mut self) {
        self.session = Session::default();
    }

    pub fn claimed_size(&self) -> u64 {
        self.data.store.total()
    }

    /// Handles one delivered message, possibly producing a reply sent the
    /// same round. `None` is silence.
    pub fn on_message(&mut self, msg: &Message) -> Option<Message> {
        match msg {
            Message::GetSize => {
                let mut size = self.data.store.total();
                if let Behavior::EquivocatingSizes { offset } = self.behavior {
                    size += offset;
                }
                Some(Message::SizeIs(size))
            }
            Message::GetClaim => Some(Message::ClaimIs(self.data.make_claim())),
            Message::StartGame { opponent } => self.first_move(opponent),
            Message::Query(q) => self.answer_query(q),
            Message::Response(r) => self.next_move(r),
            Message::AdjRequest { prev, tx } => {
                let reply = self
                    .data
                    .exec
                    .as_ref()
                    .and_then(|e| e.adjacency(prev.as_ref(), tx));
                Some(Message::AdjReply(reply))
            }
            Message::WitnessRequest { pre, tx } => {
                let reply = self.data.exec.as_ref().and_then(|e| e.witness(pre, tx));
                Some(Message::WitnessReply(reply))
            }
            _ => None,
        }
    }

    // ---- challenger ----

    fn first_move(&mut self, opponent: &Claim) -> Option<Message> {
        if self.behavior == Behavior::InvalidQueryChallenger {
            return Some(Message::Query(Query::Child { index: u32::MAX }));
        }
        let plan = match self.force_tree {
            Some(t) => {
                let (size, _) = *opponent.peaks.get(t as usize)?;
                let start: u64 = opponent.peaks[..t as usize].iter().map(|(s, _)| s).sum();
                Plan::Bisect { resp_tree: t, size, mirror: self.make_mirror(start, size) }
            }
            None => self.zoom(opponent),
        };
        match &plan {
            Plan::Bisect { resp_tree, size, .. } => {
                let tree = *resp_tree;
                self.session.chal_height = level_sizes(*size, self.cfg.arity).len() as u32 - 1;
                self.session.chal_depth = 0;
                self.session.chal_path.clear();
                self.session.plan = Some(plan);
                Some(Message::Query(Query::Start { tree_index: tree }))
            }
            Plan::Monologue { from } => {
                let suffix = self.build_suffix(*from);
                self.session.plan = Some(plan);
                Some(Message::Suffix(suffix))
            }
        }
    }

    /// Zooming: walk the opponent's peaks in entry order and find the first
    /// one that disagrees with our own commitment over the same range. No
    /// disagreement means the opponent's history is a prefix of ours.
    fn zoom(&self, opponent: &Claim) -> Plan {
        let store = self.data.store.as_ref();
        let mut start = 0u64;
        for (t, (size, peak)) in opponent.peaks.iter().enumerate() {
            let mine = store
                .range_root(start, *size)
                .expect("challenger designation keeps opponent ranges inside our history");
            if mine != *peak {
                let mirror = self.make_mirror(start, *size);
                return Plan::Bisect { resp_tree: t as u32, size: *size, mirror };
            }
            start += size;
        }
        Plan::Monologue { from: opponent.len }
    }

    fn make_mirror(&self, start: u64, size: u64) -> Mirror {
        let store = self.data.store.as_ref();
        let mut offset = 0u64;
        for t in 0.. {
            let ts = store.tree_size(t);
            if ts == 0 {
                break;
            }
            if offset == start && ts == size {
                return Mirror::Whole(t);
            }
            offset += ts;
            if offset > start {
                break;
            }
        }
        let slice: Vec<Vec<u8>> =
            (start..start + size).map(|i| store.entry_bytes(i)).collect();
        Mirror::Slice(make_merkle_tree(&slice, self.cfg.arity).expect("power-of-two range"))
    }

    fn my_children(&self) -> Option<Vec<Digest>> {
        let path = &self.session.chal_path;
        match self.session.plan.as_ref()? {
            Plan::Bisect { mirror: Mirror::Whole(t), .. } => {
                self.data.store.open(*t, path)
            }
            Plan::Bisect { mirror: Mirror::Slice(tree), .. } => tree.open_children(path).ok(),
            Plan::Monologue { .. } => None,
        }
    }

    fn next_move(&mut self, response: &Response) -> Option<Message> {
        match response {
            Response::Children { digests } => {
                let mine = self.my_children()?;
                let pick = first_mismatch(&mine, digests)?;
                self.session.chal_depth += 1;
                if self.session.chal_depth >= self.session.chal_height {
                    Some(Message::Query(Query::Leaf { index: pick }))
                } else {
                    self.session.chal_path.push(pick);
                    Some(Message::Query(Query::Child { index: pick }))
                }
            }
            // the final reveal needs no further move; the verifier adjudicates
            Response::Leaf { .. } => None,
        }
    }

    fn build_suffix(&mut self, from: u64) -> SuffixReveal {
        let store = self.data.store.as_ref();
        let len = store.total();
        let count = (len.saturating_sub(from)).min(self.cfg.monologue_cap());
        let mut entries = Vec::with_capacity(count as usize);
        let mut adjacency = Vec::with_capacity(count as usize);
        let mut witnesses = Vec::with_capacity(count as usize);

        // fold our own history up to the junction so each transition can be
        // witnessed from its pre-state
        let mut state = self.data.exec.as_ref().map(|e| {
            let mut st = e.st0.clone();
            for tx in e.txs.iter().take(from.saturating_sub(1) as usize) {
                apply_mut(&mut st, tx);
            }
            st
        });

        for k in 0..count {
            let idx = from + k;
            let bytes = store.entry_bytes(idx);
            let entry = crate::message::decode_entry(&bytes).ok();
            let prev_tx = if idx == 0 {
                None
            } else {
                crate::message::decode_entry(&store.entry_bytes(idx - 1))
                    .ok()
                    .and_then(|e| e.tx)
            };
            match (&mut state, self.data.exec.as_ref(), entry.as_ref().and_then(|e| e.tx.clone())) {
                (Some(st), Some(exec), Some(tx)) => {
                    adjacency.push(exec.adjacency(prev_tx.as_ref(), &tx));
                    witnesses.push(Some(make_witness(st, &tx)));
                    apply_mut(st, &tx);
                }
                _ => {
                    adjacency.push(None);
                    witnesses.push(None);
                }
            }
            entries.push(bytes);
        }
        SuffixReveal { entries, adjacency, witnesses }
    }

    // ---- responder ----

    fn answer_query(&mut self, q: &Query) -> Option<Message> {
        self.session.queries_seen += 1;
        if let Behavior::Staller { depth } = self.behavior {
            if self.session.queries_seen > depth {
                self.session.stalled = true;
            }
        }
        if self.session.stalled {
            return None;
        }
        let store = self.data.store.as_ref();
        match q {
            Query::Start { tree_index } => {
                self.session.resp_tree = Some(*tree_index);
                self.session.resp_path.clear();
                self.session.resp_node = 0;
                self.session.opens_served = 0;
                if store.tree_size(*tree_index as usize) == 1 {
                    let global = store.tree_offset(*tree_index as usize);
                    return Some(Message::Response(self.reveal(global)));
                }
                self.open_current()
            }
            Query::Child { index } => {
                let m = self.cfg.arity as u64;
                self.session.resp_path.push(*index);
                self.session.resp_node = self.session.resp_node * m + *index as u64;
                self.open_current()
            }
            Query::Leaf { index } => {
                let tree = self.session.resp_tree? as usize;
                let m = self.cfg.arity as u64;
                let local = self.session.resp_node * m + *index as u64;
                let global = store.tree_offset(tree) + local;
                Some(Message::Response(self.reveal(global)))
            }
        }
    }

    fn open_current(&mut self) -> Option<Message> {
        let tree = self.session.resp_tree? as usize;
        let mut children = self.data.store.open(tree, &self.session.resp_path)?;
        let served = self.session.opens_served;
        self.session.opens_served += 1;
        if let Behavior::GarbageChildren { depth } = self.behavior {
            if served == depth {
                for d in children.iter_mut() {
                    self.rng.fill(&mut d.0);
                }
            }
        }
        Some(Message::Response(Response::Children { digests: children }))
    }

    fn reveal(&mut self, global: u64) -> Response {
        let store = self.data.store.as_ref();
        let entry = store.entry_bytes(global);
        let prev = if global >= 1 {
            store.prove_entry(global - 1).map(|(tree_index, local_index, proof)| PrevReveal {
                entry: store.entry_bytes(global - 1),
                tree_index,
                local_index,
                proof,
            })
        } else {
            None
        };
        Response::Leaf { entry, prev }
    }
}

/// Smallest index at which the two child lists differ.
pub fn first_mismatch(own: &[Digest], other: &[Digest]) -> Option<u32> {
    let n = own.len().min(other.len());
    for i in 0..n {
        if own[i] != other[i] {
            return Some(i as u32);
        }
    }
    if own.len() != other.len() {
        Some(n as u32)
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(b: u8) -> Digest {
        Digest([b; 32])
    }

    #[test]
    fn first_mismatch_picks_smallest_index() {
        assert_eq!(first_mismatch(&[d(1), d(2)], &[d(1), d(3)]), Some(1));
        assert_eq!(first_mismatch(&[d(1), d(2)], &[d(9), d(2)]), Some(0));
        assert_eq!(
            first_mismatch(&[d(1), d(2), d(3), d(4)], &[d(1), d(7), d(3), d(8)]),
            Some(1)
        );
        assert_eq!(first_mismatch(&[d(1)], &[d(1)]), None);
    }
}
