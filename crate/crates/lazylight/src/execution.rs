//! The state machine: sparse-Merkle-tree state, the transition function, the
//! state commitment, witness production, and the succinct transition used by
//! the execution oracle.
//!
//! Invalid transactions are absorbed: applying one returns the state
//! unchanged. The succinct transition distinguishes an unusable witness
//! (`None`, i.e. bottom) from a valid witness proving the transaction invalid
//! (the pre-commitment, unchanged).

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{
    encode_bytes, hash_tagged, put_u64, put_u8, CodecError, Digest, DomainTag, Encodable, Reader,
};
use crate::merkle::hash_inner;

/// State key: an index into the sparse key space (low `depth` bits used).
pub type Key = u64;

/// Touched-leaf bound for spends; a spend exceeding it is invalid.
pub const MAX_UTXO_IO: usize = 16;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExecError {
    #[error("duplicate genesis allocation for key {0:#x}")]
    InvalidGenesis(Key),
    #[error("key {key:#x} out of range for depth {depth}")]
    KeyOutOfRange { key: Key, depth: u32 },
    #[error("state depth must be between 1 and 63")]
    BadDepth,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transaction {
    Transfer { from: Key, to: Key, amount: u64, nonce: u64 },
    UtxoSpend { inputs: Vec<Key>, outputs: Vec<(Key, u64)> },
}

impl Encodable for Transaction {
    fn encode_into(&self, out: &mut Vec<u8>) {
        match self {
            Transaction::Transfer { from, to, amount, nonce } => {
                put_u8(out, 0x00);
                put_u64(out, *from);
                put_u64(out, *to);
                put_u64(out, *amount);
                put_u64(out, *nonce);
            }
            Transaction::UtxoSpend { inputs, outputs } => {
                put_u8(out, 0x01);
                put_u64(out, inputs.len() as u64);
                for k in inputs {
                    put_u64(out, *k);
                }
                put_u64(out, outputs.len() as u64);
                for (k, v) in outputs {
                    put_u64(out, *k);
                    put_u64(out, *v);
                }
            }
        }
    }
}

impl Transaction {
    pub fn decode(r: &mut Reader<'_>) -> Result<Transaction, CodecError> {
        match r.take_u8()? {
            0x00 => Ok(Transaction::Transfer {
                from: r.take_u64()?,
                to: r.take_u64()?,
                amount: r.take_u64()?,
                nonce: r.take_u64()?,
            }),
            0x01 => {
                let n_in = r.take_u64()?;
                if n_in > 1024 {
                    return Err(CodecError::BadLength);
                }
                let mut inputs = Vec::with_capacity(n_in as usize);
                for _ in 0..n_in {
                    inputs.push(r.take_u64()?);
                }
                let n_out = r.take_u64()?;
                if n_out > 1024 {
                    return Err(CodecError::BadLength);
                }
                let mut outputs = Vec::with_capacity(n_out as usize);
                for _ in 0..n_out {
                    outputs.push((r.take_u64()?, r.take_u64()?));
                }
                Ok(Transaction::UtxoSpend { inputs, outputs })
            }
            other => Err(CodecError::BadKind(other)),
        }
    }

    /// Digest under the transaction domain tag.
    pub fn digest(&self) -> Digest {
        hash_tagged(DomainTag::Transaction, &self.encode())
    }
}

/// Constant-size commitment to a state: the sparse tree root.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct StateCommitment(pub Digest);

fn value_leaf_digest(value: u64) -> Digest {
    if value == 0 {
        hash_tagged(DomainTag::StateLeaf, &encode_bytes(b""))
    } else {
        hash_tagged(DomainTag::StateLeaf, &encode_bytes(&value.to_be_bytes()))
    }
}

fn default_digests(depth: u32) -> Vec<Digest> {
    let mut defaults = Vec::with_capacity(depth as usize + 1);
    defaults.push(value_leaf_digest(0));
    for level in 1..=depth {
        let below = defaults[level as usize - 1];
        defaults.push(hash_inner(&[below, below]));
    }
    defaults
}

/// Fixed-depth sparse Merkle key-value store. Zero values are not stored;
/// absent keys hash as the level-appropriate default digest.
#[derive(Clone, Debug)]
pub struct SparseState {
    depth: u32,
    leaves: BTreeMap<Key, u64>,
    /// Non-default node digests, incrementally maintained on every write.
    nodes: HashMap<(u32, u64), Digest>,
    defaults: Vec<Digest>,
}

impl PartialEq for SparseState {
    fn eq(&self, other: &Self) -> bool {
        self.depth == other.depth && self.leaves == other.leaves
    }
}

impl Eq for SparseState {}

impl SparseState {
    pub fn new(depth: u32) -> Result<SparseState, ExecError> {
        if depth == 0 || depth > 63 {
            return Err(ExecError::BadDepth);
        }
        Ok(SparseState {
            depth,
            leaves: BTreeMap::new(),
            nodes: HashMap::new(),
            defaults: default_digests(depth),
        })
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn key_capacity(&self) -> u64 {
        1u64 << self.depth
    }

    pub fn balance(&self, key: Key) -> u64 {
        self.leaves.get(&key).copied().unwrap_or(0)
    }

    pub fn leaves(&self) -> &BTreeMap<Key, u64> {
        &self.leaves
    }

    fn node(&self, level: u32, idx: u64) -> Digest {
        self.nodes
            .get(&(level, idx))
            .copied()
            .unwrap_or(self.defaults[level as usize])
    }

    pub fn write(&mut self, key: Key, value: u64) -> Result<(), ExecError> {
        if key >= self.key_capacity() {
            return Err(ExecError::KeyOutOfRange { key, depth: self.depth });
        }
        if value == 0 {
            self.leaves.remove(&key);
        } else {
            self.leaves.insert(key, value);
        }
        let mut cur = value_leaf_digest(value);
        self.set_node(0, key, cur);
        for level in 1..=self.depth {
            let idx = key >> level;
            let left = self.node(level - 1, idx * 2);
            let right = self.node(level - 1, idx * 2 + 1);
            cur = hash_inner(&[left, right]);
            self.set_node(level, idx, cur);
        }
        Ok(())
    }

    fn set_node(&mut self, level: u32, idx: u64, digest: Digest) {
        if digest == self.defaults[level as usize] {
            self.nodes.remove(&(level, idx));
        } else {
            self.nodes.insert((level, idx), digest);
        }
    }

    /// Incrementally maintained root.
    pub fn root(&self) -> Digest {
        self.node(self.depth, 0)
    }

    /// Recomputes the root by recursion over the leaf map, independent of the
    /// incremental node cache.
    pub fn root_from_scratch(&self) -> Digest {
        let leaves: Vec<(Key, u64)> = self.leaves.iter().map(|(k, v)| (*k, *v)).collect();
        self.scratch(self.depth, 0, &leaves)
    }

    fn scratch(&self, level: u32, idx: u64, leaves: &[(Key, u64)]) -> Digest {
        if leaves.is_empty() {
            return self.defaults[level as usize];
        }
        if level == 0 {
            return value_leaf_digest(leaves[0].1);
        }
        let split = (idx * 2 + 1) << (level - 1);
        let mid = leaves.partition_point(|(k, _)| *k < split);
        let left = self.scratch(level - 1, idx * 2, &leaves[..mid]);
        let right = self.scratch(level - 1, idx * 2 + 1, &leaves[mid..]);
        hash_inner(&[left, right])
    }

    /// Inclusion (or non-inclusion, for absent keys) proof for `key`.
    pub fn prove(&self, key: Key) -> SmtProof {
        let mut siblings = Vec::with_capacity(self.depth as usize);
        for level in 0..self.depth {
            siblings.push(self.node(level, (key >> level) ^ 1));
        }
        SmtProof { key, siblings }
    }
}

/// State with the configured allocations; duplicate keys are rejected.
pub fn genesis_state(depth: u32, allocations: &[(Key, u64)]) -> Result<SparseState, ExecError> {
    let mut st = SparseState::new(depth)?;
    let mut seen = std::collections::HashSet::new();
    for (key, amount) in allocations {
        if !seen.insert(*key) {
            return Err(ExecError::InvalidGenesis(*key));
        }
        if *amount > 0 {
            st.write(*key, *amount)?;
        }
    }
    Ok(st)
}

/// Sibling path for one key, leaf level first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmtProof {
    pub key: Key,
    pub siblings: Vec<Digest>,
}

impl SmtProof {
    pub fn encoded_len(&self) -> usize {
        8 + 8 + self.siblings.len() * crate::codec::DIGEST_LEN
    }
}

/// True iff `value` at `key` hashes up through `proof` to `root`.
pub fn verify_smt_proof(root: Digest, key: Key, value: u64, proof: &SmtProof) -> bool {
    let depth = proof.siblings.len() as u32;
    if depth == 0 || depth > 63 || proof.key != key || key >= (1u64 << depth) {
        return false;
    }
    let mut cur = value_leaf_digest(value);
    for (level, sib) in proof.siblings.iter().enumerate() {
        cur = if (key >> level) & 1 == 0 {
            hash_inner(&[cur, *sib])
        } else {
            hash_inner(&[*sib, cur])
        };
    }
    cur == root
}

/// Keys read or written by a transaction, in canonical first-use order.
pub fn touched_keys(tx: &Transaction) -> Vec<Key> {
    let mut keys = Vec::new();
    let mut push = |k: Key| {
        if !keys.contains(&k) {
            keys.push(k);
        }
    };
    match tx {
        Transaction::Transfer { from, to, .. } => {
            push(*from);
            push(*to);
        }
        Transaction::UtxoSpend { inputs, outputs } => {
            for k in inputs {
                push(*k);
            }
            for (k, _) in outputs {
                push(*k);
            }
        }
    }
    keys
}

/// Validity check and write set over an abstract key lookup. Returns the
/// final (key, value) writes for a valid transaction, `None` for an invalid
/// one. Shared by the full transition and the succinct transition so the two
/// routes cannot diverge on validity.
fn plan_writes(lookup: impl Fn(Key) -> u64, tx: &Transaction) -> Option<Vec<(Key, u64)>> {
    match tx {
        Transaction::Transfer { from, to, amount, .. } => {
            let bal_from = lookup(*from);
            if bal_from < *amount {
                return None;
            }
            if from == to {
                return Some(vec![(*from, bal_from)]);
            }
            let bal_to = lookup(*to).checked_add(*amount)?;
            Some(vec![(*from, bal_from - *amount), (*to, bal_to)])
        }
        Transaction::UtxoSpend { inputs, outputs } => {
            if inputs.is_empty() || inputs.len() + outputs.len() > MAX_UTXO_IO {
                return None;
            }
            let mut in_sum: u64 = 0;
            for (i, k) in inputs.iter().enumerate() {
                if inputs[..i].contains(k) {
                    return None;
                }
                let v = lookup(*k);
                if v == 0 {
                    return None;
                }
                in_sum = in_sum.checked_add(v)?;
            }
            let mut out_sum: u64 = 0;
            for (i, (k, v)) in outputs.iter().enumerate() {
                if outputs[..i].iter().any(|(k2, _)| k2 == k) || inputs.contains(k) {
                    return None;
                }
                if lookup(*k) != 0 {
                    return None;
                }
                out_sum = out_sum.checked_add(*v)?;
            }
            if in_sum < out_sum {
                return None;
            }
            let mut writes: Vec<(Key, u64)> = inputs.iter().map(|k| (*k, 0)).collect();
            writes.extend(outputs.iter().copied());
            Some(writes)
        }
    }
}

/// Applies one transaction; an invalid transaction returns the state
/// unchanged.
pub fn delta(st: &SparseState, tx: &Transaction) -> SparseState {
    let mut next = st.clone();
    apply_mut(&mut next, tx);
    next
}

/// In-place variant used by folds.
pub fn apply_mut(st: &mut SparseState, tx: &Transaction) -> bool {
    if touched_keys(tx).iter().any(|k| *k >= st.key_capacity()) {
        return false;
    }
    match plan_writes(|k| st.balance(k), tx) {
        Some(writes) => {
            for (k, v) in writes {
                st.write(k, v).expect("validated key range");
            }
            true
        }
        None => false,
    }
}

/// Left fold of `delta` over a transaction sequence.
pub fn delta_star<'a>(st0: &SparseState, txs: impl IntoIterator<Item = &'a Transaction>) -> SparseState {
    let mut st = st0.clone();
    for tx in txs {
        apply_mut(&mut st, tx);
    }
    st
}

pub fn commit(st: &SparseState) -> StateCommitment {
    StateCommitment(st.root())
}

/// Touched pre-values plus their proofs against the pre-state root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionWitness {
    pub touched: Vec<(Key, u64)>,
    pub proofs: Vec<SmtProof>,
}

impl ExecutionWitness {
    pub fn encoded_len(&self) -> usize {
        16 + self.touched.len() * 16 + self.proofs.iter().map(|p| p.encoded_len()).sum::<usize>()
    }
}

/// Witness for applying `tx` on top of `st`; satisfies
/// `succinct_delta(commit(st), tx, w) == Some(commit(delta(st, tx)))`.
pub fn make_witness(st: &SparseState, tx: &Transaction) -> ExecutionWitness {
    let keys = touched_keys(tx);
    let touched: Vec<(Key, u64)> = keys.iter().map(|k| (*k, st.balance(*k))).collect();
    let proofs = keys.iter().map(|k| st.prove(*k)).collect();
    ExecutionWitness { touched, proofs }
}

/// Succinct transition. `None` signals an unusable witness (missing
/// coverage, bad proofs, inconsistent nodes). A usable witness for an
/// invalid transaction yields the pre-commitment unchanged; a usable witness
/// for a valid transaction yields the post-commitment recomputed from the
/// modified leaves through the witness paths.
pub fn succinct_delta(
    pre: &StateCommitment,
    tx: &Transaction,
    w: &ExecutionWitness,
) -> Option<StateCommitment> {
    let keys = touched_keys(tx);
    if w.touched.len() != keys.len() || w.proofs.len() != keys.len() {
        return None;
    }
    let depth = w.proofs.first()?.siblings.len() as u32;
    if depth == 0 || depth > 63 {
        return None;
    }

    // Verify every proof against the pre-root while assembling a node map;
    // conflicting digests for the same node make the witness unusable.
    let mut nodes: HashMap<(u32, u64), Digest> = HashMap::new();
    let insert = |nodes: &mut HashMap<(u32, u64), Digest>, level: u32, idx: u64, d: Digest| {
        match nodes.insert((level, idx), d) {
            Some(prev) if prev != d => None,
            _ => Some(()),
        }
    };
    for (i, key) in keys.iter().enumerate() {
        let (wkey, value) = w.touched[i];
        let proof = &w.proofs[i];
        if wkey != *key || proof.key != *key || proof.siblings.len() as u32 != depth {
            return None;
        }
        if *key >= 1u64 << depth {
            return None;
        }
        let mut cur = value_leaf_digest(value);
        insert(&mut nodes, 0, *key, cur)?;
        for (level, sib) in proof.siblings.iter().enumerate() {
            let level = level as u32;
            let idx = *key >> level;
            insert(&mut nodes, level, idx ^ 1, *sib)?;
            cur = if idx & 1 == 0 {
                hash_inner(&[cur, *sib])
            } else {
                hash_inner(&[*sib, cur])
            };
            insert(&mut nodes, level + 1, *key >> (level + 1), cur)?;
        }
        if cur != pre.0 {
            return None;
        }
    }

    let lookup = |k: Key| -> u64 {
        w.touched
            .iter()
            .find(|(key, _)| *key == k)
            .map(|(_, v)| *v)
            .expect("touched covers the transaction's key set")
    };
    let writes = match plan_writes(lookup, tx) {
        Some(writes) => writes,
        None => return Some(*pre),
    };

    // Recompute the root with the modified leaves, reading every untouched
    // sibling from the verified node map.
    let mut frontier: BTreeMap<u64, Digest> = writes
        .iter()
        .map(|(k, v)| (*k, value_leaf_digest(*v)))
        .collect();
    for level in 0..depth {
        let mut next: BTreeMap<u64, Digest> = BTreeMap::new();
        let idxs: Vec<u64> = frontier.keys().copied().collect();
        let mut i = 0;
        while i < idxs.len() {
            let idx = idxs[i];
            let (left, right) = if idx & 1 == 0 {
                let left = frontier[&idx];
                let right = if idxs.get(i + 1) == Some(&(idx + 1)) {
                    i += 1;
                    frontier[&(idx + 1)]
                } else {
                    *nodes.get(&(level, idx + 1))?
                };
                (left, right)
            } else {
                (*nodes.get(&(level, idx - 1))?, frontier[&idx])
            };
            next.insert(idx >> 1, hash_inner(&[left, right]));
            i += 1;
        }
        frontier = next;
    }
    Some(StateCommitment(frontier[&0]))
}

/// A party able to produce transition witnesses on request.
pub trait TransitionProver {
    fn transition_witness(
        &mut self,
        pre: &StateCommitment,
        tx: &Transaction,
    ) -> Option<ExecutionWitness>;
}

/// Requests a witness and accepts iff the succinct transition from `pre`
/// under `tx` reproduces `post_claim`.
pub fn exec_oracle_query(
    tx: &Transaction,
    pre: &StateCommitment,
    post_claim: &StateCommitment,
    prover: &mut dyn TransitionProver,
) -> bool {
    match prover.transition_witness(pre, tx) {
        Some(w) => succinct_delta(pre, tx, &w) == Some(*post_claim),
        None => false,
    }
}
