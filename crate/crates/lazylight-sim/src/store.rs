//! Prover-side entry storage behind one interface: an eager store holding
//! the full mountain range in memory, and a lazy store for very large
//! stubbed histories that keeps only the inner tree levels and recomputes
//! leaf digests on demand.

use lazylight::codec::{hash_tagged, Digest, DomainTag};
use lazylight::execution::{StateCommitment, Transaction};
use lazylight::ledger::AugmentedEntry;
use lazylight::merkle::{
    hash_inner, hash_leaf, level_sizes, make_merkle_tree, InclusionProof, MountainRange,
    ProofLevel,
};
use lazylight::Encodable;

/// Read-only view of a prover's committed entries and trees.
pub trait EntryStore {
    fn total(&self) -> u64;
    fn arity(&self) -> u32;
    fn peaks(&self) -> Vec<(u64, Digest)>;
    fn tree_size(&self, tree: usize) -> u64;
    fn tree_offset(&self, tree: usize) -> u64;
    /// Children of the inner node addressed by `path` from the root of
    /// `tree`; `None` when the path is invalid.
    fn open(&self, tree: usize, path: &[u32]) -> Option<Vec<Digest>>;
    fn entry_bytes(&self, global: u64) -> Vec<u8>;
    /// Proof of the entry at `global` within its own tree.
    fn prove_entry(&self, global: u64) -> Option<(u32, u64, InclusionProof)>;
    /// Root of the tree the store would commit to for the entry range
    /// `[start, start + size)`; `None` if unavailable.
    fn range_root(&self, start: u64, size: u64) -> Option<Digest>;
}

/// In-memory store: encoded entries plus their mountain range.
pub struct EagerStore {
    entries: Vec<Vec<u8>>,
    mmr: MountainRange,
}

impl EagerStore {
    pub fn new(entries: Vec<Vec<u8>>, arity: u32) -> EagerStore {
        let mmr = lazylight::merkle::make_mmr(&entries, arity).expect("non-empty entry list");
        EagerStore { entries, mmr }
    }

    pub fn from_entries(entries: &[AugmentedEntry], arity: u32) -> EagerStore {
        EagerStore::new(entries.iter().map(|e| e.encode()).collect(), arity)
    }

    pub fn mmr(&self) -> &MountainRange {
        &self.mmr
    }
}

impl EntryStore for EagerStore {
    fn total(&self) -> u64 {
        self.entries.len() as u64
    }

    fn arity(&self) -> u32 {
        self.mmr.arity()
    }

    fn peaks(&self) -> Vec<(u64, Digest)> {
        self.mmr.peaks().pairs()
    }

    fn tree_size(&self, tree: usize) -> u64 {
        self.mmr.tree(tree).map(|t| t.leaf_count()).unwrap_or(0)
    }

    fn tree_offset(&self, tree: usize) -> u64 {
        self.mmr.tree_offset(tree)
    }

    fn open(&self, tree: usize, path: &[u32]) -> Option<Vec<Digest>> {
        self.mmr.tree(tree)?.open_children(path).ok()
    }

    fn entry_bytes(&self, global: u64) -> Vec<u8> {
        self.entries[global as usize].clone()
    }

    fn prove_entry(&self, global: u64) -> Option<(u32, u64, InclusionProof)> {
        let (t, local, proof) = self.mmr.prove_entry(global).ok()?;
        Some((t as u32, local, proof))
    }

    fn range_root(&self, start: u64, size: u64) -> Option<Digest> {
        if start + size > self.total() || !size.is_power_of_two() {
            return None;
        }
        // whole trees come straight from the range
        let mut offset = 0u64;
        for tree in self.mmr.trees() {
            if offset == start && tree.leaf_count() == size {
                return Some(tree.root());
            }
            offset += tree.leaf_count();
        }
        let slice = &self.entries[start as usize..(start + size) as usize];
        Some(make_merkle_tree(slice, self.mmr.arity()).expect("power-of-two slice").root())
    }
}

/// Which field of a stub entry a corruption flips.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StubField {
    Tx,
    State,
}

/// Lazy single-tree store over a deterministically generated history padded
/// to a power of two. Only inner levels are materialized; leaf digests are
/// recomputed from the generator on demand. Corrupt variants share the
/// honest build and patch one leaf's path.
pub struct StubStore {
    seed: u64,
    padded_len: u64,
    arity: u32,
    corrupt: Option<(u64, StubField)>,
    /// `levels[0]` is the first inner level; leaves are not stored.
    levels: Vec<Vec<Digest>>,
    sizes: Vec<u64>,
}

fn stub_commit(seed: u64, index: u64, salt: u64) -> Digest {
    let mut payload = [0u8; 24];
    payload[..8].copy_from_slice(&seed.to_be_bytes());
    payload[8..16].copy_from_slice(&index.to_be_bytes());
    payload[16..].copy_from_slice(&salt.to_be_bytes());
    hash_tagged(DomainTag::StateLeaf, &payload)
}

impl StubStore {
    /// Builds the honest store: `real_len` entries padded to the next power
    /// of two with deterministic filler entries.
    pub fn honest(seed: u64, real_len: u64, arity: u32) -> StubStore {
        assert!(real_len >= 1);
        let padded_len = real_len.next_power_of_two();
        let sizes = level_sizes(padded_len, arity);
        let mut store = StubStore {
            seed,
            padded_len,
            arity,
            corrupt: None,
            levels: Vec::new(),
            sizes: sizes.clone(),
        };
        // stream the leaf level into the first inner level
        let m = arity as usize;
        if padded_len > 1 {
            let mut first_inner = Vec::with_capacity(sizes[1] as usize);
            let mut group: Vec<Digest> = Vec::with_capacity(m);
            for i in 0..padded_len {
                group.push(store.leaf_digest(i));
                if group.len() == m {
                    first_inner.push(hash_inner(&group));
                    group.clear();
                }
            }
            if !group.is_empty() {
                first_inner.push(hash_inner(&group));
            }
            store.levels.push(first_inner);
            while store.levels.last().unwrap().len() > 1 {
                let next: Vec<Digest> =
                    store.levels.last().unwrap().chunks(m).map(|g| hash_inner(g)).collect();
                store.levels.push(next);
            }
        }
        store
    }

    /// Corrupt variant sharing the honest inner levels, with the path above
    /// the corrupted leaf recomputed.
    pub fn with_corruption(honest: &StubStore, index: u64, field: StubField) -> StubStore {
        assert!(honest.corrupt.is_none());
        assert!(index < honest.padded_len);
        let mut store = StubStore {
            seed: honest.seed,
            padded_len: honest.padded_len,
            arity: honest.arity,
            corrupt: Some((index, field)),
            levels: honest.levels.clone(),
            sizes: honest.sizes.clone(),
        };
        if store.padded_len > 1 {
            let m = store.arity as u64;
            // recompute the leaf group containing the corruption
            let group_idx = index / m;
            let start = group_idx * m;
            let end = (start + m).min(store.padded_len);
            let group: Vec<Digest> = (start..end).map(|i| store.leaf_digest(i)).collect();
            store.levels[0][group_idx as usize] = hash_inner(&group);
            // propagate upward
            let mut node = group_idx;
            for level in 1..store.levels.len() {
                let parent = node / m;
                let start = (parent * m) as usize;
                let end = (start + m as usize).min(store.levels[level - 1].len());
                let digest = hash_inner(&store.levels[level - 1][start..end]);
                store.levels[level][parent as usize] = digest;
                node = parent;
            }
        }
        store
    }

    pub fn padded_len(&self) -> u64 {
        self.padded_len
    }

    fn leaf_digest(&self, i: u64) -> Digest {
        hash_leaf(&self.entry_bytes(i))
    }

    fn root(&self) -> Digest {
        match self.levels.last() {
            Some(top) => top[0],
            None => self.leaf_digest(0),
        }
    }

    /// Decoded view used by the stubbed oracle checks.
    pub fn reference_entry(&self, i: u64) -> AugmentedEntry {
        AugmentedEntry::decode(&self.entry_bytes(i)).expect("stub entries decode")
    }
}

impl EntryStore for StubStore {
    fn total(&self) -> u64 {
        self.padded_len
    }

    fn arity(&self) -> u32 {
        self.arity
    }

    fn peaks(&self) -> Vec<(u64, Digest)> {
        vec![(self.padded_len, self.root())]
    }

    fn tree_size(&self, tree: usize) -> u64 {
        if tree == 0 {
            self.padded_len
        } else {
            0
        }
    }

    fn tree_offset(&self, _tree: usize) -> u64 {
        0
    }

    fn open(&self, tree: usize, path: &[u32]) -> Option<Vec<Digest>> {
        if tree != 0 {
            return None;
        }
        let m = self.arity as u64;
        // levels indexed with 0 = leaves; stored levels start at 1
        let mut level = self.sizes.len() - 1;
        let mut idx = 0u64;
        for &c in path {
            if level == 0 {
                return None;
            }
            let child = idx * m + c as u64;
            if c as u64 >= m || child >= self.sizes[level - 1].min((idx + 1) * m) {
                return None;
            }
            level -= 1;
            idx = child;
        }
        if level == 0 {
            return None;
        }
        let below = self.sizes[level - 1];
        let start = idx * m;
        let end = ((idx + 1) * m).min(below);
        if level - 1 == 0 {
            Some((start..end).map(|i| self.leaf_digest(i)).collect())
        } else {
            let stored = &self.levels[level - 2];
            Some(stored[start as usize..end as usize].to_vec())
        }
    }

    fn entry_bytes(&self, global: u64) -> Vec<u8> {
        let (state, nonce) = match self.corrupt {
            Some((idx, StubField::State)) if idx == global => {
                (stub_commit(self.seed, global, 0xbad), global)
            }
            Some((idx, StubField::Tx)) if idx == global => {
                (stub_commit(self.seed, global, 0), self.padded_len + global)
            }
            _ => (stub_commit(self.seed, global, 0), global),
        };
        AugmentedEntry {
            tx: Some(Transaction::Transfer { from: global, to: global, amount: 0, nonce }),
            state: StateCommitment(state),
        }
        .encode()
    }

    fn prove_entry(&self, global: u64) -> Option<(u32, u64, InclusionProof)> {
        if global >= self.padded_len {
            return None;
        }
        let m = self.arity as u64;
        let mut path = Vec::with_capacity(self.sizes.len() - 1);
        let mut v = global;
        for level in 0..self.sizes.len() - 1 {
            let group = v / m;
            let start = group * m;
            let end = (start + m).min(self.sizes[level]);
            let pos = (v % m) as u32;
            let mut siblings = Vec::with_capacity((end - start - 1) as usize);
            for i in start..end {
                if i != v {
                    siblings.push(if level == 0 {
                        self.leaf_digest(i)
                    } else {
                        self.levels[level - 1][i as usize]
                    });
                }
            }
            path.push(ProofLevel { siblings, position: pos });
            v /= m;
        }
        Some((0, global, InclusionProof { arity: self.arity, leaf_index: global, path }))
    }

    fn range_root(&self, start: u64, size: u64) -> Option<Digest> {
        if start == 0 && size == self.padded_len {
            Some(self.root())
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lazylight::merkle::{make_mmr, verify_inclusion};

    fn stub_entries(seed: u64, n: u64) -> Vec<Vec<u8>> {
        let honest = StubStore::honest(seed, n, 4);
        (0..honest.padded_len()).map(|i| honest.entry_bytes(i)).collect()
    }

    #[test]
    fn stub_store_matches_eager_construction() {
        for (n, m) in [(1u64, 2u32), (5, 2), (19, 3), (100, 4), (256, 16)] {
            let honest = StubStore::honest(7, n, m);
            let entries: Vec<Vec<u8>> =
                (0..honest.padded_len()).map(|i| honest.entry_bytes(i)).collect();
            let mmr = make_mmr(&entries, m).unwrap();
            assert_eq!(honest.peaks(), mmr.peaks().pairs(), "n={n} m={m}");
        }
    }

    #[test]
    fn stub_open_agrees_with_eager_tree() {
        let honest = StubStore::honest(3, 40, 4);
        let entries = stub_entries(3, 40);
        let mmr = make_mmr(&entries, 4).unwrap();
        let tree = mmr.tree(0).unwrap();
        for path in [vec![], vec![0], vec![1], vec![0, 2], vec![3, 3]] {
            assert_eq!(
                honest.open(0, &path),
                tree.open_children(&path).ok(),
                "path {path:?}"
            );
        }
    }

    #[test]
    fn stub_proofs_verify_and_corruption_moves_one_leaf() {
        let honest = StubStore::honest(11, 300, 4);
        let root = honest.peaks()[0].1;
        for i in [0u64, 1, 255, 299, 511] {
            let (_, local, proof) = honest.prove_entry(i).unwrap();
            assert!(verify_inclusion(&proof, root, local, &honest.entry_bytes(i)));
        }

        let corrupt = StubStore::with_corruption(&honest, 137, StubField::State);
        assert_ne!(corrupt.peaks(), honest.peaks());
        // rebuild check: the corrupt store equals an eager build over its entries
        let entries: Vec<Vec<u8>> =
            (0..corrupt.padded_len()).map(|i| corrupt.entry_bytes(i)).collect();
        let mmr = make_mmr(&entries, 4).unwrap();
        assert_eq!(corrupt.peaks(), mmr.peaks().pairs());
        // only the one entry differs
        for i in 0..honest.padded_len() {
            assert_eq!(i == 137, honest.entry_bytes(i) != corrupt.entry_bytes(i));
        }
    }

    #[test]
    fn eager_range_root_matches_subtree_builds() {
        let entries: Vec<Vec<u8>> = (0..13u64).map(|i| i.to_be_bytes().to_vec()).collect();
        let store = EagerStore::new(entries.clone(), 2);
        // whole-tree ranges
        assert_eq!(store.range_root(0, 8).unwrap(), store.mmr().tree(0).unwrap().root());
        assert_eq!(store.range_root(8, 4).unwrap(), store.mmr().tree(1).unwrap().root());
        // an interior range comes from a fresh slice build
        let inner = store.range_root(8, 2).unwrap();
        let expect = make_merkle_tree(&entries[8..10], 2).unwrap().root();
        assert_eq!(inner, expect);
        assert_eq!(store.range_root(12, 4), None);
    }
}
