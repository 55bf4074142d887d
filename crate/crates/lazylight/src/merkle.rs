//! m-ary Merkle trees over power-of-two leaf counts, inclusion proofs, node
//! opening, and Merkle Mountain Ranges with incremental append.
//!
//! Trees group the previous level's nodes left-to-right into blocks of at
//! most `m` and hash each block; the top group may be ragged. A mountain
//! range splits `total` leaves into strictly decreasing power-of-two
//! segments (the set bits of `total`), one tree per segment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{encode_bytes, encode_digest_list, hash_tagged, put_digest, put_u64, Digest, DomainTag};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MerkleError {
    #[error("leaf count must be at least 1")]
    InvalidLength,
    #[error("leaf count {0} is not a power of two")]
    NotPowerOfTwo(u64),
    #[error("leaf index {index} out of range for {leaves} leaves")]
    IndexOutOfRange { index: u64, leaves: u64 },
    #[error("path does not address an inner node")]
    NotInnerNode,
    #[error("arity must be at least 2")]
    BadArity,
}

/// Digest of a leaf payload.
pub fn hash_leaf(bytes: &[u8]) -> Digest {
    hash_tagged(DomainTag::Leaf, &encode_bytes(bytes))
}

/// Digest of an inner node from its ordered children.
pub fn hash_inner(children: &[Digest]) -> Digest {
    hash_tagged(DomainTag::Inner, &encode_digest_list(children))
}

/// Strictly decreasing powers of two summing to `total` (its set bits).
pub fn segment_lengths(total: u64) -> Result<Vec<u64>, MerkleError> {
    if total == 0 {
        return Err(MerkleError::InvalidLength);
    }
    let mut out = Vec::with_capacity(total.count_ones() as usize);
    for bit in (0..64).rev() {
        let p = 1u64 << bit;
        if total & p != 0 {
            out.push(p);
        }
    }
    Ok(out)
}

/// Sizes of each level of an m-ary tree over `leaf_count` leaves, bottom up.
/// `[leaf_count, ceil(leaf_count / m), ..., 1]`.
pub fn level_sizes(leaf_count: u64, arity: u32) -> Vec<u64> {
    let m = arity as u64;
    let mut sizes = vec![leaf_count];
    let mut n = leaf_count;
    while n > 1 {
        n = n.div_ceil(m);
        sizes.push(n);
    }
    sizes
}

/// Number of grouping levels between the leaves and the root.
pub fn tree_height(leaf_count: u64, arity: u32) -> u32 {
    (level_sizes(leaf_count, arity).len() - 1) as u32
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MerkleTree {
    arity: u32,
    /// `levels[0]` are the leaf digests; the last level is the single root.
    levels: Vec<Vec<Digest>>,
}

impl MerkleTree {
    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn leaf_count(&self) -> u64 {
        self.levels[0].len() as u64
    }

    pub fn height(&self) -> u32 {
        (self.levels.len() - 1) as u32
    }

    pub fn root(&self) -> Digest {
        *self.levels.last().unwrap().first().unwrap()
    }

    pub fn leaf_digest(&self, index: u64) -> Option<Digest> {
        self.levels[0].get(index as usize).copied()
    }

    /// Builds a tree from precomputed leaf digests.
    pub fn from_leaf_digests(leaves: Vec<Digest>, arity: u32) -> Result<MerkleTree, MerkleError> {
        if arity < 2 {
            return Err(MerkleError::BadArity);
        }
        let n = leaves.len() as u64;
        if n == 0 {
            return Err(MerkleError::InvalidLength);
        }
        if !n.is_power_of_two() {
            return Err(MerkleError::NotPowerOfTwo(n));
        }
        let mut levels = vec![leaves];
        while levels.last().unwrap().len() > 1 {
            levels.push(group_level(levels.last().unwrap(), arity));
        }
        Ok(MerkleTree { arity, levels })
    }

    /// Children digests of the inner node addressed by `path` (child indices
    /// walked from the root).
    pub fn open_children(&self, path: &[u32]) -> Result<Vec<Digest>, MerkleError> {
        let m = self.arity as u64;
        let mut level = self.levels.len() - 1;
        let mut idx = 0u64;
        for &c in path {
            if level == 0 {
                return Err(MerkleError::NotInnerNode);
            }
            let below = self.levels[level - 1].len() as u64;
            let child = idx * m + c as u64;
            if c as u64 >= m || child >= below.min((idx + 1) * m) {
                return Err(MerkleError::NotInnerNode);
            }
            level -= 1;
            idx = child;
        }
        if level == 0 {
            return Err(MerkleError::NotInnerNode);
        }
        let below = &self.levels[level - 1];
        let start = (idx * m) as usize;
        let end = (((idx + 1) * m) as usize).min(below.len());
        Ok(below[start..end].to_vec())
    }

    pub fn prove_inclusion(&self, index: u64) -> Result<InclusionProof, MerkleError> {
        let n = self.leaf_count();
        if index >= n {
            return Err(MerkleError::IndexOutOfRange { index, leaves: n });
        }
        let m = self.arity as u64;
        let mut path = Vec::with_capacity(self.levels.len() - 1);
        let mut v = index;
        for level in &self.levels[..self.levels.len() - 1] {
            let group = (v / m) as usize;
            let pos = (v % m) as u32;
            let start = group * m as usize;
            let end = (start + m as usize).min(level.len());
            let mut siblings = Vec::with_capacity(end - start - 1);
            for (i, d) in level[start..end].iter().enumerate() {
                if i as u32 != pos {
                    siblings.push(*d);
                }
            }
            path.push(ProofLevel { siblings, position: pos });
            v /= m;
        }
        Ok(InclusionProof { arity: self.arity, leaf_index: index, path })
    }
}

fn group_level(level: &[Digest], arity: u32) -> Vec<Digest> {
    level
        .chunks(arity as usize)
        .map(hash_inner)
        .collect()
}

/// Builds an m-ary tree over raw leaf payloads.
pub fn make_merkle_tree<B: AsRef<[u8]>>(leaves: &[B], arity: u32) -> Result<MerkleTree, MerkleError> {
    let digests = leaves.iter().map(|b| hash_leaf(b.as_ref())).collect();
    MerkleTree::from_leaf_digests(digests, arity)
}

/// One level of an inclusion proof: the other members of the node's group,
/// in order, plus the node's own position within the group.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofLevel {
    pub siblings: Vec<Digest>,
    pub position: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InclusionProof {
    pub arity: u32,
    pub leaf_index: u64,
    pub path: Vec<ProofLevel>,
}

impl InclusionProof {
    /// Serialized wire size in bytes.
    pub fn encoded_len(&self) -> usize {
        let mut n = 4 + 8 + 8;
        for lvl in &self.path {
            n += 8 + 4 + lvl.siblings.len() * crate::codec::DIGEST_LEN;
        }
        n
    }
}

/// Recomputes the path from `hash_leaf(value)` through the sibling groups and
/// accepts iff it reproduces `root` and the group positions are consistent
/// with `index`. Malformed shapes return false rather than an error.
pub fn verify_inclusion(proof: &InclusionProof, root: Digest, index: u64, value: &[u8]) -> bool {
    if proof.arity < 2 || proof.leaf_index != index {
        return false;
    }
    let m = proof.arity as u64;
    let mut cur = hash_leaf(value);
    let mut v = index;
    for lvl in &proof.path {
        let group_len = lvl.siblings.len() + 1;
        if group_len > m as usize {
            return false;
        }
        if lvl.position as u64 != v % m || lvl.position as usize >= group_len {
            return false;
        }
        let mut group = Vec::with_capacity(group_len);
        group.extend_from_slice(&lvl.siblings[..lvl.position as usize]);
        group.push(cur);
        group.extend_from_slice(&lvl.siblings[lvl.position as usize..]);
        cur = hash_inner(&group);
        v /= m;
    }
    v == 0 && cur == root
}

/// Peak list of a mountain range: one root per tree, sizes strictly
/// decreasing powers of two.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Peaks {
    pub sizes: Vec<u64>,
    pub roots: Vec<Digest>,
}

impl Peaks {
    pub fn pairs(&self) -> Vec<(u64, Digest)> {
        self.sizes.iter().copied().zip(self.roots.iter().copied()).collect()
    }
}

/// Count-prefixed (size, digest) pairs, sizes as 8-byte big-endian.
pub fn encode_peak_list(pairs: &[(u64, Digest)]) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + pairs.len() * (8 + crate::codec::DIGEST_LEN));
    put_u64(&mut out, pairs.len() as u64);
    for (size, root) in pairs {
        put_u64(&mut out, *size);
        put_digest(&mut out, root);
    }
    out
}

/// Sequence of m-ary Merkle trees over power-of-two segments.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MountainRange {
    arity: u32,
    trees: Vec<MerkleTree>,
}

impl MountainRange {
    pub fn arity(&self) -> u32 {
        self.arity
    }

    pub fn total_leaves(&self) -> u64 {
        self.trees.iter().map(|t| t.leaf_count()).sum()
    }

    pub fn trees(&self) -> &[MerkleTree] {
        &self.trees
    }

    pub fn tree(&self, i: usize) -> Option<&MerkleTree> {
        self.trees.get(i)
    }

    pub fn peaks(&self) -> Peaks {
        Peaks {
            sizes: self.trees.iter().map(|t| t.leaf_count()).collect(),
            roots: self.trees.iter().map(|t| t.root()).collect(),
        }
    }

    /// Hash of the peak list; available as a single external commitment.
    pub fn bagged_root(&self) -> Digest {
        hash_tagged(DomainTag::PeakBag, &encode_peak_list(&self.peaks().pairs()))
    }

    /// Maps a global leaf index to (tree index, local leaf index).
    pub fn locate(&self, global: u64) -> Option<(usize, u64)> {
        let mut offset = 0u64;
        for (t, tree) in self.trees.iter().enumerate() {
            let n = tree.leaf_count();
            if global < offset + n {
                return Some((t, global - offset));
            }
            offset += n;
        }
        None
    }

    /// Global leaf index of the first leaf of tree `t`.
    pub fn tree_offset(&self, t: usize) -> u64 {
        self.trees[..t].iter().map(|x| x.leaf_count()).sum()
    }

    /// Inclusion proof of the leaf at global index, within its own tree.
    pub fn prove_entry(&self, global: u64) -> Result<(usize, u64, InclusionProof), MerkleError> {
        let (t, local) = self.locate(global).ok_or(MerkleError::IndexOutOfRange {
            index: global,
            leaves: self.total_leaves(),
        })?;
        let proof = self.trees[t].prove_inclusion(local)?;
        Ok((t, local, proof))
    }

    /// Appends one leaf, merging equal-size trailing trees. The result is
    /// identical, tree for tree, to a batch rebuild over the extended data.
    /// For power-of-two arities all levels aligned to the arity are reused,
    /// so merging costs O(log) hash computations; other arities rebuild the
    /// upper levels of the merged segment.
    pub fn append(&self, leaf: &[u8]) -> MountainRange {
        let mut trees = self.trees.clone();
        trees.push(MerkleTree {
            arity: self.arity,
            levels: vec![vec![hash_leaf(leaf)]],
        });
        while trees.len() >= 2
            && trees[trees.len() - 1].leaf_count() == trees[trees.len() - 2].leaf_count()
        {
            let b = trees.pop().unwrap();
            let a = trees.pop().unwrap();
            trees.push(merge_equal_trees(a, b, self.arity));
        }
        MountainRange { arity: self.arity, trees }
    }
}

fn merge_equal_trees(a: MerkleTree, b: MerkleTree, arity: u32) -> MerkleTree {
    let m = arity as usize;
    let mut levels: Vec<Vec<Digest>> = Vec::new();
    let mut d = 0usize;
    // Aligned levels concatenate without rehashing.
    loop {
        let mut lvl = Vec::with_capacity(a.levels[d].len() * 2);
        lvl.extend_from_slice(&a.levels[d]);
        lvl.extend_from_slice(&b.levels[d]);
        levels.push(lvl);
        if a.levels[d].len() % m != 0 {
            break;
        }
        d += 1;
    }
    while levels.last().unwrap().len() > 1 {
        levels.push(group_level(levels.last().unwrap(), arity));
    }
    MerkleTree { arity, levels }
}

/// Builds a mountain range over raw leaf payloads, splitting them into the
/// segment lengths of the total count.
pub fn make_mmr<B: AsRef<[u8]>>(leaves: &[B], arity: u32) -> Result<MountainRange, MerkleError> {
    if arity < 2 {
        return Err(MerkleError::BadArity);
    }
    let segments = segment_lengths(leaves.len() as u64)?;
    let mut trees = Vec::with_capacity(segments.len());
    let mut offset = 0usize;
    for seg in segments {
        let seg = seg as usize;
        trees.push(make_merkle_tree(&leaves[offset..offset + seg], arity)?);
        offset += seg;
    }
    Ok(MountainRange { arity, trees })
}
