//! Light-client primitives for lazy blockchains.
//!
//! Consensus on a lazy chain orders transactions without executing them, so
//! a light client cannot read the latest state commitment out of a header.
//! This crate provides the data structures a full node uses to commit to the
//! executed history anyway — augmented dirty ledgers, m-ary Merkle trees and
//! mountain ranges, a sparse-Merkle-tree state with succinct transition
//! witnesses — and the verifier-side checks (inclusion, adjacency, witness
//! replay) that interactive dispute games are adjudicated with.
//!
//! The interactive machinery itself (the verifier-mediated games, the
//! multi-prover tournament, the deterministic network) lives in the
//! companion simulation crate.

pub mod codec;
pub mod execution;
pub mod ledger;
pub mod merkle;
pub mod oracle;

pub use codec::{hash_tagged, Digest, DomainTag, Encodable};
pub use execution::{
    commit, delta, delta_star, genesis_state, make_witness, succinct_delta, SparseState,
    StateCommitment, Transaction,
};
pub use ledger::{augment, build_blocks, is_well_formed, AugmentedEntry, DirtyLedger, HeaderChain};
pub use merkle::{
    make_merkle_tree, make_mmr, segment_lengths, verify_inclusion, InclusionProof, MerkleTree,
    MountainRange, Peaks,
};
pub use oracle::{prove_adjacency, verify_adjacency, AdjacencyProof};
