//! Verifier-side adjacency oracle: does one transaction immediately follow
//! another on the union dirty ledger, proven by Merkle inclusion against the
//! trusted header chain.

use serde::{Deserialize, Serialize};

use crate::execution::Transaction;
use crate::ledger::{block_leaf_bytes, Block, HeaderChain};
use crate::merkle::{verify_inclusion, InclusionProof};

/// Proof that two transactions sit at consecutive ledger positions: either
/// adjacent leaves of one block tree or the last and first real leaves of
/// consecutive blocks. `First` proves a transaction is the very first ledger
/// position, used for the transition out of the genesis entry.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyProof {
    Pair {
        /// Header positions, `header <= header_next`.
        header: u64,
        header_next: u64,
        /// Leaf positions within the respective block trees.
        leaf: u64,
        leaf_next: u64,
        proof: InclusionProof,
        proof_next: InclusionProof,
    },
    First { proof: InclusionProof },
}

impl AdjacencyProof {
    pub fn encoded_len(&self) -> usize {
        match self {
            AdjacencyProof::Pair { proof, proof_next, .. } => {
                32 + proof.encoded_len() + proof_next.encoded_len()
            }
            AdjacencyProof::First { proof } => 16 + proof.encoded_len(),
        }
    }
}

/// Prover side: produce an adjacency proof from a block store, or refuse.
/// `prev == None` asks for a proof that `tx` is the first ledger position.
/// `view_len` caps the prover's own stable view; adjacency beyond it is
/// refused even if the blocks are locally available.
pub fn prove_adjacency(
    blocks: &[Block],
    block_size: u64,
    view_len: u64,
    prev: Option<&Transaction>,
    tx: &Transaction,
    position_of: impl Fn(&Transaction) -> Option<u64>,
) -> Option<AdjacencyProof> {
    let pos = position_of(tx)?;
    if pos >= view_len {
        return None;
    }
    let (header_next, leaf_next) = (pos / block_size, pos % block_size);
    let proof_next = blocks.get(header_next as usize)?.prove_tx(leaf_next).ok()?;
    match prev {
        None => {
            if pos != 0 {
                return None;
            }
            Some(AdjacencyProof::First { proof: proof_next })
        }
        Some(prev) => {
            let prev_pos = position_of(prev)?;
            if prev_pos + 1 != pos || pos >= view_len {
                return None;
            }
            let (header, leaf) = (prev_pos / block_size, prev_pos % block_size);
            let proof = blocks.get(header as usize)?.prove_tx(leaf).ok()?;
            Some(AdjacencyProof::Pair {
                header,
                header_next,
                leaf,
                leaf_next,
                proof,
                proof_next,
            })
        }
    }
}

/// Verifier side: check an adjacency proof against the canonical header
/// chain. Padding leaves can never satisfy inclusion of a real transaction
/// because block leaves are domain-tagged.
pub fn verify_adjacency(
    chain: &HeaderChain,
    prev: Option<&Transaction>,
    tx: &Transaction,
    proof: &AdjacencyProof,
) -> bool {
    match (prev, proof) {
        (None, AdjacencyProof::First { proof }) => match chain.header(0) {
            Some(h0) => {
                h0.tx_count > 0 && verify_inclusion(proof, h0.tx_root, 0, &block_leaf_bytes(Some(tx)))
            }
            None => false,
        },
        (
            Some(prev),
            AdjacencyProof::Pair { header, header_next, leaf, leaf_next, proof, proof_next },
        ) => {
            let (h, h2) = match (chain.header(*header), chain.header(*header_next)) {
                (Some(a), Some(b)) => (a, b),
                _ => return false,
            };
            if *leaf >= h.tx_count || *leaf_next >= h2.tx_count {
                return false;
            }
            let positions_ok = (*header_next == *header && *leaf_next == *leaf + 1)
                || (*header_next == *header + 1 && *leaf == h.tx_count - 1 && *leaf_next == 0);
            positions_ok
                && verify_inclusion(proof, h.tx_root, *leaf, &block_leaf_bytes(Some(prev)))
                && verify_inclusion(proof_next, h2.tx_root, *leaf_next, &block_leaf_bytes(Some(tx)))
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::execution::Transaction;
    use crate::ledger::{build_blocks, DirtyLedger};
    use std::collections::HashMap;

    fn fixture(n: u64, block_size: u64) -> (HeaderChain, Vec<Block>, Vec<Transaction>, u64) {
        let txs: Vec<Transaction> = (0..n)
            .map(|i| Transaction::Transfer { from: i, to: i + 1, amount: 1, nonce: i })
            .collect();
        let (chain, blocks) = build_blocks(&DirtyLedger { txs: txs.clone() }, block_size).unwrap();
        (chain, blocks, txs, block_size)
    }

    fn positions(txs: &[Transaction]) -> HashMap<Vec<u8>, u64> {
        txs.iter()
            .enumerate()
            .map(|(i, tx)| (crate::codec::Encodable::encode(tx), i as u64))
            .collect()
    }

    #[test]
    fn adjacent_within_and_across_blocks() {
        let (chain, blocks, txs, bs) = fixture(10, 4);
        let pos = positions(&txs);
        let find = |t: &Transaction| pos.get(&crate::codec::Encodable::encode(t)).copied();

        // same block
        let p = prove_adjacency(&blocks, bs, 10, Some(&txs[1]), &txs[2], find).unwrap();
        match &p {
            AdjacencyProof::Pair { header, header_next, leaf, leaf_next, .. } => {
                assert_eq!((*header, *header_next), (0, 0));
                assert_eq!((*leaf, *leaf_next), (1, 2));
            }
            _ => panic!("expected pair"),
        }
        assert!(verify_adjacency(&chain, Some(&txs[1]), &txs[2], &p));

        // across the boundary: last real leaf then leaf 0 of the next block
        let p = prove_adjacency(&blocks, bs, 10, Some(&txs[3]), &txs[4], find).unwrap();
        match &p {
            AdjacencyProof::Pair { header, header_next, leaf, leaf_next, .. } => {
                assert_eq!((*header, *header_next), (0, 1));
                assert_eq!((*leaf, *leaf_next), (3, 0));
            }
            _ => panic!("expected pair"),
        }
        assert!(verify_adjacency(&chain, Some(&txs[3]), &txs[4], &p));
    }

    #[test]
    fn non_adjacent_pair_refused() {
        let (_, blocks, txs, bs) = fixture(10, 4);
        let pos = positions(&txs);
        let find = |t: &Transaction| pos.get(&crate::codec::Encodable::encode(t)).copied();
        assert!(prove_adjacency(&blocks, bs, 10, Some(&txs[1]), &txs[3], find).is_none());
    }

    #[test]
    fn first_transaction_proof() {
        let (chain, blocks, txs, bs) = fixture(10, 4);
        let pos = positions(&txs);
        let find = |t: &Transaction| pos.get(&crate::codec::Encodable::encode(t)).copied();
        let p = prove_adjacency(&blocks, bs, 10, None, &txs[0], find).unwrap();
        assert!(verify_adjacency(&chain, None, &txs[0], &p));
        assert!(prove_adjacency(&blocks, bs, 10, None, &txs[1], find).is_none());
    }

    #[test]
    fn view_length_caps_proofs() {
        let (_, blocks, txs, bs) = fixture(10, 4);
        let pos = positions(&txs);
        let find = |t: &Transaction| pos.get(&crate::codec::Encodable::encode(t)).copied();
        assert!(prove_adjacency(&blocks, bs, 6, Some(&txs[5]), &txs[6], find).is_none());
        assert!(prove_adjacency(&blocks, bs, 7, Some(&txs[5]), &txs[6], find).is_some());
    }

    #[test]
    fn shifted_and_mutated_proofs_fail() {
        let (chain, blocks, txs, bs) = fixture(10, 4);
        let pos = positions(&txs);
        let find = |t: &Transaction| pos.get(&crate::codec::Encodable::encode(t)).copied();
        let p = prove_adjacency(&blocks, bs, 10, Some(&txs[1]), &txs[2], find).unwrap();

        // proof bound to the wrong header
        if let AdjacencyProof::Pair { header, header_next, .. } = &mut p.clone() {
            let mut shifted = p.clone();
            if let AdjacencyProof::Pair { header, header_next, .. } = &mut shifted {
                *header += 1;
                *header_next += 1;
            }
            assert!(!verify_adjacency(&chain, Some(&txs[1]), &txs[2], &shifted));
            let _ = (header, header_next);
        }

        // skipping a position
        let mut skip = p.clone();
        if let AdjacencyProof::Pair { leaf_next, .. } = &mut skip {
            *leaf_next += 1;
        }
        assert!(!verify_adjacency(&chain, Some(&txs[1]), &txs[2], &skip));

        // wrong transaction entirely
        assert!(!verify_adjacency(&chain, Some(&txs[1]), &txs[3], &p));
    }

    #[test]
    fn padding_positions_are_not_provable() {
        // 11 txs, block size 4: the last block has 3 real txs padded to 4.
        let (chain, blocks, txs, _) = fixture(11, 4);
        let proof = blocks[2].prove_tx(3).unwrap();
        // a forged "pair" pointing into the padding region
        let forged = AdjacencyProof::Pair {
            header: 2,
            header_next: 2,
            leaf: 2,
            leaf_next: 3,
            proof: blocks[2].prove_tx(2).unwrap(),
            proof_next: proof,
        };
        assert!(!verify_adjacency(&chain, Some(&txs[10]), &txs[0], &forged));
    }
}
