//! Demonstration fixture: a chain of spends where each transaction consumes
//! an output also claimed by the one before it in the chain (and after it
//! on the ledger), so the validity of the final ledger transaction flips
//! with every reveal a naive inclusion-proof client is shown. The dispute
//! game settles the same question in logarithmically many messages.

use std::collections::HashMap;
use std::sync::Arc;

use lazylight::execution::{apply_mut, commit, genesis_state, SparseState, Transaction};
use lazylight::ledger::{augment, build_blocks, DirtyLedger};
use lazylight::Encodable;

use crate::game::{Mode, Verifier};
use crate::net::{NetworkConfig, SimNet};
use crate::prover::{Behavior, ExecContext, ProverData, ProverNode};
use crate::scenario::Fixture;
use crate::store::EagerStore;

const STATE_DEPTH: u32 = 16;

/// The alternating-invalidation spend chain, in ledger order: the chain
/// transaction `i` (counting down from `n`) spends its own funding output
/// and the funding output of chain transaction `i - 1`.
pub fn attack_ledger(n: u64) -> (DirtyLedger, SparseState) {
    assert!(n >= 2);
    // keys: 0 is the extra input of the final chain transaction; 1..=n fund
    // the chain; outputs land on fresh keys above n.
    let genesis: Vec<(u64, u64)> = (0..=n).map(|k| (k, 1)).collect();
    let st0 = genesis_state(STATE_DEPTH, &genesis).expect("distinct keys");
    let txs: Vec<Transaction> = (1..=n)
        .rev()
        .map(|i| Transaction::UtxoSpend {
            inputs: vec![i, i - 1],
            outputs: vec![(n + 1 + i, 2)],
        })
        .collect();
    (DirtyLedger { txs }, st0)
}

/// Whether the final ledger transaction (chain transaction 1) applies under
/// full execution.
pub fn final_tx_valid(n: u64) -> bool {
    let (ledger, st0) = attack_ledger(n);
    let mut st = st0;
    let mut last = false;
    for tx in &ledger.txs {
        last = apply_mut(&mut st, tx);
    }
    last
}

/// The naive dialogue: each side reveals the next transaction invalidating
/// the other's latest evidence, until nothing conflicts with the last
/// reveal. Returns the number of transactions revealed before the answer
/// stabilizes.
pub fn naive_reveal_count(n: u64) -> u64 {
    let (ledger, _) = attack_ledger(n);
    // position of chain tx i on the ledger: n - i
    let spends_of = |i: u64| -> &Transaction { &ledger.txs[(n - i) as usize] };
    let mut reveals = 0u64;
    let mut contested = 1u64; // chain tx whose validity is in question
    loop {
        // the next chain transaction shares an input with the contested one
        // and precedes it on the ledger
        let next = contested + 1;
        if next > n {
            break;
        }
        let Transaction::UtxoSpend { inputs: a, .. } = spends_of(contested) else { unreachable!() };
        let Transaction::UtxoSpend { inputs: b, .. } = spends_of(next) else { unreachable!() };
        assert!(a.iter().any(|k| b.contains(k)), "chain transactions must conflict");
        reveals += 1;
        contested = next;
    }
    reveals
}

/// Two provers over the spend chain: an honest one, and one claiming the
/// opposite verdict on the final transaction by committing to a last state
/// in which it was force-applied (or force-skipped).
pub fn build_attack_fixture(n: u64, cfg: &NetworkConfig) -> Fixture {
    let (ledger, st0) = attack_ledger(n);
    let entries = augment(&ledger, &st0);
    let block_size = 16;
    let (chain, blocks) = build_blocks(&ledger, block_size).expect("positive block size");
    let blocks = Arc::new(blocks);
    let positions: Arc<HashMap<Vec<u8>, u64>> = Arc::new(
        ledger.txs.iter().enumerate().map(|(i, tx)| (tx.encode(), i as u64)).collect(),
    );

    // the adversary's final entry commits to the flipped verdict
    let mut adversary_entries = entries.clone();
    let mut st = st0.clone();
    for tx in &ledger.txs[..ledger.txs.len() - 1] {
        apply_mut(&mut st, tx);
    }
    let last_tx = ledger.txs.last().expect("n >= 2").clone();
    let applied = apply_mut(&mut st.clone(), &last_tx);
    let flipped = if applied {
        // honestly valid: the adversary claims it was skipped
        commit(&st)
    } else {
        // honestly invalid: the adversary claims it was applied
        let mut forced = st.clone();
        if let Transaction::UtxoSpend { inputs, outputs } = &last_tx {
            for k in inputs {
                forced.write(*k, 0).expect("key range");
            }
            for (k, v) in outputs {
                forced.write(*k, *v).expect("key range");
            }
        }
        commit(&forced)
    };
    let last = adversary_entries.last_mut().expect("non-empty");
    last.state = flipped;

    let make_exec = || ExecContext {
        st0: st0.clone(),
        txs: ledger.txs.clone(),
        blocks: blocks.clone(),
        block_size,
        view_len: ledger.len(),
        positions: positions.clone(),
    };
    let honest_node = ProverNode::new(
        1,
        ProverData {
            store: Box::new(EagerStore::from_entries(&entries, cfg.arity)),
            exec: Some(make_exec()),
            tamper_claim_proof: false,
        },
        Behavior::Honest,
        cfg,
    );
    let adversary_node = ProverNode::new(
        2,
        ProverData {
            store: Box::new(EagerStore::from_entries(&adversary_entries, cfg.arity)),
            exec: Some(make_exec()),
            tamper_claim_proof: false,
        },
        Behavior::Honest,
        cfg,
    );

    let verifier = Verifier::new(cfg.clone(), Mode::Real { chain, genesis: commit(&st0) });
    Fixture {
        cfg: cfg.clone(),
        net: SimNet::new(),
        verifier,
        provers: vec![honest_node, adversary_node],
        honest: vec![1],
        generated: None,
    }
}
