//! Cost-model pins, adjacency-oracle budgets over the prover set, ledger
//! axioms on generated fixtures, and timeout timing.

use lazylight::codec::{Digest, DIGEST_LEN};
use lazylight::execution::Transaction;
use lazylight::ledger::{build_blocks, generate_ledger, DirtyLedger, GeneratorConfig, Model};
use lazylight::merkle::InclusionProof;
use lazylight::oracle::{prove_adjacency, verify_adjacency, AdjacencyProof};
use lazylight::Encodable;
use lazylight_sim::message::{Message, Query, Response};
use lazylight_sim::net::{account_cost, exchange_seconds};
use lazylight_sim::scenario::{build_fixture, CorruptField, ProverSpec, Scenario, StrategySpec};
use lazylight_sim::{run_game, Event, GameResult, NetworkConfig, Reason};

fn network(seed: u64, arity: u32) -> NetworkConfig {
    NetworkConfig {
        delta_s: 0.013,
        bandwidth_bps: 290e6,
        arity,
        alpha: 2,
        liveness_u: 3,
        soundness_nu: 3,
        seed,
    }
}

#[test]
fn opening_exchange_cost_matches_the_model_within_overhead() {
    for m in [2u32, 16, 300] {
        let cfg = network(0, m);
        let query = Message::Query(Query::Child { index: m - 1 });
        let response = Message::Response(Response::Children {
            digests: vec![Digest::ZERO; m as usize],
        });
        let (q_bits, _) = account_cost(&query, &cfg);
        let (r_bits, _) = account_cost(&response, &cfg);
        let measured = exchange_seconds(&cfg, q_bits, r_bits);
        let ideal_bits = (m as u64) * (DIGEST_LEN as u64 * 8) + (m as f64).log2().ceil() as u64;
        let ideal = 4.0 * cfg.delta_s + ideal_bits as f64 / cfg.bandwidth_bps;
        let ratio = measured / ideal;
        assert!(
            (1.0..1.2).contains(&ratio),
            "m={m}: measured {measured} vs ideal {ideal} (ratio {ratio})"
        );
    }
}

#[test]
fn zero_payload_exchange_costs_four_hops() {
    let cfg = network(0, 2);
    assert!((exchange_seconds(&cfg, 0, 0) - 4.0 * cfg.delta_s).abs() < 1e-12);
}

/// One adjacency query/proof exchange stays within a fixed byte budget that
/// grows only with the logarithm of the block size.
#[test]
fn adjacency_exchange_fits_the_byte_budget() {
    for block_size in [4u64, 16, 64, 256] {
        let fx = generate_ledger(&GeneratorConfig {
            length: 4 * block_size,
            invalid_fraction: 0.1,
            conflict_fraction: 0.0,
            seed: block_size,
            model: Model::Account,
            accounts: 8,
            genesis_amount: 100,
            state_depth: 16,
            genesis: None,
        });
        let (chain, blocks) = build_blocks(&fx.ledger, block_size).unwrap();
        let positions: std::collections::HashMap<Vec<u8>, u64> =
            fx.ledger.txs.iter().enumerate().map(|(i, t)| (t.encode(), i as u64)).collect();
        let view = fx.ledger.len();
        // a boundary-crossing pair maximizes the proof
        let at = block_size - 1;
        let (prev, tx) = (&fx.ledger.txs[at as usize], &fx.ledger.txs[at as usize + 1]);
        let proof = prove_adjacency(&blocks, block_size, view, Some(prev), tx, |t| {
            positions.get(&t.encode()).copied()
        })
        .expect("adjacent pair");
        assert!(verify_adjacency(&chain, Some(prev), tx, &proof));

        let request = Message::AdjRequest { prev: Some(prev.clone()), tx: tx.clone() };
        let reply = Message::AdjReply(Some(proof));
        let exchange_bytes = request.wire_len() + reply.wire_len();
        let levels = 64 - (block_size - 1).leading_zeros() as u64; // ceil(log2)
        let budget = 300 + 2 * levels * (DIGEST_LEN as u64 + 16);
        assert!(
            exchange_bytes <= budget,
            "block_size={block_size}: {exchange_bytes} bytes over budget {budget}"
        );
    }
}

/// No forged proof shape accepts a non-adjacent pair: sweep every header and
/// leaf coordinate over a four-block chain with real inclusion proofs.
#[test]
fn no_forged_proof_accepts_a_non_adjacent_pair() {
    let txs: Vec<Transaction> = (0..16u64)
        .map(|i| Transaction::Transfer { from: i, to: i + 1, amount: 1, nonce: i })
        .collect();
    let ledger = DirtyLedger { txs: txs.clone() };
    let (chain, blocks) = build_blocks(&ledger, 4).unwrap();

    // the pair (txs[2], txs[7]) is never adjacent
    let (prev, tx) = (&txs[2], &txs[7]);
    let mut accepted = 0;
    for header in 0..4u64 {
        for header_next in 0..4u64 {
            for leaf in 0..4u64 {
                for leaf_next in 0..4u64 {
                    let forged = AdjacencyProof::Pair {
                        header,
                        header_next,
                        leaf,
                        leaf_next,
                        proof: blocks[header as usize].prove_tx(leaf).unwrap(),
                        proof_next: blocks[header_next as usize].prove_tx(leaf_next).unwrap(),
                    };
                    if verify_adjacency(&chain, Some(prev), tx, &forged) {
                        accepted += 1;
                    }
                }
            }
        }
    }
    assert_eq!(accepted, 0, "some forged coordinate pair was accepted");

    // degenerate shapes fail closed as well
    let empty = AdjacencyProof::First {
        proof: InclusionProof { arity: 2, leaf_index: 0, path: vec![] },
    };
    assert!(!verify_adjacency(&chain, None, tx, &empty));
}

/// Generated honest views obey the ledger axioms: every view is a prefix of
/// the canonical order (safety), trails it by at most the liveness window
/// (liveness), and the generator emits at most one entry per round shift
/// (growth bounded by the rate parameter, trivially here).
#[test]
fn generated_views_satisfy_the_ledger_axioms() {
    let cfg = network(5, 2);
    let window = cfg.alpha * cfg.liveness_u;
    let sc = Scenario {
        name: "axioms".into(),
        network: cfg.clone(),
        execution: Default::default(),
        ledger: GeneratorConfig {
            length: 60,
            invalid_fraction: 0.2,
            conflict_fraction: 0.1,
            seed: 8,
            model: Model::Account,
            accounts: 8,
            genesis_amount: 300,
            state_depth: 16,
            genesis: None,
        },
        block_size: 8,
        provers: vec![
            ProverSpec { strategy: StrategySpec::Honest, view_lag: 0 },
            ProverSpec { strategy: StrategySpec::Honest, view_lag: 2 },
            ProverSpec { strategy: StrategySpec::Honest, view_lag: window },
        ],
    };
    let fx = build_fixture(&sc).unwrap();
    let canonical = &fx.generated.as_ref().unwrap().ledger;
    let views: Vec<u64> =
        fx.provers.iter().map(|p| p.data.exec.as_ref().unwrap().view_len).collect();
    let longest = *views.iter().max().unwrap();
    for (p, len) in views.iter().enumerate() {
        // safety: each view is a prefix of the canonical ledger
        let view = canonical.prefix(*len);
        assert_eq!(view.txs[..], canonical.txs[..*len as usize]);
        // liveness: no honest view trails the union by more than the window
        assert!(longest - len <= window, "prover {p} trails too far");
    }

    // a lag beyond the window is rejected at assembly
    let mut bad = sc.clone();
    bad.provers.push(ProverSpec { strategy: StrategySpec::Honest, view_lag: window + 1 });
    assert!(build_fixture(&bad).is_err());
}

/// A stalling responder is flagged exactly two rounds after the query it
/// swallowed was forwarded (delivery plus the one-round reply window).
#[test]
fn staller_timeout_round_is_exact() {
    let sc = Scenario {
        name: "staller-timing".into(),
        network: network(3, 2),
        execution: Default::default(),
        ledger: GeneratorConfig {
            length: 40,
            invalid_fraction: 0.1,
            conflict_fraction: 0.0,
            seed: 12,
            model: Model::Account,
            accounts: 8,
            genesis_amount: 100,
            state_depth: 16,
            genesis: None,
        },
        block_size: 8,
        provers: vec![
            ProverSpec { strategy: StrategySpec::Honest, view_lag: 0 },
            ProverSpec { strategy: StrategySpec::Staller { depth: 2 }, view_lag: 0 },
        ],
    };
    let mut fx = build_fixture(&sc).unwrap();
    let [honest, staller] = &mut fx.provers[..] else { unreachable!() };
    let (outcome, _) = run_game(&mut fx.verifier, &mut fx.net, honest, staller, None);
    assert_eq!(outcome.result, GameResult::ChallengerWins);
    assert_eq!(outcome.reason, Reason::Timeout);

    let events = fx.verifier.transcript.events();
    let forwarded: Vec<u64> = events
        .iter()
        .filter_map(|e| match e {
            Event::QueryForwarded { round, .. } => Some(*round),
            _ => None,
        })
        .collect();
    let flagged = events
        .iter()
        .find_map(|e| match e {
            Event::TimeoutFlagged { round, .. } => Some(*round),
            _ => None,
        })
        .expect("timeout recorded");
    // two answered queries, then silence on the third
    assert_eq!(forwarded.len(), 3);
    assert_eq!(flagged, forwarded[2] + 2, "flag lands one reply window after delivery");
}
