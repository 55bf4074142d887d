//! Scenario files and fixture assembly: a network configuration, a ledger
//! generator section, and a prover list with strategies, resolved into
//! provers, a verifier, and a fresh network.

use std::collections::HashMap;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use lazylight::codec::Digest;
use lazylight::execution::{apply_mut, commit, SparseState, StateCommitment, Transaction};
use lazylight::ledger::{
    augment, build_blocks, generate_ledger, AugmentedEntry, Block, GeneratedLedger,
    GeneratorConfig,
};
use lazylight::Encodable;

use crate::game::{Mode, Verifier};
use crate::net::{NetworkConfig, PartyId, SimNet};
use crate::prover::{Behavior, ExecContext, ProverData, ProverNode};
use crate::store::{EagerStore, EntryStore, StubField, StubStore};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("network config: {0}")]
    Net(#[from] crate::net::ConfigError),
    #[error("scenario needs at least one prover")]
    NoProvers,
    #[error("honest view lag {lag} exceeds the liveness window {window}")]
    LagTooLarge { lag: u64, window: u64 },
    #[error("strategy {0} is not available under a stubbed execution")]
    NotInStub(&'static str),
    #[error("corrupt index {index} out of range for {len} entries")]
    BadCorruptIndex { index: u64, len: u64 },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Which field of an augmented entry a corruption replaces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorruptField {
    Tx,
    State,
}

/// The adversary catalog. Every strategy is deterministic given the
/// scenario seed and documents the adjudication reason it is expected to
/// lose by (see the strategy tests).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategySpec {
    Honest,
    /// Replace one augmented entry's transaction or state commitment.
    /// Loses by the adjacency check (tx) or the transition check (state).
    CorruptLeaf { index: Option<u64>, field: CorruptField },
    /// Claim a history `k` entries shorter than the honest view.
    /// With `k` at or beyond the monologue cap, loses at the cap.
    TruncatedLedger { k: u64 },
    /// Claim a longer history whose extension turns fake at offset
    /// `bad_at`. Loses the monologue at the fabricated transition.
    FabricatedSuffix { bad_at: u64, extend: Option<u64> },
    /// Answer `depth` queries, then go silent. Loses by timeout.
    Staller { depth: u32 },
    /// Answer the `depth`-th opening with random digests. Loses by the
    /// children hash check.
    GarbageChildren { depth: u32 },
    /// Ship a claim whose last-entry proof fails. Rejected before any game.
    WrongClaimProof,
    /// Answer size queries inconsistently with the claim. Rejected at claim
    /// validation.
    EquivocatingSizes { offset: u64 },
    /// As challenger, open with a malformed query. The responder wins.
    InvalidQueryChallenger,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ProverSpec {
    pub strategy: StrategySpec,
    /// Honest network lag: the prover's view trails the longest honest view
    /// by this many entries.
    #[serde(default)]
    pub view_lag: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionKind {
    #[default]
    Real,
    Stub,
}

/// A scenario file: network, ledger generator, execution mode, provers.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub network: NetworkConfig,
    #[serde(default)]
    pub execution: ExecutionKind,
    pub ledger: GeneratorConfig,
    #[serde(default = "default_block_size")]
    pub block_size: u64,
    pub provers: Vec<ProverSpec>,
}

fn default_block_size() -> u64 {
    16
}

impl Scenario {
    pub fn from_json(json: &str) -> Result<Scenario, ScenarioError> {
        Ok(serde_json::from_str(json)?)
    }
}

/// A fully assembled run: network, verifier, provers.
pub struct Fixture {
    pub cfg: NetworkConfig,
    pub net: SimNet,
    pub verifier: Verifier,
    pub provers: Vec<ProverNode>,
    pub honest: Vec<PartyId>,
    pub generated: Option<GeneratedLedger>,
}

impl Fixture {
    pub fn prover_index(&self, id: PartyId) -> usize {
        self.provers.iter().position(|p| p.id == id).expect("known prover")
    }
}

/// Assembles a scenario into provers, verifier, and network.
pub fn build_fixture(scenario: &Scenario) -> Result<Fixture, ScenarioError> {
    scenario.network.validate()?;
    if scenario.provers.is_empty() {
        return Err(ScenarioError::NoProvers);
    }
    match scenario.execution {
        ExecutionKind::Real => build_real(scenario),
        ExecutionKind::Stub => build_stub(scenario),
    }
}

fn build_real(scenario: &Scenario) -> Result<Fixture, ScenarioError> {
    let cfg = &scenario.network;
    let generated = generate_ledger(&scenario.ledger);
    let (chain, blocks) = build_blocks(&generated.ledger, scenario.block_size)
        .expect("positive block size");
    let blocks: Arc<Vec<Block>> = Arc::new(blocks);
    let positions: Arc<HashMap<Vec<u8>, u64>> = Arc::new(
        generated
            .ledger
            .txs
            .iter()
            .enumerate()
            .map(|(i, tx)| (tx.encode(), i as u64))
            .collect(),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5ce4a210);

    // honest views must sit inside the liveness window
    let window = cfg.alpha * cfg.liveness_u;
    for p in &scenario.provers {
        if p.strategy == StrategySpec::Honest && p.view_lag > window {
            return Err(ScenarioError::LagTooLarge { lag: p.view_lag, window });
        }
    }

    let mut provers = Vec::with_capacity(scenario.provers.len());
    let mut honest = Vec::new();
    for (i, spec) in scenario.provers.iter().enumerate() {
        let id = (i + 1) as PartyId;
        let view_len = generated.ledger.len().saturating_sub(spec.view_lag);
        let node = build_real_prover(
            id,
            spec,
            view_len,
            &generated,
            cfg,
            &blocks,
            scenario.block_size,
            &positions,
            &mut rng,
        )?;
        if spec.strategy == StrategySpec::Honest {
            honest.push(id);
        }
        provers.push(node);
    }

    let verifier = Verifier::new(
        cfg.clone(),
        Mode::Real { chain, genesis: commit(&generated.st0) },
    );
    Ok(Fixture {
        cfg: cfg.clone(),
        net: SimNet::new(),
        verifier,
        provers,
        honest,
        generated: Some(generated),
    })
}

#[allow(clippy::too_many_arguments)]
fn build_real_prover(
    id: PartyId,
    spec: &ProverSpec,
    view_len: u64,
    generated: &GeneratedLedger,
    cfg: &NetworkConfig,
    blocks: &Arc<Vec<Block>>,
    block_size: u64,
    positions: &Arc<HashMap<Vec<u8>, u64>>,
    rng: &mut ChaCha8Rng,
) -> Result<ProverNode, ScenarioError> {
    let view = generated.ledger.prefix(view_len);
    let honest_entries = augment(&view, &generated.st0);
    let mut txs: Vec<Transaction> = view.txs.clone();
    let mut entries = honest_entries;
    let mut behavior = Behavior::Honest;
    let mut tamper_claim = false;

    match &spec.strategy {
        StrategySpec::Honest => {}
        StrategySpec::CorruptLeaf { index, field } => {
            let len = entries.len() as u64;
            let index = match index {
                Some(i) => *i,
                None => rng.gen_range(1..len),
            };
            if index >= len {
                return Err(ScenarioError::BadCorruptIndex { index, len });
            }
            corrupt_entry(&mut entries, &mut txs, index, *field, rng);
        }
        StrategySpec::TruncatedLedger { k } => {
            let keep = (entries.len() as u64).saturating_sub(*k).max(1);
            entries.truncate(keep as usize);
            txs.truncate(keep.saturating_sub(1) as usize);
        }
        StrategySpec::FabricatedSuffix { bad_at, extend } => {
            let extend = extend.unwrap_or(bad_at + 2).max(bad_at + 1);
            fabricate_suffix(
                &mut entries,
                &mut txs,
                &generated.st0,
                &generated.ledger.txs,
                *bad_at,
                extend,
                rng,
            );
        }
        StrategySpec::Staller { depth } => {
            // the claim has to differ for a game to happen: corrupt inside
            // the largest tree so the descent is as deep as possible, and
            // clamp the stall onto the descent path
            let (index, height) = deep_corruption_point(entries.len() as u64, cfg.arity, rng);
            corrupt_entry(&mut entries, &mut txs, index, CorruptField::State, rng);
            behavior = Behavior::Staller { depth: (*depth).min(height) };
        }
        StrategySpec::GarbageChildren { depth } => {
            let (index, height) = deep_corruption_point(entries.len() as u64, cfg.arity, rng);
            corrupt_entry(&mut entries, &mut txs, index, CorruptField::State, rng);
            behavior = Behavior::GarbageChildren { depth: (*depth).min(height.saturating_sub(1)) };
        }
        StrategySpec::WrongClaimProof => {
            tamper_claim = true;
        }
        StrategySpec::EquivocatingSizes { offset } => {
            behavior = Behavior::EquivocatingSizes { offset: (*offset).max(1) };
        }
        StrategySpec::InvalidQueryChallenger => {
            // a differing claim gets the game started; the first move sinks it
            let (index, _) = deep_corruption_point(entries.len() as u64, cfg.arity, rng);
            corrupt_entry(&mut entries, &mut txs, index, CorruptField::State, rng);
            behavior = Behavior::InvalidQueryChallenger;
        }
    }

    let store = EagerStore::from_entries(&entries, cfg.arity);
    let exec = ExecContext {
        st0: generated.st0.clone(),
        txs,
        blocks: blocks.clone(),
        block_size,
        view_len: entries.len() as u64 - 1,
        positions: positions.clone(),
    };
    let data = ProverData { store: Box::new(store), exec: Some(exec), tamper_claim_proof: tamper_claim };
    Ok(ProverNode::new(id, data, behavior, cfg))
}

/// A corruption index inside the largest tree of an `len`-entry history,
/// plus that tree's height (the descent length a game against it will see).
fn deep_corruption_point(len: u64, arity: u32, rng: &mut ChaCha8Rng) -> (u64, u32) {
    let seg0 = lazylight::merkle::segment_lengths(len).expect("non-empty history")[0];
    let index = if seg0 <= 2 { 1 } else { rng.gen_range(1..seg0) };
    (index, lazylight::merkle::tree_height(seg0, arity))
}

/// Replaces one entry's transaction (with a fresh transaction that exists
/// nowhere on the ledger) or state commitment (with noise).
fn corrupt_entry(
    entries: &mut [AugmentedEntry],
    txs: &mut [Transaction],
    index: u64,
    field: CorruptField,
    rng: &mut ChaCha8Rng,
) {
    let i = index as usize;
    match field {
        CorruptField::State => {
            let mut noise = [0u8; 32];
            rng.fill(&mut noise);
            entries[i].state = StateCommitment(Digest(noise));
        }
        CorruptField::Tx => {
            let fake = Transaction::Transfer {
                from: 1,
                to: 2,
                amount: 1,
                nonce: u64::MAX - rng.gen_range(0..1u64 << 32),
            };
            entries[i].tx = Some(fake.clone());
            if i >= 1 {
                txs[i - 1] = fake;
            }
        }
    }
}

/// Extends an honest view: genuine continuation entries up to `bad_at`,
/// fabricated ones after.
fn fabricate_suffix(
    entries: &mut Vec<AugmentedEntry>,
    txs: &mut Vec<Transaction>,
    st0: &SparseState,
    canonical: &[Transaction],
    bad_at: u64,
    extend: u64,
    rng: &mut ChaCha8Rng,
) {
    let mut st = st0.clone();
    for tx in txs.iter() {
        apply_mut(&mut st, tx);
    }
    for e in 0..extend {
        let pos = txs.len();
        let genuine = e < bad_at && pos < canonical.len();
        let tx = if genuine {
            canonical[pos].clone()
        } else {
            Transaction::Transfer {
                from: 3,
                to: 4,
                amount: 2,
                nonce: u64::MAX / 2 + rng.gen_range(0..1u64 << 32),
            }
        };
        apply_mut(&mut st, &tx);
        let state = if genuine {
            commit(&st)
        } else {
            let mut noise = [0u8; 32];
            rng.fill(&mut noise);
            StateCommitment(Digest(noise))
        };
        txs.push(tx.clone());
        entries.push(AugmentedEntry { tx: Some(tx), state });
    }
}

/// Worst-case tournament shape for game-count bound checks: `n - 1`
/// adversaries share one corrupted history at strictly decreasing lengths,
/// pairwise prefix-consistent so every buildup game ends nested, and one
/// short honest prover drains the whole survivor set game by game. Plays
/// `2n - 3` games under the `2n - 1` bound. The honest prover gets the
/// highest id, so it enters last.
pub fn build_max_games_fixture(n: usize, seed: u64) -> Fixture {
    assert!(n >= 2);
    let cfg = NetworkConfig {
        delta_s: 0.001,
        bandwidth_bps: 1_000_000.0,
        arity: 2,
        alpha: 2,
        liveness_u: 3,
        soundness_nu: 3,
        seed,
    };
    let cap = cfg.monologue_cap();
    assert!(cap as usize > n - 1, "claim lengths must fit inside the cap window");

    let generated = generate_ledger(&GeneratorConfig {
        length: 100,
        invalid_fraction: 0.15,
        conflict_fraction: 0.05,
        seed,
        model: lazylight::ledger::Model::Account,
        accounts: 8,
        genesis_amount: 500,
        state_depth: 16,
        genesis: None,
    });
    let full = augment(&generated.ledger, &generated.st0);
    let (chain, blocks) = build_blocks(&generated.ledger, 8).expect("positive block size");
    let blocks = Arc::new(blocks);
    let positions: Arc<HashMap<Vec<u8>, u64>> = Arc::new(
        generated.ledger.txs.iter().enumerate().map(|(i, t)| (t.encode(), i as u64)).collect(),
    );

    // shared corruption deep inside the first tree, below every claim length
    let corrupt_at = 23usize;
    let mut shared = full.clone();
    shared[corrupt_at].state = StateCommitment(Digest([0xE7; 32]));

    let exec = |len: u64| ExecContext {
        st0: generated.st0.clone(),
        txs: generated.ledger.txs[..(len - 1) as usize].to_vec(),
        blocks: blocks.clone(),
        block_size: 8,
        view_len: len - 1,
        positions: positions.clone(),
    };
    let mut provers = Vec::with_capacity(n);
    for i in 0..n - 1 {
        let len = (full.len() - i) as u64;
        provers.push(ProverNode::new(
            (i + 1) as PartyId,
            ProverData {
                store: Box::new(EagerStore::from_entries(&shared[..len as usize], cfg.arity)),
                exec: Some(exec(len)),
                tamper_claim_proof: false,
            },
            Behavior::Honest,
            &cfg,
        ));
    }
    let honest_len = (full.len() - (n - 1)) as u64;
    provers.push(ProverNode::new(
        n as PartyId,
        ProverData {
            store: Box::new(EagerStore::from_entries(&full[..honest_len as usize], cfg.arity)),
            exec: Some(exec(honest_len)),
            tamper_claim_proof: false,
        },
        Behavior::Honest,
        &cfg,
    ));

    let verifier = Verifier::new(
        cfg.clone(),
        Mode::Real { chain, genesis: commit(&generated.st0) },
    );
    Fixture {
        cfg,
        net: SimNet::new(),
        verifier,
        provers,
        honest: vec![n as PartyId],
        generated: Some(generated),
    }
}

fn build_stub(scenario: &Scenario) -> Result<Fixture, ScenarioError> {
    let cfg = &scenario.network;
    let real_len = scenario.ledger.length + 1; // ledger plus the genesis entry
    let honest_store = Arc::new(StubStore::honest(scenario.ledger.seed, real_len, cfg.arity));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x57ab);

    let mut provers = Vec::with_capacity(scenario.provers.len());
    let mut honest = Vec::new();
    for (i, spec) in scenario.provers.iter().enumerate() {
        let id = (i + 1) as PartyId;
        let store: Box<dyn EntryStore + Send + Sync> = match &spec.strategy {
            StrategySpec::Honest => {
                honest.push(id);
                Box::new(StubStore::honest(scenario.ledger.seed, real_len, cfg.arity))
            }
            StrategySpec::CorruptLeaf { index, field } => {
                let index = match index {
                    Some(i) => *i,
                    None => rng.gen_range(1..real_len),
                };
                if index >= real_len {
                    return Err(ScenarioError::BadCorruptIndex { index, len: real_len });
                }
                let field = match field {
                    CorruptField::Tx => StubField::Tx,
                    CorruptField::State => StubField::State,
                };
                Box::new(StubStore::with_corruption(&honest_store, index, field))
            }
            other => {
                let name: &'static str = match other {
                    StrategySpec::TruncatedLedger { .. } => "truncated_ledger",
                    StrategySpec::FabricatedSuffix { .. } => "fabricated_suffix",
                    StrategySpec::Staller { .. } => "staller",
                    StrategySpec::GarbageChildren { .. } => "garbage_children",
                    StrategySpec::WrongClaimProof => "wrong_claim_proof",
                    StrategySpec::EquivocatingSizes { .. } => "equivocating_sizes",
                    StrategySpec::InvalidQueryChallenger => "invalid_query_challenger",
                    _ => unreachable!(),
                };
                return Err(ScenarioError::NotInStub(name));
            }
        };
        let data = ProverData { store, exec: None, tamper_claim_proof: false };
        provers.push(ProverNode::new(id, data, Behavior::Honest, cfg));
    }

    let verifier = Verifier::new(cfg.clone(), Mode::Stub { reference: honest_store });
    Ok(Fixture {
        cfg: cfg.clone(),
        net: SimNet::new(),
        verifier,
        provers,
        honest,
        generated: None,
    })
}
