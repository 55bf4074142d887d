//! Deterministic simulation of the interactive light-client protocol: a
//! synchronous round network, verifier-mediated bisection and challenge
//! games with full adjudication, an adversary strategy catalog, and the
//! multi-prover tournament.
//!
//! Everything is seeded: the same scenario and seed reproduce byte-identical
//! transcripts and metrics.

pub mod attack;
pub mod game;
pub mod message;
pub mod net;
pub mod prover;
pub mod scenario;
pub mod store;
pub mod tournament;
pub mod transcript;

pub use game::{run_bisection, run_game, GameRecord, GameResult, Mode, Outcome, Reason, Verifier};
pub use message::{Claim, Message, Query, Response, SuffixReveal};
pub use net::{NetworkConfig, PartyId, SimNet, VERIFIER};
pub use prover::{Behavior, ExecContext, ProverData, ProverNode};
pub use scenario::{build_fixture, CorruptField, Fixture, ProverSpec, Scenario, StrategySpec};
pub use store::{EagerStore, EntryStore, StubField, StubStore};
pub use tournament::{final_state_query, run_tournament, TournamentOutcome};
pub use transcript::{Event, Transcript};
