//! Deterministic synchronous round network.
//!
//! A message sent during round `r` is delivered at the beginning of round
//! `r + 1`. Delivery order within a round is fixed by (sender id, sequence
//! number). A party that owes a reply must send it in the round it receives
//! the query, so the reply lands two rounds after the query was sent; the
//! verifier flags the sender as timed out if that round passes silently
//! (tracked through [`Expectations`]).
//!
//! Cost model: simulated time advances by the configured latency per round,
//! plus transmitted bits over the configured bandwidth. Payload bits are
//! counted once, at origination; the verifier relaying a message does not
//! recount them.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::message::Message;

pub type PartyId = u32;

/// The verifier mediates every game message.
pub const VERIFIER: PartyId = 0;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("latency must be positive")]
    BadLatency,
    #[error("bandwidth must be positive")]
    BadBandwidth,
    #[error("arity must be at least 2")]
    BadArity,
    #[error("ledger growth rate must be at least 1")]
    BadAlpha,
}

/// Network and protocol parameters shared by every party.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// One-hop latency in seconds.
    pub delta_s: f64,
    /// Channel bandwidth in bits per second.
    pub bandwidth_bps: f64,
    /// Tree degree used by dirty trees and openings.
    pub arity: u32,
    /// Ledger growth bound (entries per round).
    pub alpha: u64,
    /// Liveness delay in rounds.
    pub liveness_u: u64,
    /// Adjacency-oracle soundness delay in rounds.
    pub soundness_nu: u64,
    pub seed: u64,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.delta_s > 0.0) {
            return Err(ConfigError::BadLatency);
        }
        if !(self.bandwidth_bps > 0.0) {
            return Err(ConfigError::BadBandwidth);
        }
        if self.arity < 2 {
            return Err(ConfigError::BadArity);
        }
        if self.alpha < 1 {
            return Err(ConfigError::BadAlpha);
        }
        Ok(())
    }

    /// Entry budget of the suffix monologue.
    pub fn monologue_cap(&self) -> u64 {
        self.alpha * (self.liveness_u + self.soundness_nu)
    }
}

#[derive(Clone, Debug)]
pub struct Envelope {
    pub from: PartyId,
    pub to: PartyId,
    pub seq: u64,
    pub sent_round: u64,
    /// Verifier relay of a payload that was already accounted for.
    pub forwarded: bool,
    pub msg: Message,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct NetStats {
    /// Messages handed to the network, relays included.
    pub messages: u64,
    /// Envelope deliveries.
    pub hops: u64,
    /// Originated payload bytes (relays excluded).
    pub payload_bytes: u64,
}

/// Round-based message switch with cost accounting.
pub struct SimNet {
    round: u64,
    next_seq: u64,
    in_flight: Vec<Envelope>,
    pub stats: NetStats,
}

impl SimNet {
    pub fn new() -> SimNet {
        SimNet { round: 0, next_seq: 0, in_flight: Vec::new(), stats: NetStats::default() }
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn send(&mut self, from: PartyId, to: PartyId, msg: Message, forwarded: bool) {
        self.stats.messages += 1;
        if !forwarded {
            self.stats.payload_bytes += msg.wire_len();
        }
        self.in_flight.push(Envelope {
            from,
            to,
            seq: self.next_seq,
            sent_round: self.round,
            forwarded,
            msg,
        });
        self.next_seq += 1;
    }

    /// Advances one round and returns everything sent last round, ordered by
    /// (sender id, sequence).
    pub fn advance_round(&mut self) -> Vec<Envelope> {
        self.round += 1;
        let mut out = std::mem::take(&mut self.in_flight);
        out.sort_by_key(|e| (e.from, e.seq));
        self.stats.hops += out.len() as u64;
        out
    }

    pub fn idle(&self) -> bool {
        self.in_flight.is_empty()
    }

    /// Simulated seconds elapsed so far under the cost model.
    pub fn sim_seconds(&self, cfg: &NetworkConfig) -> f64 {
        self.round as f64 * cfg.delta_s
            + (self.stats.payload_bytes as f64 * 8.0) / cfg.bandwidth_bps
    }
}

impl Default for SimNet {
    fn default() -> Self {
        Self::new()
    }
}

/// Cost of a single message: its wire size in bits and its transmission
/// time over the configured channel.
pub fn account_cost(msg: &Message, cfg: &NetworkConfig) -> (u64, f64) {
    let bits = msg.wire_len() * 8;
    (bits, bits as f64 / cfg.bandwidth_bps)
}

/// Duration of one mediated exchange (four hops plus both payloads).
pub fn exchange_seconds(cfg: &NetworkConfig, query_bits: u64, response_bits: u64) -> f64 {
    4.0 * cfg.delta_s + (query_bits + response_bits) as f64 / cfg.bandwidth_bps
}

/// Pending reply deadlines. A query sent at round `r` is delivered at
/// `r + 1`; the reply must be sent that same round, landing at `r + 2`.
#[derive(Debug, Default)]
pub struct Expectations {
    pending: Vec<(PartyId, u64)>,
}

impl Expectations {
    pub fn expect_reply(&mut self, from: PartyId, sent_round: u64) {
        self.pending.push((from, sent_round + 2));
    }

    pub fn fulfill(&mut self, from: PartyId) {
        if let Some(pos) = self.pending.iter().position(|(p, _)| *p == from) {
            self.pending.remove(pos);
        }
    }

    /// First party whose reply deadline has passed, in creation order.
    /// Call after the round's deliveries have been processed.
    pub fn overdue(&self, round: u64) -> Option<PartyId> {
        self.pending.iter().find(|(_, due)| *due <= round).map(|(p, _)| *p)
    }

    pub fn clear(&mut self) {
        self.pending.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> NetworkConfig {
        NetworkConfig {
            delta_s: 0.01,
            bandwidth_bps: 1_000_000.0,
            arity: 2,
            alpha: 1,
            liveness_u: 2,
            soundness_nu: 2,
            seed: 0,
        }
    }

    #[test]
    fn messages_arrive_exactly_next_round() {
        let mut net = SimNet::new();
        net.send(1, 0, Message::GetSize, false);
        assert_eq!(net.round(), 0);
        let d = net.advance_round();
        assert_eq!(net.round(), 1);
        assert_eq!(d.len(), 1);
        assert!(net.advance_round().is_empty());
    }

    #[test]
    fn same_round_messages_order_by_sender_then_seq() {
        let mut net = SimNet::new();
        net.send(2, 0, Message::GetSize, false);
        net.send(1, 0, Message::GetSize, false);
        net.send(1, 0, Message::GetClaim, false);
        let d = net.advance_round();
        let order: Vec<(PartyId, u64)> = d.iter().map(|e| (e.from, e.seq)).collect();
        assert_eq!(order, vec![(1, 1), (1, 2), (2, 0)]);
    }

    #[test]
    fn forwarded_payloads_counted_once() {
        let mut net = SimNet::new();
        let msg = Message::SizeIs(9);
        let len = msg.wire_len();
        net.send(1, 0, msg.clone(), false);
        net.send(0, 2, msg, true);
        assert_eq!(net.stats.payload_bytes, len);
        assert_eq!(net.stats.messages, 2);
    }

    #[test]
    fn zero_payload_round_costs_latency_only() {
        let mut net = SimNet::new();
        net.advance_round();
        net.advance_round();
        net.advance_round();
        net.advance_round();
        let cfg = cfg();
        assert!((net.sim_seconds(&cfg) - 4.0 * cfg.delta_s).abs() < 1e-12);
    }

    #[test]
    fn expectations_flag_missed_replies() {
        let mut ex = Expectations::default();
        ex.expect_reply(3, 5); // due at round 7
        assert_eq!(ex.overdue(6), None);
        assert_eq!(ex.overdue(7), Some(3));
        ex.fulfill(3);
        assert_eq!(ex.overdue(9), None);
    }

    #[test]
    fn monologue_cap_is_alpha_times_delays() {
        let mut c = cfg();
        c.alpha = 3;
        c.liveness_u = 4;
        c.soundness_nu = 2;
        assert_eq!(c.monologue_cap(), 18);
    }
}
