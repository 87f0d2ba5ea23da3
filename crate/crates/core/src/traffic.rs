//! Packet sources: ON-OFF video hosts with fair server allocation, dummy
//! sources that hold background load at the monitored bottleneck, and
//! attackers forging table-miss packets at controllable rates.
//!
//! Sources are pure event producers. The engine owns them and drives them
//! through its timer events; every source carries its own seeded RNG stream
//! so runs are reproducible regardless of interleaving.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::flowtable::FlowKey;
use crate::time::Micros;
use crate::topology::NodeId;

/// ON-OFF phase with the configured duration ranges.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    On,
    Off,
}

#[derive(Debug, Clone, Copy)]
pub struct OnOffParams {
    pub on_min_us: Micros,
    pub on_max_us: Micros,
    pub off_min_us: Micros,
    pub off_max_us: Micros,
    pub frame_interval_us: Micros,
    pub frame_bytes: u32,
}

impl Default for OnOffParams {
    fn default() -> Self {
        // ON 10-15 minutes, OFF 0-5 minutes, ~30 fps frames of 1250 bytes.
        OnOffParams {
            on_min_us: 600_000_000,
            on_max_us: 900_000_000,
            off_min_us: 0,
            off_max_us: 300_000_000,
            frame_interval_us: 33_000,
            frame_bytes: 1250,
        }
    }
}

/// A video host alternating between sending phases and idle phases. One
/// session (server binding and flow key) lasts exactly one ON phase.
#[derive(Debug, Clone)]
pub struct OnOffHost {
    pub node: NodeId,
    pub phase: Phase,
    /// Bumped on every transition; stale frame timers check it and die.
    pub phase_seq: u64,
    pub server: Option<NodeId>,
    pub session_count: u16,
    rng: ChaCha8Rng,
}

impl OnOffHost {
    pub fn new(node: NodeId, seed: u64) -> Self {
        OnOffHost {
            node,
            phase: Phase::Off,
            phase_seq: 0,
            server: None,
            session_count: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Alternate the phase and draw its duration uniformly from the
    /// configured range.
    pub fn next_transition(&mut self, params: &OnOffParams) -> (Phase, Micros) {
        let next = match self.phase {
            Phase::On => Phase::Off,
            Phase::Off => Phase::On,
        };
        let duration = match next {
            Phase::On => self.rng.gen_range(params.on_min_us..=params.on_max_us),
            Phase::Off => self.rng.gen_range(params.off_min_us..=params.off_max_us),
        };
        self.phase = next;
        self.phase_seq += 1;
        (next, duration)
    }

    /// Flow key for the current session; a fresh ON phase gets a fresh key,
    /// so returning hosts must re-install rules after their old ones idle out.
    pub fn session_key(&self, server: NodeId) -> FlowKey {
        FlowKey {
            src_addr: 0x0100_0000 | self.node.0 as u32,
            dst_addr: 0x0200_0000 | server.0 as u32,
            src_port: self.session_count,
            dst_port: 5004,
            proto: 17,
        }
    }
}

/// Active-session counts per server, for fair allocation.
#[derive(Debug, Clone, Default)]
pub struct ServerLoads {
    loads: BTreeMap<NodeId, u32>,
}

impl ServerLoads {
    pub fn new(servers: impl IntoIterator<Item = NodeId>) -> Self {
        ServerLoads { loads: servers.into_iter().map(|s| (s, 0)).collect() }
    }

    pub fn assign(&mut self) -> NodeId {
        let id = assign_server(&self.loads);
        *self.loads.get_mut(&id).unwrap() += 1;
        id
    }

    pub fn release(&mut self, server: NodeId) {
        let load = self.loads.get_mut(&server).expect("known server");
        *load = load.saturating_sub(1);
    }

    pub fn loads(&self) -> &BTreeMap<NodeId, u32> {
        &self.loads
    }
}

/// Pick a server with minimal active-session load, ties broken by lowest id.
pub fn assign_server(loads: &BTreeMap<NodeId, u32>) -> NodeId {
    assert!(!loads.is_empty(), "need at least one server");
    let mut best: Option<(NodeId, u32)> = None;
    for (&id, &load) in loads {
        match best {
            Some((_, l)) if load >= l => {}
            _ => best = Some((id, load)),
        }
    }
    best.unwrap().0
}

/// Hands out never-before-used flow keys; the global counter guarantees
/// uniqueness across attackers and epochs.
#[derive(Debug, Clone, Default)]
pub struct KeyForge {
    counter: u64,
}

impl KeyForge {
    pub fn next_key(&mut self, dst_addr: u32) -> FlowKey {
        let key = FlowKey::from_counter(self.counter, dst_addr);
        self.counter += 1;
        key
    }

    pub fn issued(&self) -> u64 {
        self.counter
    }
}

/// One forged packet to emit `offset_us` after the epoch start.
#[derive(Debug, Clone, Copy)]
pub struct ForgedPacket {
    pub offset_us: Micros,
    pub key: FlowKey,
    pub dst: NodeId,
}

/// Emit `floor(alpha * rate * epoch)` packets uniformly spaced over the
/// epoch, each with a fresh flow key, destinations cycling over `dsts`.
pub fn forge_packets(
    alpha: f64,
    rate_pps: u32,
    epoch_us: Micros,
    forge: &mut KeyForge,
    dsts: &[NodeId],
    dst_cursor: &mut usize,
) -> Vec<ForgedPacket> {
    assert!((0.0..=1.0).contains(&alpha), "alpha must be within [0, 1]");
    let epoch_secs = epoch_us as f64 / 1e6;
    let count = (alpha * rate_pps as f64 * epoch_secs).floor() as u64;
    if count == 0 {
        return Vec::new();
    }
    let spacing = epoch_us as f64 / count as f64;
    let mut out = Vec::with_capacity(count as usize);
    for i in 0..count {
        let dst = dsts[*dst_cursor % dsts.len()];
        *dst_cursor = (*dst_cursor + 1) % dsts.len();
        out.push(ForgedPacket {
            offset_us: (i as f64 * spacing) as Micros,
            key: forge.next_key(0x0300_0000 | dst.0 as u32),
            dst,
        });
    }
    out
}

/// Per-attacker rates as fractions of the maximum rate R.
#[derive(Debug, Clone)]
pub struct AttackState {
    pub alphas: Vec<f64>,
    pub max_rate_pps: u32,
    pub epoch_us: Micros,
}

impl AttackState {
    pub fn new(attacker_count: usize, max_rate_pps: u32, epoch_us: Micros) -> Self {
        assert!(attacker_count >= 1);
        AttackState { alphas: vec![0.0; attacker_count], max_rate_pps, epoch_us }
    }

    pub fn set_alphas(&mut self, alphas: &[f64]) {
        assert_eq!(alphas.len(), self.alphas.len());
        for (slot, a) in self.alphas.iter_mut().zip(alphas) {
            assert!((0.0..=1.0).contains(a), "alpha out of range: {a}");
            *slot = *a;
        }
    }
}

/// Proportional controller holding the monitored switch's drop rate near its
/// target. Per-step change is clamped to 20% of the current rate so a single
/// bad window cannot collapse the background load.
#[derive(Debug, Clone)]
pub struct DummyRegulator {
    pub target_pct: f64,
    pub allowance_pct: f64,
    pub current_rate_pps: f64,
    pub gain: f64,
    pub adjust_interval_us: Micros,
    pub enabled: bool,
    /// Highest rate observed with a clean (zero-drop) window; the freeze
    /// point for the post-warm-up background load.
    pub best_clean_rate_pps: f64,
}

impl DummyRegulator {
    pub fn new(initial_rate_pps: f64, target_pct: f64, allowance_pct: f64) -> Self {
        DummyRegulator {
            target_pct,
            allowance_pct,
            current_rate_pps: initial_rate_pps,
            gain: 0.1,
            adjust_interval_us: 1_000_000,
            enabled: true,
            best_clean_rate_pps: initial_rate_pps,
        }
    }

    /// Proportional adjustment; returns the new rate. Rates climb when the
    /// observed drop rate sits at or below the target, fall when it exceeds
    /// target + allowance, and hold inside the band.
    pub fn regulate(&mut self, observed_drop_pct: f64) -> f64 {
        if !self.enabled {
            return self.current_rate_pps;
        }
        if observed_drop_pct == 0.0 {
            self.best_clean_rate_pps = self.best_clean_rate_pps.max(self.current_rate_pps);
        }
        let upper = self.target_pct + self.allowance_pct;
        if observed_drop_pct > upper {
            let err = observed_drop_pct - upper;
            let step = (self.gain * err).min(0.2);
            self.current_rate_pps *= 1.0 - step;
        } else if observed_drop_pct <= self.target_pct {
            let step = self.gain.min(0.2);
            self.current_rate_pps *= 1.0 + step;
        }
        if self.current_rate_pps < 0.0 {
            self.current_rate_pps = 0.0;
        }
        self.current_rate_pps
    }

    /// Stop regulating and pin the rate slightly below the best clean rate,
    /// leaving the bottleneck loaded but not shedding.
    pub fn freeze(&mut self, backoff: f64) -> f64 {
        self.enabled = false;
        self.current_rate_pps = self.best_clean_rate_pps * backoff;
        self.current_rate_pps
    }
}

/// Exponential inter-arrival gap for a Poisson dummy source.
pub fn poisson_gap_us(rng: &mut ChaCha8Rng, rate_pps: f64) -> Micros {
    if rate_pps <= 0.0 {
        return 100_000; // idle re-check
    }
    let u: f64 = rng.gen_range(f64::EPSILON..1.0);
    let gap_secs = -u.ln() / rate_pps;
    (gap_secs * 1e6).max(1.0) as Micros
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transitions_alternate_within_ranges() {
        let params = OnOffParams::default();
        let mut host = OnOffHost::new(NodeId(0), 3);
        let (phase, dur) = host.next_transition(&params);
        assert_eq!(phase, Phase::On);
        assert!((600_000_000..=900_000_000).contains(&dur));
        let (phase, dur) = host.next_transition(&params);
        assert_eq!(phase, Phase::Off);
        assert!(dur <= 300_000_000);
    }

    #[test]
    fn transitions_deterministic_per_seed() {
        let params = OnOffParams::default();
        let mut a = OnOffHost::new(NodeId(0), 42);
        let mut b = OnOffHost::new(NodeId(0), 42);
        for _ in 0..50 {
            assert_eq!(a.next_transition(&params), b.next_transition(&params));
        }
    }

    #[test]
    fn on_fraction_approaches_duty_cycle() {
        // Expected ON fraction = 12.5 / (12.5 + 2.5).
        let params = OnOffParams::default();
        let mut host = OnOffHost::new(NodeId(0), 7);
        let mut on_total = 0u64;
        let mut total = 0u64;
        for _ in 0..300 {
            let (phase, dur) = host.next_transition(&params);
            if phase == Phase::On {
                on_total += dur;
            }
            total += dur;
        }
        let frac = on_total as f64 / total as f64;
        let expected = 12.5 / 15.0;
        assert!((frac - expected).abs() < 0.05 * expected, "duty cycle {frac}");
    }

    #[test]
    fn assign_server_prefers_min_load_lowest_id() {
        let loads: BTreeMap<NodeId, u32> =
            [(NodeId(1), 0), (NodeId(2), 0), (NodeId(3), 0), (NodeId(4), 0)].into();
        assert_eq!(assign_server(&loads), NodeId(1));
        let loads: BTreeMap<NodeId, u32> =
            [(NodeId(1), 2), (NodeId(2), 1), (NodeId(3), 2), (NodeId(4), 3)].into();
        assert_eq!(assign_server(&loads), NodeId(2));
    }

    #[test]
    fn sequential_assignment_balances() {
        let mut loads = ServerLoads::new([NodeId(1), NodeId(2), NodeId(3), NodeId(4)]);
        for _ in 0..8 {
            loads.assign();
        }
        let values: Vec<u32> = loads.loads().values().copied().collect();
        assert_eq!(values, vec![2, 2, 2, 2]);
    }

    #[test]
    fn fair_allocation_bound() {
        let mut loads = ServerLoads::new((1..=4).map(NodeId));
        for _ in 0..41 {
            loads.assign();
        }
        let max = loads.loads().values().max().unwrap();
        let min = loads.loads().values().min().unwrap();
        assert!(max - min <= 1);
    }

    #[test]
    fn forge_counts_and_uniqueness() {
        let mut forge = KeyForge::default();
        let mut cursor = 0usize;
        let dsts = [NodeId(10), NodeId(11)];

        let none = forge_packets(0.0, 100, 10_000_000, &mut forge, &dsts, &mut cursor);
        assert!(none.is_empty());

        let full = forge_packets(1.0, 100, 10_000_000, &mut forge, &dsts, &mut cursor);
        assert_eq!(full.len(), 1000);

        let partial = forge_packets(0.37, 100, 10_000_000, &mut forge, &dsts, &mut cursor);
        assert_eq!(partial.len(), 370);

        let mut keys: Vec<FlowKey> =
            full.iter().chain(partial.iter()).map(|p| p.key).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 1370, "forged keys must never repeat");

        // Uniform spacing over the epoch.
        assert_eq!(full[0].offset_us, 0);
        assert_eq!(full[1].offset_us - full[0].offset_us, 10_000);
        assert!(full.last().unwrap().offset_us < 10_000_000);
    }

    #[test]
    fn regulator_band_behavior() {
        let mut reg = DummyRegulator::new(1000.0, 0.0, 3.0);
        let above = reg.regulate(5.0);
        assert!(above < 1000.0, "above band decreases");

        let mut reg = DummyRegulator::new(1000.0, 0.0, 3.0);
        let at_zero = reg.regulate(0.0);
        assert!(at_zero > 1000.0, "at target increases");

        let mut reg = DummyRegulator::new(1000.0, 0.0, 3.0);
        let inside = reg.regulate(2.0);
        assert_eq!(inside, 1000.0, "inside band holds");
    }

    #[test]
    fn regulator_clamps_and_freezes() {
        let mut reg = DummyRegulator::new(100.0, 0.0, 3.0);
        for _ in 0..50 {
            reg.regulate(90.0);
        }
        assert!(reg.current_rate_pps >= 0.0);
        // A clean window at a higher rate becomes the freeze anchor.
        reg.current_rate_pps = 500.0;
        reg.regulate(0.0);
        let frozen = reg.freeze(0.9);
        assert!((frozen - 450.0).abs() < 1e-9);
        assert!(!reg.enabled);
        assert_eq!(reg.regulate(50.0), 450.0, "frozen regulator holds rate");
    }

    #[test]
    fn poisson_gaps_match_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 20_000;
        let total: u64 = (0..n).map(|_| poisson_gap_us(&mut rng, 250.0)).sum();
        let mean_us = total as f64 / n as f64;
        assert!((mean_us - 4000.0).abs() < 150.0, "mean gap {mean_us}");
    }
}
