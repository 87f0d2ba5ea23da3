//! OpenFlow-style flow table: a bounded exact-match rule store with idle and
//! hard timeout eviction and table-miss signaling.
//!
//! Eviction is lazy but consistent: `lookup` and `install` apply the
//! `evict_expired` semantics before doing anything else, so expired rules are
//! never observable. The expiry boundary is inclusive: a rule whose age
//! reaches the timeout is gone.

use std::collections::BTreeMap;

use crate::time::Micros;
use crate::topology::NodeId;

/// Exact-match key over the forgeable header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowKey {
    pub src_addr: u32,
    pub dst_addr: u32,
    pub src_port: u16,
    pub dst_port: u16,
    pub proto: u8,
}

impl FlowKey {
    /// Distinct keys from a counter; used by traffic sources that need a
    /// never-before-seen flow per packet.
    pub fn from_counter(counter: u64, dst_addr: u32) -> Self {
        FlowKey {
            src_addr: (counter >> 16) as u32,
            dst_addr,
            src_port: (counter & 0xffff) as u16,
            dst_port: 9000,
            proto: 17,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowRule {
    pub key: FlowKey,
    pub action_next_hop: NodeId,
    pub installed_at: Micros,
    pub last_hit_at: Micros,
}

/// Monotone counters exported to telemetry.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowTableStats {
    pub hits: u64,
    pub misses: u64,
    pub installs: u64,
    pub evictions_idle: u64,
    pub evictions_hard: u64,
    pub rejects_full: u64,
    /// Re-installs of an already-present key (timestamps refreshed in place).
    pub refreshes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Lookup {
    Hit(NodeId),
    Miss,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Install {
    Installed,
    /// Table full of unexpired rules; the packet is still forwarded via the
    /// controller round trip, it just never gets a rule.
    RejectedFull,
}

#[derive(Debug, Clone)]
pub struct FlowTable {
    capacity: usize,
    rules: BTreeMap<FlowKey, FlowRule>,
    /// None means no timeout (infinite).
    idle_timeout: Option<Micros>,
    hard_timeout: Option<Micros>,
    stats: FlowTableStats,
}

impl FlowTable {
    pub fn new(capacity: usize, idle_timeout: Option<Micros>, hard_timeout: Option<Micros>) -> Self {
        FlowTable {
            capacity,
            rules: BTreeMap::new(),
            idle_timeout,
            hard_timeout,
            stats: FlowTableStats::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn stats(&self) -> FlowTableStats {
        self.stats
    }

    pub fn contains(&self, key: &FlowKey) -> bool {
        self.rules.contains_key(key)
    }

    /// Exact-match lookup. Hits refresh the idle clock.
    pub fn lookup(&mut self, key: &FlowKey, now: Micros) -> Lookup {
        self.evict_expired(now);
        match self.rules.get_mut(key) {
            Some(rule) => {
                rule.last_hit_at = now;
                self.stats.hits += 1;
                Lookup::Hit(rule.action_next_hop)
            }
            None => {
                self.stats.misses += 1;
                Lookup::Miss
            }
        }
    }

    /// Insert a rule keyed on `key`, evicting expired rules first. A full
    /// table is a modeled outcome, not a fault.
    pub fn install(&mut self, key: FlowKey, next_hop: NodeId, now: Micros) -> Install {
        self.evict_expired(now);
        if let Some(rule) = self.rules.get_mut(&key) {
            rule.installed_at = now;
            rule.last_hit_at = now;
            rule.action_next_hop = next_hop;
            self.stats.refreshes += 1;
            return Install::Installed;
        }
        if self.rules.len() >= self.capacity {
            self.stats.rejects_full += 1;
            return Install::RejectedFull;
        }
        self.rules.insert(
            key,
            FlowRule { key, action_next_hop: next_hop, installed_at: now, last_hit_at: now },
        );
        self.stats.installs += 1;
        Install::Installed
    }

    /// Remove every rule whose hard or idle age has reached its timeout.
    /// Returns the eviction count. Hard expiry takes precedence in the
    /// per-cause counters when both apply.
    pub fn evict_expired(&mut self, now: Micros) -> usize {
        let hard = self.hard_timeout;
        let idle = self.idle_timeout;
        let mut evicted = 0usize;
        self.rules.retain(|_, rule| {
            if let Some(h) = hard {
                if now.saturating_sub(rule.installed_at) >= h {
                    evicted += 1;
                    self.stats.evictions_hard += 1;
                    return false;
                }
            }
            if let Some(i) = idle {
                if now.saturating_sub(rule.last_hit_at) >= i {
                    evicted += 1;
                    self.stats.evictions_idle += 1;
                    return false;
                }
            }
            true
        });
        evicted
    }

    /// Test hook: install bypassing stats, used to pre-seed tables for
    /// forced-miss scenarios.
    pub fn seed_rule(&mut self, key: FlowKey, next_hop: NodeId, now: Micros) {
        self.rules.insert(
            key,
            FlowRule { key, action_next_hop: next_hop, installed_at: now, last_hit_at: now },
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::from_ms;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn key(n: u64) -> FlowKey {
        FlowKey::from_counter(n, 1)
    }

    const HOP: NodeId = NodeId(7);

    fn table_ms(capacity: usize, idle_ms: Option<u64>, hard_ms: Option<u64>) -> FlowTable {
        FlowTable::new(capacity, idle_ms.map(from_ms), hard_ms.map(from_ms))
    }

    #[test]
    fn empty_table_misses() {
        let mut t = table_ms(8, Some(5000), None);
        assert_eq!(t.lookup(&key(1), 0), Lookup::Miss);
        assert_eq!(t.stats().misses, 1);
    }

    #[test]
    fn hit_within_idle_window() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        assert_eq!(t.lookup(&key(1), from_ms(4000)), Lookup::Hit(HOP));
    }

    #[test]
    fn miss_after_idle_expiry() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        assert_eq!(t.lookup(&key(1), from_ms(5001)), Lookup::Miss);
        assert_eq!(t.stats().evictions_idle, 1);
    }

    #[test]
    fn expiry_boundary_is_inclusive() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        assert_eq!(t.evict_expired(from_ms(5000)), 1);
    }

    #[test]
    fn infinite_hard_timeout_never_fires() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        // Keep hitting so the idle clock refreshes.
        let mut now = 0;
        for _ in 0..10 {
            now += from_ms(4999);
            assert_eq!(t.lookup(&key(1), now), Lookup::Hit(HOP));
        }
        assert_eq!(t.evict_expired(1_000_000_000_000), 1); // finally idles out
        assert_eq!(t.stats().evictions_hard, 0);
    }

    #[test]
    fn reject_when_full_of_unexpired() {
        let mut t = table_ms(1, Some(5000), None);
        assert_eq!(t.install(key(1), HOP, 0), Install::Installed);
        assert_eq!(t.install(key(2), HOP, from_ms(10)), Install::RejectedFull);
        assert_eq!(t.stats().rejects_full, 1);
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn eviction_pass_runs_before_install() {
        let mut t = table_ms(1, Some(5000), None);
        t.install(key(1), HOP, 0);
        // key(1) idle-expired by now, so the slot frees up first.
        assert_eq!(t.install(key(2), HOP, from_ms(5000)), Install::Installed);
        assert_eq!(t.len(), 1);
        assert!(t.contains(&key(2)));
    }

    #[test]
    fn bulk_idle_eviction() {
        let mut t = table_ms(200, Some(5000), None);
        for n in 0..100 {
            t.install(key(n), HOP, 0);
        }
        assert_eq!(t.evict_expired(from_ms(6000)), 100);
        assert!(t.is_empty());
    }

    #[test]
    fn hard_timeout_fires_from_install_time() {
        let mut t = table_ms(8, None, Some(1000));
        t.install(key(1), HOP, 0);
        assert_eq!(t.lookup(&key(1), from_ms(999)), Lookup::Hit(HOP));
        assert_eq!(t.lookup(&key(1), from_ms(1000)), Lookup::Miss);
        assert_eq!(t.stats().evictions_hard, 1);
    }

    #[test]
    fn reinstall_refreshes_timestamps() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        t.install(key(1), HOP, from_ms(4000));
        // Refresh moved the idle clock: alive at 8999.
        assert_eq!(t.lookup(&key(1), from_ms(8999)), Lookup::Hit(HOP));
        assert_eq!(t.stats().installs, 1);
        assert_eq!(t.stats().refreshes, 1);
    }

    #[test]
    fn hit_refresh_keeps_rule_alive_indefinitely() {
        let mut t = table_ms(8, Some(5000), None);
        t.install(key(1), HOP, 0);
        let mut now = 0;
        for _ in 0..1000 {
            now += from_ms(4999);
            assert_eq!(t.lookup(&key(1), now), Lookup::Hit(HOP));
        }
    }

    #[test]
    fn random_ops_respect_capacity_and_conservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let capacity = rng.gen_range(1..=8);
            let idle = if rng.gen_bool(0.8) { Some(rng.gen_range(1..=50) * 1000) } else { None };
            let hard = if rng.gen_bool(0.3) { Some(rng.gen_range(1..=80) * 1000) } else { None };
            let mut t = FlowTable::new(capacity, idle, hard);
            let mut now = 0u64;
            for _ in 0..100 {
                now += rng.gen_range(0..20_000);
                let k = key(rng.gen_range(0..12));
                match rng.gen_range(0..3) {
                    0 => {
                        t.lookup(&k, now);
                    }
                    1 => {
                        t.install(k, HOP, now);
                    }
                    _ => {
                        t.evict_expired(now);
                    }
                }
                assert!(t.len() <= capacity, "capacity exceeded");
                let s = t.stats();
                assert_eq!(
                    s.installs,
                    t.len() as u64 + s.evictions_idle + s.evictions_hard,
                    "counter conservation"
                );
            }
        }
    }
}
