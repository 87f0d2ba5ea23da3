//! Run summaries and their columnar text serialization. One row per latency
//! record, one row per switch; a header carries provenance so emitted files
//! are self-describing.

use std::fmt::Write as _;

use crate::flowtable::FlowTableStats;
use crate::time::to_ms;
use crate::topology::NodeId;

use super::PacketClass;

/// End-to-end delivery record for one packet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatencyRecord {
    pub uid: u64,
    pub frame_id: Option<u64>,
    pub class: PacketClass,
    pub src: NodeId,
    pub dst: NodeId,
    pub created_at: u64,
    pub delivered_at: u64,
    pub miss_count: u32,
}

impl LatencyRecord {
    pub fn latency_ms(&self) -> f64 {
        to_ms(self.delivered_at - self.created_at)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTotals {
    pub created: u64,
    pub delivered: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LatencyStats {
    pub count: u64,
    pub mean_ms: f64,
    pub p50_ms: f64,
    pub p99_ms: f64,
    pub max_ms: f64,
    pub mean_misses: f64,
}

impl LatencyStats {
    pub fn from_latencies(mut latencies: Vec<f64>, total_misses: u64) -> Self {
        if latencies.is_empty() {
            return LatencyStats::default();
        }
        latencies.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let count = latencies.len() as u64;
        let mean = latencies.iter().sum::<f64>() / count as f64;
        let pick = |q: f64| latencies[((count as f64 - 1.0) * q).round() as usize];
        LatencyStats {
            count,
            mean_ms: mean,
            p50_ms: pick(0.5),
            p99_ms: pick(0.99),
            max_ms: *latencies.last().unwrap(),
            mean_misses: total_misses as f64 / count as f64,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SwitchReport {
    pub switch: NodeId,
    pub name: String,
    pub drops: u64,
    pub forwards: u64,
    pub table_size: usize,
    pub table: FlowTableStats,
}

/// Aggregated output of one engine run.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub seed: u64,
    pub topology_fingerprint: String,
    pub clock_us: u64,
    pub video: ClassTotals,
    pub dummy: ClassTotals,
    pub attack: ClassTotals,
    pub host_drops: u64,
    pub in_flight: u64,
    pub video_latency: LatencyStats,
    pub switches: Vec<SwitchReport>,
    pub records: Vec<LatencyRecord>,
}

impl SimReport {
    /// Deterministic columnar text form. Records are ordered by
    /// (created_at, uid) so equal-seed runs serialize byte-identically.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# dqos-lab simulation report");
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# topology: {}", self.topology_fingerprint);
        let _ = writeln!(out, "# clock_ms: {}", to_ms(self.clock_us));
        let _ = writeln!(out, "# section: totals");
        let _ = writeln!(out, "class created delivered dropped");
        for (label, t) in
            [("video", self.video), ("dummy", self.dummy), ("attack", self.attack)]
        {
            let _ = writeln!(out, "{label} {} {} {}", t.created, t.delivered, t.dropped);
        }
        let _ = writeln!(out, "host_drops {}", self.host_drops);
        let _ = writeln!(out, "in_flight {}", self.in_flight);

        let _ = writeln!(out, "# section: video_latency");
        let _ = writeln!(out, "count mean_ms p50_ms p99_ms max_ms mean_misses");
        let v = &self.video_latency;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            v.count, v.mean_ms, v.p50_ms, v.p99_ms, v.max_ms, v.mean_misses
        );

        let _ = writeln!(out, "# section: switch_stats");
        let _ = writeln!(
            out,
            "switch drops forwards table_size hits misses installs evictions_idle \
             evictions_hard rejects_full refreshes"
        );
        for s in &self.switches {
            let t = s.table;
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {} {} {} {}",
                s.name,
                s.drops,
                s.forwards,
                s.table_size,
                t.hits,
                t.misses,
                t.installs,
                t.evictions_idle,
                t.evictions_hard,
                t.rejects_full,
                t.refreshes
            );
        }

        let _ = writeln!(out, "# section: latency_records");
        let _ = writeln!(out, "uid frame_id class src dst created_ms delivered_ms misses");
        let mut rows: Vec<&LatencyRecord> = self.records.iter().collect();
        rows.sort_by_key(|r| (r.created_at, r.uid));
        for r in rows {
            let frame = r.frame_id.map(|f| f.to_string()).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{} {} {} {} {} {} {} {}",
                r.uid,
                frame,
                r.class.label(),
                r.src.0,
                r.dst.0,
                to_ms(r.created_at),
                to_ms(r.delivered_at),
                r.miss_count
            );
        }
        out
    }
}
