//! Periodic observation slices. Every `granularity` the engine freezes one
//! [`SliceSample`]: per-switch drop rates and table sizes, per-pair link
//! utilization, per-connection frame delivery gaps, and waiting packet
//! counts. Telemetry windows average over these slices.

use std::collections::{BTreeMap, VecDeque};

use crate::time::Micros;
use crate::topology::{NodeId, NodeKind, Topology};

/// Fixed element ordering shared by the engine, telemetry and file formats:
/// sorted connection pairs, sorted switch ids, sorted switch-pair links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationLayout {
    pub switches: Vec<NodeId>,
    pub switch_index: BTreeMap<NodeId, usize>,
    pub pairs: Vec<(NodeId, NodeId)>,
    pub connections: Vec<(NodeId, NodeId)>,
    pub connection_index: BTreeMap<(NodeId, NodeId), usize>,
}

impl ObservationLayout {
    pub fn from_topology(topo: &Topology) -> Self {
        let switches = topo.switch_ids();
        let switch_index = switches.iter().enumerate().map(|(i, s)| (*s, i)).collect();
        let pairs = topo.switch_pairs();
        let hosts: Vec<NodeId> = topo.nodes_of_kind(NodeKind::Host).map(|n| n.id).collect();
        let servers: Vec<NodeId> = topo.nodes_of_kind(NodeKind::Server).map(|n| n.id).collect();
        let mut connections = Vec::with_capacity(hosts.len() * servers.len());
        for h in &hosts {
            for s in &servers {
                connections.push((*h, *s));
            }
        }
        let connection_index =
            connections.iter().enumerate().map(|(i, c)| (*c, i)).collect();
        ObservationLayout { switches, switch_index, pairs, connections, connection_index }
    }
}

/// One frozen observation interval ending at `end_us`.
#[derive(Debug, Clone)]
pub struct SliceSample {
    pub end_us: Micros,
    /// Per switch: drop percentage within the slice (0 when no traffic).
    pub drop_pct: Vec<f64>,
    /// Per switch: installed rule count at the slice boundary.
    pub table_size: Vec<f64>,
    /// Per switch pair: max-direction utilization fraction, clamped to [0,1].
    pub util: Vec<f64>,
    /// Per connection: mean inter-frame delivery gap in ms (0 when no
    /// deliveries landed in the slice).
    pub gap_ms: Vec<f64>,
    /// Per switch: held-on-miss plus egress-queued packets at the boundary.
    pub waiting: Vec<f64>,
    /// Per switch: cumulative counters at the boundary, for windowed rates.
    pub cum_drops: Vec<u64>,
    pub cum_forwards: Vec<u64>,
}

/// Per-connection delivery gap accumulator for the current slice.
#[derive(Debug, Clone, Default)]
pub struct GapTracker {
    last_delivery: Vec<Option<Micros>>,
    sum_ms: Vec<f64>,
    count: Vec<u32>,
}

impl GapTracker {
    pub fn new(connections: usize) -> Self {
        GapTracker {
            last_delivery: vec![None; connections],
            sum_ms: vec![0.0; connections],
            count: vec![0; connections],
        }
    }

    pub fn record(&mut self, connection: usize, now: Micros) {
        if let Some(prev) = self.last_delivery[connection] {
            self.sum_ms[connection] += (now - prev) as f64 / 1e3;
            self.count[connection] += 1;
        }
        self.last_delivery[connection] = Some(now);
    }

    /// Drain the slice means and reset the per-slice accumulators (the
    /// last-delivery marks persist so gaps can span slices).
    pub fn drain_slice(&mut self) -> Vec<f64> {
        let out = self
            .sum_ms
            .iter()
            .zip(&self.count)
            .map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 })
            .collect();
        self.sum_ms.iter_mut().for_each(|s| *s = 0.0);
        self.count.iter_mut().for_each(|c| *c = 0);
        out
    }
}

/// Ring of recent slices plus a cursor for windowed drop-rate queries.
#[derive(Debug, Clone)]
pub struct SliceHistory {
    pub retention: usize,
    samples: VecDeque<SliceSample>,
}

impl SliceHistory {
    pub fn new(retention: usize) -> Self {
        SliceHistory { retention, samples: VecDeque::with_capacity(retention + 1) }
    }

    pub fn push(&mut self, sample: SliceSample) {
        self.samples.push_back(sample);
        while self.samples.len() > self.retention {
            self.samples.pop_front();
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &SliceSample> {
        self.samples.iter()
    }

    pub fn latest(&self) -> Option<&SliceSample> {
        self.samples.back()
    }

    /// Samples with end time in (from, to].
    pub fn window(&self, from: Micros, to: Micros) -> Vec<&SliceSample> {
        self.samples.iter().filter(|s| s.end_us > from && s.end_us <= to).collect()
    }

    /// Most recent sample at or before `at`.
    pub fn at_or_before(&self, at: Micros) -> Option<&SliceSample> {
        self.samples.iter().rev().find(|s| s.end_us <= at)
    }
}
