//! Deterministic discrete-event engine: moves packets across links and
//! switches, charges table-miss round trips, models drop-tail queuing, and
//! accumulates per-packet end-to-end latency.
//!
//! Time is integer microseconds throughout; reports convert to milliseconds.
//! The event loop is single-threaded and owns all mutable simulation state.

mod engine;
mod link;
mod report;
mod slices;
mod switch;

pub use engine::{Engine, SimSetup, TrafficSetup};
pub use link::LinkState;
pub use report::{ClassTotals, LatencyRecord, LatencyStats, SimReport};
pub use slices::{ObservationLayout, SliceSample};
pub use switch::SwitchState;

use std::sync::Arc;

use crate::flowtable::FlowKey;
use crate::time::Micros;
use crate::topology::NodeId;

/// Traffic class a packet belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PacketClass {
    Video,
    Dummy,
    Attack,
}

impl PacketClass {
    pub fn label(&self) -> &'static str {
        match self {
            PacketClass::Video => "video",
            PacketClass::Dummy => "dummy",
            PacketClass::Attack => "attack",
        }
    }
}

/// A unit of traffic in flight. Video frames travel as single packets.
#[derive(Debug, Clone)]
pub struct Packet {
    pub uid: u64,
    pub key: FlowKey,
    pub size: u32,
    pub created_at: Micros,
    pub src: NodeId,
    pub dst: NodeId,
    pub frame_id: Option<u64>,
    pub class: PacketClass,
    /// Full node path src -> switches -> dst.
    pub route: Arc<Vec<NodeId>>,
    /// Index into `route` of the node the packet is at (or next arrives at).
    pub hop: usize,
    pub miss_count: u32,
}

impl Packet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        uid: u64,
        key: FlowKey,
        size: u32,
        created_at: Micros,
        src: NodeId,
        dst: NodeId,
        frame_id: Option<u64>,
        class: PacketClass,
        route: Arc<Vec<NodeId>>,
    ) -> Self {
        assert!(size > 0, "packet size must be positive");
        debug_assert_eq!(route.first(), Some(&src));
        debug_assert_eq!(route.last(), Some(&dst));
        Packet { uid, key, size, created_at, src, dst, frame_id, class, route, hop: 0, miss_count: 0 }
    }
}

/// Store-and-forward serialization delay in microseconds, exact rational
/// floor of size*8/bandwidth.
pub fn transmission_delay_us(size_bytes: u32, bandwidth_bps: u64) -> Micros {
    assert!(bandwidth_bps > 0, "bandwidth must be positive");
    ((size_bytes as u128 * 8 * 1_000_000) / bandwidth_bps as u128) as Micros
}

/// Same delay reported in milliseconds.
pub fn transmission_delay_ms(size_bytes: u32, bandwidth_bps: u64) -> f64 {
    transmission_delay_us(size_bytes, bandwidth_bps) as f64 / 1e3
}

/// Drop percentage over a window: 100 * drops / (drops + forwards), zero
/// when the window saw no traffic.
pub fn drop_rate_pct(drops: u64, forwards: u64) -> f64 {
    let total = drops + forwards;
    if total == 0 {
        0.0
    } else {
        100.0 * drops as f64 / total as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transmission_delay_examples() {
        assert_eq!(transmission_delay_ms(1250, 100_000_000), 0.1);
        assert_eq!(transmission_delay_ms(1250, 50_000_000), 0.2);
    }

    #[test]
    #[should_panic(expected = "packet size must be positive")]
    fn zero_byte_packets_rejected() {
        let route = Arc::new(vec![NodeId(0), NodeId(1)]);
        let key = FlowKey::from_counter(0, 0);
        let _ = Packet::new(0, key, 0, 0, NodeId(0), NodeId(1), None, PacketClass::Video, route);
    }

    #[test]
    fn drop_rate_conventions() {
        assert_eq!(drop_rate_pct(0, 0), 0.0);
        assert_eq!(drop_rate_pct(3, 97), 3.0);
        assert_eq!(drop_rate_pct(5, 0), 100.0);
    }
}
