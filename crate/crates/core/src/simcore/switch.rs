//! Per-switch mutable state: the flow table, drop/forward counters, and the
//! buffer of packets held while a controller round trip is outstanding.

use crate::flowtable::FlowTable;
use crate::topology::NodeId;

#[derive(Debug, Clone)]
pub struct SwitchState {
    pub id: NodeId,
    pub table: FlowTable,
    /// Packets parked awaiting a controller reply. The miss buffer is
    /// unbounded: miss cost is round-trip delay, not loss.
    pub held: u64,
    pub drop_count: u64,
    pub forward_count: u64,
    /// This-slice counters, reset by the sampler.
    pub slice_drops: u64,
    pub slice_forwards: u64,
}

impl SwitchState {
    pub fn new(id: NodeId, table: FlowTable) -> Self {
        SwitchState {
            id,
            table,
            held: 0,
            drop_count: 0,
            forward_count: 0,
            slice_drops: 0,
            slice_forwards: 0,
        }
    }

    pub fn record_drop(&mut self) {
        self.drop_count += 1;
        self.slice_drops += 1;
    }

    pub fn record_forward(&mut self) {
        self.forward_count += 1;
        self.slice_forwards += 1;
    }
}
