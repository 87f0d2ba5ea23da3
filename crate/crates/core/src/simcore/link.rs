//! Directed link state: a drop-tail FIFO egress queue with byte capacity in
//! front of a serializing transmitter.
//!
//! The queue is represented by departure bookkeeping rather than service
//! events: `busy_until` is the virtual drain clock and `entries` holds the
//! (departure, size) pairs still occupying buffer space. Entries whose
//! departure has passed are popped lazily.

use std::collections::VecDeque;

use crate::time::Micros;

use super::transmission_delay_us;

#[derive(Debug, Clone)]
pub struct LinkState {
    pub bandwidth_bps: u64,
    pub delay_us: Micros,
    pub capacity_bytes: u64,
    busy_until: Micros,
    entries: VecDeque<(Micros, u32)>,
    queued_bytes: u64,
    /// Bytes accepted this observation slice; reset by the sampler.
    pub slice_bytes: u64,
}

/// Outcome of offering a packet to the egress queue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Enqueue {
    /// Accepted; the packet reaches the far end at this time.
    Arrives(Micros),
    /// Queue full: drop-tail.
    Dropped,
}

impl LinkState {
    pub fn new(bandwidth_bps: u64, delay_us: Micros, capacity_bytes: u64) -> Self {
        LinkState {
            bandwidth_bps,
            delay_us,
            capacity_bytes,
            busy_until: 0,
            entries: VecDeque::new(),
            queued_bytes: 0,
            slice_bytes: 0,
        }
    }

    fn pop_departed(&mut self, now: Micros) {
        while let Some(&(depart, bytes)) = self.entries.front() {
            if depart <= now {
                self.queued_bytes -= bytes as u64;
                self.entries.pop_front();
            } else {
                break;
            }
        }
    }

    /// Offer a packet at `now`. On acceptance the transmitter is busy until
    /// the serialization finishes and the arrival lands one propagation
    /// delay later.
    pub fn enqueue(&mut self, size: u32, now: Micros) -> Enqueue {
        self.pop_departed(now);
        if self.queued_bytes + size as u64 > self.capacity_bytes {
            return Enqueue::Dropped;
        }
        let start = self.busy_until.max(now);
        let depart = start + transmission_delay_us(size, self.bandwidth_bps);
        self.busy_until = depart;
        self.entries.push_back((depart, size));
        self.queued_bytes += size as u64;
        self.slice_bytes += size as u64;
        debug_assert!(self.queued_bytes <= self.capacity_bytes);
        Enqueue::Arrives(depart + self.delay_us)
    }

    /// Packets still occupying the buffer (including the one in service).
    pub fn queue_len(&mut self, now: Micros) -> usize {
        self.pop_departed(now);
        self.entries.len()
    }

    pub fn queued_bytes(&mut self, now: Micros) -> u64 {
        self.pop_departed(now);
        self.queued_bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serializes_back_to_back() {
        let mut l = LinkState::new(100_000_000, 500, u64::MAX);
        // 1250 B at 100 Mbps = 100 us on the wire, 500 us propagation.
        assert_eq!(l.enqueue(1250, 0), Enqueue::Arrives(600));
        assert_eq!(l.enqueue(1250, 0), Enqueue::Arrives(700));
        assert_eq!(l.queue_len(0), 2);
        assert_eq!(l.queue_len(150), 1);
        assert_eq!(l.queue_len(200), 0);
    }

    #[test]
    fn drop_tail_at_capacity() {
        let mut l = LinkState::new(100_000_000, 0, 2500);
        assert_eq!(l.enqueue(1250, 0), Enqueue::Arrives(100));
        assert_eq!(l.enqueue(1250, 0), Enqueue::Arrives(200));
        assert_eq!(l.enqueue(1250, 0), Enqueue::Dropped);
        // After the head departs there is room again.
        assert!(matches!(l.enqueue(1250, 100), Enqueue::Arrives(_)));
    }

    #[test]
    fn idle_gap_resets_service_start() {
        let mut l = LinkState::new(100_000_000, 0, u64::MAX);
        assert_eq!(l.enqueue(1250, 0), Enqueue::Arrives(100));
        assert_eq!(l.enqueue(1250, 10_000), Enqueue::Arrives(10_100));
    }
}
