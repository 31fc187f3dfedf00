use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::proto::VehicleId;
use crate::radio::Micros;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    BeaconTimer(VehicleId),
    NtTimer(VehicleId),
    /// The vehicle's head-of-line frame may take the medium.
    TxStart(VehicleId),
    /// Frame with this id leaves the air.
    TxEnd(u64),
    MobilityStep,
    /// Closes the given 1-based second.
    MetricsTick(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Event {
    pub time_us: Micros,
    /// Insertion counter; breaks ties between equal times.
    pub seq: u64,
    pub kind: EventKind,
}

/// Min-queue on `(time_us, seq)`.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time_us: Micros, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Event { time_us, seq, kind }));
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop().map(|Reverse(e)| e)
    }

    pub fn peek_time(&self) -> Option<Micros> {
        self.heap.peek().map(|Reverse(e)| e.time_us)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
