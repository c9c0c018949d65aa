use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::Packet;
use crate::protocols::Timer;
use crate::NodeId;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// `addressed` is false for a unicast overheard in promiscuous mode.
    Arrival {
        receiver: NodeId,
        packet: Packet,
        addressed: bool,
    },
    Timer {
        node: NodeId,
        timer: Timer,
    },
    Traffic {
        flow: usize,
    },
    Mobility,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimEvent {
    pub time: f64,
    pub sequence: u64,
    pub kind: EventKind,
}

impl Eq for SimEvent {}

impl Ord for SimEvent {
    // Reversed so the max-heap pops the earliest (time, sequence).
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.sequence.cmp(&self.sequence))
    }
}

impl PartialOrd for SimEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pending events in `(time, sequence)` order. Sequence numbers are unique
/// and increase with every push.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<SimEvent>,
    next_sequence: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: f64, kind: EventKind) -> u64 {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.heap.push(SimEvent { time, sequence, kind });
        sequence
    }

    pub fn pop(&mut self) -> Option<SimEvent> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pending events in no particular order.
    pub fn iter(&self) -> impl Iterator<Item = &SimEvent> {
        self.heap.iter()
    }
}
