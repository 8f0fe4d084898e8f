use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// What happens at an event instant. Station and AP fields are indices into
/// the engine's runtime tables.
#[derive(Clone, Debug, PartialEq)]
pub enum EventKind {
    /// The station's source emits its next packet(s) into its AP.
    PacketArrivalAtAp {
        station: usize,
    },
    /// The AP finishes transmitting the packet in service.
    PacketDeparture {
        ap: usize,
    },
    StationJoin {
        station: usize,
    },
    StationLeave {
        station: usize,
    },
    DemandChange {
        station: usize,
        up_kbps: f64,
        down_kbps: f64,
    },
    LbaRun,
    /// Re-association of a station to the AP chosen by the controller.
    MoveCommand {
        station: usize,
        to: usize,
    },
    /// End of the play-out window of one video frame.
    FrameDeadline {
        station: usize,
        frame: u64,
    },
}

#[derive(Clone, Debug)]
pub struct Event {
    pub time_s: f64,
    pub seq: u64,
    pub kind: EventKind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time_s
            .total_cmp(&self.time_s)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

/// Time-ordered queue, FIFO among events scheduled for the same instant.
#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time_s: f64, kind: EventKind) {
        debug_assert!(time_s >= 0.0, "event scheduled at negative time");
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time_s, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.time_s)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
