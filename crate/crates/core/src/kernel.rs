//! Deterministic discrete-event kernel: virtual clock, ordered event queue,
//! and seeded per-stream random numbers.
//!
//! Everything else in the simulator is driven off this module. Two runs with
//! the same seed must produce identical event sequences, so the queue orders
//! events by `(fire_at, insertion sequence)` and the RNG is a fixed integer
//! recurrence with no platform-dependent behavior.

use std::collections::{BinaryHeap, HashMap};

/// Simulation time in integer microseconds since the start of the run.
///
/// All 802.11 timing constants (slot, SIFS, DIFS) are exact integers at this
/// resolution, so the clock never drifts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_us(us: u64) -> Self {
        SimTime(us)
    }

    pub const fn as_us(self) -> u64 {
        self.0
    }

    pub const fn add_us(self, us: u64) -> Self {
        SimTime(self.0 + us)
    }

    /// Microseconds elapsed since `earlier`, saturating at zero.
    pub fn since(self, earlier: SimTime) -> u64 {
        self.0.saturating_sub(earlier.0)
    }
}

impl std::fmt::Display for SimTime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}us", self.0)
    }
}

/// Handle returned by [`EventQueue::schedule`], usable to cancel the event
/// before it fires (ACK timeouts, frozen backoff expiries, NAV timers).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventHandle(u64);

#[derive(PartialEq, Eq)]
struct QueueKey {
    fire_at: SimTime,
    seq: u64,
}

// BinaryHeap is a max-heap; invert the ordering so the earliest
// (fire_at, seq) pair pops first.
impl Ord for QueueKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (other.fire_at, other.seq).cmp(&(self.fire_at, self.seq))
    }
}

impl PartialOrd for QueueKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Totally ordered event queue with cancellation.
///
/// Events fire in `(fire_at, sequence)` order where the sequence is a global
/// insertion counter; two events scheduled for the same instant fire in the
/// order they were scheduled. Cancelled events leave a tombstone in the heap
/// that is skipped on pop.
pub struct EventQueue<T> {
    heap: BinaryHeap<QueueKey>,
    live: HashMap<u64, T>,
    next_seq: u64,
    clock: SimTime,
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            live: HashMap::new(),
            next_seq: 0,
            clock: SimTime::ZERO,
        }
    }

    /// Current virtual clock. Monotonically non-decreasing.
    pub fn now(&self) -> SimTime {
        self.clock
    }

    /// Number of pending (non-cancelled) events.
    pub fn pending(&self) -> usize {
        self.live.len()
    }

    /// Enqueue `payload` to fire at `fire_at`.
    ///
    /// Scheduling in the past is a programming error and aborts the run.
    pub fn schedule(&mut self, fire_at: SimTime, payload: T) -> EventHandle {
        assert!(
            fire_at >= self.clock,
            "event scheduled in the past: fire_at={} clock={}",
            fire_at,
            self.clock
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(QueueKey { fire_at, seq });
        self.live.insert(seq, payload);
        EventHandle(seq)
    }

    /// Cancel a pending event. Returns the payload if the event had not yet
    /// fired or been cancelled.
    pub fn cancel(&mut self, handle: EventHandle) -> Option<T> {
        self.live.remove(&handle.0)
    }

    /// Pop the next event with `fire_at <= t_end`, advancing the clock to its
    /// fire time. Returns `None` when no such event remains (the clock is not
    /// advanced to `t_end`; callers do that when the run completes).
    pub fn pop_due(&mut self, t_end: SimTime) -> Option<(SimTime, T)> {
        while let Some(key) = self.heap.peek() {
            if key.fire_at > t_end {
                return None;
            }
            let key = self.heap.pop().expect("peeked");
            if let Some(payload) = self.live.remove(&key.seq) {
                debug_assert!(key.fire_at >= self.clock, "event queue went backwards");
                self.clock = key.fire_at;
                return Some((key.fire_at, payload));
            }
            // Tombstone of a cancelled event; skip.
        }
        None
    }

    /// Run every event with `fire_at <= t_end` through `handler`, then leave
    /// the clock at `t_end`. The handler may schedule and cancel events,
    /// including more events due within the same call.
    pub fn run_until(&mut self, t_end: SimTime, mut handler: impl FnMut(&mut Self, SimTime, T)) -> SimTime {
        loop {
            match self.pop_due(t_end) {
                Some((t, payload)) => handler(self, t, payload),
                None => break,
            }
        }
        self.clock = t_end;
        self.clock
    }
}

const SPLITMIX_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic per-purpose random stream.
///
/// One stream is derived per `(seed, stream_id)` pair (one per station per
/// purpose), so adding draws to one station never perturbs another. The
/// generator is a splitmix64 counter sequence: identical on every platform,
/// no external dependencies, not cryptographic.
#[derive(Debug, Clone)]
pub struct RngStream {
    state: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let state = mix64(seed ^ mix64(stream_id.wrapping_mul(SPLITMIX_GAMMA) ^ SPLITMIX_GAMMA));
        RngStream { state }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(SPLITMIX_GAMMA);
        mix64(self.state)
    }

    /// Uniform integer in `[lo, hi]` (inclusive). `lo > hi` is a fatal error.
    pub fn uniform_int(&mut self, lo: u64, hi: u64) -> u64 {
        assert!(lo <= hi, "uniform_int: lo={lo} > hi={hi}");
        let span = (hi - lo).wrapping_add(1);
        if span == 0 {
            // Full u64 range.
            return self.next_u64();
        }
        // Fixed-point multiply; bias is span/2^64, far below anything the
        // simulator can resolve.
        let x = self.next_u64();
        lo + (((x as u128) * (span as u128)) >> 64) as u64
    }
}
