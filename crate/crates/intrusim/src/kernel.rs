//! Deterministic simulation kernel: a millisecond virtual clock, an ordered
//! event queue, and serial byte channels with baud-derived delivery latency.
//!
//! Everything here is single-threaded and value-based. Two queues fed the
//! same schedule fire the same events in the same order, every time.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use thiserror::Error;

/// Virtual time in whole milliseconds since simulation start.
///
/// The clock never runs backwards, and every observable action in a run
/// carries the `SimTime` at which it happened.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimTime(u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    pub const fn from_ms(ms: u64) -> Self {
        SimTime(ms)
    }

    pub const fn as_ms(self) -> u64 {
        self.0
    }

    pub const fn plus_ms(self, ms: u64) -> Self {
        SimTime(self.0 + ms)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ms", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ClockError {
    #[error("cannot schedule at {at}; the clock is already at {now}")]
    SchedulePast { at: SimTime, now: SimTime },
    #[error("cannot advance to {target}; the clock is already at {now}")]
    AdvancePast { target: SimTime, now: SimTime },
}

/// Handle for a queued event; pass it to [`EventQueue::cancel`] to drop the
/// event before it fires.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventHandle {
    fire_at: SimTime,
    seq: u64,
}

/// An event delivered by the queue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fired<T> {
    pub at: SimTime,
    pub seq: u64,
    pub payload: T,
}

/// Time-ordered event queue. Events due at the same instant fire in
/// insertion order, keyed by a monotonically increasing sequence counter.
#[derive(Debug)]
pub struct EventQueue<T> {
    now: SimTime,
    next_seq: u64,
    pending: BTreeMap<(SimTime, u64), T>,
}

impl<T> EventQueue<T> {
    pub fn new() -> Self {
        EventQueue {
            now: SimTime::ZERO,
            next_seq: 0,
            pending: BTreeMap::new(),
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn len(&self) -> usize {
        self.pending.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pending.is_empty()
    }

    /// Queues an event for `fire_at`. Scheduling behind the clock is an
    /// error; scheduling at the current instant is allowed.
    pub fn schedule(&mut self, fire_at: SimTime, payload: T) -> Result<EventHandle, ClockError> {
        if fire_at < self.now {
            return Err(ClockError::SchedulePast {
                at: fire_at,
                now: self.now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.pending.insert((fire_at, seq), payload);
        Ok(EventHandle { fire_at, seq })
    }

    /// Removes a queued event. Returns false if it already fired or was
    /// cancelled before.
    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.pending.remove(&(handle.fire_at, handle.seq)).is_some()
    }

    /// Pops the earliest event due at or before `target` and moves the clock
    /// to its fire time. Dispatch loops built on this pick up events that
    /// fired handlers schedule mid-drain, as long as they are still due.
    pub fn pop_due(&mut self, target: SimTime) -> Option<Fired<T>> {
        let key = *self.pending.keys().next()?;
        if key.0 > target {
            return None;
        }
        let payload = self.pending.remove(&key).expect("peeked key is present");
        self.now = key.0;
        Some(Fired {
            at: key.0,
            seq: key.1,
            payload,
        })
    }

    /// Fires every event due at or before `target`, in `(fire_at, seq)`
    /// order, and leaves the clock at exactly `target`.
    pub fn advance_to(&mut self, target: SimTime) -> Result<Vec<Fired<T>>, ClockError> {
        if target < self.now {
            return Err(ClockError::AdvancePast {
                target,
                now: self.now,
            });
        }
        let mut fired = Vec::new();
        while let Some(ev) = self.pop_due(target) {
            fired.push(ev);
        }
        self.now = target;
        Ok(fired)
    }
}

impl<T> Default for EventQueue<T> {
    fn default() -> Self {
        Self::new()
    }
}

/// Bits per serial frame: one start bit, eight data bits, one stop bit.
pub const FRAME_BITS: u64 = 10;

/// One-directional byte channel with per-byte latency derived from the baud
/// rate. Bytes are delivered strictly in send order; the channel is lossless
/// and noise-free.
#[derive(Debug, Clone)]
pub struct SerialChannel {
    per_byte_ms: u64,
    busy_until: SimTime,
    in_flight: VecDeque<(u8, SimTime)>,
}

impl SerialChannel {
    /// `per_byte_ms = floor(1000 * FRAME_BITS / baud)`, which is 1 ms at the
    /// default 9600 baud.
    pub fn new(baud: u32) -> Self {
        assert!(baud > 0, "baud rate must be positive");
        SerialChannel {
            per_byte_ms: 1000 * FRAME_BITS / u64::from(baud),
            busy_until: SimTime::ZERO,
            in_flight: VecDeque::new(),
        }
    }

    pub fn per_byte_ms(&self) -> u64 {
        self.per_byte_ms
    }

    /// Instant the line goes idle: delivery time of the last queued byte.
    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn pending(&self) -> usize {
        self.in_flight.len()
    }

    /// Queues `bytes` for transmission at `now`. Byte `k` of a burst that
    /// starts at `t` is deliverable at `t + (k + 1) * per_byte_ms`; a burst
    /// sent while the line is still busy starts when the previous one ends.
    pub fn send(&mut self, bytes: &[u8], now: SimTime) {
        if bytes.is_empty() {
            return;
        }
        let start = self.busy_until.max(now);
        for (k, &byte) in bytes.iter().enumerate() {
            let deliver_at = start.plus_ms((k as u64 + 1) * self.per_byte_ms);
            self.in_flight.push_back((byte, deliver_at));
        }
        self.busy_until = start.plus_ms(bytes.len() as u64 * self.per_byte_ms);
    }

    /// Removes and returns every byte delivered by `now`, in send order.
    /// Draining twice at the same instant yields nothing the second time.
    pub fn drain(&mut self, now: SimTime) -> Vec<u8> {
        let mut out = Vec::new();
        while let Some(&(byte, at)) = self.in_flight.front() {
            if at > now {
                break;
            }
            out.push(byte);
            self.in_flight.pop_front();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn schedule_queues_until_due() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ms(500), "a").unwrap();
        assert!(q.advance_to(SimTime::from_ms(499)).unwrap().is_empty());
        let fired = q.advance_to(SimTime::from_ms(500)).unwrap();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].at, SimTime::from_ms(500));
    }

    #[test]
    fn same_instant_fires_in_insertion_order() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ms(500), "first").unwrap();
        q.schedule(SimTime::from_ms(500), "second").unwrap();
        let fired = q.advance_to(SimTime::from_ms(500)).unwrap();
        let payloads: Vec<_> = fired.into_iter().map(|f| f.payload).collect();
        assert_eq!(payloads, vec!["first", "second"]);
    }

    #[test]
    fn scheduling_in_the_past_is_rejected() {
        let mut q: EventQueue<()> = EventQueue::new();
        q.advance_to(SimTime::from_ms(200)).unwrap();
        let err = q.schedule(SimTime::from_ms(100), ()).unwrap_err();
        assert_eq!(
            err,
            ClockError::SchedulePast {
                at: SimTime::from_ms(100),
                now: SimTime::from_ms(200),
            }
        );
    }

    #[test]
    fn advance_on_empty_queue_moves_clock() {
        let mut q: EventQueue<()> = EventQueue::new();
        assert!(q.advance_to(SimTime::from_ms(10_000)).unwrap().is_empty());
        assert_eq!(q.now(), SimTime::from_ms(10_000));
    }

    #[test]
    fn cancelled_event_never_fires() {
        let mut q = EventQueue::new();
        let keep = q.schedule(SimTime::from_ms(100), "keep").unwrap();
        let drop = q.schedule(SimTime::from_ms(100), "drop").unwrap();
        assert!(q.cancel(drop));
        let fired = q.advance_to(SimTime::from_ms(100)).unwrap();
        assert_eq!(fired.len(), 1);
        assert_eq!(fired[0].payload, "keep");
        // Both handles are now spent.
        assert!(!q.cancel(drop));
        assert!(!q.cancel(keep));
    }

    #[test]
    fn pop_due_picks_up_events_scheduled_mid_drain() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ms(500), "a").unwrap();
        let target = SimTime::from_ms(1000);
        let mut seen = Vec::new();
        while let Some(ev) = q.pop_due(target) {
            if ev.payload == "a" {
                q.schedule(SimTime::from_ms(700), "chained").unwrap();
            }
            seen.push((ev.at.as_ms(), ev.payload));
        }
        assert_eq!(seen, vec![(500, "a"), (700, "chained")]);
    }

    #[test]
    fn per_byte_latency_is_one_ms_at_9600() {
        assert_eq!(SerialChannel::new(9600).per_byte_ms(), 1);
        assert_eq!(SerialChannel::new(2400).per_byte_ms(), 4);
    }

    #[test]
    fn burst_delivery_times_follow_the_formula() {
        // 5 bytes at t=0 with 1 ms/byte: last byte lands at t=5.
        let mut ch = SerialChannel::new(9600);
        ch.send(b"hello", SimTime::ZERO);
        assert_eq!(ch.busy_until(), SimTime::from_ms(5));
        assert_eq!(ch.drain(SimTime::from_ms(4)), b"hell".to_vec());
        assert_eq!(ch.drain(SimTime::from_ms(5)), b"o".to_vec());
        assert_eq!(ch.drain(SimTime::from_ms(5)), Vec::<u8>::new());
    }

    #[test]
    fn empty_send_leaves_channel_unchanged() {
        let mut ch = SerialChannel::new(9600);
        ch.send(b"", SimTime::from_ms(3));
        assert_eq!(ch.pending(), 0);
        assert_eq!(ch.busy_until(), SimTime::ZERO);
    }

    #[test]
    fn back_to_back_bursts_queue_in_order() {
        let mut ch = SerialChannel::new(9600);
        ch.send(b"abc", SimTime::ZERO);
        ch.send(b"de", SimTime::from_ms(1));
        // Second burst starts when the first ends (t=3), not at t=1.
        assert_eq!(ch.busy_until(), SimTime::from_ms(5));
        assert_eq!(ch.drain(SimTime::from_ms(5)), b"abcde".to_vec());
    }

    #[test]
    fn drain_before_delivery_is_empty() {
        let mut ch = SerialChannel::new(9600);
        ch.send(b"x", SimTime::from_ms(10));
        assert!(ch.drain(SimTime::from_ms(10)).is_empty());
        assert_eq!(ch.drain(SimTime::from_ms(11)), b"x".to_vec());
    }

    proptest! {
        #[test]
        fn fired_sequence_is_sorted_by_time_then_seq(
            offsets in proptest::collection::vec(0u64..1000, 0..40),
            target in 0u64..2000,
        ) {
            let mut q = EventQueue::new();
            for (i, off) in offsets.iter().enumerate() {
                q.schedule(SimTime::from_ms(*off), i).unwrap();
            }
            let fired = q.advance_to(SimTime::from_ms(target)).unwrap();
            let keys: Vec<_> = fired.iter().map(|f| (f.at, f.seq)).collect();
            let mut sorted = keys.clone();
            sorted.sort();
            prop_assert_eq!(keys, sorted);
        }

        #[test]
        fn identical_schedules_fire_identically(
            offsets in proptest::collection::vec(0u64..1000, 0..40),
        ) {
            let run = || {
                let mut q = EventQueue::new();
                for (i, off) in offsets.iter().enumerate() {
                    q.schedule(SimTime::from_ms(*off), i).unwrap();
                }
                q.advance_to(SimTime::from_ms(1000)).unwrap()
            };
            prop_assert_eq!(run(), run());
        }

        #[test]
        fn send_then_full_drain_round_trips(
            bursts in proptest::collection::vec(
                proptest::collection::vec(any::<u8>(), 0..32),
                0..8,
            ),
            baud in 1200u32..115_200,
        ) {
            let mut ch = SerialChannel::new(baud);
            let mut now = SimTime::ZERO;
            let mut sent = Vec::new();
            for burst in &bursts {
                ch.send(burst, now);
                sent.extend_from_slice(burst);
                now = now.plus_ms(3);
            }
            let got = ch.drain(ch.busy_until());
            prop_assert_eq!(got, sent);
        }

        #[test]
        fn interleaved_drains_never_reorder_or_duplicate(
            burst in proptest::collection::vec(any::<u8>(), 1..64),
            cuts in proptest::collection::vec(0u64..80, 0..6),
        ) {
            let mut ch = SerialChannel::new(9600);
            ch.send(&burst, SimTime::ZERO);
            let mut times: Vec<u64> = cuts;
            times.push(burst.len() as u64 + 1);
            times.sort_unstable();
            let mut collected = Vec::new();
            for t in times {
                collected.extend(ch.drain(SimTime::from_ms(t)));
            }
            prop_assert_eq!(collected, burst);
        }

        #[test]
        fn latency_formula_matches_closed_form(baud in 1u32..200_000) {
            let ch = SerialChannel::new(baud);
            prop_assert_eq!(ch.per_byte_ms(), 10_000 / u64::from(baud));
        }
    }
}
