//! Deterministic discrete-event kernel.
//!
//! A [`Simulation`] owns a virtual clock, a time-ordered event queue and a set
//! of [`CapacityStore`]s. Activities are continuations (`FnOnce` closures)
//! that receive the simulation mutably when they fire; they suspend by
//! scheduling another continuation or by blocking on a store.
//!
//! Events at equal times fire in insertion order. Stores grant strictly FIFO:
//! a blocked request at the head of the queue holds back every request
//! behind it, even ones that would fit.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet, VecDeque};
use std::fmt;
use std::ops::{Add, Sub};

use thiserror::Error;

/// Virtual time in seconds.
#[derive(
    Debug, Clone, Copy, PartialEq, PartialOrd, Default, serde::Serialize, serde::Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(f64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0.0);

    /// Panics on negative or non-finite input; use [`SimTime::try_new`] for
    /// untrusted values.
    pub fn new(seconds: f64) -> Self {
        Self::try_new(seconds).expect("invalid simulation time")
    }

    pub fn try_new(seconds: f64) -> Result<Self, SimError> {
        if seconds.is_finite() && seconds >= 0.0 {
            Ok(SimTime(seconds))
        } else {
            Err(SimError::InvalidTime(seconds))
        }
    }

    pub fn seconds(self) -> f64 {
        self.0
    }
}

impl Add<f64> for SimTime {
    type Output = SimTime;
    fn add(self, rhs: f64) -> SimTime {
        SimTime(self.0 + rhs)
    }
}

impl Sub for SimTime {
    type Output = f64;
    fn sub(self, rhs: SimTime) -> f64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("delay must be a finite non-negative number, got {0}")]
    NegativeDelay(f64),
    #[error("time must be a finite non-negative number, got {0}")]
    InvalidTime(f64),
    #[error(
        "store {store}: request for {amount} qubits can never be satisfied (capacity {capacity})"
    )]
    ImpossibleRequest {
        store: usize,
        amount: u32,
        capacity: u32,
    },
    #[error("store {store}: amount must be positive")]
    ZeroAmount { store: usize },
    #[error("store {store}: release of {amount} exceeds held amount {held}")]
    OverRelease {
        store: usize,
        amount: u32,
        held: u32,
    },
    #[error("unknown store {0}")]
    UnknownStore(usize),
}

/// Continuation run when an event fires.
pub type Action<W> = Box<dyn FnOnce(&mut Simulation<W>)>;

/// Handle returned by [`Simulation::schedule`]; the insertion sequence number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EventId(u64);

impl EventId {
    pub fn sequence(self) -> u64 {
        self.0
    }
}

/// Index of a store owned by a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StoreId(usize);

impl StoreId {
    pub fn index(self) -> usize {
        self.0
    }
}

struct Entry<W> {
    time: SimTime,
    seq: u64,
    action: Action<W>,
}

impl<W> PartialEq for Entry<W> {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
    }
}

impl<W> Eq for Entry<W> {}

impl<W> PartialOrd for Entry<W> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<W> Ord for Entry<W> {
    // BinaryHeap is a max-heap; invert so the earliest (time, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .0
            .total_cmp(&self.time.0)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Waiter<W> {
    amount: u32,
    on_grant: Action<W>,
}

/// A counted resource (free qubits on one device).
pub struct CapacityStore<W> {
    capacity: u32,
    level: u32,
    waiters: VecDeque<Waiter<W>>,
}

impl<W> CapacityStore<W> {
    fn new(capacity: u32) -> Self {
        Self {
            capacity,
            level: capacity,
            waiters: VecDeque::new(),
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Currently free units.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Units granted and not yet released.
    pub fn held(&self) -> u32 {
        self.capacity - self.level
    }

    pub fn queued(&self) -> usize {
        self.waiters.len()
    }
}

/// The event engine. `W` is the model state carried alongside the kernel.
pub struct Simulation<W> {
    now: SimTime,
    next_seq: u64,
    queue: BinaryHeap<Entry<W>>,
    cancelled: HashSet<u64>,
    stores: Vec<CapacityStore<W>>,
    fired: u64,
    pub state: W,
}

impl<W> Simulation<W> {
    pub fn new(state: W) -> Self {
        Self {
            now: SimTime::ZERO,
            next_seq: 0,
            queue: BinaryHeap::new(),
            cancelled: HashSet::new(),
            stores: Vec::new(),
            fired: 0,
            state,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Number of events that have fired (cancelled events excluded).
    pub fn events_fired(&self) -> u64 {
        self.fired
    }

    pub fn pending(&self) -> usize {
        self.queue.len() - self.cancelled.len()
    }

    pub fn schedule<F>(&mut self, delay: f64, action: F) -> Result<EventId, SimError>
    where
        F: FnOnce(&mut Simulation<W>) + 'static,
    {
        if !(delay.is_finite() && delay >= 0.0) {
            return Err(SimError::NegativeDelay(delay));
        }
        Ok(self.push(self.now + delay, Box::new(action)))
    }

    /// Schedules at an absolute time, which must not lie in the past.
    pub fn schedule_at<F>(&mut self, at: SimTime, action: F) -> Result<EventId, SimError>
    where
        F: FnOnce(&mut Simulation<W>) + 'static,
    {
        self.schedule(at - self.now, action)
    }

    fn push(&mut self, time: SimTime, action: Action<W>) -> EventId {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.queue.push(Entry { time, seq, action });
        EventId(seq)
    }

    /// Marks a pending event so that firing it does nothing. Returns false if
    /// the event already fired or was already cancelled.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.0 >= self.next_seq || !self.queue.iter().any(|e| e.seq == id.0) {
            return false;
        }
        self.cancelled.insert(id.0)
    }

    /// Processes events until the queue drains or the next event lies beyond
    /// `until`. With a bound, the clock is left at `until` (never moved
    /// backwards). Returns the final clock.
    pub fn run(&mut self, until: Option<SimTime>) -> SimTime {
        while let Some(head) = self.queue.peek() {
            if let Some(limit) = until {
                if head.time.0 > limit.0 {
                    break;
                }
            }
            let entry = self.queue.pop().expect("peeked entry");
            if self.cancelled.remove(&entry.seq) {
                continue;
            }
            debug_assert!(entry.time.0 >= self.now.0);
            self.now = entry.time;
            self.fired += 1;
            (entry.action)(self);
        }
        if let Some(limit) = until {
            if limit.0 > self.now.0 {
                self.now = limit;
            }
        }
        self.now
    }

    pub fn add_store(&mut self, capacity: u32) -> StoreId {
        self.stores.push(CapacityStore::new(capacity));
        StoreId(self.stores.len() - 1)
    }

    pub fn store(&self, id: StoreId) -> &CapacityStore<W> {
        &self.stores[id.0]
    }

    pub fn stores(&self) -> impl Iterator<Item = &CapacityStore<W>> {
        self.stores.iter()
    }

    /// Requests `amount` units. `on_grant` runs (as a zero-delay event) once
    /// the request reaches the head of the store's FIFO and enough units are
    /// free; the units are taken at that instant.
    pub fn acquire<F>(&mut self, id: StoreId, amount: u32, on_grant: F) -> Result<(), SimError>
    where
        F: FnOnce(&mut Simulation<W>) + 'static,
    {
        let store = self.stores.get(id.0).ok_or(SimError::UnknownStore(id.0))?;
        if amount == 0 {
            return Err(SimError::ZeroAmount { store: id.0 });
        }
        if amount > store.capacity {
            return Err(SimError::ImpossibleRequest {
                store: id.0,
                amount,
                capacity: store.capacity,
            });
        }
        self.stores[id.0].waiters.push_back(Waiter {
            amount,
            on_grant: Box::new(on_grant),
        });
        self.grant_waiters(id);
        Ok(())
    }

    /// Returns `amount` units and grants any waiters that now fit, in order.
    pub fn release(&mut self, id: StoreId, amount: u32) -> Result<(), SimError> {
        let store = self
            .stores
            .get_mut(id.0)
            .ok_or(SimError::UnknownStore(id.0))?;
        if amount == 0 {
            return Err(SimError::ZeroAmount { store: id.0 });
        }
        let held = store.held();
        if amount > held {
            return Err(SimError::OverRelease {
                store: id.0,
                amount,
                held,
            });
        }
        store.level += amount;
        self.grant_waiters(id);
        Ok(())
    }

    fn grant_waiters(&mut self, id: StoreId) {
        loop {
            let store = &mut self.stores[id.0];
            match store.waiters.front() {
                Some(w) if w.amount <= store.level => {}
                _ => break,
            }
            let waiter = store.waiters.pop_front().expect("front exists");
            store.level -= waiter.amount;
            let now = self.now;
            self.push(now, waiter.on_grant);
        }
    }
}
