//! Propagator contract and the fixpoint engine.
//!
//! The engine keeps a FIFO queue of propagator ids with a scheduled flag per
//! propagator. Whenever a domain shrinks, every propagator watching that
//! variable is scheduled, except the one currently running: every propagator
//! in this crate filters to its own fixpoint before returning.

mod alldifferent;
mod inequality;
mod knapsack;
mod linear;

use std::collections::VecDeque;
use std::fmt;

use crate::domain::{ChangeOutcome, DomainStore, VarId};

pub use alldifferent::AllDifferent;
pub use inequality::LessEq;
pub use knapsack::BinaryKnapsack;
pub use linear::{LinearEq, LinearLeq};

/// Dense identifier of a posted propagator.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PropagatorId(u32);

impl PropagatorId {
    pub fn new(index: usize) -> Self {
        PropagatorId(u32::try_from(index).expect("propagator index overflows u32"))
    }

    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for PropagatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

/// Signal raised by a propagator that detected an inconsistency.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Wipeout;

pub type FilterResult = Result<(), Wipeout>;

/// Turns a domain update into "did it change", failing on a wipeout.
#[inline]
pub(crate) fn changed(outcome: ChangeOutcome) -> Result<bool, Wipeout> {
    match outcome {
        ChangeOutcome::Unchanged => Ok(false),
        ChangeOutcome::Shrunk => Ok(true),
        ChangeOutcome::WouldEmpty => Err(Wipeout),
    }
}

/// A filtering algorithm for one constraint.
///
/// Filtering must be contracting and sound, and must leave the store at the
/// propagator's own fixpoint when it returns `Ok`.
pub trait Propagator: fmt::Debug + Send + Sync {
    /// Variables the constraint ranges over; non-empty and duplicate-free.
    fn scope(&self) -> &[VarId];

    fn propagate(&self, store: &mut DomainStore) -> FilterResult;

    /// Whether the constraint holds on a full assignment (indexed by VarId).
    fn is_satisfied(&self, assignment: &[i64]) -> bool;

    fn name(&self) -> &'static str;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum PropagationStatus {
    Consistent,
    Failed(PropagatorId),
}

/// Outcome of a fixpoint computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationResult {
    pub status: PropagationStatus,
    /// Variables shrunk since the store's touched set was last cleared,
    /// including those shrunk before a wipeout.
    pub affected: Vec<VarId>,
}

impl PropagationResult {
    #[inline]
    pub fn is_consistent(&self) -> bool {
        self.status == PropagationStatus::Consistent
    }

    pub fn failed_propagator(&self) -> Option<PropagatorId> {
        match self.status {
            PropagationStatus::Failed(c) => Some(c),
            PropagationStatus::Consistent => None,
        }
    }
}

/// Which propagators start in the queue.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Seed {
    /// Every propagator, e.g. at the root.
    All,
    /// Watchers of the variables changed since the last propagation, e.g.
    /// after a decision.
    Changes,
}

/// FIFO fixpoint engine.
#[derive(Clone, Debug)]
pub struct Engine {
    watchers: Vec<Vec<PropagatorId>>,
    queue: VecDeque<PropagatorId>,
    scheduled: Vec<bool>,
    changed: Vec<VarId>,
    runs: u64,
}

impl Engine {
    pub fn new(propagators: &[Box<dyn Propagator>], num_vars: usize) -> Self {
        let mut watchers = vec![Vec::new(); num_vars];
        for (i, p) in propagators.iter().enumerate() {
            for x in p.scope() {
                watchers[x.index()].push(PropagatorId::new(i));
            }
        }
        Engine {
            watchers,
            queue: VecDeque::new(),
            scheduled: vec![false; propagators.len()],
            changed: Vec::new(),
            runs: 0,
        }
    }

    /// Number of propagator invocations so far.
    pub fn runs(&self) -> u64 {
        self.runs
    }

    fn schedule_watchers(&mut self, store: &mut DomainStore, except: Option<PropagatorId>) {
        store.drain_pending(&mut self.changed);
        for x in self.changed.drain(..) {
            for &p in &self.watchers[x.index()] {
                if Some(p) != except && !self.scheduled[p.index()] {
                    self.scheduled[p.index()] = true;
                    self.queue.push_back(p);
                }
            }
        }
    }

    fn reset_queue(&mut self) {
        for p in self.queue.drain(..) {
            self.scheduled[p.index()] = false;
        }
    }

    /// Runs propagators until no domain can shrink further.
    ///
    /// On failure the store holds a partially filtered state that the caller
    /// must undo with [`DomainStore::restore_to`].
    pub fn propagate(
        &mut self,
        propagators: &[Box<dyn Propagator>],
        store: &mut DomainStore,
        seed: Seed,
    ) -> PropagationResult {
        if seed == Seed::All {
            for i in 0..propagators.len() {
                if !self.scheduled[i] {
                    self.scheduled[i] = true;
                    self.queue.push_back(PropagatorId::new(i));
                }
            }
        }
        self.schedule_watchers(store, None);
        while let Some(p) = self.queue.pop_front() {
            self.scheduled[p.index()] = false;
            self.runs += 1;
            if propagators[p.index()].propagate(store).is_err() {
                self.reset_queue();
                store.clear_pending();
                return PropagationResult {
                    status: PropagationStatus::Failed(p),
                    affected: store.touched().to_vec(),
                };
            }
            self.schedule_watchers(store, Some(p));
        }
        PropagationResult {
            status: PropagationStatus::Consistent,
            affected: store.touched().to_vec(),
        }
    }
}

#[inline]
pub(crate) fn div_floor(a: i64, b: i64) -> i64 {
    let (q, r) = (a / b, a % b);
    if r != 0 && ((r < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

#[inline]
pub(crate) fn div_ceil(a: i64, b: i64) -> i64 {
    let (q, r) = (a / b, a % b);
    if r != 0 && ((r < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}
