//! Black-box branching heuristics: activity-based (ABS), impact-based (IBS)
//! and weighted degree (WDEG).
//!
//! A heuristic picks the next variable among the free decision variables and
//! the value to try first. The search feeds it every propagation event; the
//! initialization hook runs once after root propagation and may probe the
//! root store through a [`Prober`].

mod abs;
mod ibs;
mod probe_stats;
mod wdeg;

use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::domain::{ChangeOutcome, DomainStore, FiniteDomain, Value, VarId};
use crate::models::Model;
use crate::propagation::{Engine, PropagationResult, PropagatorId, Seed};

pub use abs::{add_probe_step, ActivityBased, ActivityTable};
pub use ibs::{impact, ImpactBased, ImpactOrder, ImpactTable};
pub use probe_stats::{t_critical, ProbeAccumulator, StoppingRule};
pub use wdeg::{WeightTable, WeightedDegree};

/// Random source of a single solve.
pub type SearchRng = ChaCha8Rng;

/// One labeling step `x = v` as seen by the heuristic.
#[derive(Clone, Debug)]
pub struct Decision<'a> {
    pub var: VarId,
    pub value: Value,
    /// `ln S` before and after propagating the decision; `after` is
    /// meaningless when the propagation failed.
    pub log_size_before: f64,
    pub log_size_after: f64,
    pub result: &'a PropagationResult,
}

impl Decision<'_> {
    pub fn failed(&self) -> bool {
        !self.result.is_consistent()
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum InitOutcome {
    Ready,
    /// Shaving emptied a domain at the root.
    Infeasible,
    TimedOut,
}

pub trait Heuristic: Send {
    fn name(&self) -> &'static str;

    /// Runs once after root propagation, before the first decision.
    fn initialize(&mut self, _prober: &mut Prober<'_>) -> InitOutcome {
        InitOutcome::Ready
    }

    /// Picks among `candidates`, which are free and non-empty.
    fn select_variable(
        &mut self,
        candidates: &[VarId],
        store: &DomainStore,
        rng: &mut SearchRng,
    ) -> VarId;

    fn select_value(&mut self, x: VarId, store: &DomainStore, rng: &mut SearchRng) -> Value;

    /// After propagating a decision, successful or not.
    fn on_decision(&mut self, _decision: &Decision<'_>, _store: &DomainStore) {}

    /// After propagating the refutation `x != v` of a decision.
    fn on_refutation(&mut self, _result: &PropagationResult, _store: &DomainStore) {}

    /// A propagator wiped out a domain during search.
    fn on_failure(&mut self, _constraint: PropagatorId) {}

    /// Number of statistics entries the heuristic keeps.
    fn state_len(&self) -> usize;
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    Abs,
    Ibs,
    Wdeg,
}

impl HeuristicKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeuristicKind::Abs => "abs",
            HeuristicKind::Ibs => "ibs",
            HeuristicKind::Wdeg => "wdeg",
        }
    }
}

impl std::str::FromStr for HeuristicKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "abs" => Ok(HeuristicKind::Abs),
            "ibs" => Ok(HeuristicKind::Ibs),
            "wdeg" => Ok(HeuristicKind::Wdeg),
            _ => Err(format!(
                "unknown heuristic {s:?} (expected abs, ibs or wdeg)"
            )),
        }
    }
}

impl std::fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tunables shared by the heuristics; defaults are alpha 8, gamma 0.999 and
/// delta 0.2.
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct HeuristicParams {
    pub alpha: f64,
    pub gamma: f64,
    pub value_heuristic: bool,
    pub probing: StoppingRule,
    pub impact_order: ImpactOrder,
}

impl Default for HeuristicParams {
    fn default() -> Self {
        HeuristicParams {
            alpha: 8.0,
            gamma: 0.999,
            value_heuristic: true,
            probing: StoppingRule::new(0.2),
            impact_order: ImpactOrder::Smallest,
        }
    }
}

/// Fresh heuristic state for one solve of `model`.
pub fn build_heuristic(
    kind: HeuristicKind,
    params: &HeuristicParams,
    model: &Model,
) -> Box<dyn Heuristic> {
    match kind {
        HeuristicKind::Abs => Box::new(ActivityBased::new(model, params)),
        HeuristicKind::Ibs => Box::new(ImpactBased::new(model, params.alpha, params.impact_order)),
        HeuristicKind::Wdeg => Box::new(WeightedDegree::new(model)),
    }
}

/// Uniformly random element among the candidates with the best score.
///
/// Scores are compared exactly; ties are resolved by reservoir sampling so
/// a single pass suffices.
pub(crate) fn pick_best<T: Copy>(
    items: impl IntoIterator<Item = (T, f64)>,
    maximize: bool,
    rng: &mut SearchRng,
) -> Option<T> {
    let mut best: Option<(T, f64)> = None;
    let mut ties = 0u32;
    for (item, score) in items {
        match best {
            Some((_, b)) if score == b => {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    best = Some((item, score));
                }
            }
            Some((_, b)) if (score > b) != maximize || score.is_nan() => {}
            _ => {
                best = Some((item, score));
                ties = 1;
            }
        }
    }
    best.map(|(item, _)| item)
}

/// Dense per-(variable, value) table over the initial domains.
#[derive(Clone, Debug)]
pub(crate) struct ValueTable<T> {
    offsets: Vec<Value>,
    rows: Vec<Vec<T>>,
}

impl<T: Clone> ValueTable<T> {
    pub(crate) fn new(domains: &[FiniteDomain], fill: T) -> Self {
        ValueTable {
            offsets: domains.iter().map(|d| d.min()).collect(),
            rows: domains
                .iter()
                .map(|d| vec![fill.clone(); (d.max() - d.min() + 1) as usize])
                .collect(),
        }
    }

    pub(crate) fn get(&self, x: VarId, v: Value) -> &T {
        &self.rows[x.index()][(v - self.offsets[x.index()]) as usize]
    }

    pub(crate) fn get_mut(&mut self, x: VarId, v: Value) -> &mut T {
        &mut self.rows[x.index()][(v - self.offsets[x.index()]) as usize]
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = &T> {
        self.rows.iter().flatten()
    }
}

/// Running-average update shared by impacts and assignment activities; the
/// first observation is taken as is.
pub(crate) fn blend(slot: &mut Option<f64>, sample: f64, alpha: f64) {
    *slot = Some(match *slot {
        None => sample,
        Some(old) => (old * (alpha - 1.0) + sample) / alpha,
    });
}

/// Root-level access for heuristic initialization.
///
/// Probing decisions are pushed on fresh trail levels and undone by the
/// caller; shaving removes values permanently at the root.
pub struct Prober<'a> {
    model: &'a Model,
    store: &'a mut DomainStore,
    engine: &'a mut Engine,
    pub rng: &'a mut SearchRng,
    deadline: Option<Instant>,
    probes: u64,
    solutions: Vec<Vec<Value>>,
}

impl<'a> Prober<'a> {
    pub(crate) fn new(
        model: &'a Model,
        store: &'a mut DomainStore,
        engine: &'a mut Engine,
        rng: &'a mut SearchRng,
        deadline: Option<Instant>,
    ) -> Self {
        Prober {
            model,
            store,
            engine,
            rng,
            deadline,
            probes: 0,
            solutions: Vec::new(),
        }
    }

    pub fn store(&self) -> &DomainStore {
        self.store
    }

    pub fn model(&self) -> &Model {
        self.model
    }

    pub fn free_decision_vars(&self) -> Vec<VarId> {
        self.model
            .decision_vars()
            .iter()
            .copied()
            .filter(|&x| !self.store.is_fixed(x))
            .collect()
    }

    pub fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Pushes a level, posts `x = v` and propagates. The caller undoes it with
    /// [`Prober::undo_to`] using the returned level.
    pub fn try_decision(&mut self, x: VarId, v: Value) -> ProbeStep {
        let level = self.store.push_level();
        self.store.clear_touched();
        let log_size_before = self.store.search_space_log_size();
        let result = match self.store.assign(x, v) {
            ChangeOutcome::WouldEmpty => unreachable!("probing a value outside the domain"),
            _ => self
                .engine
                .propagate(self.model.propagators(), self.store, Seed::Changes),
        };
        let log_size_after = if result.is_consistent() {
            self.store.search_space_log_size()
        } else {
            f64::NEG_INFINITY
        };
        ProbeStep {
            level,
            var: x,
            value: v,
            log_size_before,
            log_size_after,
            result,
        }
    }

    pub fn undo_to(&mut self, level: usize) {
        self.store.restore_to(level);
    }

    /// Whether the current (consistent) store fixes every variable; records
    /// the assignment as a solution if so.
    pub fn record_if_solution(&mut self) -> bool {
        match self.store.assignment() {
            Some(sol) => {
                self.solutions.push(sol);
                true
            }
            None => false,
        }
    }

    /// Removes `x = v` at the root and propagates. Returns false if the root
    /// became inconsistent.
    pub fn shave(&mut self, x: VarId, v: Value) -> bool {
        debug_assert_eq!(self.store.level(), 0, "shaving below the root");
        match self.store.remove_value(x, v) {
            ChangeOutcome::WouldEmpty => false,
            ChangeOutcome::Unchanged => true,
            ChangeOutcome::Shrunk => self
                .engine
                .propagate(self.model.propagators(), self.store, Seed::Changes)
                .is_consistent(),
        }
    }

    pub fn count_probe(&mut self) {
        self.probes += 1;
    }

    pub fn probes(&self) -> u64 {
        self.probes
    }

    pub(crate) fn take_solutions(&mut self) -> Vec<Vec<Value>> {
        std::mem::take(&mut self.solutions)
    }
}

/// A tentative decision made during initialization.
#[derive(Clone, Debug)]
pub struct ProbeStep {
    /// Level to restore to undo the step.
    pub level: usize,
    pub var: VarId,
    pub value: Value,
    pub log_size_before: f64,
    pub log_size_after: f64,
    pub result: PropagationResult,
}

impl ProbeStep {
    pub fn decision(&self) -> Decision<'_> {
        Decision {
            var: self.var,
            value: self.value,
            log_size_before: self.log_size_before,
            log_size_after: self.log_size_after,
            result: &self.result,
        }
    }
}
