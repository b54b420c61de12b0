use super::{blend, pick_best, Decision, Heuristic, InitOutcome, Prober, SearchRng, ValueTable};
use crate::domain::{DomainStore, Value, VarId};
use crate::models::Model;

/// Search-space reduction caused by one labeling, from log sizes.
///
/// Failure counts as full reduction. The result is clamped to `[0, 1]` to
/// absorb rounding in the log sums.
pub fn impact(log_size_before: f64, log_size_after: f64, failed: bool) -> f64 {
    if failed {
        1.0
    } else {
        (1.0 - (log_size_after - log_size_before).exp()).clamp(0.0, 1.0)
    }
}

/// Averaged impact per (variable, value).
#[derive(Clone, Debug)]
pub struct ImpactTable {
    alpha: f64,
    entries: ValueTable<Option<f64>>,
}

impl ImpactTable {
    pub fn new(model: &Model, alpha: f64) -> Self {
        assert!(alpha >= 1.0, "alpha must be at least 1");
        ImpactTable {
            alpha,
            entries: ValueTable::new(model.domains(), None),
        }
    }

    pub fn get(&self, x: VarId, v: Value) -> Option<f64> {
        *self.entries.get(x, v)
    }

    /// Folds in one observed impact.
    pub fn update(&mut self, x: VarId, v: Value, sample: f64) {
        blend(self.entries.get_mut(x, v), sample, self.alpha);
    }

    /// Overwrites an entry, as root initialization does.
    pub fn set(&mut self, x: VarId, v: Value, value: f64) {
        *self.entries.get_mut(x, v) = Some(value);
    }

    /// Unseen values count as impact 0.
    pub fn value_impact(&self, x: VarId, v: Value) -> f64 {
        self.get(x, v).unwrap_or(0.0)
    }

    /// Sum of `1 - impact` over the current domain of `x`.
    pub fn variable_impact(&self, x: VarId, store: &DomainStore) -> f64 {
        store
            .domain(x)
            .values()
            .map(|v| 1.0 - self.value_impact(x, v))
            .sum()
    }

    /// Number of recorded entries.
    pub fn len(&self) -> usize {
        self.entries.iter().filter(|e| e.is_some()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of slots, one per initial (variable, value) pair.
    pub fn capacity(&self) -> usize {
        self.entries.iter().count()
    }
}

/// Which end of the variable score `sum (1 - impact)` to branch on.
///
/// The score estimates how much search space survives labeling the
/// variable, so the default picks the smallest one: the variable whose
/// values prune the most. `Largest` is the literal argmax reading and is
/// kept for comparison; it performs poorly on the magic squares.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq)]
pub enum ImpactOrder {
    #[default]
    Smallest,
    Largest,
}

impl std::str::FromStr for ImpactOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "smallest" => Ok(ImpactOrder::Smallest),
            "largest" => Ok(ImpactOrder::Largest),
            _ => Err(format!(
                "unknown impact order {s:?} (expected smallest or largest)"
            )),
        }
    }
}

/// Impact-based search.
#[derive(Clone, Debug)]
pub struct ImpactBased {
    table: ImpactTable,
    order: ImpactOrder,
}

impl ImpactBased {
    pub fn new(model: &Model, alpha: f64, order: ImpactOrder) -> Self {
        ImpactBased {
            table: ImpactTable::new(model, alpha),
            order,
        }
    }

    pub fn table(&self) -> &ImpactTable {
        &self.table
    }
}

impl Heuristic for ImpactBased {
    fn name(&self) -> &'static str {
        "ibs"
    }

    /// Tries every value of every free decision variable. Failed values are
    /// removed from the root domain.
    fn initialize(&mut self, prober: &mut Prober<'_>) -> InitOutcome {
        for x in prober.model().decision_vars().to_vec() {
            let values: Vec<Value> = prober.store().domain(x).values().collect();
            for v in values {
                if prober.store().is_fixed(x) {
                    break;
                }
                if !prober.store().contains(x, v) {
                    continue;
                }
                if prober.timed_out() {
                    return InitOutcome::TimedOut;
                }
                let step = prober.try_decision(x, v);
                prober.count_probe();
                let d = step.decision();
                self.table.set(
                    x,
                    v,
                    impact(d.log_size_before, d.log_size_after, d.failed()),
                );
                if !d.failed() {
                    prober.record_if_solution();
                }
                prober.undo_to(step.level);
                if d.failed() && !prober.shave(x, v) {
                    return InitOutcome::Infeasible;
                }
            }
        }
        InitOutcome::Ready
    }

    fn select_variable(
        &mut self,
        candidates: &[VarId],
        store: &DomainStore,
        rng: &mut SearchRng,
    ) -> VarId {
        let scored = candidates
            .iter()
            .map(|&x| (x, self.table.variable_impact(x, store)));
        pick_best(scored, self.order == ImpactOrder::Largest, rng).expect("no candidate variable")
    }

    fn select_value(&mut self, x: VarId, store: &DomainStore, rng: &mut SearchRng) -> Value {
        let scored = store
            .domain(x)
            .values()
            .map(|v| (v, self.table.value_impact(x, v)));
        pick_best(scored, false, rng).expect("empty domain")
    }

    fn on_decision(&mut self, d: &Decision<'_>, _store: &DomainStore) {
        let sample = impact(d.log_size_before, d.log_size_after, d.failed());
        self.table.update(d.var, d.value, sample);
    }

    fn state_len(&self) -> usize {
        self.table.capacity()
    }
}
