use rand::Rng;

use super::{
    blend, pick_best, Decision, Heuristic, HeuristicParams, InitOutcome, ProbeAccumulator, Prober,
    SearchRng, StoppingRule, ValueTable,
};
use crate::domain::{DomainStore, Value, VarId};
use crate::models::Model;
use crate::propagation::PropagationResult;

/// Variable activities and, optionally, assignment activities.
#[derive(Clone, Debug)]
pub struct ActivityTable {
    gamma: f64,
    alpha: f64,
    activity: Vec<f64>,
    assignment: Option<ValueTable<Option<f64>>>,
}

impl ActivityTable {
    pub fn new(model: &Model, gamma: f64, alpha: f64, value_heuristic: bool) -> Self {
        assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
        assert!(alpha >= 1.0, "alpha must be at least 1");
        ActivityTable {
            gamma,
            alpha,
            activity: vec![0.0; model.num_vars()],
            assignment: value_heuristic.then(|| ValueTable::new(model.domains(), None)),
        }
    }

    pub fn activity(&self, x: VarId) -> f64 {
        self.activity[x.index()]
    }

    pub fn activities(&self) -> &[f64] {
        &self.activity
    }

    pub fn set_activity(&mut self, x: VarId, a: f64) {
        assert!(a >= 0.0);
        self.activity[x.index()] = a;
    }

    pub fn has_value_table(&self) -> bool {
        self.assignment.is_some()
    }

    /// Ages every unfixed variable, then bumps each affected one.
    pub fn on_node(&mut self, affected: &[VarId], store: &DomainStore) {
        for (x, a) in self.activity.iter_mut().enumerate() {
            if store.size(VarId::new(x)) > 1 {
                *a *= self.gamma;
            }
        }
        for x in affected {
            self.activity[x.index()] += 1.0;
        }
    }

    /// Records that `x = v` affected `affected_count` variables. No-op
    /// without a value table.
    pub fn on_decision(&mut self, x: VarId, v: Value, affected_count: usize) {
        let alpha = self.alpha;
        if let Some(t) = &mut self.assignment {
            blend(t.get_mut(x, v), affected_count as f64, alpha);
        }
    }

    /// Unseen pairs, and every pair without a value table, count as 0.
    pub fn assignment_activity(&self, x: VarId, v: Value) -> Option<f64> {
        self.assignment.as_ref().and_then(|t| *t.get(x, v))
    }

    fn set_assignment_activity(&mut self, x: VarId, v: Value, a: f64) {
        if let Some(t) = &mut self.assignment {
            *t.get_mut(x, v) = Some(a);
        }
    }

    /// Entries held: one per variable, plus one per initial (variable, value)
    /// pair when the value heuristic is on.
    pub fn len(&self) -> usize {
        self.activity.len() + self.assignment.as_ref().map_or(0, |t| t.iter().count())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Adds one probe step to a per-probe activity vector: no aging, +1 for
/// every variable the step affected.
pub fn add_probe_step(probe: &mut [f64], affected: &[VarId]) {
    for x in affected {
        probe[x.index()] += 1.0;
    }
}

/// Activity-based search.
#[derive(Clone, Debug)]
pub struct ActivityBased {
    table: ActivityTable,
    rule: StoppingRule,
    probes: usize,
}

impl ActivityBased {
    pub fn new(model: &Model, params: &HeuristicParams) -> Self {
        ActivityBased {
            table: ActivityTable::new(model, params.gamma, params.alpha, params.value_heuristic),
            rule: params.probing,
            probes: 0,
        }
    }

    pub fn table(&self) -> &ActivityTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut ActivityTable {
        &mut self.table
    }

    /// Probes drawn by the last initialization.
    pub fn probes(&self) -> usize {
        self.probes
    }

    /// One random dive from the root. Returns the activity vector and, if the
    /// very first step failed, the value to shave.
    fn probe(
        &self,
        prober: &mut Prober<'_>,
        samples: &mut Option<ValueTable<(u32, f64)>>,
    ) -> (Vec<f64>, Option<(VarId, Value)>) {
        let mut act = vec![0.0; prober.store().num_vars()];
        let mut base = None;
        let mut shave = None;
        loop {
            let free = prober.free_decision_vars();
            if free.is_empty() {
                prober.record_if_solution();
                break;
            }
            let x = free[prober.rng.random_range(0..free.len())];
            let k = prober.rng.random_range(0..prober.store().size(x));
            let v = prober.store().domain(x).values().nth(k as usize).unwrap();
            let step = prober.try_decision(x, v);
            base.get_or_insert(step.level);
            add_probe_step(&mut act, &step.result.affected);
            if let Some(t) = samples {
                let (n, mean) = t.get_mut(x, v);
                *n += 1;
                *mean += (step.result.affected.len() as f64 - *mean) / *n as f64;
            }
            if !step.result.is_consistent() {
                if base == Some(step.level) {
                    shave = Some((x, v));
                }
                break;
            }
        }
        if let Some(level) = base {
            prober.undo_to(level);
        }
        (act, shave)
    }
}

impl Heuristic for ActivityBased {
    fn name(&self) -> &'static str {
        "abs"
    }

    /// Estimates the mean activity of each variable from random probes until
    /// the 95% interval is within `delta` of the mean for every variable.
    /// Values whose first-step probe fails are removed from the root.
    fn initialize(&mut self, prober: &mut Prober<'_>) -> InitOutcome {
        self.probes = 0;
        if prober.free_decision_vars().is_empty() {
            return InitOutcome::Ready;
        }
        let n = prober.store().num_vars();
        let mut acc = ProbeAccumulator::new(n);
        let mut samples = self
            .table
            .has_value_table()
            .then(|| ValueTable::new(prober.model().domains(), (0u32, 0.0)));
        loop {
            if prober.timed_out() {
                return InitOutcome::TimedOut;
            }
            let (act, shave) = self.probe(prober, &mut samples);
            prober.count_probe();
            self.probes += 1;
            acc.fold(&act);
            if let Some((x, v)) = shave {
                if !prober.shave(x, v) {
                    return InitOutcome::Infeasible;
                }
            }
            if self.rule.should_stop(&acc) || prober.free_decision_vars().is_empty() {
                break;
            }
        }
        for x in 0..n {
            self.table.set_activity(VarId::new(x), acc.mean(x));
        }
        if let Some(samples) = samples {
            for (x, d) in prober.model().domains().iter().enumerate() {
                let x = VarId::new(x);
                for v in d.min()..=d.max() {
                    let (count, mean) = *samples.get(x, v);
                    if count > 0 {
                        self.table.set_assignment_activity(x, v, mean);
                    }
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
            .map(|&x| (x, self.table.activity(x) / store.size(x) as f64));
        pick_best(scored, true, rng).expect("no candidate variable")
    }

    fn select_value(&mut self, x: VarId, store: &DomainStore, rng: &mut SearchRng) -> Value {
        if !self.table.has_value_table() {
            return store.min(x);
        }
        let scored = store
            .domain(x)
            .values()
            .map(|v| (v, self.table.assignment_activity(x, v).unwrap_or(0.0)));
        pick_best(scored, false, rng).expect("empty domain")
    }

    fn on_decision(&mut self, d: &Decision<'_>, store: &DomainStore) {
        self.table.on_node(&d.result.affected, store);
        self.table
            .on_decision(d.var, d.value, d.result.affected.len());
    }

    fn on_refutation(&mut self, result: &PropagationResult, store: &DomainStore) {
        self.table.on_node(&result.affected, store);
    }

    fn state_len(&self) -> usize {
        self.table.len()
    }
}
