use super::{pick_best, Heuristic, SearchRng};
use crate::domain::{DomainStore, Value, VarId};
use crate::models::Model;
use crate::propagation::PropagatorId;

/// Failure weight per constraint. Weights start at 1 and are never undone.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WeightTable {
    weights: Vec<u64>,
}

impl WeightTable {
    pub fn new(num_constraints: usize) -> Self {
        WeightTable {
            weights: vec![1; num_constraints],
        }
    }

    pub fn on_failure(&mut self, c: PropagatorId) {
        self.weights[c.index()] += 1;
    }

    pub fn weight(&self, c: PropagatorId) -> u64 {
        self.weights[c.index()]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Weighted-degree search: smallest `|D(x)| / wdeg(x)` first, values in
/// ascending order.
#[derive(Clone, Debug)]
pub struct WeightedDegree {
    table: WeightTable,
    scopes: Vec<Vec<VarId>>,
    /// Constraints watching each variable.
    constraints_of: Vec<Vec<PropagatorId>>,
}

impl WeightedDegree {
    pub fn new(model: &Model) -> Self {
        let scopes: Vec<Vec<VarId>> = model
            .propagators()
            .iter()
            .map(|p| p.scope().to_vec())
            .collect();
        let mut constraints_of = vec![Vec::new(); model.num_vars()];
        for (c, scope) in scopes.iter().enumerate() {
            for x in scope {
                constraints_of[x.index()].push(PropagatorId::new(c));
            }
        }
        WeightedDegree {
            table: WeightTable::new(scopes.len()),
            scopes,
            constraints_of,
        }
    }

    pub fn table(&self) -> &WeightTable {
        &self.table
    }

    pub fn table_mut(&mut self) -> &mut WeightTable {
        &mut self.table
    }

    /// Summed weight of the constraints on `x` that still have at least two
    /// unfixed variables.
    pub fn weighted_degree(&self, x: VarId, store: &DomainStore) -> u64 {
        self.constraints_of[x.index()]
            .iter()
            .filter(|c| {
                self.scopes[c.index()]
                    .iter()
                    .filter(|&&y| !store.is_fixed(y))
                    .nth(1)
                    .is_some()
            })
            .map(|&c| self.table.weight(c))
            .sum()
    }

    /// `|D(x)| / wdeg(x)`, infinite for a variable with no live constraint.
    pub fn ratio(&self, x: VarId, store: &DomainStore) -> f64 {
        match self.weighted_degree(x, store) {
            0 => f64::INFINITY,
            w => store.size(x) as f64 / w as f64,
        }
    }
}

impl Heuristic for WeightedDegree {
    fn name(&self) -> &'static str {
        "wdeg"
    }

    fn select_variable(
        &mut self,
        candidates: &[VarId],
        store: &DomainStore,
        rng: &mut SearchRng,
    ) -> VarId {
        let scored = candidates.iter().map(|&x| (x, self.ratio(x, store)));
        pick_best(scored, false, rng).expect("no candidate variable")
    }

    fn select_value(&mut self, x: VarId, store: &DomainStore, _rng: &mut SearchRng) -> Value {
        store.min(x)
    }

    fn on_failure(&mut self, c: PropagatorId) {
        self.table.on_failure(c);
    }

    fn state_len(&self) -> usize {
        self.table.len()
    }
}
