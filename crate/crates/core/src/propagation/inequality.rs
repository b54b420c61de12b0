use super::{changed, FilterResult, Propagator};
use crate::domain::{DomainStore, VarId};

/// `x + offset <= y`. `offset = 1` gives `x < y`, `offset = 0` gives `x <= y`.
#[derive(Clone, Debug)]
pub struct LessEq {
    vars: [VarId; 2],
    offset: i64,
}

impl LessEq {
    pub fn new(x: VarId, y: VarId, offset: i64) -> Self {
        LessEq {
            vars: [x, y],
            offset,
        }
    }

    pub fn less_than(x: VarId, y: VarId) -> Self {
        Self::new(x, y, 1)
    }

    pub fn less_or_equal(x: VarId, y: VarId) -> Self {
        Self::new(x, y, 0)
    }
}

impl Propagator for LessEq {
    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, store: &mut DomainStore) -> FilterResult {
        let [x, y] = self.vars;
        changed(store.tighten_max(x, store.max(y) - self.offset))?;
        changed(store.tighten_min(y, store.min(x) + self.offset))?;
        Ok(())
    }

    fn is_satisfied(&self, assignment: &[i64]) -> bool {
        assignment[self.vars[0].index()] + self.offset <= assignment[self.vars[1].index()]
    }

    fn name(&self) -> &'static str {
        "less_eq"
    }
}
