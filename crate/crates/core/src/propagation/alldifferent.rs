use super::{FilterResult, Propagator, Wipeout};
use crate::domain::{ChangeOutcome, DomainStore, VarId};

/// Pairwise distinctness with forward-checking strength: the value of every
/// fixed variable is removed from the other domains.
#[derive(Clone, Debug)]
pub struct AllDifferent {
    vars: Vec<VarId>,
}

impl AllDifferent {
    pub fn new(vars: Vec<VarId>) -> Self {
        AllDifferent { vars }
    }
}

impl Propagator for AllDifferent {
    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, store: &mut DomainStore) -> FilterResult {
        let mut work: Vec<usize> = (0..self.vars.len())
            .filter(|&i| store.is_fixed(self.vars[i]))
            .collect();
        let mut done = vec![false; self.vars.len()];
        while let Some(i) = work.pop() {
            if std::mem::replace(&mut done[i], true) {
                continue;
            }
            let v = store.min(self.vars[i]);
            for (j, &y) in self.vars.iter().enumerate() {
                if j == i {
                    continue;
                }
                match store.remove_value(y, v) {
                    ChangeOutcome::WouldEmpty => return Err(Wipeout),
                    ChangeOutcome::Shrunk if store.is_fixed(y) => work.push(j),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn is_satisfied(&self, assignment: &[i64]) -> bool {
        let mut seen: Vec<i64> = self.vars.iter().map(|x| assignment[x.index()]).collect();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    }

    fn name(&self) -> &'static str {
        "alldifferent"
    }
}
