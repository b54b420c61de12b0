use super::{changed, div_ceil, div_floor, FilterResult, Propagator, Wipeout};
use crate::domain::{DomainStore, VarId};

/// Merges duplicate variables and drops zero coefficients.
fn normalize(terms: Vec<(i64, VarId)>) -> Vec<(i64, VarId)> {
    let mut terms = terms;
    terms.sort_by_key(|&(_, x)| x);
    let mut out: Vec<(i64, VarId)> = Vec::with_capacity(terms.len());
    for (a, x) in terms {
        match out.last_mut() {
            Some((b, y)) if *y == x => *b += a,
            _ => out.push((a, x)),
        }
    }
    out.retain(|&(a, _)| a != 0);
    out
}

#[inline]
fn min_term(store: &DomainStore, a: i64, x: VarId) -> i64 {
    if a > 0 {
        a * store.min(x)
    } else {
        a * store.max(x)
    }
}

/// One bounds-reasoning pass of `sum a_i x_i <= rhs`. Returns whether any
/// domain changed.
fn leq_pass<I>(store: &mut DomainStore, terms: I, rhs: i64) -> Result<bool, Wipeout>
where
    I: Iterator<Item = (i64, VarId)> + Clone,
{
    let min_sum: i64 = terms.clone().map(|(a, x)| min_term(store, a, x)).sum();
    if min_sum > rhs {
        return Err(Wipeout);
    }
    let mut any = false;
    for (a, x) in terms {
        // The other terms contribute at least min_sum - own minimum; the
        // tightening below never changes an own minimum term.
        let slack = rhs - (min_sum - min_term(store, a, x));
        any |= if a > 0 {
            changed(store.tighten_max(x, div_floor(slack, a)))?
        } else {
            changed(store.tighten_min(x, div_ceil(slack, a)))?
        };
    }
    Ok(any)
}

/// `sum a_i * x_i <= rhs`, bounds consistent.
#[derive(Clone, Debug)]
pub struct LinearLeq {
    terms: Vec<(i64, VarId)>,
    vars: Vec<VarId>,
    rhs: i64,
}

impl LinearLeq {
    pub fn new(terms: Vec<(i64, VarId)>, rhs: i64) -> Self {
        let terms = normalize(terms);
        let vars = terms.iter().map(|&(_, x)| x).collect();
        LinearLeq { terms, vars, rhs }
    }

    pub fn terms(&self) -> &[(i64, VarId)] {
        &self.terms
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }
}

impl Propagator for LinearLeq {
    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, store: &mut DomainStore) -> FilterResult {
        leq_pass(store, self.terms.iter().copied(), self.rhs).map(|_| ())
    }

    fn is_satisfied(&self, assignment: &[i64]) -> bool {
        let lhs: i64 = self
            .terms
            .iter()
            .map(|&(a, x)| a * assignment[x.index()])
            .sum();
        lhs <= self.rhs
    }

    fn name(&self) -> &'static str {
        "linear_leq"
    }
}

/// `sum a_i * x_i == rhs`, bounds consistent.
#[derive(Clone, Debug)]
pub struct LinearEq {
    terms: Vec<(i64, VarId)>,
    vars: Vec<VarId>,
    rhs: i64,
}

impl LinearEq {
    pub fn new(terms: Vec<(i64, VarId)>, rhs: i64) -> Self {
        let terms = normalize(terms);
        let vars = terms.iter().map(|&(_, x)| x).collect();
        LinearEq { terms, vars, rhs }
    }

    pub fn terms(&self) -> &[(i64, VarId)] {
        &self.terms
    }

    pub fn rhs(&self) -> i64 {
        self.rhs
    }
}

impl Propagator for LinearEq {
    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, store: &mut DomainStore) -> FilterResult {
        let upper = self.terms.iter().copied();
        let lower = self.terms.iter().map(|&(a, x)| (-a, x));
        loop {
            let a = leq_pass(store, upper.clone(), self.rhs)?;
            let b = leq_pass(store, lower.clone(), -self.rhs)?;
            if !(a || b) {
                return Ok(());
            }
        }
    }

    fn is_satisfied(&self, assignment: &[i64]) -> bool {
        let lhs: i64 = self
            .terms
            .iter()
            .map(|&(a, x)| a * assignment[x.index()])
            .sum();
        lhs == self.rhs
    }

    fn name(&self) -> &'static str {
        "linear_eq"
    }
}
