use super::{changed, FilterResult, Propagator, Wipeout};
use crate::domain::{DomainStore, VarId};

/// Reachable-sum table over `0..=limit`.
#[derive(Clone, Debug)]
struct Reach {
    words: Vec<u64>,
    limit: usize,
}

impl Reach {
    fn zero(limit: usize) -> Self {
        let mut words = vec![0u64; (limit + 1).div_ceil(64)];
        words[0] = 1;
        Reach { words, limit }
    }

    /// `self ∪ (self + w)`, truncated at the limit.
    fn with_item(&self, w: usize) -> Self {
        let mut out = self.clone();
        if w <= self.limit {
            let (ws, bs) = (w / 64, w % 64);
            for i in (ws..out.words.len()).rev() {
                let mut shifted = self.words[i - ws] << bs;
                if bs != 0 && i > ws {
                    shifted |= self.words[i - ws - 1] >> (64 - bs);
                }
                out.words[i] |= shifted;
            }
            let tail = (self.limit + 1) % 64;
            if tail != 0 {
                *out.words.last_mut().unwrap() &= (1u64 << tail) - 1;
            }
        }
        out
    }

    fn get(&self, s: usize) -> bool {
        s <= self.limit && self.words[s / 64] >> (s % 64) & 1 == 1
    }

    fn any_in(&self, lo: i64, hi: i64) -> bool {
        let lo = lo.max(0);
        let hi = hi.min(self.limit as i64);
        (lo..=hi).any(|s| self.get(s as usize))
    }

    fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..=self.limit).filter(|&s| self.get(s))
    }
}

/// Does some `f ∈ a`, `g ∈ b` satisfy `lo <= f + g <= hi`?
fn pair_sum_in(a: &Reach, b: &Reach, lo: i64, hi: i64) -> bool {
    a.members()
        .take_while(|&f| f as i64 <= hi)
        .any(|f| b.any_in(lo - f as i64, hi - f as i64))
}

/// `min_load <= sum w_i * x_i <= max_load` over 0/1 variables, filtered with
/// the dynamic-programming table of reachable loads.
#[derive(Clone, Debug)]
pub struct BinaryKnapsack {
    vars: Vec<VarId>,
    weights: Vec<i64>,
    min_load: i64,
    max_load: i64,
}

impl BinaryKnapsack {
    /// `sum w_i * x_i <= capacity`.
    pub fn at_most(vars: Vec<VarId>, weights: Vec<i64>, capacity: i64) -> Self {
        Self::with_load(vars, weights, 0, capacity)
    }

    pub fn with_load(vars: Vec<VarId>, weights: Vec<i64>, min_load: i64, max_load: i64) -> Self {
        assert_eq!(vars.len(), weights.len(), "one weight per item");
        assert!(
            weights.iter().all(|&w| w >= 0),
            "weights must be non-negative"
        );
        BinaryKnapsack {
            vars,
            weights,
            min_load,
            max_load,
        }
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn capacity(&self) -> i64 {
        self.max_load
    }
}

impl Propagator for BinaryKnapsack {
    fn scope(&self) -> &[VarId] {
        &self.vars
    }

    fn propagate(&self, store: &mut DomainStore) -> FilterResult {
        let mut mandatory = 0;
        let mut free = Vec::new();
        for (k, (&x, &w)) in self.vars.iter().zip(&self.weights).enumerate() {
            if store.min(x) >= 1 {
                mandatory += w;
            } else if store.max(x) >= 1 {
                free.push(k);
            }
        }
        if mandatory > self.max_load {
            return Err(Wipeout);
        }
        let hi = self.max_load - mandatory;
        let lo = (self.min_load - mandatory).max(0);
        if free.is_empty() {
            return if lo > 0 { Err(Wipeout) } else { Ok(()) };
        }

        if lo == 0 {
            // Leaving every free item out is always a support, so only
            // oversized items lose value 1.
            for &k in &free {
                if self.weights[k] > hi {
                    changed(store.tighten_max(self.vars[k], 0))?;
                }
            }
            return Ok(());
        }

        let limit = hi as usize;
        let mut fwd = Vec::with_capacity(free.len() + 1);
        fwd.push(Reach::zero(limit));
        for &k in &free {
            let next = fwd.last().unwrap().with_item(self.weights[k] as usize);
            fwd.push(next);
        }
        if !fwd[free.len()].any_in(lo, hi) {
            return Err(Wipeout);
        }
        let mut bwd = vec![Reach::zero(limit); free.len() + 1];
        for i in (0..free.len()).rev() {
            bwd[i] = bwd[i + 1].with_item(self.weights[free[i]] as usize);
        }
        for (i, &k) in free.iter().enumerate() {
            let w = self.weights[k];
            let x = self.vars[k];
            if !pair_sum_in(&fwd[i], &bwd[i + 1], lo - w, hi - w) {
                changed(store.tighten_max(x, 0))?;
            }
            if !pair_sum_in(&fwd[i], &bwd[i + 1], lo, hi) {
                changed(store.tighten_min(x, 1))?;
            }
        }
        Ok(())
    }

    fn is_satisfied(&self, assignment: &[i64]) -> bool {
        let load: i64 = self
            .vars
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * assignment[x.index()])
            .sum();
        self.min_load <= load && load <= self.max_load
    }

    fn name(&self) -> &'static str {
        "binary_knapsack"
    }
}
