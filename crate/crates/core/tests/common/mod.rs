//! Test oracles: random instances, generate-and-test enumeration and
//! reference filtering written independently of the solver's propagators.
#![allow(dead_code)]

use std::collections::BTreeSet;

use cpsearch::domain::{FiniteDomain, VarId};
use cpsearch::models::{KnapsackInstance, Model};
use cpsearch::propagation::{
    AllDifferent, BinaryKnapsack, Engine, LessEq, LinearEq, LinearLeq, Propagator, Seed,
};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Doms = Vec<Vec<i64>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A constraint described by its semantics only.
#[derive(Clone, Debug)]
pub enum Con {
    Leq(Vec<(i64, usize)>, i64),
    Eq(Vec<(i64, usize)>, i64),
    /// `x + offset <= y`
    Less(usize, usize, i64),
    AllDiff(Vec<usize>),
    /// `lo <= sum w_i x_i <= hi`, binary vars
    Knapsack(Vec<usize>, Vec<i64>, i64, i64),
}

fn dot(terms: &[(i64, usize)], a: &[i64]) -> i64 {
    terms.iter().map(|&(c, x)| c * a[x]).sum()
}

impl Con {
    pub fn scope(&self) -> Vec<usize> {
        match self {
            Con::Leq(t, _) | Con::Eq(t, _) => t.iter().map(|&(_, x)| x).collect(),
            Con::Less(x, y, _) => vec![*x, *y],
            Con::AllDiff(v) | Con::Knapsack(v, ..) => v.clone(),
        }
    }

    pub fn holds(&self, a: &[i64]) -> bool {
        match self {
            Con::Leq(t, r) => dot(t, a) <= *r,
            Con::Eq(t, r) => dot(t, a) == *r,
            Con::Less(x, y, o) => a[*x] + o <= a[*y],
            Con::AllDiff(v) => {
                let vals: BTreeSet<i64> = v.iter().map(|&x| a[x]).collect();
                vals.len() == v.len()
            }
            Con::Knapsack(v, w, lo, hi) => {
                let load: i64 = v.iter().zip(w).map(|(&x, &w)| w * a[x]).sum();
                *lo <= load && load <= *hi
            }
        }
    }

    pub fn propagator(&self) -> Box<dyn Propagator> {
        let ids = |v: &[usize]| v.iter().map(|&x| VarId::new(x)).collect::<Vec<_>>();
        let terms = |t: &[(i64, usize)]| t.iter().map(|&(c, x)| (c, VarId::new(x))).collect();
        match self {
            Con::Leq(t, r) => Box::new(LinearLeq::new(terms(t), *r)),
            Con::Eq(t, r) => Box::new(LinearEq::new(terms(t), *r)),
            Con::Less(x, y, o) => Box::new(LessEq::new(VarId::new(*x), VarId::new(*y), *o)),
            Con::AllDiff(v) => Box::new(AllDifferent::new(ids(v))),
            Con::Knapsack(v, w, lo, hi) => {
                Box::new(BinaryKnapsack::with_load(ids(v), w.clone(), *lo, *hi))
            }
        }
    }

    pub fn post(&self, m: &mut Model) {
        let ids = |v: &[usize]| v.iter().map(|&x| VarId::new(x)).collect::<Vec<_>>();
        let terms = |t: &[(i64, usize)]| t.iter().map(|&(c, x)| (c, VarId::new(x))).collect();
        match self {
            Con::Leq(t, r) => m.post(LinearLeq::new(terms(t), *r)),
            Con::Eq(t, r) => m.post(LinearEq::new(terms(t), *r)),
            Con::Less(x, y, o) => m.post(LessEq::new(VarId::new(*x), VarId::new(*y), *o)),
            Con::AllDiff(v) => m.post(AllDifferent::new(ids(v))),
            Con::Knapsack(v, w, lo, hi) => {
                m.post(BinaryKnapsack::with_load(ids(v), w.clone(), *lo, *hi))
            }
        }
        .expect("valid scope");
    }

    /// Filtering at the consistency level the solver promises for this
    /// constraint: bounds for the arithmetic ones, forward checking for
    /// alldifferent, domain consistency for the knapsack.
    pub fn reference(&self, doms: &Doms) -> Option<Doms> {
        match self {
            Con::Leq(t, r) => bounds_linear(t, *r, false, doms),
            Con::Eq(t, r) => bounds_linear(t, *r, true, doms),
            Con::Less(x, y, o) => bounds_linear(&[(1, *x), (-1, *y)], -o, false, doms),
            Con::AllDiff(v) => forward_check(v, doms),
            Con::Knapsack(..) => exact(self, doms),
        }
    }
}

/// Value bounds of `c * D` for a non-empty domain.
fn term_range(c: i64, d: &[i64]) -> (i64, i64) {
    let (a, b) = (c * d[0], c * d[d.len() - 1]);
    (a.min(b), a.max(b))
}

/// Drops values `v` of each variable for which `c v` plus the extreme
/// contributions of the other terms cannot meet the constraint, until
/// nothing changes.
fn bounds_linear(terms: &[(i64, usize)], rhs: i64, eq: bool, doms: &Doms) -> Option<Doms> {
    let mut d = doms.clone();
    loop {
        let mut changed = false;
        for (i, &(c, x)) in terms.iter().enumerate() {
            let (mut lo, mut hi) = (0, 0);
            for (j, &(cj, xj)) in terms.iter().enumerate() {
                if j != i {
                    let (a, b) = term_range(cj, &d[xj]);
                    lo += a;
                    hi += b;
                }
            }
            let before = d[x].len();
            d[x].retain(|&v| c * v + lo <= rhs && (!eq || c * v + hi >= rhs));
            if d[x].is_empty() {
                return None;
            }
            changed |= d[x].len() != before;
        }
        if !changed {
            return Some(d);
        }
    }
}

fn forward_check(vars: &[usize], doms: &Doms) -> Option<Doms> {
    let mut d = doms.clone();
    loop {
        let mut changed = false;
        for &x in vars {
            if d[x].len() != 1 {
                continue;
            }
            let v = d[x][0];
            for &y in vars {
                if y != x && d[y].contains(&v) {
                    d[y].retain(|&w| w != v);
                    if d[y].is_empty() {
                        return None;
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            return Some(d);
        }
    }
}

/// Keeps exactly the values with a support in the product of the scope's
/// domains.
pub fn exact(con: &Con, doms: &Doms) -> Option<Doms> {
    let scope = con.scope();
    let mut keep: Vec<BTreeSet<i64>> = vec![BTreeSet::new(); scope.len()];
    let mut a = vec![0i64; doms.len()];
    for (x, d) in doms.iter().enumerate() {
        a[x] = d[0];
    }
    product(&scope, doms, 0, &mut a, &mut |a| {
        if con.holds(a) {
            for (k, &x) in scope.iter().enumerate() {
                keep[k].insert(a[x]);
            }
        }
    });
    let mut d = doms.clone();
    for (k, &x) in scope.iter().enumerate() {
        d[x].retain(|v| keep[k].contains(v));
        if d[x].is_empty() {
            return None;
        }
    }
    Some(d)
}

fn product(vars: &[usize], doms: &Doms, i: usize, a: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
    if i == vars.len() {
        f(a);
        return;
    }
    for &v in &doms[vars[i]] {
        a[vars[i]] = v;
        product(vars, doms, i + 1, a, f);
    }
}

/// Runs the solver's propagator to its fixpoint on `doms`.
pub fn run_propagator(con: &Con, doms: &Doms) -> Option<Doms> {
    let domains = doms
        .iter()
        .map(|d| FiniteDomain::from_values(d.iter().copied()).expect("non-empty"))
        .collect();
    let mut store = cpsearch::domain::DomainStore::new(domains);
    let props = vec![con.propagator()];
    let mut engine = Engine::new(&props, doms.len());
    store.push_level();
    let result = engine.propagate(&props, &mut store, Seed::All);
    result.is_consistent().then(|| store.snapshot())
}

/// Soundness against exact filtering and equality with the reference for
/// the declared consistency level.
pub fn check_propagator(con: &Con, doms: &Doms) -> Result<(), String> {
    let got = run_propagator(con, doms);
    let want = con.reference(doms);
    let ex = exact(con, doms);
    match (&got, &ex) {
        (None, Some(_)) => return Err(format!("{con:?} on {doms:?}: failed with supports left")),
        (Some(g), Some(e)) => {
            for x in 0..doms.len() {
                if !e[x].iter().all(|v| g[x].contains(v)) {
                    return Err(format!(
                        "{con:?} on {doms:?}: removed a supported value of x{x}"
                    ));
                }
                if !g[x].iter().all(|v| doms[x].contains(v)) {
                    return Err(format!("{con:?} on {doms:?}: grew x{x}"));
                }
            }
        }
        _ => {}
    }
    if got != want {
        return Err(format!(
            "{con:?} on {doms:?}: fixpoint {got:?}, reference {want:?}"
        ));
    }
    Ok(())
}

pub fn random_domain(rng: &mut impl Rng, max_size: usize) -> Vec<i64> {
    let lo = rng.random_range(-3..=3);
    loop {
        let d: Vec<i64> = (lo..lo + max_size as i64)
            .filter(|_| rng.random_bool(0.7))
            .collect();
        if !d.is_empty() {
            return d;
        }
    }
}

fn distinct_vars(rng: &mut impl Rng, n: usize, k: usize) -> Vec<usize> {
    let mut all: Vec<usize> = (0..n).collect();
    all.shuffle(rng);
    all.truncate(k);
    all
}

fn random_assignment(rng: &mut impl Rng, doms: &Doms) -> Vec<i64> {
    doms.iter()
        .map(|d| d[rng.random_range(0..d.len())])
        .collect()
}

fn random_coef(rng: &mut impl Rng) -> i64 {
    let c = rng.random_range(1..=3);
    if rng.random_bool(0.3) {
        -c
    } else {
        c
    }
}

/// One random arithmetic, ordering or alldifferent constraint over `doms`.
/// Right-hand sides are drawn near a random assignment so that most
/// constraints are satisfiable but not trivially so.
pub fn random_con(rng: &mut impl Rng, doms: &Doms) -> Con {
    let n = doms.len();
    let a = random_assignment(rng, doms);
    match rng.random_range(0..4) {
        0 | 1 => {
            let k = rng.random_range(1..=n.min(3));
            let terms: Vec<(i64, usize)> = distinct_vars(rng, n, k)
                .into_iter()
                .map(|x| (random_coef(rng), x))
                .collect();
            let lhs = dot(&terms, &a);
            if rng.random_bool(0.5) {
                Con::Leq(terms, lhs + rng.random_range(-2..=2))
            } else {
                Con::Eq(
                    terms,
                    lhs + rng.random_range(-1..=1) * rng.random_range(0..=1),
                )
            }
        }
        2 => {
            let v = distinct_vars(rng, n, 2);
            Con::Less(v[0], v[1], rng.random_range(-1..=1))
        }
        _ => {
            let k = rng.random_range(2..=n.min(4));
            Con::AllDiff(distinct_vars(rng, n, k))
        }
    }
}

/// A knapsack window over fresh binary variables.
pub fn random_knapsack(rng: &mut impl Rng) -> (Doms, Con) {
    let n = rng.random_range(1..=6);
    let doms: Doms = (0..n)
        .map(|_| match rng.random_range(0..4) {
            0 => vec![0],
            1 => vec![1],
            _ => vec![0, 1],
        })
        .collect();
    let w: Vec<i64> = (0..n).map(|_| rng.random_range(0..=9)).collect();
    let total: i64 = w.iter().sum();
    let hi = rng.random_range(0..=total + 1);
    let lo = if rng.random_bool(0.5) {
        0
    } else {
        rng.random_range(0..=hi)
    };
    (doms, Con::Knapsack((0..n).collect(), w, lo, hi))
}

/// Propagator kinds exercised by the oracle checks.
pub const PROPAGATOR_KINDS: [&str; 5] = [
    "linear_leq",
    "linear_eq",
    "less_eq",
    "alldifferent",
    "knapsack",
];

/// A random instance of one propagator kind on at most four variables.
pub fn random_propagator_instance(rng: &mut impl Rng, kind: &str) -> (Doms, Con) {
    if kind == "knapsack" {
        return random_knapsack(rng);
    }
    let n = rng.random_range(2..=4);
    let mut doms: Doms = (0..n).map(|_| random_domain(rng, 5)).collect();
    let con = loop {
        let c = random_con(rng, &doms);
        let ok = matches!(
            (&c, kind),
            (Con::Leq(..), "linear_leq")
                | (Con::Eq(..), "linear_eq")
                | (Con::Less(..), "less_eq")
                | (Con::AllDiff(..), "alldifferent")
        );
        if ok {
            break c;
        }
    };
    if kind == "alldifferent" {
        // Singletons are what forward checking acts on.
        for d in doms.iter_mut() {
            if rng.random_bool(0.4) {
                let v = d[rng.random_range(0..d.len())];
                *d = vec![v];
            }
        }
    }
    (doms, con)
}

#[derive(Clone, Debug)]
pub struct Csp {
    pub doms: Doms,
    pub cons: Vec<Con>,
}

impl Csp {
    pub fn random(rng: &mut impl Rng, max_vars: usize, max_dom: usize) -> Self {
        let n = rng.random_range(2..=max_vars);
        let doms: Doms = (0..n).map(|_| random_domain(rng, max_dom)).collect();
        let k = rng.random_range(1..=4);
        let cons = (0..k).map(|_| random_con(rng, &doms)).collect();
        Csp { doms, cons }
    }

    pub fn model(&self) -> Model {
        let mut m = Model::new("random");
        for d in &self.doms {
            m.add_var_with_values(d.iter().copied()).expect("non-empty");
        }
        for c in &self.cons {
            c.post(&mut m);
        }
        m
    }

    /// Generate-and-test over the full product of the domains.
    pub fn solutions(&self) -> BTreeSet<Vec<i64>> {
        let vars: Vec<usize> = (0..self.doms.len()).collect();
        let mut a = vec![0; vars.len()];
        let mut out = BTreeSet::new();
        product(&vars, &self.doms, 0, &mut a, &mut |a| {
            if self.cons.iter().all(|c| c.holds(a)) {
                out.insert(a.to_vec());
            }
        });
        out
    }
}

/// Best profit by enumerating every subset of items.
pub fn knapsack_optimum(inst: &KnapsackInstance) -> Option<i64> {
    let n = inst.n_items();
    assert!(n <= 24, "too many items to enumerate");
    let mut best = None;
    for mask in 0u64..(1 << n) {
        let feasible = inst
            .weights
            .iter()
            .zip(&inst.capacities)
            .all(|(row, &cap)| {
                (0..n)
                    .filter(|i| mask >> i & 1 == 1)
                    .map(|i| row[i])
                    .sum::<i64>()
                    <= cap
            });
        if feasible {
            let p: i64 = (0..n)
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| inst.profits[i])
                .sum();
            best = best.max(Some(p));
        }
    }
    best
}
