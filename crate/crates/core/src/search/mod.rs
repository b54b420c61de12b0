//! Depth-first search with binary labeling (`x = v` then `x != v`),
//! geometric restarts and branch and bound.

mod restart;

use std::time::{Duration, Instant};

use crate::domain::{ChangeOutcome, DomainStore, Value, VarId};
use crate::heuristics::{Decision, Heuristic, InitOutcome, Prober, SearchRng};
use crate::models::{Direction, Model, Objective};
use crate::propagation::{Engine, PropagatorId, Seed};

pub use restart::{next_limit, RestartController, RestartDecision, RestartMode, RestartPolicy};

/// Wall-clock checks happen once per this many nodes.
const CLOCK_INTERVAL: u64 = 256;

#[derive(Copy, Clone, Debug, Default, PartialEq)]
pub struct SearchLimits {
    pub timeout: Option<Duration>,
    pub max_failures: Option<u64>,
}

impl SearchLimits {
    pub fn timeout(t: Duration) -> Self {
        SearchLimits {
            timeout: Some(t),
            max_failures: None,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum SearchStatus {
    SolutionFound,
    ProvedInfeasible,
    ProvedOptimal,
    TimedOut,
    FailureLimit,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::SolutionFound => "solution",
            SearchStatus::ProvedInfeasible => "infeasible",
            SearchStatus::ProvedOptimal => "optimal",
            SearchStatus::TimedOut => "timeout",
            SearchStatus::FailureLimit => "failure_limit",
        }
    }

    /// Finished on its own rather than by hitting a limit.
    pub fn is_complete(self) -> bool {
        !matches!(self, SearchStatus::TimedOut | SearchStatus::FailureLimit)
    }
}

impl std::fmt::Display for SearchStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Copy, Clone, Debug, PartialEq)]
pub struct SolutionRecord {
    pub objective: Option<Value>,
    pub time_s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchStats {
    pub status: SearchStatus,
    pub choice_points: u64,
    pub failures: u64,
    pub restarts: u64,
    /// Probes drawn by heuristic initialization.
    pub probes: u64,
    /// Propagator invocations.
    pub propagations: u64,
    pub wall_time: Duration,
    /// Improving solutions in the order found; a single entry in
    /// satisfaction mode.
    pub solutions: Vec<SolutionRecord>,
    /// Last recorded solution, indexed by variable.
    pub best: Option<Vec<Value>>,
    /// Every solution, when enumerating.
    pub all_solutions: Vec<Vec<Value>>,
}

impl SearchStats {
    fn new() -> Self {
        SearchStats {
            status: SearchStatus::ProvedInfeasible,
            choice_points: 0,
            failures: 0,
            restarts: 0,
            probes: 0,
            propagations: 0,
            wall_time: Duration::ZERO,
            solutions: Vec::new(),
            best: None,
            all_solutions: Vec::new(),
        }
    }

    pub fn time_s(&self) -> f64 {
        self.wall_time.as_secs_f64()
    }

    /// Objective of the best solution, if any.
    pub fn objective(&self) -> Option<Value> {
        self.solutions.last().and_then(|s| s.objective)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Mode {
    Satisfy,
    Optimize(Objective),
    Enumerate,
}

enum Flow {
    Exhausted,
    Restart,
    Stop(SearchStatus),
}

/// State of one solve: the store, the engine and the statistics.
pub struct Solver<'m> {
    model: &'m Model,
    store: DomainStore,
    engine: Engine,
    rng: SearchRng,
    mode: Mode,
    limits: SearchLimits,
    start: Instant,
    deadline: Option<Instant>,
    nodes: u64,
    incumbent: Option<Value>,
    candidates: Vec<VarId>,
    stats: SearchStats,
}

impl<'m> Solver<'m> {
    pub fn new(model: &'m Model, rng: SearchRng, limits: SearchLimits) -> Self {
        let start = Instant::now();
        let mode = match model.objective() {
            Some(obj) => Mode::Optimize(obj),
            None => Mode::Satisfy,
        };
        Solver {
            model,
            store: model.initial_store(),
            engine: Engine::new(model.propagators(), model.num_vars()),
            rng,
            mode,
            limits,
            start,
            deadline: limits.timeout.map(|t| start + t),
            nodes: 0,
            incumbent: None,
            candidates: Vec::new(),
            stats: SearchStats::new(),
        }
    }

    /// Collects every solution instead of stopping at the first one.
    /// Restarts are ignored in this mode and objectives are not bounded.
    pub fn enumerate_all(mut self) -> Self {
        self.mode = Mode::Enumerate;
        self
    }

    pub fn store(&self) -> &DomainStore {
        &self.store
    }

    pub fn stats(&self) -> &SearchStats {
        &self.stats
    }

    fn elapsed_s(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }

    fn past_deadline(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }

    /// Root propagation followed by heuristic initialization. Returns a final
    /// status if the solve is already decided.
    pub fn initialize(&mut self, h: &mut dyn Heuristic) -> Option<SearchStatus> {
        self.store.clear_touched();
        let root = self
            .engine
            .propagate(self.model.propagators(), &mut self.store, Seed::All);
        if !root.is_consistent() {
            self.stats.failures += 1;
            return Some(SearchStatus::ProvedInfeasible);
        }
        let mut prober = Prober::new(
            self.model,
            &mut self.store,
            &mut self.engine,
            &mut self.rng,
            self.deadline,
        );
        let outcome = h.initialize(&mut prober);
        self.stats.probes = prober.probes();
        let found = prober.take_solutions();
        match outcome {
            InitOutcome::Infeasible => return Some(SearchStatus::ProvedInfeasible),
            InitOutcome::TimedOut => return Some(SearchStatus::TimedOut),
            InitOutcome::Ready => {}
        }
        if self.mode != Mode::Enumerate {
            for sol in found {
                if let Some(status) = self.on_solution(sol) {
                    return Some(status);
                }
            }
        }
        None
    }

    /// Runs the whole solve.
    pub fn solve(mut self, h: &mut dyn Heuristic, policy: RestartPolicy) -> SearchStats {
        let status = match self.initialize(h) {
            Some(status) => status,
            None => self.search(h, policy),
        };
        self.stats.status = status;
        self.stats.propagations = self.engine.runs();
        self.stats.wall_time = self.start.elapsed();
        self.stats
    }

    fn exhausted_status(&self) -> SearchStatus {
        match self.mode {
            Mode::Optimize(_) if self.incumbent.is_some() => SearchStatus::ProvedOptimal,
            Mode::Enumerate if !self.stats.all_solutions.is_empty() => SearchStatus::SolutionFound,
            _ => SearchStatus::ProvedInfeasible,
        }
    }

    fn search(&mut self, h: &mut dyn Heuristic, policy: RestartPolicy) -> SearchStatus {
        let policy = match self.mode {
            Mode::Enumerate => RestartPolicy::none(),
            _ => policy,
        };
        let mut restarts = RestartController::new(policy);
        loop {
            if self.enforce_bound().is_err() {
                return self.exhausted_status();
            }
            if self.past_deadline() {
                return SearchStatus::TimedOut;
            }
            let base = self.store.push_level();
            let flow = self.search_round(h, &mut restarts);
            self.store.restore_to(base);
            match flow {
                Flow::Exhausted => return self.exhausted_status(),
                Flow::Stop(status) => return status,
                Flow::Restart => {
                    self.stats.restarts += 1;
                    restarts.start_next_round();
                }
            }
        }
    }

    /// Next branching decision, or `None` when every variable is fixed.
    ///
    /// Decision variables go through the heuristic; once they are all fixed,
    /// any remaining auxiliary variable is labeled with its minimum.
    fn select_branch(&mut self, h: &mut dyn Heuristic) -> Option<(VarId, Value)> {
        self.candidates.clear();
        let store = &self.store;
        self.candidates.extend(
            self.model
                .decision_vars()
                .iter()
                .copied()
                .filter(|&x| !store.is_fixed(x)),
        );
        if self.candidates.is_empty() {
            let x = store.vars().find(|&x| !store.is_fixed(x))?;
            return Some((x, store.min(x)));
        }
        let x = h.select_variable(&self.candidates, store, &mut self.rng);
        let v = h.select_value(x, store, &mut self.rng);
        debug_assert!(store.contains(x, v) && !store.is_fixed(x));
        Some((x, v))
    }

    fn search_round(&mut self, h: &mut dyn Heuristic, restarts: &mut RestartController) -> Flow {
        let model = self.model;
        let props = model.propagators();
        let mut stack: Vec<(usize, VarId, Value)> = Vec::new();
        loop {
            // The current node is consistent here.
            self.nodes += 1;
            if self.nodes.is_multiple_of(CLOCK_INTERVAL) && self.past_deadline() {
                return Flow::Stop(SearchStatus::TimedOut);
            }
            match self.select_branch(h) {
                None => {
                    let sol = self.store.assignment().expect("leaf with a free variable");
                    if let Some(status) = self.on_solution(sol) {
                        return Flow::Stop(status);
                    }
                }
                Some((x, v)) => {
                    self.stats.choice_points += 1;
                    let level = self.store.push_level();
                    stack.push((level, x, v));
                    self.store.clear_touched();
                    let before = self.store.search_space_log_size();
                    self.store.assign(x, v);
                    let result = self.engine.propagate(props, &mut self.store, Seed::Changes);
                    let after = if result.is_consistent() {
                        self.store.search_space_log_size()
                    } else {
                        f64::NEG_INFINITY
                    };
                    let decision = Decision {
                        var: x,
                        value: v,
                        log_size_before: before,
                        log_size_after: after,
                        result: &result,
                    };
                    h.on_decision(&decision, &self.store);
                    match result.failed_propagator() {
                        None => continue,
                        Some(c) => {
                            if let Some(flow) = self.fail(h, restarts, Some(c)) {
                                return flow;
                            }
                        }
                    }
                }
            }

            // Backtrack to the deepest decision whose refutation is consistent.
            loop {
                let Some((level, x, v)) = stack.pop() else {
                    return Flow::Exhausted;
                };
                self.nodes += 1;
                self.store.restore_to(level);
                if let Err(c) = self.enforce_bound() {
                    if let Some(flow) = self.fail(h, restarts, c) {
                        return flow;
                    }
                    continue;
                }
                self.store.clear_touched();
                let result = match self.store.remove_value(x, v) {
                    ChangeOutcome::WouldEmpty => {
                        if let Some(flow) = self.fail(h, restarts, None) {
                            return flow;
                        }
                        continue;
                    }
                    _ => self.engine.propagate(props, &mut self.store, Seed::Changes),
                };
                h.on_refutation(&result, &self.store);
                match result.failed_propagator() {
                    None => break,
                    Some(c) => {
                        if let Some(flow) = self.fail(h, restarts, Some(c)) {
                            return flow;
                        }
                    }
                }
            }
        }
    }

    /// Books a failure. Returns the control flow if a limit or restart fires.
    fn fail(
        &mut self,
        h: &mut dyn Heuristic,
        restarts: &mut RestartController,
        culprit: Option<PropagatorId>,
    ) -> Option<Flow> {
        self.stats.failures += 1;
        if let Some(c) = culprit {
            h.on_failure(c);
        }
        if self
            .limits
            .max_failures
            .is_some_and(|m| self.stats.failures >= m)
        {
            return Some(Flow::Stop(SearchStatus::FailureLimit));
        }
        match restarts.on_failure() {
            RestartDecision::RestartNow => Some(Flow::Restart),
            RestartDecision::Continue => None,
        }
    }

    /// Requires the objective to beat the incumbent at the current node.
    fn enforce_bound(&mut self) -> Result<(), Option<PropagatorId>> {
        let (Mode::Optimize(obj), Some(z)) = (self.mode, self.incumbent) else {
            return Ok(());
        };
        let outcome = match obj.direction {
            Direction::Maximize => self.store.tighten_min(obj.var, z + 1),
            Direction::Minimize => self.store.tighten_max(obj.var, z - 1),
        };
        match outcome {
            ChangeOutcome::Unchanged => Ok(()),
            ChangeOutcome::WouldEmpty => Err(None),
            ChangeOutcome::Shrunk => {
                self.store.clear_touched();
                let result =
                    self.engine
                        .propagate(self.model.propagators(), &mut self.store, Seed::Changes);
                match result.failed_propagator() {
                    None => Ok(()),
                    Some(c) => Err(Some(c)),
                }
            }
        }
    }

    /// Records a solution; returns a status if the solve should stop.
    fn on_solution(&mut self, sol: Vec<Value>) -> Option<SearchStatus> {
        debug_assert!(
            self.model.is_solution(&sol),
            "solver produced a non-solution"
        );
        let time_s = self.elapsed_s();
        match self.mode {
            Mode::Satisfy => {
                self.stats.solutions.push(SolutionRecord {
                    objective: None,
                    time_s,
                });
                self.stats.best = Some(sol);
                Some(SearchStatus::SolutionFound)
            }
            Mode::Enumerate => {
                self.stats.all_solutions.push(sol);
                None
            }
            Mode::Optimize(obj) => {
                let z = sol[obj.var.index()];
                if self.incumbent.is_none_or(|inc| obj.improves(z, inc)) {
                    self.incumbent = Some(z);
                    self.stats.solutions.push(SolutionRecord {
                        objective: Some(z),
                        time_s,
                    });
                    self.stats.best = Some(sol);
                }
                None
            }
        }
    }
}

/// Solves `model`: first solution for satisfaction models, proved optimum
/// for models with an objective, within `limits`.
pub fn solve(
    model: &Model,
    heuristic: &mut dyn Heuristic,
    policy: RestartPolicy,
    rng: SearchRng,
    limits: SearchLimits,
) -> SearchStats {
    Solver::new(model, rng, limits).solve(heuristic, policy)
}

/// Enumerates every solution of `model`, ignoring any objective.
pub fn solve_all(
    model: &Model,
    heuristic: &mut dyn Heuristic,
    rng: SearchRng,
    limits: SearchLimits,
) -> SearchStats {
    Solver::new(model, rng, limits)
        .enumerate_all()
        .solve(heuristic, RestartPolicy::none())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heuristics::{build_heuristic, HeuristicKind, HeuristicParams};
    use crate::models::{build_knapsack_cop, parse_knapsack};
    use crate::propagation::LessEq;
    use rand::SeedableRng;

    const KINDS: [HeuristicKind; 3] = [HeuristicKind::Abs, HeuristicKind::Ibs, HeuristicKind::Wdeg];

    fn run(model: &Model, kind: HeuristicKind, seed: u64) -> SearchStats {
        let mut h = build_heuristic(kind, &HeuristicParams::default(), model);
        solve(
            model,
            h.as_mut(),
            RestartPolicy::none(),
            SearchRng::seed_from_u64(seed),
            SearchLimits::default(),
        )
    }

    #[test]
    fn unconstrained_pair() {
        let mut m = Model::new("t");
        m.add_var(0, 1);
        m.add_var(0, 1);
        for kind in KINDS {
            let st = run(&m, kind, 1);
            assert_eq!(st.status, SearchStatus::SolutionFound);
            assert!(st.choice_points <= 2);
        }
    }

    #[test]
    fn contradictory_order_fails_at_root() {
        let mut m = Model::new("t");
        let x = m.add_var(0, 5);
        let y = m.add_var(0, 5);
        m.post(LessEq::less_than(x, y)).unwrap();
        m.post(LessEq::less_than(y, x)).unwrap();
        for kind in KINDS {
            let st = run(&m, kind, 1);
            assert_eq!(st.status, SearchStatus::ProvedInfeasible);
            assert_eq!(st.choice_points, 0);
        }
    }

    #[test]
    fn maximize_single_variable() {
        let mut m = Model::new("t");
        let x = m.add_var(0, 3);
        m.set_objective(x, Direction::Maximize);
        for kind in KINDS {
            let st = run(&m, kind, 5);
            assert_eq!(st.status, SearchStatus::ProvedOptimal);
            assert_eq!(st.objective(), Some(3));
            let objs: Vec<_> = st.solutions.iter().map(|s| s.objective.unwrap()).collect();
            assert!(objs.windows(2).all(|w| w[0] < w[1]), "{objs:?}");
        }
    }

    #[test]
    fn minimize_single_variable() {
        let mut m = Model::new("t");
        let x = m.add_var(-2, 3);
        m.set_objective(x, Direction::Minimize);
        let st = run(&m, HeuristicKind::Wdeg, 0);
        assert_eq!(st.status, SearchStatus::ProvedOptimal);
        assert_eq!(st.objective(), Some(-2));
    }

    #[test]
    fn two_item_knapsack() {
        let inst = parse_knapsack("t", "2 1\n10 6\n5 4\n5").unwrap();
        let m = build_knapsack_cop(&inst).unwrap();
        for kind in KINDS {
            let st = run(&m, kind, 3);
            assert_eq!(st.status, SearchStatus::ProvedOptimal);
            assert_eq!(st.objective(), Some(10));
        }
    }

    #[test]
    fn infeasible_cop_has_no_solutions() {
        let mut m = Model::new("t");
        let x = m.add_var(0, 3);
        let y = m.add_var(0, 3);
        m.post(LessEq::new(x, y, 4)).unwrap();
        m.set_objective(x, Direction::Maximize);
        let st = run(&m, HeuristicKind::Abs, 0);
        assert_eq!(st.status, SearchStatus::ProvedInfeasible);
        assert!(st.solutions.is_empty());
    }

    #[test]
    fn enumeration_finds_every_solution() {
        let mut m = Model::new("t");
        let x = m.add_var(0, 3);
        let y = m.add_var(0, 3);
        m.post(LessEq::less_than(x, y)).unwrap();
        for kind in KINDS {
            let mut h = build_heuristic(kind, &HeuristicParams::default(), &m);
            let st = solve_all(
                &m,
                h.as_mut(),
                SearchRng::seed_from_u64(9),
                SearchLimits::default(),
            );
            let mut sols = st.all_solutions.clone();
            sols.sort();
            sols.dedup();
            assert_eq!(sols.len(), st.all_solutions.len());
            assert_eq!(sols.len(), 6);
        }
    }

    #[test]
    fn failure_limit_stops() {
        // Pigeonhole: 4 pairwise-different variables over 3 values.
        let mut m = Model::new("t");
        let xs: Vec<_> = (0..4).map(|_| m.add_var(0, 2)).collect();
        m.post(crate::propagation::AllDifferent::new(xs)).unwrap();
        let mut h = build_heuristic(HeuristicKind::Wdeg, &HeuristicParams::default(), &m);
        let limits = SearchLimits {
            timeout: None,
            max_failures: Some(2),
        };
        let st = solve(
            &m,
            h.as_mut(),
            RestartPolicy::none(),
            SearchRng::seed_from_u64(0),
            limits,
        );
        assert_eq!(st.status, SearchStatus::FailureLimit);
        assert_eq!(st.failures, 2);
    }

    #[test]
    fn zero_timeout_times_out() {
        let mut m = Model::new("t");
        let xs: Vec<_> = (0..4).map(|_| m.add_var(0, 2)).collect();
        m.post(crate::propagation::AllDifferent::new(xs)).unwrap();
        let mut h = build_heuristic(HeuristicKind::Wdeg, &HeuristicParams::default(), &m);
        let st = solve(
            &m,
            h.as_mut(),
            RestartPolicy::none(),
            SearchRng::seed_from_u64(0),
            SearchLimits::timeout(Duration::ZERO),
        );
        assert_eq!(st.status, SearchStatus::TimedOut);
    }
}
