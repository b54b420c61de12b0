mod common;

use std::collections::BTreeSet;

use common::{knapsack_optimum, Csp};
use cpsearch::heuristics::{build_heuristic, HeuristicKind, HeuristicParams, SearchRng};
use cpsearch::models::{
    build_knapsack_cop, build_knapsack_csp, build_magic_square, check_magic_square,
    KnapsackInstance, Model,
};
use cpsearch::search::{solve, solve_all, RestartPolicy, SearchLimits, SearchStats, SearchStatus};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

const KINDS: [HeuristicKind; 3] = [HeuristicKind::Abs, HeuristicKind::Ibs, HeuristicKind::Wdeg];

fn run(model: &Model, kind: HeuristicKind, policy: RestartPolicy, seed: u64) -> SearchStats {
    let mut h = build_heuristic(kind, &HeuristicParams::default(), model);
    solve(
        model,
        h.as_mut(),
        policy,
        SearchRng::seed_from_u64(seed),
        SearchLimits::default(),
    )
}

fn enumerate(model: &Model, kind: HeuristicKind, seed: u64) -> SearchStats {
    let mut h = build_heuristic(kind, &HeuristicParams::default(), model);
    solve_all(
        model,
        h.as_mut(),
        SearchRng::seed_from_u64(seed),
        SearchLimits::default(),
    )
}

fn random_knapsack(rng: &mut impl Rng) -> KnapsackInstance {
    let n = rng.random_range(1..=10);
    let m = rng.random_range(1..=3);
    let weights: Vec<Vec<i64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0..=20)).collect())
        .collect();
    let capacities = weights
        .iter()
        .map(|row| rng.random_range(0..=row.iter().sum::<i64>()))
        .collect();
    KnapsackInstance {
        name: "random".into(),
        profits: (0..n).map(|_| rng.random_range(0..=30)).collect(),
        weights,
        capacities,
        optimum: None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn enumeration_matches_generate_and_test(seed in any::<u64>()) {
        let csp = Csp::random(&mut common::rng(seed), 6, 5);
        let want = csp.solutions();
        let model = csp.model();
        for kind in KINDS {
            let stats = enumerate(&model, kind, seed);
            let got: BTreeSet<Vec<i64>> = stats.all_solutions.iter().cloned().collect();
            prop_assert_eq!(got.len(), stats.all_solutions.len(), "{} repeated a solution", kind);
            prop_assert_eq!(&got, &want, "{}", kind);
        }
    }

    /// Satisfaction search, with or without restarts, finds a solution
    /// exactly when one exists.
    #[test]
    fn satisfaction_is_complete(seed in any::<u64>(), restart in any::<bool>()) {
        let csp = Csp::random(&mut common::rng(seed), 6, 5);
        let want = csp.solutions();
        let model = csp.model();
        let policy = if restart { RestartPolicy::geometric(1.5, 2) } else { RestartPolicy::none() };
        for kind in KINDS {
            let stats = run(&model, kind, policy, seed);
            match &stats.best {
                Some(a) => {
                    prop_assert_eq!(stats.status, SearchStatus::SolutionFound);
                    prop_assert!(want.contains(a));
                }
                None => {
                    prop_assert_eq!(stats.status, SearchStatus::ProvedInfeasible);
                    prop_assert!(want.is_empty());
                }
            }
        }
    }

    #[test]
    fn branch_and_bound_is_optimal(seed in any::<u64>(), restart in any::<bool>()) {
        let inst = random_knapsack(&mut common::rng(seed));
        let best = knapsack_optimum(&inst).expect("the empty selection is feasible");
        let model = build_knapsack_cop(&inst).unwrap();
        let policy = if restart { RestartPolicy::geometric_for(1.1, &model) } else { RestartPolicy::none() };
        for kind in KINDS {
            let stats = run(&model, kind, policy, seed);
            prop_assert_eq!(stats.status, SearchStatus::ProvedOptimal);
            prop_assert_eq!(stats.objective(), Some(best), "{}", kind);
            let objs: Vec<i64> = stats.solutions.iter().map(|s| s.objective.unwrap()).collect();
            prop_assert!(objs.windows(2).all(|w| w[0] < w[1]), "incumbents must improve: {:?}", objs);
            let take: Vec<bool> = stats.best.as_ref().unwrap()[..inst.n_items()].iter().map(|&v| v == 1).collect();
            prop_assert_eq!(inst.evaluate(&take), Some(best));
        }
    }
}

#[test]
fn same_seed_same_search() {
    let model = build_magic_square(5).unwrap();
    for kind in KINDS {
        let policy = RestartPolicy::geometric_for(1.1, &model);
        let a = run(&model, kind, policy, 7);
        let b = run(&model, kind, policy, 7);
        assert_eq!(a.best, b.best);
        assert_eq!(
            (
                a.choice_points,
                a.failures,
                a.restarts,
                a.probes,
                a.propagations
            ),
            (
                b.choice_points,
                b.failures,
                b.restarts,
                b.probes,
                b.propagations
            ),
            "{kind}"
        );
    }
}

#[test]
fn magic_squares_are_valid() {
    for n in [3, 4, 5] {
        let model = build_magic_square(n).unwrap();
        for kind in KINDS {
            for seed in 0..3 {
                let stats = run(&model, kind, RestartPolicy::none(), seed);
                assert_eq!(stats.status, SearchStatus::SolutionFound, "msq-{n} {kind}");
                assert!(check_magic_square(n, stats.best.as_ref().unwrap()));
            }
        }
    }
}

fn permutations(items: &mut Vec<i64>, k: usize, f: &mut impl FnMut(&[i64])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permutations(items, k + 1, f);
        items.swap(k, i);
    }
}

/// The ordering constraints keep exactly the 3x3 squares whose diagonals
/// increase downwards and whose top-left corner is below its neighbours.
#[test]
fn magic_three_enumeration() {
    let mut want = BTreeSet::new();
    permutations(&mut (1..=9).collect(), 0, &mut |c| {
        let ordered =
            c[0] < c[4] && c[4] < c[8] && c[2] < c[4] && c[4] < c[6] && c[0] < c[6] && c[0] < c[2];
        if ordered && check_magic_square(3, c) {
            want.insert(c.to_vec());
        }
    });
    assert!(!want.is_empty());
    let model = build_magic_square(3).unwrap();
    for kind in KINDS {
        let got: BTreeSet<Vec<i64>> = enumerate(&model, kind, 1)
            .all_solutions
            .into_iter()
            .collect();
        assert_eq!(got, want, "{kind}");
    }
}

#[test]
fn knapsack_csp_hits_recorded_optimum() {
    let inst = KnapsackInstance {
        name: "toy".into(),
        profits: vec![10, 6, 7],
        weights: vec![vec![5, 4, 3], vec![2, 6, 1]],
        capacities: vec![8, 6],
        optimum: Some(17),
    };
    assert_eq!(knapsack_optimum(&inst), Some(17));
    let model = build_knapsack_csp(&inst).unwrap();
    for kind in KINDS {
        let stats = run(&model, kind, RestartPolicy::none(), 0);
        assert_eq!(stats.status, SearchStatus::SolutionFound);
        let take: Vec<bool> = stats.best.unwrap().iter().map(|&v| v == 1).collect();
        assert_eq!(inst.evaluate(&take), Some(17));
    }
}
