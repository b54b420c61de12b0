mod common;

use common::{check_propagator, random_propagator_instance, run_propagator, Con, PROPAGATOR_KINDS};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn fixpoints_match_reference(seed in any::<u64>(), kind in 0..PROPAGATOR_KINDS.len()) {
        let (doms, con) = random_propagator_instance(&mut common::rng(seed), PROPAGATOR_KINDS[kind]);
        if let Err(e) = check_propagator(&con, &doms) {
            return Err(TestCaseError::fail(e));
        }
    }

    /// Running a propagator again on its own output changes nothing.
    #[test]
    fn fixpoints_are_idempotent(seed in any::<u64>(), kind in 0..PROPAGATOR_KINDS.len()) {
        let (doms, con) = random_propagator_instance(&mut common::rng(seed), PROPAGATOR_KINDS[kind]);
        if let Some(once) = run_propagator(&con, &doms) {
            prop_assert_eq!(run_propagator(&con, &once), Some(once));
        }
    }
}

fn range(lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi).collect()
}

#[test]
fn sum_examples() {
    let sum = Con::Eq(vec![(1, 0), (1, 1)], 5);
    let d = vec![range(1, 4), range(1, 4)];
    assert_eq!(run_propagator(&sum, &d), Some(d.clone()));
    let d = vec![range(1, 4), range(1, 2)];
    assert_eq!(
        run_propagator(&sum, &d),
        Some(vec![range(3, 4), range(1, 2)])
    );

    let weighted = Con::Eq(vec![(2, 0), (1, 1)], 10);
    let got = run_propagator(&weighted, &vec![range(0, 5), range(0, 3)]).unwrap();
    assert_eq!(got[0], range(4, 5));

    let leq = Con::Leq(vec![(1, 0), (1, 1)], 3);
    let got = run_propagator(&leq, &vec![range(0, 9), vec![2]]).unwrap();
    assert_eq!(got[0], range(0, 1));
}

#[test]
fn order_examples() {
    let lt = Con::Less(0, 1, 1);
    assert_eq!(run_propagator(&lt, &vec![vec![5], range(1, 5)]), None);
    assert_eq!(run_propagator(&lt, &vec![vec![9], range(1, 9)]), None);
    assert_eq!(
        run_propagator(&lt, &vec![range(1, 9), range(1, 9)]),
        Some(vec![range(1, 8), range(2, 9)])
    );
    let le = Con::Less(0, 1, 0);
    let d = vec![range(1, 3), range(5, 9)];
    assert_eq!(run_propagator(&le, &d), Some(d.clone()));
}

#[test]
fn alldifferent_examples() {
    let ad = Con::AllDiff(vec![0, 1, 2]);
    // x = 3 removes 3 from y and z; y and z become bound in turn.
    let got = run_propagator(&ad, &vec![vec![3], vec![1, 3], vec![3, 4]]).unwrap();
    assert_eq!(got, vec![vec![3], vec![1], vec![4]]);
    let disjoint = vec![vec![1, 2], vec![3, 4], vec![5]];
    assert_eq!(run_propagator(&ad, &disjoint), Some(disjoint.clone()));
    assert_eq!(
        run_propagator(&Con::AllDiff(vec![0, 1]), &vec![vec![2], vec![2]]),
        None
    );
}

#[test]
fn knapsack_examples() {
    let k = Con::Knapsack(vec![0, 1, 2], vec![6, 5, 4], 0, 9);
    let got = run_propagator(&k, &vec![vec![1], vec![0, 1], vec![0, 1]]).unwrap();
    assert_eq!(got, vec![vec![1], vec![0], vec![0]]);
    let slack = Con::Knapsack(vec![0, 1, 2], vec![6, 5, 4], 0, 15);
    let free = vec![vec![0, 1]; 3];
    assert_eq!(run_propagator(&slack, &free), Some(free.clone()));
    let over = Con::Knapsack(vec![0, 1], vec![6, 6], 0, 9);
    assert_eq!(run_propagator(&over, &vec![vec![1], vec![1]]), None);
}
