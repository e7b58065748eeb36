mod common;

use common::{all_know, brute_force_cdf, dense_expected_time, everyone_full, site_full};
use gfl_core::exact::{
    recurrence_residual, ring_single_info_expectation, single_info_expectation_complete, star_total_expectation,
    total_time_bounds,
};
use gfl_core::oracle::{
    enumerate_reachable, exact_tables, expected_hitting_time, hitting_time_cdf, reversal_gap, DEFAULT_SITE_CAP,
    DEFAULT_STATE_CAP,
};
use gfl_core::{make_complete, make_path, make_ring, make_star, ExactValue, Graph, Scenario, Target};

type Pred = Box<dyn Fn(&gfl_core::InfoState) -> bool>;

fn q(s: &str) -> ExactValue {
    s.parse().unwrap()
}

#[test]
fn dense_oracle_freezes_small_values() {
    let k3 = make_complete(3).unwrap();
    assert_eq!(dense_expected_time(&k3, &Scenario::DistinctAll, &everyone_full()), q("4"));
    assert_eq!(dense_expected_time(&k3, &Scenario::DistinctAll, &all_know(vec![0])), q("3"));
    assert_eq!(dense_expected_time(&k3, &Scenario::DistinctAll, &all_know(vec![0, 1])), q("7/2"));
    assert_eq!(dense_expected_time(&k3, &Scenario::DuplicatedFirst, &all_know(vec![0])), q("3/2"));
    assert_eq!(dense_expected_time(&k3, &Scenario::DuplicatedFirst, &all_know(vec![0, 1])), q("3"));
    let r4 = make_ring(4).unwrap();
    assert_eq!(dense_expected_time(&r4, &Scenario::DistinctAll, &all_know(vec![0])), q("6"));
    let r5 = make_ring(5).unwrap();
    assert_eq!(dense_expected_time(&r5, &Scenario::DistinctAll, &all_know(vec![0])), q("10"));
}

#[test]
fn back_substitution_matches_dense_elimination() {
    let graphs = [
        make_complete(3).unwrap(),
        make_complete(4).unwrap(),
        make_path(4).unwrap(),
        make_star(3).unwrap(),
        Graph::from_edge_list("0 1\n1 2\n2 0\n2 3").unwrap(),
    ];
    for g in &graphs {
        let n = g.site_count();
        let cases: Vec<(Target, Pred)> = vec![
            (Target::AllInformed, Box::new(everyone_full())),
            (Target::Infos(vec![n - 1]), Box::new(all_know(vec![n - 1]))),
            (Target::Infos(vec![0, 1]), Box::new(all_know(vec![0, 1]))),
            (Target::SiteFull(1), Box::new(site_full(1))),
        ];
        for (target, pred) in &cases {
            let fast = expected_hitting_time(g, &Scenario::DistinctAll, target).unwrap();
            let dense = dense_expected_time(g, &Scenario::DistinctAll, pred.as_ref());
            assert_eq!(fast, dense, "{:?} {target:?}", g.edges());
        }
    }
}

#[test]
fn cdf_matches_sequence_enumeration() {
    let k3 = make_complete(3).unwrap();
    let brute = brute_force_cdf(&k3, &Scenario::DistinctAll, &all_know(vec![0]), 2);
    assert_eq!(brute, vec![q("0"), q("0"), q("4/9")]);

    let cases: Vec<(Graph, usize)> = vec![
        (make_complete(3).unwrap(), 7),
        (make_path(3).unwrap(), 8),
        (make_star(3).unwrap(), 6),
        (make_complete(4).unwrap(), 5),
    ];
    for (g, horizon) in &cases {
        for (target, pred) in [
            (Target::AllInformed, Box::new(everyone_full()) as Pred),
            (Target::Infos(vec![1]), Box::new(all_know(vec![1]))),
            (Target::SiteFull(0), Box::new(site_full(0))),
        ] {
            let exact = hitting_time_cdf(g, &Scenario::DistinctAll, &target, *horizon).unwrap();
            let brute = brute_force_cdf(g, &Scenario::DistinctAll, pred.as_ref(), *horizon);
            assert_eq!(exact, brute, "{:?} {target:?}", g.edges());
        }
    }
}

#[test]
fn single_information_closed_form() {
    for n in 2..=4 {
        let g = make_complete(n).unwrap();
        let oracle = expected_hitting_time(&g, &Scenario::DistinctAll, &Target::Infos(vec![0])).unwrap();
        assert_eq!(oracle, single_info_expectation_complete(n).unwrap(), "n = {n}");
    }
}

#[test]
fn star_total_closed_form() {
    for leaves in 1..=3 {
        let g = make_star(leaves).unwrap();
        let oracle = expected_hitting_time(&g, &Scenario::DistinctAll, &Target::AllInformed).unwrap();
        assert_eq!(oracle, star_total_expectation(leaves).unwrap(), "leaves = {leaves}");
    }
}

#[test]
fn ring_closed_form() {
    for n in 3..=5 {
        let g = make_ring(n).unwrap();
        let oracle = expected_hitting_time(&g, &Scenario::DistinctAll, &Target::Infos(vec![0])).unwrap();
        assert_eq!(oracle, ring_single_info_expectation(n).unwrap(), "n = {n}");
    }
}

#[test]
fn tables_satisfy_chains_and_recurrence() {
    for n in 3..=4 {
        let t = exact_tables(n, DEFAULT_SITE_CAP).unwrap();
        assert!(t.m.windows(2).all(|w| w[0] <= w[1]), "M not monotone for n = {n}");
        assert!(t.a.windows(2).all(|w| w[0] <= w[1]), "A not monotone for n = {n}");
        let chain = t.interleaved();
        for w in chain.windows(2) {
            assert!(w[0].1 <= w[1].1, "{} > {} for n = {n}", w[0].0, w[1].0);
        }
        for k in 2..n {
            let r = recurrence_residual(n, k, t.m_at(k), t.a_at(k + 1), t.a_at(k)).unwrap();
            assert!(r.is_zero(), "n = {n}, k = {k}, residual {r}");
        }
        assert!(total_time_bounds(n).unwrap().contains(t.m_at(n)));
    }
    let t3 = exact_tables(3, DEFAULT_SITE_CAP).unwrap();
    let r = recurrence_residual(3, 2, t3.m_at(2), t3.a_at(3), t3.a_at(2)).unwrap();
    assert!(r.is_zero());
    assert_eq!(exact_tables(4, DEFAULT_SITE_CAP).unwrap().m[0], q("11/2"));
}

#[test]
fn reversal_duality_holds_exactly() {
    let cases: Vec<(Graph, Vec<usize>)> = vec![
        (make_complete(3).unwrap(), vec![0]),
        (make_path(3).unwrap(), vec![0, 1]),
        (make_star(3).unwrap(), vec![0, 1]),
        (make_complete(4).unwrap(), vec![2]),
        (make_ring(5).unwrap(), vec![0]),
        (Graph::from_edge_list("0 1\n1 2\n2 0\n2 3").unwrap(), vec![0, 2, 3]),
    ];
    for (g, sites) in &cases {
        for &x in sites {
            assert!(reversal_gap(g, x, 50).unwrap().is_zero(), "{:?} site {x}", g.edges());
        }
    }
}

#[test]
fn cdf_tails_are_small_by_step_fifty() {
    let graphs = [
        make_complete(2).unwrap(),
        make_complete(3).unwrap(),
        make_complete(4).unwrap(),
        make_path(3).unwrap(),
        make_star(3).unwrap(),
    ];
    let tol = q("1/1000");
    for g in &graphs {
        let idx = enumerate_reachable(g, &Scenario::DistinctAll, DEFAULT_STATE_CAP).unwrap();
        for target in [Target::AllInformed, Target::Infos(vec![0]), Target::SiteFull(0)] {
            let cdf = idx.hitting_time_cdf(&target, 50).unwrap();
            assert!(cdf.windows(2).all(|w| w[0] <= w[1]));
            let tail = ExactValue::one() - &cdf[50];
            assert!(tail < tol, "{:?} {target:?}: tail {}", g.edges(), tail.to_f64());
        }
    }
}
