//! Test-only oracles that share no code with the library's solvers. They
//! drive transitions through `InfoState::apply_edge`, key states by their
//! information sets, and solve with plain dense elimination or exhaustive
//! enumeration of edge sequences.

#![allow(dead_code)]

use std::collections::HashMap;

use gfl_core::{ExactValue, Graph, InfoState, Scenario};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Key = Vec<Vec<usize>>;

pub fn key(state: &InfoState) -> Key {
    (0..state.site_count()).map(|x| state.infos_of(x)).collect()
}

/// Predicate over a configuration.
pub type Pred<'a> = &'a dyn Fn(&InfoState) -> bool;

pub fn all_know(infos: Vec<usize>) -> impl Fn(&InfoState) -> bool {
    move |s: &InfoState| (0..s.site_count()).all(|x| infos.iter().all(|&i| s.knows(x, i)))
}

pub fn everyone_full() -> impl Fn(&InfoState) -> bool {
    |s: &InfoState| (0..s.site_count()).all(|x| s.is_fully_informed(x))
}

pub fn site_full(site: usize) -> impl Fn(&InfoState) -> bool {
    move |s: &InfoState| s.is_fully_informed(site)
}

/// `P[tau <= t]` for `t = 0..=horizon` by walking all `|E|^t` sequences.
pub fn brute_force_cdf(g: &Graph, scenario: &Scenario, hit: Pred, horizon: usize) -> Vec<ExactValue> {
    let start = InfoState::new(g, scenario).unwrap();
    let e = g.edge_count() as i64;
    // hits[t] counts sequences of length `horizon` already stopped by t, via
    // counting length-t prefixes that first hit at t.
    let mut first_hit = vec![0i64; horizon + 1];
    fn walk(g: &Graph, s: &InfoState, depth: usize, horizon: usize, hit: Pred, first_hit: &mut [i64]) {
        if hit(s) {
            first_hit[depth] += 1;
            return;
        }
        if depth == horizon {
            return;
        }
        for &(a, b) in g.edges() {
            let mut next = s.clone();
            next.apply_edge(a, b);
            walk(g, &next, depth + 1, horizon, hit, first_hit);
        }
    }
    walk(g, &start, 0, horizon, hit, &mut first_hit);
    let mut cdf = Vec::new();
    let mut acc = ExactValue::zero();
    let mut scale = 1i64;
    for (t, &c) in first_hit.iter().enumerate() {
        if t > 0 {
            scale *= e;
        }
        acc = acc + ExactValue::ratio(c, scale);
        cdf.push(acc.clone());
    }
    cdf
}

/// Expected hitting time by dense Gauss-Jordan elimination over every
/// reachable non-target state.
pub fn dense_expected_time(g: &Graph, scenario: &Scenario, hit: Pred) -> ExactValue {
    let start = InfoState::new(g, scenario).unwrap();
    if hit(&start) {
        return ExactValue::zero();
    }
    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    index.insert(key(&start), 0);
    let mut rows: Vec<Vec<(Option<usize>, i64)>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let mut row: HashMap<Option<usize>, i64> = HashMap::new();
        for &(a, b) in g.edges() {
            let mut next = states[i].clone();
            next.apply_edge(a, b);
            let slot = if hit(&next) {
                None
            } else {
                let k = key(&next);
                let id = *index.entry(k).or_insert_with(|| {
                    states.push(next.clone());
                    states.len() - 1
                });
                Some(id)
            };
            *row.entry(slot).or_default() += 1;
        }
        rows.push(row.into_iter().collect());
        i += 1;
    }
    let n = states.len();
    let e = BigRational::from_integer(BigInt::from(g.edge_count()));
    // (|E| I - C) x = |E| 1, C = transition counts among non-target states.
    let mut a = vec![vec![BigRational::zero(); n + 1]; n];
    for (r, row) in rows.iter().enumerate() {
        a[r][r] = e.clone();
        a[r][n] = e.clone();
        for &(slot, c) in row {
            if let Some(col) = slot {
                a[r][col] -= BigRational::from_integer(BigInt::from(c));
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero()).expect("nonsingular");
        a.swap(col, pivot);
        let inv = BigRational::one() / a[col][col].clone();
        for v in a[col].iter_mut() {
            *v *= &inv;
        }
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, p) in row.iter_mut().zip(&pivot_row) {
                    *v -= &f * p;
                }
            }
        }
    }
    ExactValue::from(a[0][n].clone())
}
