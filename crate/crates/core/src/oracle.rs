//! Exact ground truth on tiny instances.
//!
//! The full configuration space reachable from an initial scenario is
//! enumerated, and hitting times are solved with exact rational arithmetic.
//! A configuration is packed into a `u128`, `m` bits per site.
//!
//! Every non-trivial transition strictly grows at least one site's set, so
//! the chain minus self-loops is acyclic. Ordering states by total number of
//! known (site, information) pairs, descending, makes the first-step linear
//! system upper triangular and it is solved by back substitution without any
//! fill-in.

use std::collections::{HashMap, VecDeque};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::exact::ExactValue;
use crate::graph::{make_complete, Graph};
use crate::process::{ProcessError, Scenario};

/// Largest `K_n` handled by [`exact_tables`] unless overridden.
pub const DEFAULT_SITE_CAP: usize = 4;
/// Largest reachable state space enumerated unless overridden.
pub const DEFAULT_STATE_CAP: usize = 200_000;
/// State cap used by the floating-point table path.
pub const FLOAT_STATE_CAP: usize = 20_000_000;
/// Environment variable overriding [`DEFAULT_SITE_CAP`].
pub const SITE_CAP_ENV: &str = "GFL_ORACLE_CAP";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("state cap {cap} exceeded after enumerating {reached} configurations")]
    StateCapExceeded { cap: usize, reached: usize },
    #[error("oracle size cap exceeded: n = {n} > cap {cap}")]
    SiteCapExceeded { n: usize, cap: usize },
    #[error("instance too large to pack: {sites} sites x {infos} informations > 128 bits")]
    TooLarge { sites: usize, infos: usize },
    #[error("invalid target: {0}")]
    InvalidTarget(String),
    #[error("target is not reached with probability one")]
    UnreachableTarget,
}

/// Site cap from `GFL_ORACLE_CAP`, falling back to [`DEFAULT_SITE_CAP`].
pub fn site_cap_from_env() -> usize {
    std::env::var(SITE_CAP_ENV).ok().and_then(|v| v.trim().parse().ok()).unwrap_or(DEFAULT_SITE_CAP)
}

/// Stopping predicate on configurations. All of them are monotone: once
/// true they stay true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    /// Every site knows every information in the set.
    Infos(Vec<usize>),
    /// Every site knows every information.
    AllInformed,
    /// The given site knows every information.
    SiteFull(usize),
}

/// Dense index of the configurations reachable from one initial scenario,
/// together with the full one-step transition table.
#[derive(Debug, Clone)]
pub struct ConfigurationIndex {
    n: usize,
    m: usize,
    edge_count: usize,
    states: Vec<u128>,
    lookup: HashMap<u128, u32>,
    /// `successors[s * edge_count + e]`: state reached from `s` via edge `e`.
    successors: Vec<u32>,
    /// States by decreasing total popcount; successors come first.
    solve_order: Vec<u32>,
}

impl ConfigurationIndex {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> usize {
        0
    }

    pub fn site_count(&self) -> usize {
        self.n
    }

    pub fn info_count(&self) -> usize {
        self.m
    }

    pub fn index_of(&self, config: &[u32]) -> Option<usize> {
        self.lookup.get(&self.pack(config)).map(|&i| i as usize)
    }

    /// Per-site information bitmasks of state `index`.
    pub fn configuration(&self, index: usize) -> Vec<u32> {
        let word = self.states[index];
        (0..self.n).map(|x| self.site_mask(word, x)).collect()
    }

    pub fn successor(&self, state: usize, edge: usize) -> usize {
        self.successors[state * self.edge_count + edge] as usize
    }

    fn full_mask(&self) -> u32 {
        if self.m == 32 {
            u32::MAX
        } else {
            (1u32 << self.m) - 1
        }
    }

    fn site_mask(&self, word: u128, x: usize) -> u32 {
        ((word >> (x * self.m)) as u32) & self.full_mask()
    }

    fn pack(&self, config: &[u32]) -> u128 {
        config.iter().enumerate().fold(0u128, |acc, (x, &mask)| acc | (mask as u128) << (x * self.m))
    }

    fn compile(&self, target: &Target) -> Result<Vec<bool>, OracleError> {
        let full = self.full_mask();
        let pred: Box<dyn Fn(u128) -> bool + '_> = match target {
            Target::Infos(h) => {
                if h.is_empty() || h.iter().any(|&i| i >= self.m) {
                    return Err(OracleError::InvalidTarget(format!("{h:?} with {} informations", self.m)));
                }
                let mask = h.iter().fold(0u32, |acc, &i| acc | 1 << i);
                Box::new(move |w| (0..self.n).all(|x| self.site_mask(w, x) & mask == mask))
            }
            Target::AllInformed => Box::new(move |w| (0..self.n).all(|x| self.site_mask(w, x) == full)),
            Target::SiteFull(site) => {
                if *site >= self.n {
                    return Err(OracleError::InvalidTarget(format!("site {site} of {}", self.n)));
                }
                let site = *site;
                Box::new(move |w| self.site_mask(w, site) == full)
            }
        };
        Ok(self.states.iter().map(|&w| pred(w)).collect())
    }

    /// Exact expected hitting time of `target` from the initial state.
    ///
    /// Solves `E[s] = 1 + (1/|E|) sum_e E[next(s, e)]` with `E = 0` on target
    /// states.
    pub fn expected_hitting_time(&self, target: &Target) -> Result<ExactValue, OracleError> {
        let hit = self.compile(target)?;
        let edges = BigInt::from(self.edge_count);
        let mut value: Vec<Option<BigRational>> = vec![None; self.len()];
        for &s in &self.solve_order {
            let s = s as usize;
            if hit[s] {
                value[s] = Some(BigRational::zero());
                continue;
            }
            let mut self_loops = 0usize;
            let mut acc = Some(BigRational::from_integer(edges.clone()));
            for e in 0..self.edge_count {
                let next = self.successor(s, e);
                if next == s {
                    self_loops += 1;
                } else {
                    acc = match (acc, &value[next]) {
                        (Some(a), Some(v)) => Some(a + v),
                        _ => None,
                    };
                }
            }
            if self_loops == self.edge_count {
                acc = None;
            }
            value[s] = acc.map(|a| a / BigInt::from(self.edge_count - self_loops));
        }
        value[self.initial()].take().map(ExactValue::from).ok_or(OracleError::UnreachableTarget)
    }

    /// Floating-point counterpart of [`Self::expected_hitting_time`].
    pub fn expected_hitting_time_f64(&self, target: &Target) -> Result<f64, OracleError> {
        let hit = self.compile(target)?;
        let edges = self.edge_count as f64;
        let mut value = vec![f64::INFINITY; self.len()];
        for &s in &self.solve_order {
            let s = s as usize;
            if hit[s] {
                value[s] = 0.0;
                continue;
            }
            let mut self_loops = 0usize;
            let mut acc = edges;
            for e in 0..self.edge_count {
                let next = self.successor(s, e);
                if next == s {
                    self_loops += 1;
                } else {
                    acc += value[next];
                }
            }
            value[s] =
                if self_loops == self.edge_count { f64::INFINITY } else { acc / (self.edge_count - self_loops) as f64 };
        }
        let v = value[self.initial()];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(OracleError::UnreachableTarget)
        }
    }

    /// Exact `P[tau <= t]` for `t = 0..=horizon`, by pushing edge-sequence
    /// counts forward with target states absorbing.
    pub fn hitting_time_cdf(&self, target: &Target, horizon: usize) -> Result<Vec<ExactValue>, OracleError> {
        let hit = self.compile(target)?;
        let mut counts: Vec<BigUint> = vec![BigUint::zero(); self.len()];
        let mut absorbed = BigUint::zero();
        if hit[self.initial()] {
            absorbed = BigUint::one();
        } else {
            counts[self.initial()] = BigUint::one();
        }
        let mut total = BigUint::one();
        let mut cdf = Vec::with_capacity(horizon + 1);
        cdf.push(ExactValue::from(BigRational::new(absorbed.clone().into(), total.clone().into())));
        let mut live: Vec<usize> = if hit[self.initial()] { vec![] } else { vec![self.initial()] };
        for _ in 0..horizon {
            let mut next_counts: Vec<BigUint> = vec![BigUint::zero(); self.len()];
            let mut touched = Vec::new();
            absorbed *= self.edge_count;
            for &s in &live {
                let c = std::mem::take(&mut counts[s]);
                for e in 0..self.edge_count {
                    let t = self.successor(s, e);
                    if hit[t] {
                        absorbed += &c;
                    } else {
                        if next_counts[t].is_zero() {
                            touched.push(t);
                        }
                        next_counts[t] += &c;
                    }
                }
            }
            counts = next_counts;
            live = touched;
            total *= self.edge_count;
            cdf.push(ExactValue::from(BigRational::new(absorbed.clone().into(), total.clone().into())));
        }
        Ok(cdf)
    }
}

/// Breadth-first closure of the initial configuration of `scenario` under
/// every one-edge transition.
pub fn enumerate_reachable(
    g: &Graph,
    scenario: &Scenario,
    state_cap: usize,
) -> Result<ConfigurationIndex, OracleError> {
    if !g.is_connected() {
        return Err(ProcessError::Disconnected.into());
    }
    let n = g.site_count();
    let (sets, m) = scenario.initial_sets(n)?;
    if m > 32 || n * m > 128 {
        return Err(OracleError::TooLarge { sites: n, infos: m });
    }
    let edge_count = g.edge_count();
    let mut index = ConfigurationIndex {
        n,
        m,
        edge_count,
        states: Vec::new(),
        lookup: HashMap::new(),
        successors: Vec::new(),
        solve_order: Vec::new(),
    };
    let initial: Vec<u32> = sets.iter().map(|s| s.iter().fold(0u32, |acc, &i| acc | 1 << i)).collect();
    let start = index.pack(&initial);
    index.states.push(start);
    index.lookup.insert(start, 0);

    let mut queue = VecDeque::from([0usize]);
    while let Some(s) = queue.pop_front() {
        let word = index.states[s];
        for &(a, b) in g.edges() {
            let (ma, mb) = (index.site_mask(word, a), index.site_mask(word, b));
            let u = (ma | mb) as u128;
            let next = word | u << (a * m) | u << (b * m);
            let id = match index.lookup.get(&next) {
                Some(&id) => id,
                None => {
                    if index.states.len() >= state_cap {
                        return Err(OracleError::StateCapExceeded { cap: state_cap, reached: index.states.len() });
                    }
                    let id = index.states.len() as u32;
                    index.states.push(next);
                    index.lookup.insert(next, id);
                    queue.push_back(id as usize);
                    id
                }
            };
            index.successors.push(id);
        }
    }
    let mut order: Vec<u32> = (0..index.states.len() as u32).collect();
    order.sort_by_key(|&s| std::cmp::Reverse(index.states[s as usize].count_ones()));
    index.solve_order = order;
    Ok(index)
}

pub fn expected_hitting_time(g: &Graph, scenario: &Scenario, target: &Target) -> Result<ExactValue, OracleError> {
    enumerate_reachable(g, scenario, DEFAULT_STATE_CAP)?.expected_hitting_time(target)
}

pub fn hitting_time_cdf(
    g: &Graph,
    scenario: &Scenario,
    target: &Target,
    horizon: usize,
) -> Result<Vec<ExactValue>, OracleError> {
    enumerate_reachable(g, scenario, DEFAULT_STATE_CAP)?.hitting_time_cdf(target, horizon)
}

/// `max_t |P[tau_x <= t] - P[Y_x <= t]|` over `t <= horizon` from the
/// all-distinct scenario, where `tau_x` is the time for information `x` to
/// reach everyone and `Y_x` the time for site `x` to learn everything.
pub fn reversal_gap(g: &Graph, site: usize, horizon: usize) -> Result<ExactValue, OracleError> {
    let index = enumerate_reachable(g, &Scenario::DistinctAll, DEFAULT_STATE_CAP)?;
    let spread = index.hitting_time_cdf(&Target::Infos(vec![site]), horizon)?;
    let gather = index.hitting_time_cdf(&Target::SiteFull(site), horizon)?;
    Ok(spread.iter().zip(&gather).map(|(a, b)| (a - b).abs()).max().unwrap_or_else(ExactValue::zero))
}

/// `M_n(k)` for `k = 1..=n` and `A_n(k)` for `k = 2..=n` on `K_n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactTable {
    pub n: usize,
    /// `m[k - 1] = M_n(k)`.
    pub m: Vec<ExactValue>,
    /// `a[k - 2] = A_n(k)`.
    pub a: Vec<ExactValue>,
}

impl ExactTable {
    /// `M_n(k)`, 1-based.
    pub fn m_at(&self, k: usize) -> &ExactValue {
        &self.m[k - 1]
    }

    /// `A_n(k)`, defined for `k >= 2`.
    pub fn a_at(&self, k: usize) -> &ExactValue {
        &self.a[k - 2]
    }

    /// `A(2), M(1), A(3), M(2), ..., A(n), M(n-1), M(n)`, which must be
    /// non-decreasing.
    pub fn interleaved(&self) -> Vec<(String, &ExactValue)> {
        let mut chain = Vec::with_capacity(2 * self.n - 1);
        for k in 2..=self.n {
            chain.push((format!("A({k})"), self.a_at(k)));
            chain.push((format!("M({})", k - 1), self.m_at(k - 1)));
        }
        chain.push((format!("M({})", self.n), self.m_at(self.n)));
        chain
    }
}

/// Floating-point tables for sizes beyond the exact path.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatTable {
    pub n: usize,
    pub m: Vec<f64>,
    pub a: Vec<f64>,
}

fn check_site_cap(n: usize, site_cap: usize) -> Result<(), OracleError> {
    if n > site_cap {
        return Err(OracleError::SiteCapExceeded { n, cap: site_cap });
    }
    if n < 3 {
        return Err(ProcessError::ScenarioMismatch(format!("tables need n >= 3, got {n}")).into());
    }
    Ok(())
}

/// Exact `M_n` and `A_n` tables for `3 <= n <= site_cap`.
pub fn exact_tables(n: usize, site_cap: usize) -> Result<ExactTable, OracleError> {
    check_site_cap(n, site_cap)?;
    let g = make_complete(n).expect("n >= 3");
    let distinct = enumerate_reachable(&g, &Scenario::DistinctAll, DEFAULT_STATE_CAP)?;
    let duplicated = enumerate_reachable(&g, &Scenario::DuplicatedFirst, DEFAULT_STATE_CAP)?;
    let m =
        (1..=n).map(|k| distinct.expected_hitting_time(&Target::Infos((0..k).collect()))).collect::<Result<_, _>>()?;
    let a = (2..=n)
        .map(|k| duplicated.expected_hitting_time(&Target::Infos((0..k - 1).collect())))
        .collect::<Result<_, _>>()?;
    Ok(ExactTable { n, m, a })
}

/// Same tables in floating point with a larger state budget.
pub fn float_tables(n: usize, site_cap: usize, state_cap: usize) -> Result<FloatTable, OracleError> {
    check_site_cap(n, site_cap)?;
    let g = make_complete(n).expect("n >= 3");
    let distinct = enumerate_reachable(&g, &Scenario::DistinctAll, state_cap)?;
    let duplicated = enumerate_reachable(&g, &Scenario::DuplicatedFirst, state_cap)?;
    let m = (1..=n)
        .map(|k| distinct.expected_hitting_time_f64(&Target::Infos((0..k).collect())))
        .collect::<Result<_, _>>()?;
    let a = (2..=n)
        .map(|k| duplicated.expected_hitting_time_f64(&Target::Infos((0..k - 1).collect())))
        .collect::<Result<_, _>>()?;
    Ok(FloatTable { n, m, a })
}
