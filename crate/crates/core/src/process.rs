//! The discrete-time rumor process.
//!
//! Each step picks one edge uniformly at random and both endpoints replace
//! their information set with the union of the two. Information sets are
//! word-packed bit arrays stored contiguously, one block of words per site.

use rand::Rng;
use thiserror::Error;

use crate::graph::Graph;
use crate::rng::rng_from_seed;

/// Default cap on the number of steps of a single run.
pub const DEFAULT_STEP_CAP: u64 = 100_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("graph is not connected")]
    Disconnected,
    #[error("scenario does not fit the graph: {0}")]
    ScenarioMismatch(String),
    #[error("invalid stop specification: {0}")]
    InvalidSpec(String),
    #[error("step cap {cap} exceeded (seed {seed})")]
    CapExceeded { cap: u64, seed: u64, partial: Box<RunRecord> },
}

/// Initial distribution of informations over the sites.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Site `x` knows exactly information `x`.
    DistinctAll,
    /// Sites 0 and 1 know information 0; site `x >= 2` knows `x - 1`.
    DuplicatedFirst,
    /// Explicit per-site sets. Informations are `0..=max`, and every one of
    /// them must be known by at least one site.
    Custom(Vec<Vec<usize>>),
}

impl Scenario {
    /// Per-site initial sets and the total information count for `n` sites.
    pub fn initial_sets(&self, n: usize) -> Result<(Vec<Vec<usize>>, usize), ProcessError> {
        match self {
            Scenario::DistinctAll => Ok(((0..n).map(|x| vec![x]).collect(), n)),
            Scenario::DuplicatedFirst => {
                if n < 3 {
                    return Err(ProcessError::ScenarioMismatch(format!(
                        "duplicated-first scenario needs n >= 3, got {n}"
                    )));
                }
                let sets = (0..n).map(|x| vec![x.saturating_sub(1)]).collect();
                Ok((sets, n - 1))
            }
            Scenario::Custom(sets) => {
                if sets.len() != n {
                    return Err(ProcessError::ScenarioMismatch(format!(
                        "custom scenario lists {} sites, graph has {n}",
                        sets.len()
                    )));
                }
                let m = match sets.iter().flatten().max() {
                    Some(&max) => max + 1,
                    None => return Err(ProcessError::ScenarioMismatch("custom scenario holds no information".into())),
                };
                let mut held = vec![false; m];
                for &i in sets.iter().flatten() {
                    held[i] = true;
                }
                if let Some(missing) = held.iter().position(|h| !h) {
                    return Err(ProcessError::ScenarioMismatch(format!("information {missing} is known by no site")));
                }
                Ok((sets.clone(), m))
            }
        }
    }
}

/// Full process configuration: every site's information set and the clock.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoState {
    n: usize,
    m: usize,
    words: usize,
    bits: Vec<u64>,
    t: u64,
}

impl InfoState {
    /// Initial configuration of `scenario` on `g` at time 0.
    pub fn new(g: &Graph, scenario: &Scenario) -> Result<Self, ProcessError> {
        if !g.is_connected() {
            return Err(ProcessError::Disconnected);
        }
        let n = g.site_count();
        let (sets, m) = scenario.initial_sets(n)?;
        Ok(Self::from_sets(m, &sets))
    }

    fn from_sets(m: usize, sets: &[Vec<usize>]) -> Self {
        let n = sets.len();
        let words = m.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for (x, set) in sets.iter().enumerate() {
            for &i in set {
                bits[x * words + i / 64] |= 1 << (i % 64);
            }
        }
        Self { n, m, words, bits, t: 0 }
    }

    pub fn site_count(&self) -> usize {
        self.n
    }

    pub fn info_count(&self) -> usize {
        self.m
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    fn block(&self, site: usize) -> &[u64] {
        &self.bits[site * self.words..(site + 1) * self.words]
    }

    pub fn knows(&self, site: usize, info: usize) -> bool {
        self.block(site)[info / 64] >> (info % 64) & 1 == 1
    }

    /// Informations known by `site`, ascending.
    pub fn infos_of(&self, site: usize) -> Vec<usize> {
        (0..self.m).filter(|&i| self.knows(site, i)).collect()
    }

    pub fn known_count(&self, site: usize) -> usize {
        self.block(site).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_fully_informed(&self, site: usize) -> bool {
        self.known_count(site) == self.m
    }

    /// `N(t)`: number of sites that know every information.
    pub fn count_fully_informed(&self) -> usize {
        (0..self.n).filter(|&x| self.is_fully_informed(x)).count()
    }

    /// Informations known by at least one site.
    pub fn union_all(&self) -> Vec<usize> {
        (0..self.m).filter(|&i| (0..self.n).any(|x| self.knows(x, i))).collect()
    }

    /// Shares information along edge `{a, b}` and advances the clock.
    /// Returns whether each endpoint's set grew.
    pub fn apply_edge(&mut self, a: usize, b: usize) -> (bool, bool) {
        let (wa, wb) = (a * self.words, b * self.words);
        let (mut grew_a, mut grew_b) = (false, false);
        for i in 0..self.words {
            let (x, y) = (self.bits[wa + i], self.bits[wb + i]);
            let u = x | y;
            grew_a |= u != x;
            grew_b |= u != y;
            self.bits[wa + i] = u;
            self.bits[wb + i] = u;
        }
        self.t += 1;
        (grew_a, grew_b)
    }

    /// One step of the process: a uniformly chosen edge shares information.
    /// Returns the chosen edge.
    pub fn step<R: Rng + ?Sized>(&mut self, g: &Graph, rng: &mut R) -> (usize, usize) {
        let (a, b) = g.edge(g.edge_picker().pick(rng));
        self.apply_edge(a, b);
        (a, b)
    }
}

/// What a run should observe before stopping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StopSpec {
    /// Information subsets `H` whose propagation time is wanted.
    pub targets: Vec<Vec<usize>>,
    /// Observe the total propagation time.
    pub want_total: bool,
    /// Sites whose first fully-informed time is wanted.
    pub y_sites: Vec<usize>,
    /// Record `N(t)` after every step.
    pub record_n: bool,
    pub step_cap: u64,
}

impl Default for StopSpec {
    fn default() -> Self {
        Self {
            targets: Vec::new(),
            want_total: false,
            y_sites: Vec::new(),
            record_n: false,
            step_cap: DEFAULT_STEP_CAP,
        }
    }
}

impl StopSpec {
    pub fn total() -> Self {
        Self { want_total: true, ..Self::default() }
    }

    pub fn with_target(mut self, infos: impl IntoIterator<Item = usize>) -> Self {
        self.targets.push(infos.into_iter().collect());
        self
    }

    pub fn with_total(mut self) -> Self {
        self.want_total = true;
        self
    }

    pub fn with_y(mut self, site: usize) -> Self {
        self.y_sites.push(site);
        self
    }

    pub fn recording_n(mut self) -> Self {
        self.record_n = true;
        self
    }

    pub fn with_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn validate(&self, n: usize, m: usize) -> Result<(), ProcessError> {
        for h in &self.targets {
            if h.is_empty() {
                return Err(ProcessError::InvalidSpec("empty target set".into()));
            }
            if let Some(&bad) = h.iter().find(|&&i| i >= m) {
                return Err(ProcessError::InvalidSpec(format!("information {bad} out of range for {m} informations")));
            }
        }
        if let Some(&bad) = self.y_sites.iter().find(|&&x| x >= n) {
            return Err(ProcessError::InvalidSpec(format!("site {bad} out of range for {n} sites")));
        }
        Ok(())
    }
}

/// Observed stopping times of one run. Entries are `None` only in the
/// partial record carried by [`ProcessError::CapExceeded`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    /// `tau_H` for each requested target, in request order.
    pub tau_h: Vec<Option<u64>>,
    pub tau_v: Option<u64>,
    /// `Y_x` for each requested site, in request order.
    pub y: Vec<Option<u64>>,
    /// `N(0), N(1), ...` up to the last step taken.
    pub n_trajectory: Option<Vec<u32>>,
    pub steps_taken: u64,
    pub seed: u64,
}

struct TargetTracker {
    mask: Vec<u64>,
    satisfied: Vec<bool>,
    count: usize,
    hit: Option<u64>,
}

impl TargetTracker {
    fn new(infos: &[usize], words: usize, n: usize) -> Self {
        let mut mask = vec![0u64; words];
        for &i in infos {
            mask[i / 64] |= 1 << (i % 64);
        }
        Self { mask, satisfied: vec![false; n], count: 0, hit: None }
    }

    fn covers(&self, block: &[u64]) -> bool {
        block.iter().zip(&self.mask).all(|(b, m)| b & m == *m)
    }
}

/// Incremental observer: only the two endpoints touched by a step are
/// re-examined.
struct Observer {
    n: usize,
    targets: Vec<TargetTracker>,
    full: Vec<bool>,
    full_at: Vec<Option<u64>>,
    full_count: usize,
    tau_v: Option<u64>,
    want_total: bool,
    y_wanted: Vec<bool>,
    pending: usize,
}

impl Observer {
    fn new(state: &InfoState, spec: &StopSpec) -> Self {
        let n = state.n;
        let targets = spec.targets.iter().map(|h| TargetTracker::new(h, state.words, n)).collect();
        let mut y_wanted = vec![false; n];
        for &x in &spec.y_sites {
            y_wanted[x] = true;
        }
        let pending = spec.targets.len() + usize::from(spec.want_total) + y_wanted.iter().filter(|&&w| w).count();
        let mut obs = Self {
            n,
            targets,
            full: vec![false; n],
            full_at: vec![None; n],
            full_count: 0,
            tau_v: None,
            want_total: spec.want_total,
            y_wanted,
            pending,
        };
        for x in 0..n {
            obs.examine(state, x);
        }
        obs
    }

    fn examine(&mut self, state: &InfoState, x: usize) {
        let t = state.t;
        let block = state.block(x);
        for tr in &mut self.targets {
            if !tr.satisfied[x] && tr.covers(block) {
                tr.satisfied[x] = true;
                tr.count += 1;
                if tr.count == self.n {
                    tr.hit = Some(t);
                    self.pending -= 1;
                }
            }
        }
        if !self.full[x] && state.known_count(x) == state.m {
            self.full[x] = true;
            self.full_at[x] = Some(t);
            self.full_count += 1;
            if self.y_wanted[x] {
                self.pending -= 1;
            }
            if self.full_count == self.n {
                self.tau_v = Some(t);
                if self.want_total {
                    self.pending -= 1;
                }
            }
        }
    }

    fn record(&self, spec: &StopSpec, steps: u64, seed: u64, traj: Option<Vec<u32>>) -> RunRecord {
        RunRecord {
            tau_h: self.targets.iter().map(|t| t.hit).collect(),
            tau_v: if spec.want_total { self.tau_v } else { None },
            y: spec.y_sites.iter().map(|&x| self.full_at[x]).collect(),
            n_trajectory: traj,
            steps_taken: steps,
            seed,
        }
    }
}

/// Runs the process from `scenario` until every stopping time requested in
/// `spec` has been observed. The run is a pure function of its arguments.
pub fn run(g: &Graph, scenario: &Scenario, spec: &StopSpec, seed: u64) -> Result<RunRecord, ProcessError> {
    let mut state = InfoState::new(g, scenario)?;
    spec.validate(state.n, state.m)?;
    let mut rng = rng_from_seed(seed);
    let picker = g.edge_picker();
    let mut obs = Observer::new(&state, spec);
    let mut traj = spec.record_n.then(|| vec![obs.full_count as u32]);

    while obs.pending > 0 {
        if state.t >= spec.step_cap {
            let partial = obs.record(spec, state.t, seed, traj);
            return Err(ProcessError::CapExceeded { cap: spec.step_cap, seed, partial: Box::new(partial) });
        }
        let (a, b) = g.edge(picker.pick(&mut rng));
        let (grew_a, grew_b) = state.apply_edge(a, b);
        if grew_a {
            obs.examine(&state, a);
        }
        if grew_b {
            obs.examine(&state, b);
        }
        if let Some(traj) = traj.as_mut() {
            traj.push(obs.full_count as u32);
        }
    }
    Ok(obs.record(spec, state.t, seed, traj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_complete, make_path, make_ring, make_star};
    use crate::rng::rng_from_seed;

    #[test]
    fn initial_states() {
        let k3 = make_complete(3).unwrap();
        let s = InfoState::new(&k3, &Scenario::DistinctAll).unwrap();
        assert_eq!((0..3).map(|x| s.infos_of(x)).collect::<Vec<_>>(), vec![vec![0], vec![1], vec![2]]);
        assert_eq!(s.time(), 0);
        let d = InfoState::new(&k3, &Scenario::DuplicatedFirst).unwrap();
        assert_eq!((0..3).map(|x| d.infos_of(x)).collect::<Vec<_>>(), vec![vec![0], vec![0], vec![1]]);
        assert_eq!(d.info_count(), 2);
        let k2 = make_complete(2).unwrap();
        assert!(matches!(InfoState::new(&k2, &Scenario::DuplicatedFirst), Err(ProcessError::ScenarioMismatch(_))));
    }

    #[test]
    fn init_rejects_bad_inputs() {
        let split = Graph::from_edge_list("0 1\n2 3").unwrap();
        assert_eq!(InfoState::new(&split, &Scenario::DistinctAll), Err(ProcessError::Disconnected));
        let k3 = make_complete(3).unwrap();
        let short = Scenario::Custom(vec![vec![0], vec![1]]);
        assert!(matches!(InfoState::new(&k3, &short), Err(ProcessError::ScenarioMismatch(_))));
        let gap = Scenario::Custom(vec![vec![0], vec![2], vec![]]);
        assert!(matches!(InfoState::new(&k3, &gap), Err(ProcessError::ScenarioMismatch(_))));
        let empty = Scenario::Custom(vec![vec![], vec![], vec![]]);
        assert!(matches!(InfoState::new(&k3, &empty), Err(ProcessError::ScenarioMismatch(_))));
    }

    #[test]
    fn single_edge_step_merges_both() {
        let k2 = make_complete(2).unwrap();
        let mut s = InfoState::new(&k2, &Scenario::DistinctAll).unwrap();
        s.step(&k2, &mut rng_from_seed(5));
        assert_eq!(s.infos_of(0), vec![0, 1]);
        assert_eq!(s.infos_of(1), vec![0, 1]);
        assert_eq!(s.time(), 1);
        assert_eq!(s.count_fully_informed(), 2);
    }

    #[test]
    fn triangle_first_step() {
        let k3 = make_complete(3).unwrap();
        for seed in 0..20 {
            let mut s = InfoState::new(&k3, &Scenario::DistinctAll).unwrap();
            assert_eq!(s.count_fully_informed(), 0);
            s.step(&k3, &mut rng_from_seed(seed));
            let mut sizes: Vec<usize> = (0..3).map(|x| s.known_count(x)).collect();
            sizes.sort();
            assert_eq!(sizes, vec![1, 2, 2]);
            assert_eq!(s.count_fully_informed(), 0);
        }
    }

    #[test]
    fn absorbing_state_only_advances_clock() {
        let k3 = make_complete(3).unwrap();
        let full = Scenario::Custom(vec![vec![0, 1], vec![0, 1], vec![0, 1]]);
        let mut s = InfoState::new(&k3, &full).unwrap();
        let before = s.clone();
        assert_eq!(s.apply_edge(0, 2), (false, false));
        assert_eq!(s.time(), 1);
        assert_eq!(s.bits, before.bits);
    }

    #[test]
    fn runs_on_tiny_graphs() {
        let k2 = make_complete(2).unwrap();
        let r = run(&k2, &Scenario::DistinctAll, &StopSpec::total(), 99).unwrap();
        assert_eq!(r.tau_v, Some(1));
        let star1 = make_star(1).unwrap();
        assert_eq!(run(&star1, &Scenario::DistinctAll, &StopSpec::total(), 3).unwrap().tau_v, Some(1));

        let k3 = make_complete(3).unwrap();
        let spec = StopSpec::default().with_target([0]).with_y(0);
        for seed in 0..50 {
            let r = run(&k3, &Scenario::DistinctAll, &spec, seed).unwrap();
            assert!(r.tau_h[0].unwrap() >= 2);
            assert!(r.y[0].unwrap() >= 2);
        }
    }

    #[test]
    fn cap_exceeded_carries_partial_record() {
        let ring = make_ring(30).unwrap();
        let spec = StopSpec::total().with_y(0).with_cap(5);
        match run(&ring, &Scenario::DistinctAll, &spec, 1) {
            Err(ProcessError::CapExceeded { cap, seed, partial }) => {
                assert_eq!((cap, seed), (5, 1));
                assert_eq!(partial.steps_taken, 5);
                assert_eq!(partial.tau_v, None);
                assert_eq!(partial.y, vec![None]);
            }
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn spec_validation() {
        let k3 = make_complete(3).unwrap();
        for spec in
            [StopSpec::default().with_target([]), StopSpec::default().with_target([3]), StopSpec::default().with_y(3)]
        {
            assert!(matches!(run(&k3, &Scenario::DistinctAll, &spec, 0), Err(ProcessError::InvalidSpec(_))));
        }
    }

    #[test]
    fn already_satisfied_times_are_zero() {
        let p = make_path(3).unwrap();
        let sc = Scenario::Custom(vec![vec![0, 1], vec![0, 1], vec![0, 1]]);
        let r = run(&p, &sc, &StopSpec::total().with_target([1]).with_y(2), 0).unwrap();
        assert_eq!((r.tau_v, r.tau_h[0], r.y[0], r.steps_taken), (Some(0), Some(0), Some(0), 0));
    }

    #[test]
    fn wide_information_sets_span_words() {
        let g = make_complete(130).unwrap();
        let r = run(&g, &Scenario::DistinctAll, &StopSpec::total().with_target([129]), 11).unwrap();
        assert!(r.tau_v.unwrap() >= r.tau_h[0].unwrap());
    }
}
