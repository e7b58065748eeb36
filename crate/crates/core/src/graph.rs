//! Undirected simple graphs that host the rumor process.
//!
//! Sites are labelled `0..n`. Edges are stored canonically as `(min, max)`
//! pairs in lexicographic order, so two graphs with the same edge set compare
//! equal and the process can pick an edge by drawing a uniform index.

use std::collections::{HashSet, VecDeque};
use std::fmt::Write as _;

use rand::distr::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("invalid size: {0}")]
    InvalidSize(String),
    #[error("edge probability must lie in (0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("graph has no edges")]
    Empty,
    #[error("self-loop at site {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge endpoint {site} out of range for {n} sites")]
    OutOfRange { site: usize, n: usize },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Graph families with known closed forms for single-information times.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Complete,
    Star { hub: usize },
    Ring,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph from an arbitrary edge list, canonicalising edge order.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, GraphError> {
        if n < 2 {
            return Err(GraphError::InvalidSize(format!("need at least 2 sites, got {n}")));
        }
        let mut canonical = Vec::new();
        let mut seen = HashSet::new();
        for (a, b) in edges {
            let (lo, hi) = (a.min(b), a.max(b));
            if lo == hi {
                return Err(GraphError::SelfLoop(lo));
            }
            if hi >= n {
                return Err(GraphError::OutOfRange { site: hi, n });
            }
            if !seen.insert((lo, hi)) {
                return Err(GraphError::DuplicateEdge(lo, hi));
            }
            canonical.push((lo, hi));
        }
        if canonical.is_empty() {
            return Err(GraphError::Empty);
        }
        canonical.sort_unstable();
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b) in &canonical {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        Ok(Self { n, edges: canonical, adjacency })
    }

    pub fn site_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge(&self, index: usize) -> (usize, usize) {
        self.edges[index]
    }

    pub fn neighbors(&self, site: usize) -> &[usize] {
        &self.adjacency[site]
    }

    pub fn degree(&self, site: usize) -> usize {
        self.adjacency[site].len()
    }

    /// True iff a breadth-first traversal from site 0 reaches every site.
    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut reached = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &self.adjacency[x] {
                if !seen[y] {
                    seen[y] = true;
                    reached += 1;
                    queue.push_back(y);
                }
            }
        }
        reached == self.n
    }

    /// Recognises complete graphs, stars and rings regardless of labelling.
    pub fn family(&self) -> Option<Family> {
        let n = self.n;
        let m = self.edges.len();
        if m == n * (n - 1) / 2 {
            return Some(Family::Complete);
        }
        if m == n - 1 {
            if let Some(hub) = (0..n).find(|&x| self.degree(x) == n - 1) {
                return Some(Family::Star { hub });
            }
        }
        if n >= 3 && m == n && (0..n).all(|x| self.degree(x) == 2) && self.is_connected() {
            return Some(Family::Ring);
        }
        None
    }

    /// Uniform sampler over edge indices.
    pub fn edge_picker(&self) -> EdgePicker {
        let dist = Uniform::new(0u64, self.edges.len() as u64).expect("graph has at least one edge");
        EdgePicker { dist }
    }

    /// Canonical edge-list text. A `n <count>` header is emitted only when
    /// the highest-labelled site has no edges.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let max_label = self.edges.iter().map(|&(_, b)| b).max().unwrap_or(0);
        if max_label + 1 != self.n {
            let _ = writeln!(out, "n {}", self.n);
        }
        for &(a, b) in &self.edges {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    /// Parses the edge-list text format.
    ///
    /// One edge per line as two whitespace-separated labels. Blank lines and
    /// lines starting with `#` are skipped. The first remaining line may be
    /// `n <count>` to fix the site count; otherwise `n` is one more than the
    /// largest label.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut declared = None;
        let mut edges = Vec::new();
        let mut seen = HashSet::new();
        let mut first = true;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| GraphError::Parse { line: line_no, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if first && fields.first() == Some(&"n") {
                first = false;
                if fields.len() != 2 {
                    return Err(parse_err("header must be `n <count>`".into()));
                }
                let count = fields[1]
                    .parse::<usize>()
                    .map_err(|e| parse_err(format!("bad site count {:?}: {e}", fields[1])))?;
                declared = Some(count);
                continue;
            }
            first = false;
            if fields.len() != 2 {
                return Err(parse_err(format!("expected two site labels, found {}", fields.len())));
            }
            let a =
                fields[0].parse::<usize>().map_err(|e| parse_err(format!("bad site label {:?}: {e}", fields[0])))?;
            let b =
                fields[1].parse::<usize>().map_err(|e| parse_err(format!("bad site label {:?}: {e}", fields[1])))?;
            if a == b {
                return Err(parse_err(format!("self-loop at site {a}")));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                return Err(parse_err(format!("duplicate edge {{{}, {}}}", key.0, key.1)));
            }
            if let Some(n) = declared {
                if key.1 >= n {
                    return Err(parse_err(format!("site {} out of range for n = {n}", key.1)));
                }
            }
            edges.push(key);
        }
        let max_label = edges.iter().map(|&(_, b)| b).max();
        let n = match (declared, max_label) {
            (Some(n), _) => n,
            (None, Some(max)) => max + 1,
            (None, None) => return Err(GraphError::Empty),
        };
        Self::new(n, edges)
    }
}

/// Draws edge indices uniformly with unbiased bounded rejection sampling.
#[derive(Debug, Clone, Copy)]
pub struct EdgePicker {
    dist: Uniform<u64>,
}

impl EdgePicker {
    #[inline]
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.dist.sample(rng) as usize
    }
}

/// Complete graph `K_n`.
pub fn make_complete(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize(format!("complete graph needs n >= 2, got {n}")));
    }
    Graph::new(n, (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))))
}

/// Star with hub 0 and leaves `1..=leaves`.
pub fn make_star(leaves: usize) -> Result<Graph, GraphError> {
    if leaves < 1 {
        return Err(GraphError::InvalidSize("star needs at least one leaf".into()));
    }
    Graph::new(leaves + 1, (1..=leaves).map(|x| (0, x)))
}

/// Cycle `0 - 1 - ... - (n-1) - 0`.
pub fn make_ring(n: usize) -> Result<Graph, GraphError> {
    if n < 3 {
        return Err(GraphError::InvalidSize(format!("ring needs n >= 3, got {n}")));
    }
    Graph::new(n, (0..n).map(|x| (x, (x + 1) % n)))
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn make_path(n: usize) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize(format!("path needs n >= 2, got {n}")));
    }
    Graph::new(n, (0..n - 1).map(|x| (x, x + 1)))
}

/// G(n, p): every unordered pair is kept independently with probability `p`.
/// Pairs are visited in lexicographic order, so the result is a pure
/// function of `(n, p, seed)`.
pub fn make_erdos_renyi(n: usize, p: f64, seed: u64) -> Result<Graph, GraphError> {
    if n < 2 {
        return Err(GraphError::InvalidSize(format!("random graph needs n >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidProbability(p));
    }
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                edges.push((a, b));
            }
        }
    }
    Graph::new(n, edges)
}
