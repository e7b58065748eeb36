//! Multi-information rumor spreading on graphs.
//!
//! Every site starts with its own piece of information. At each discrete
//! step one edge is chosen uniformly at random and its two endpoints pool
//! what they know. This crate simulates that process, evaluates its known
//! closed forms exactly, and solves tiny instances exactly as a Markov chain
//! so the simulator and the formulas can be checked against each other.
//!
//! - [`graph`]: graphs, generators and the edge-list format
//! - [`process`]: the simulation engine and its stopping times
//! - [`exact`]: closed-form expectations as exact rationals
//! - [`oracle`]: exhaustive Markov-chain solutions for small graphs
//! - [`montecarlo`]: replicated estimates with confidence intervals

pub mod exact;
pub mod graph;
pub mod montecarlo;
pub mod oracle;
pub mod process;
pub mod rng;

pub use exact::{BoundsReport, BoundsSummary, ExactValue, FormulaError};
pub use graph::{make_complete, make_erdos_renyi, make_path, make_ring, make_star, Family, Graph, GraphError};
pub use montecarlo::{
    estimate, estimate_propagation_ratio, two_sample_mean_gap, Denominator, Estimate, EstimateError, EstimatorConfig,
    Quantity, RatioEstimate,
};
pub use oracle::{ConfigurationIndex, ExactTable, OracleError, Target};
pub use process::{run, InfoState, ProcessError, RunRecord, Scenario, StopSpec};
