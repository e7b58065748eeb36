//! Replicated estimation of expected stopping times.
//!
//! Replication `i` runs with seed `derive_seed(master_seed, i)`. Stopping
//! times are integers, so the accumulators are exact integer sums and merging
//! partial results from disjoint replication ranges is associative and
//! commutative bit for bit, whatever the thread count.

use std::fmt;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::exact::{ring_single_info_expectation, single_info_expectation_complete, star_hub_expectation, ExactValue};
use crate::graph::{Family, Graph};
use crate::process::{run, ProcessError, Scenario, StopSpec, DEFAULT_STEP_CAP};
use crate::rng::{derive_seed, mix64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("invalid estimator configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error("cannot merge estimates: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorConfig {
    pub reps: u64,
    pub master_seed: u64,
    pub step_cap: u64,
    pub ci_level: f64,
}

impl EstimatorConfig {
    pub fn new(reps: u64, master_seed: u64) -> Self {
        Self { reps, master_seed, step_cap: DEFAULT_STEP_CAP, ci_level: 0.95 }
    }

    pub fn with_ci_level(mut self, level: f64) -> Self {
        self.ci_level = level;
        self
    }

    pub fn with_step_cap(mut self, cap: u64) -> Self {
        self.step_cap = cap;
        self
    }

    pub fn validate(&self) -> Result<(), EstimateError> {
        if self.reps < 2 {
            return Err(EstimateError::Config(format!("need at least 2 replications, got {}", self.reps)));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(EstimateError::Config(format!("confidence level must lie in (0, 1), got {}", self.ci_level)));
        }
        Ok(())
    }
}

/// Two-sided normal quantile for a confidence level.
pub fn z_value(ci_level: f64) -> f64 {
    Normal::standard().inverse_cdf(0.5 + ci_level / 2.0)
}

/// Which stopping time an [`Estimate`] refers to.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Quantity {
    /// `tau_H` for the given information set.
    Tau(Vec<usize>),
    /// Total propagation time.
    Total,
    /// First time the given site knows everything.
    Y(usize),
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantity::Tau(h) => {
                let parts: Vec<String> = h.iter().map(|i| i.to_string()).collect();
                write!(f, "tau{{{}}}", parts.join(";"))
            }
            Quantity::Total => f.write_str("tau_total"),
            Quantity::Y(x) => write!(f, "Y_{x}"),
        }
    }
}

/// Quantities produced by `spec`, in the order [`estimate`] returns them.
pub fn quantities(spec: &StopSpec) -> Vec<Quantity> {
    let mut out: Vec<Quantity> = spec.targets.iter().cloned().map(Quantity::Tau).collect();
    if spec.want_total {
        out.push(Quantity::Total);
    }
    out.extend(spec.y_sites.iter().map(|&x| Quantity::Y(x)));
    out
}

/// Sample mean with a normal-approximation confidence interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub quantity: Quantity,
    pub mean: f64,
    /// Sample standard deviation over `sqrt(reps)`; zero below two samples.
    pub stderr: f64,
    pub ci_half_width: f64,
    pub reps: u64,
    pub sum: u128,
    pub sum_sq: u128,
    pub ci_level: f64,
    pub master_seed: u64,
}

impl Estimate {
    pub fn empty(quantity: Quantity, ci_level: f64, master_seed: u64) -> Self {
        Self::from_accumulators(quantity, 0, 0, 0, ci_level, master_seed)
    }

    pub fn from_samples(quantity: Quantity, samples: &[u64], ci_level: f64, master_seed: u64) -> Self {
        let sum = samples.iter().map(|&s| s as u128).sum();
        let sum_sq = samples.iter().map(|&s| (s as u128) * (s as u128)).sum();
        Self::from_accumulators(quantity, samples.len() as u64, sum, sum_sq, ci_level, master_seed)
    }

    pub fn from_accumulators(
        quantity: Quantity,
        reps: u64,
        sum: u128,
        sum_sq: u128,
        ci_level: f64,
        master_seed: u64,
    ) -> Self {
        let (mean, stderr) = if reps == 0 {
            (0.0, 0.0)
        } else {
            let r = reps as u128;
            let mean = sum as f64 / reps as f64;
            let stderr = if reps < 2 {
                0.0
            } else {
                // r * sum_sq - sum^2 is exact and non-negative.
                let spread = (r * sum_sq - sum * sum) as f64;
                let variance = spread / (r * (r - 1)) as f64;
                (variance / reps as f64).sqrt()
            };
            (mean, stderr)
        };
        Self {
            quantity,
            mean,
            stderr,
            ci_half_width: z_value(ci_level) * stderr,
            reps,
            sum,
            sum_sq,
            ci_level,
            master_seed,
        }
    }

    pub fn ci(&self) -> (f64, f64) {
        (self.mean - self.ci_half_width, self.mean + self.ci_half_width)
    }

    pub fn ci_contains(&self, value: f64) -> bool {
        let (lo, hi) = self.ci();
        lo <= value && value <= hi
    }

    /// Pools two estimates of the same quantity from disjoint replications.
    pub fn merge(&self, other: &Estimate) -> Result<Estimate, EstimateError> {
        if self.quantity != other.quantity {
            return Err(EstimateError::Mismatch(format!("{} vs {}", self.quantity, other.quantity)));
        }
        if self.ci_level != other.ci_level {
            return Err(EstimateError::Mismatch(format!("confidence levels {} vs {}", self.ci_level, other.ci_level)));
        }
        Ok(Self::from_accumulators(
            self.quantity.clone(),
            self.reps + other.reps,
            self.sum + other.sum,
            self.sum_sq + other.sum_sq,
            self.ci_level,
            self.master_seed,
        ))
    }
}

fn observed(record: &crate::process::RunRecord) -> Vec<u64> {
    record
        .tau_h
        .iter()
        .chain(std::iter::once(&record.tau_v).filter(|t| t.is_some()))
        .chain(&record.y)
        .map(|t| t.expect("completed run records every requested time"))
        .collect()
}

/// Runs replications `start..end` and returns their per-quantity samples in
/// replication order.
fn replicate(
    g: &Graph,
    scenario: &Scenario,
    spec: &StopSpec,
    master_seed: u64,
    range: std::ops::Range<u64>,
) -> Result<Vec<Vec<u64>>, EstimateError> {
    let results: Vec<Result<Vec<u64>, ProcessError>> = range
        .into_par_iter()
        .map(|i| run(g, scenario, spec, derive_seed(master_seed, i)).map(|r| observed(&r)))
        .collect();
    // First failure by replication index, independent of scheduling.
    results.into_iter().map(|r| r.map_err(EstimateError::from)).collect()
}

/// Estimates every stopping time requested by `spec`, one [`Estimate`] per
/// entry of [`quantities`].
pub fn estimate(
    g: &Graph,
    scenario: &Scenario,
    spec: &StopSpec,
    cfg: &EstimatorConfig,
) -> Result<Vec<Estimate>, EstimateError> {
    estimate_range(g, scenario, spec, cfg, 0..cfg.reps)
}

/// Like [`estimate`] but only over replications `range`, for splitting one
/// experiment across workers. Merging the pieces reproduces the full run.
pub fn estimate_range(
    g: &Graph,
    scenario: &Scenario,
    spec: &StopSpec,
    cfg: &EstimatorConfig,
    range: std::ops::Range<u64>,
) -> Result<Vec<Estimate>, EstimateError> {
    cfg.validate()?;
    let mut spec = spec.clone();
    spec.step_cap = cfg.step_cap;
    let samples = replicate(g, scenario, &spec, cfg.master_seed, range)?;
    Ok(quantities(&spec)
        .into_iter()
        .enumerate()
        .map(|(j, q)| {
            let column: Vec<u64> = samples.iter().map(|row| row[j]).collect();
            Estimate::from_samples(q, &column, cfg.ci_level, cfg.master_seed)
        })
        .collect())
}

/// `|a.mean - b.mean| / sqrt(a.stderr^2 + b.stderr^2)`.
pub fn two_sample_mean_gap(a: &Estimate, b: &Estimate) -> f64 {
    let diff = (a.mean - b.mean).abs();
    let scale = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    if diff == 0.0 {
        0.0
    } else if scale == 0.0 {
        f64::INFINITY
    } else {
        diff / scale
    }
}

/// Denominator of a propagation ratio.
#[derive(Debug, Clone, PartialEq)]
pub enum Denominator {
    /// Closed form for a recognised graph family.
    Exact(ExactValue),
    /// Monte Carlo estimate of `E[tau_x]` for the minimising site.
    Estimated { site: usize, estimate: Estimate },
}

impl Denominator {
    pub fn value(&self) -> f64 {
        match self {
            Denominator::Exact(v) => v.to_f64(),
            Denominator::Estimated { estimate, .. } => estimate.mean,
        }
    }
}

/// `E[tau_V] / min_x E[tau_x]` with a conservative interval.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioEstimate {
    pub numerator: Estimate,
    pub denominator: Denominator,
    pub ratio: f64,
    /// First-order standard error of the ratio.
    pub ratio_stderr: f64,
    /// Interval arithmetic on the component confidence intervals.
    pub ratio_ci: (f64, f64),
    /// Set when the denominator is a minimum of several noisy estimates,
    /// which biases it downward.
    pub min_biased: bool,
}

/// Closed-form `min_x E[tau_x]` for complete graphs, stars and rings.
pub fn exact_min_single_info(g: &Graph) -> Option<ExactValue> {
    let n = g.site_count();
    match g.family()? {
        Family::Complete => single_info_expectation_complete(n).ok(),
        Family::Star { .. } => star_hub_expectation(n - 1).ok(),
        Family::Ring => ring_single_info_expectation(n).ok(),
    }
}

/// Estimates the propagation ratio of `g` from the all-distinct scenario.
///
/// The denominator is exact for recognised families. Otherwise, with
/// `transitive_hint` only site 0 is estimated; without it every site gets
/// `reps / n` replications (at least 2) and the smallest mean is used.
pub fn estimate_propagation_ratio(
    g: &Graph,
    transitive_hint: bool,
    cfg: &EstimatorConfig,
) -> Result<RatioEstimate, EstimateError> {
    let scenario = Scenario::DistinctAll;
    let numerator = estimate(g, &scenario, &StopSpec::total(), cfg)?.remove(0);
    let (denominator, min_biased) = match exact_min_single_info(g) {
        Some(v) => (Denominator::Exact(v), false),
        None => {
            let sites: Vec<usize> = if transitive_hint { vec![0] } else { (0..g.site_count()).collect() };
            let per_site = if transitive_hint { cfg.reps } else { (cfg.reps / g.site_count() as u64).max(2) };
            let mut best: Option<(usize, Estimate)> = None;
            for x in sites {
                let sub = EstimatorConfig {
                    reps: per_site,
                    master_seed: mix64(cfg.master_seed ^ mix64(x as u64 + 1)),
                    ..*cfg
                };
                let est = estimate(g, &scenario, &StopSpec::default().with_target([x]), &sub)?.remove(0);
                if best.as_ref().is_none_or(|(_, b)| est.mean < b.mean) {
                    best = Some((x, est));
                }
            }
            let (site, estimate) = best.expect("graph has sites");
            (Denominator::Estimated { site, estimate }, !transitive_hint)
        }
    };
    Ok(ratio_from_parts(numerator, denominator, min_biased))
}

pub fn ratio_from_parts(numerator: Estimate, denominator: Denominator, min_biased: bool) -> RatioEstimate {
    let (mn, hn, sn) = (numerator.mean, numerator.ci_half_width, numerator.stderr);
    let (ratio, ratio_stderr, ratio_ci) = match &denominator {
        Denominator::Exact(v) => {
            let d = v.to_f64();
            (mn / d, sn / d, ((mn - hn) / d, (mn + hn) / d))
        }
        Denominator::Estimated { estimate: den, .. } => {
            let (md, hd, sd) = (den.mean, den.ci_half_width, den.stderr);
            let ratio = mn / md;
            let rel = ((sn / mn).powi(2) + (sd / md).powi(2)).sqrt();
            let hi = if md - hd > 0.0 { (mn + hn) / (md - hd) } else { f64::INFINITY };
            (ratio, ratio * rel, ((mn - hn) / (md + hd), hi))
        }
    };
    RatioEstimate { numerator, denominator, ratio, ratio_stderr, ratio_ci, min_biased }
}
