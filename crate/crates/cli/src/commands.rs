//! Execution of each subcommand.

use gfl_core::exact::{
    continuous_flooding_expectation, delta_expectation, harmonic, harmonic_f64, ring_single_info_expectation,
    single_info_expectation_complete, star_hub_expectation, star_ratio, star_total_expectation, total_time_bounds,
    total_time_bounds_approx, EXACT_HARMONIC_LIMIT,
};
use gfl_core::montecarlo::{estimate, estimate_propagation_ratio, Denominator, EstimateError, Quantity};
use gfl_core::oracle::{
    enumerate_reachable, exact_tables, float_tables, site_cap_from_env, OracleError, DEFAULT_STATE_CAP, FLOAT_STATE_CAP,
};
use gfl_core::process::ProcessError;
use gfl_core::rng::derive_seed;
use gfl_core::{ExactValue, FormulaError, StopSpec, Target};
use serde_json::{json, Value};

use crate::error::{runtime, CliError};
use crate::spec::{
    CdfKind, Command, ConvertSource, EstimatorSpec, ExperimentSpec, Format, Formula, GraphSpec, OracleQuery,
    ScenarioArg,
};
use crate::table::{exact_cell, render, Cell, Table};
use crate::verify::run_suite;

pub const SIMULATE_COLUMNS: &[&str] =
    &["quantity", "graph", "n", "scenario", "mean", "stderr", "ci_low", "ci_high", "reps", "seed"];
pub const EXACT_COLUMNS: &[&str] = &["quantity", "graph", "n", "scenario", "exact", "decimal"];
pub const CDF_COLUMNS: &[&str] = &["quantity", "graph", "n", "scenario", "t", "exact", "decimal"];
pub const VERIFY_COLUMNS: &[&str] = &["check", "status", "measured", "expected", "provenance"];
pub const RATIO_COLUMNS: &[&str] = &[
    "family",
    "size",
    "sites",
    "ratio",
    "stderr",
    "ci_low",
    "ci_high",
    "bound_lower",
    "bound_upper",
    "limit",
    "denominator",
    "reps",
    "seed",
];
pub const CONVERT_COLUMNS: &[&str] = &[
    "source",
    "graph",
    "n",
    "edges",
    "discrete_mean",
    "discrete_stderr",
    "continuous",
    "continuous_exact",
    "reference",
    "tolerance",
    "consistent",
];

/// Rendered output plus an optional failure to report after writing it.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub failure: Option<CliError>,
}

impl From<String> for Outcome {
    fn from(text: String) -> Self {
        Self { text, failure: None }
    }
}

pub fn execute(spec: &ExperimentSpec) -> Result<Outcome, CliError> {
    match &spec.command {
        Command::Gen { graph } => gen(spec, graph).map(Into::into),
        Command::Simulate { graph, scenario, targets, total, y_sites, estimator } => {
            simulate(spec, graph, *scenario, targets, *total, y_sites, estimator).map(Into::into)
        }
        Command::Exact { formula, n, k, leaves } => exact(spec, *formula, *n, *k, *leaves).map(Into::into),
        Command::Oracle { graph, scenario, query, float_path } => {
            oracle(spec, graph, *scenario, query, *float_path).map(Into::into)
        }
        Command::Verify { suite, reps, seed } => {
            let report = run_suite(*suite, *reps, *seed)?;
            let mut table = Table::new(VERIFY_COLUMNS);
            for c in &report.checks {
                table.push(vec![
                    c.name.clone().into(),
                    (if c.passed { "pass" } else { "fail" }).into(),
                    c.measured.clone().into(),
                    c.expected.clone().into(),
                    c.provenance.as_str().into(),
                ]);
            }
            let status = if report.passed() { "pass" } else { "fail" };
            let text = render(spec, &table, vec![("status", json!(status))]);
            let failed = report.failed_names();
            Ok(Outcome { text, failure: (!failed.is_empty()).then_some(CliError::ChecksFailed(failed)) })
        }
        Command::RatioSweep { graphs, transitive, estimator } => {
            ratio_sweep(spec, graphs, *transitive, estimator).map(Into::into)
        }
        Command::Convert { source } => convert(spec, source).map(Into::into),
    }
}

fn estimate_error(e: EstimateError) -> CliError {
    match e {
        EstimateError::Config(m) => CliError::Usage(m),
        EstimateError::Process(p @ (ProcessError::InvalidSpec(_) | ProcessError::ScenarioMismatch(_))) => {
            CliError::Usage(p.to_string())
        }
        other => runtime(other),
    }
}

fn formula_error(e: FormulaError) -> CliError {
    CliError::Usage(e.to_string())
}

fn oracle_error(e: OracleError) -> CliError {
    match e {
        OracleError::SiteCapExceeded { n, cap } => CliError::Runtime(format!(
            "oracle cap exceeded: {n} sites > cap {cap} (raise {} or pass --float-path)",
            gfl_core::oracle::SITE_CAP_ENV
        )),
        OracleError::InvalidTarget(m) => CliError::Usage(m),
        other => runtime(other),
    }
}

fn gen(spec: &ExperimentSpec, graph: &GraphSpec) -> Result<String, CliError> {
    let g = graph.build()?;
    Ok(match spec.format {
        Format::Csv => g.to_edge_list(),
        Format::Json => {
            let doc = json!({
                "meta": crate::table::meta(spec),
                "n": g.site_count(),
                "edges": g.edges().iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
            });
            serde_json::to_string_pretty(&doc).expect("json values serialize") + "\n"
        }
    })
}

fn simulate(
    spec: &ExperimentSpec,
    graph: &GraphSpec,
    scenario: ScenarioArg,
    targets: &[Vec<usize>],
    total: bool,
    y_sites: &[usize],
    estimator: &EstimatorSpec,
) -> Result<String, CliError> {
    let g = graph.build()?;
    let mut stop = StopSpec::default().with_cap(estimator.step_cap);
    if total {
        stop = stop.with_total();
    }
    for t in targets {
        stop = stop.with_target(t.iter().copied());
    }
    for &y in y_sites {
        stop = stop.with_y(y);
    }
    let cfg = estimator.config();
    let estimates = estimate(&g, &scenario.scenario(), &stop, &cfg).map_err(estimate_error)?;
    let mut table = Table::new(SIMULATE_COLUMNS);
    for e in &estimates {
        let (lo, hi) = e.ci();
        table.push(vec![
            e.quantity.to_string().into(),
            graph.label().into(),
            g.site_count().into(),
            scenario.name().into(),
            e.mean.into(),
            e.stderr.into(),
            lo.into(),
            hi.into(),
            e.reps.into(),
            estimator.seed.into(),
        ]);
    }
    Ok(render(spec, &table, vec![]))
}

/// One row of the exact schema; `exact` is `None` when only a float is available.
fn exact_row(
    quantity: &str,
    graph: &str,
    n: usize,
    scenario: &str,
    exact: Option<&ExactValue>,
    decimal: f64,
) -> Vec<Cell> {
    vec![
        quantity.into(),
        graph.into(),
        n.into(),
        scenario.into(),
        exact.map_or(Cell::Empty, exact_cell),
        decimal.into(),
    ]
}

fn exact(
    spec: &ExperimentSpec,
    formula: Formula,
    n: Option<usize>,
    k: Option<usize>,
    leaves: Option<usize>,
) -> Result<String, CliError> {
    let need = |v: Option<usize>, flag: &str| {
        v.ok_or_else(|| CliError::Usage(format!("--{flag} is required for this formula")))
    };
    let mut table = Table::new(EXACT_COLUMNS);
    let mut push_exact = |q: &str, graph: &str, sites: usize, v: ExactValue| {
        let d = v.to_f64();
        table.push(exact_row(q, graph, sites, "distinct", Some(&v), d));
    };
    match formula {
        Formula::Harmonic => {
            let m = need(n, "n")?;
            if m <= EXACT_HARMONIC_LIMIT {
                let h = harmonic(m);
                table.push(exact_row(&format!("H({m})"), "", m, "", Some(&h), h.to_f64()));
            } else {
                table.push(exact_row(&format!("H({m})"), "", m, "", None, harmonic_f64(m)));
            }
        }
        Formula::M1 => {
            let n = need(n, "n")?;
            if n < 2 {
                return Err(CliError::Usage(format!("complete graph needs n >= 2, got {n}")));
            }
            if n - 1 <= EXACT_HARMONIC_LIMIT {
                push_exact("M(1)", "complete", n, single_info_expectation_complete(n).map_err(formula_error)?);
            } else {
                let v = total_time_bounds_approx(n).map_err(formula_error)?.m1;
                table.push(exact_row("M(1)", "complete", n, "distinct", None, v));
            }
        }
        Formula::Delta => {
            let (n, k) = (need(n, "n")?, need(k, "k")?);
            push_exact(&format!("delta({k})"), "complete", n, delta_expectation(n, k).map_err(formula_error)?);
        }
        Formula::StarTotal | Formula::StarHub | Formula::StarRatio => {
            let l = need(leaves, "leaves")?;
            if l > EXACT_HARMONIC_LIMIT {
                return Err(CliError::Usage(format!("--leaves above {EXACT_HARMONIC_LIMIT} is not supported")));
            }
            let (q, v) = match formula {
                Formula::StarTotal => ("tau_total", star_total_expectation(l)),
                Formula::StarHub => ("tau{0}", star_hub_expectation(l)),
                _ => ("ratio", star_ratio(l)),
            };
            push_exact(q, "star", l + 1, v.map_err(formula_error)?);
        }
        Formula::RingM1 => {
            let n = need(n, "n")?;
            push_exact("M(1)", "ring", n, ring_single_info_expectation(n).map_err(formula_error)?);
        }
        Formula::Bounds => {
            let n = need(n, "n")?;
            if n < 2 {
                return Err(CliError::Usage(format!("complete graph needs n >= 2, got {n}")));
            }
            if n - 1 <= EXACT_HARMONIC_LIMIT {
                let b = total_time_bounds(n).map_err(formula_error)?;
                push_exact("bound_lower", "complete", n, b.lower);
                push_exact("bound_upper", "complete", n, b.upper);
                push_exact("ratio_lower", "complete", n, b.ratio_lower);
                push_exact("ratio_upper", "complete", n, b.ratio_upper);
            } else {
                let b = total_time_bounds_approx(n).map_err(formula_error)?;
                for (q, v) in [
                    ("bound_lower", b.lower),
                    ("bound_upper", b.upper),
                    ("ratio_lower", b.ratio_lower),
                    ("ratio_upper", b.ratio_upper),
                ] {
                    table.push(exact_row(q, "complete", n, "distinct", None, v));
                }
            }
        }
    }
    Ok(render(spec, &table, vec![]))
}

fn oracle(
    spec: &ExperimentSpec,
    graph: &GraphSpec,
    scenario: ScenarioArg,
    query: &OracleQuery,
    float_path: bool,
) -> Result<String, CliError> {
    let cap = site_cap_from_env();
    let g = graph.build()?;
    let n = g.site_count();
    let effective_cap = if float_path { cap + 1 } else { cap };
    let mut table;
    match query {
        OracleQuery::Tables => {
            table = Table::new(EXACT_COLUMNS);
            if float_path {
                let t = float_tables(n, effective_cap, FLOAT_STATE_CAP).map_err(oracle_error)?;
                for (k, v) in (1..).zip(&t.m) {
                    table.push(exact_row(&format!("M({k})"), "complete", n, "distinct", None, *v));
                }
                for (k, v) in (2..).zip(&t.a) {
                    table.push(exact_row(&format!("A({k})"), "complete", n, "duplicated", None, *v));
                }
            } else {
                let t = exact_tables(n, effective_cap).map_err(oracle_error)?;
                for (k, v) in (1..).zip(&t.m) {
                    table.push(exact_row(&format!("M({k})"), "complete", n, "distinct", Some(v), v.to_f64()));
                }
                for (k, v) in (2..).zip(&t.a) {
                    table.push(exact_row(&format!("A({k})"), "complete", n, "duplicated", Some(v), v.to_f64()));
                }
            }
        }
        OracleQuery::Cdf { target, index, horizon } => {
            if n > effective_cap {
                return Err(oracle_error(OracleError::SiteCapExceeded { n, cap: effective_cap }));
            }
            let state_cap = if float_path { FLOAT_STATE_CAP } else { DEFAULT_STATE_CAP };
            let idx = enumerate_reachable(&g, &scenario.scenario(), state_cap).map_err(oracle_error)?;
            let (t, q) = match target {
                CdfKind::Total => (Target::AllInformed, Quantity::Total),
                CdfKind::Info => (Target::Infos(vec![*index]), Quantity::Tau(vec![*index])),
                CdfKind::Site => (Target::SiteFull(*index), Quantity::Y(*index)),
            };
            let cdf = idx.hitting_time_cdf(&t, *horizon).map_err(oracle_error)?;
            table = Table::new(CDF_COLUMNS);
            let q = q.to_string();
            for (step, p) in cdf.iter().enumerate() {
                table.push(vec![
                    q.as_str().into(),
                    graph.label().into(),
                    n.into(),
                    scenario.name().into(),
                    step.into(),
                    exact_cell(p),
                    p.to_f64().into(),
                ]);
            }
        }
    }
    Ok(render(spec, &table, vec![]))
}

/// Theoretical `(lower, upper, limit)` columns for a sweep row.
fn ratio_bounds(graph: &GraphSpec) -> Result<(f64, f64, Option<f64>), CliError> {
    Ok(match graph {
        GraphSpec::Complete { n } => {
            let b = total_time_bounds_approx(*n).map_err(formula_error)?;
            (b.ratio_lower, b.ratio_upper, Some(1.5))
        }
        GraphSpec::Star { leaves } => {
            let r = star_ratio(*leaves).map_err(formula_error)?.to_f64();
            (r, r, Some(2.0))
        }
        GraphSpec::Ring { .. } => (1.0, 2.0, Some(1.0)),
        _ => (1.0, 2.0, None),
    })
}

fn ratio_sweep(
    spec: &ExperimentSpec,
    graphs: &[GraphSpec],
    transitive: bool,
    estimator: &EstimatorSpec,
) -> Result<String, CliError> {
    let mut table = Table::new(RATIO_COLUMNS);
    for graph in graphs {
        let g = graph.build()?;
        let (lower, upper, limit) = ratio_bounds(graph)?;
        // Each row gets its own stream so adding sizes leaves others unchanged.
        let seed = derive_seed(estimator.seed, graph.size().unwrap_or(0) as u64);
        let cfg = EstimatorSpec { seed, ..*estimator }.config();
        let r = estimate_propagation_ratio(&g, transitive, &cfg).map_err(estimate_error)?;
        let denominator = match (&r.denominator, r.min_biased) {
            (Denominator::Exact(_), _) => "exact".to_string(),
            (Denominator::Estimated { site, .. }, true) => format!("site-min({site})"),
            (Denominator::Estimated { site, .. }, false) => format!("site({site})"),
        };
        table.push(vec![
            graph.label().into(),
            graph.size().into(),
            g.site_count().into(),
            r.ratio.into(),
            r.ratio_stderr.into(),
            r.ratio_ci.0.into(),
            r.ratio_ci.1.into(),
            lower.into(),
            upper.into(),
            limit.into(),
            denominator.into(),
            estimator.reps.into(),
            seed.into(),
        ]);
    }
    Ok(render(spec, &table, vec![]))
}

/// Continuous-time view of a simulated total time, with the asymptotic
/// reference `3 ln n / n` on complete graphs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conversion {
    pub discrete_mean: f64,
    pub discrete_stderr: f64,
    pub edges: usize,
    pub continuous: f64,
    pub reference: Option<f64>,
    /// Allowed distance from the reference: three standard errors plus the
    /// width of the proven window on `M_n(n)`, both rescaled by `1/|E|`.
    pub tolerance: Option<f64>,
}

impl Conversion {
    pub fn consistent(&self) -> Option<bool> {
        Some((self.continuous - self.reference?).abs() <= self.tolerance?)
    }
}

pub fn simulate_conversion(graph: &GraphSpec, estimator: &EstimatorSpec) -> Result<Conversion, CliError> {
    let g = graph.build()?;
    let est = estimate(
        &g,
        &gfl_core::Scenario::DistinctAll,
        &StopSpec::total().with_cap(estimator.step_cap),
        &estimator.config(),
    )
    .map_err(estimate_error)?
    .remove(0);
    let edges = g.edge_count();
    let e = edges as f64;
    let (reference, tolerance) = match graph {
        GraphSpec::Complete { n } => {
            let b = total_time_bounds_approx(*n).map_err(formula_error)?;
            let nf = *n as f64;
            (Some(3.0 * nf.ln() / nf), Some((3.0 * est.stderr + (b.upper - b.lower)) / e))
        }
        _ => (None, None),
    };
    Ok(Conversion {
        discrete_mean: est.mean,
        discrete_stderr: est.stderr,
        edges,
        continuous: est.mean / e,
        reference,
        tolerance,
    })
}

fn convert(spec: &ExperimentSpec, source: &ConvertSource) -> Result<String, CliError> {
    let mut table = Table::new(CONVERT_COLUMNS);
    match source {
        ConvertSource::Given { discrete_mean, edges } => {
            let mean: ExactValue = discrete_mean.parse().map_err(formula_error)?;
            let v = continuous_flooding_expectation(&mean, *edges).map_err(formula_error)?;
            table.push(vec![
                "given".into(),
                Cell::Empty,
                Cell::Empty,
                (*edges).into(),
                mean.to_f64().into(),
                Cell::Empty,
                v.to_f64().into(),
                exact_cell(&v),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
            ]);
        }
        ConvertSource::Simulated { graph, estimator } => {
            let c = simulate_conversion(graph, estimator)?;
            let g_sites = graph.build()?.site_count();
            table.push(vec![
                "monte-carlo".into(),
                graph.label().into(),
                g_sites.into(),
                c.edges.into(),
                c.discrete_mean.into(),
                c.discrete_stderr.into(),
                c.continuous.into(),
                Cell::Empty,
                c.reference.into(),
                c.tolerance.into(),
                c.consistent().into(),
            ]);
        }
    }
    Ok(render(spec, &table, Vec::<(&str, Value)>::new()))
}
