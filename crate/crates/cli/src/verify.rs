//! Built-in verification suite: exact oracle checks and 3-sigma Monte Carlo checks.

use gfl_core::exact::{
    continuous_flooding_expectation, recurrence_residual, ring_single_info_expectation,
    single_info_expectation_complete, star_ratio, star_total_expectation, total_time_bounds,
};
use gfl_core::montecarlo::{estimate, estimate_propagation_ratio, two_sample_mean_gap, Estimate};
use gfl_core::oracle::{exact_tables, expected_hitting_time, hitting_time_cdf, reversal_gap};
use gfl_core::rng::derive_seed;
use gfl_core::{
    make_complete, make_erdos_renyi, make_path, make_ring, make_star, EstimatorConfig, ExactValue, Graph, Scenario,
    StopSpec, Target,
};

use crate::error::{runtime, CliError};
use crate::spec::Suite;

/// Statistical checks use this many standard errors.
pub const SIGMAS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Oracle,
    ClosedForm,
    MonteCarlo,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Oracle => "oracle",
            Provenance::ClosedForm => "closed-form",
            Provenance::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: String,
    pub expected: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_names(&self) -> Vec<String> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect()
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        passed: bool,
        measured: String,
        expected: String,
        provenance: Provenance,
    ) {
        self.checks.push(Check { name: name.into(), passed, measured, expected, provenance });
    }
}

/// The Erdos-Renyi instance `G(12, 0.4)` with the smallest seed that yields a
/// connected graph.
pub fn fixed_er() -> (Graph, u64) {
    (0..)
        .find_map(|seed| make_erdos_renyi(12, 0.4, seed).ok().filter(Graph::is_connected).map(|g| (g, seed)))
        .expect("some seed gives a connected graph")
}

pub fn run_suite(suite: Suite, reps: u64, seed: u64) -> Result<VerifyReport, CliError> {
    let mut report = VerifyReport::default();
    if matches!(suite, Suite::Exact | Suite::All) {
        exact_suite(&mut report).map_err(runtime)?;
    }
    if matches!(suite, Suite::Mc | Suite::All) {
        if reps < 2 {
            return Err(CliError::Usage(format!("need at least 2 replications, got {reps}")));
        }
        mc_suite(&mut report, reps, seed).map_err(runtime)?;
    }
    Ok(report)
}

fn eq_check(report: &mut VerifyReport, name: String, measured: &ExactValue, expected: &ExactValue, p: Provenance) {
    report.push(name, measured == expected, measured.to_string(), expected.to_string(), p);
}

fn exact_suite(report: &mut VerifyReport) -> Result<(), Box<dyn std::error::Error>> {
    use Provenance::{ClosedForm, Oracle};
    let distinct = Scenario::DistinctAll;
    for n in 2..=4 {
        let g = make_complete(n)?;
        let oracle = expected_hitting_time(&g, &distinct, &Target::Infos(vec![0]))?;
        eq_check(report, format!("single-info-complete-n{n}"), &oracle, &single_info_expectation_complete(n)?, Oracle);
    }
    for leaves in 1..=3 {
        let oracle = expected_hitting_time(&make_star(leaves)?, &distinct, &Target::AllInformed)?;
        eq_check(report, format!("star-total-leaves{leaves}"), &oracle, &star_total_expectation(leaves)?, Oracle);
    }
    for n in 3..=5 {
        let oracle = expected_hitting_time(&make_ring(n)?, &distinct, &Target::Infos(vec![0]))?;
        eq_check(report, format!("ring-single-info-n{n}"), &oracle, &ring_single_info_expectation(n)?, Oracle);
    }
    for n in 3..=4 {
        let t = exact_tables(n, n)?;
        for k in 2..n {
            let r = recurrence_residual(n, k, t.m_at(k), t.a_at(k + 1), t.a_at(k))?;
            eq_check(report, format!("recurrence-n{n}-k{k}"), &r, &ExactValue::zero(), Oracle);
        }
        let chain = t.interleaved();
        let broken = chain.windows(2).find(|w| w[0].1 > w[1].1);
        report.push(
            format!("ordering-chain-n{n}"),
            broken.is_none(),
            chain.iter().map(|(name, v)| format!("{name}={v}")).collect::<Vec<_>>().join(" "),
            "non-decreasing".into(),
            Oracle,
        );
        for (label, seq) in [("M", &t.m), ("A", &t.a)] {
            report.push(
                format!("monotone-{label}-n{n}"),
                seq.windows(2).all(|w| w[0] <= w[1]),
                seq.iter().map(ToString::to_string).collect::<Vec<_>>().join(" "),
                "non-decreasing".into(),
                Oracle,
            );
        }
        let b = total_time_bounds(n)?;
        let m = t.m_at(n);
        report.push(
            format!("bounds-n{n}"),
            b.contains(m),
            m.to_string(),
            format!("[{}, {}]", b.lower, b.upper),
            Oracle,
        );
    }
    for (name, g) in [("k3", make_complete(3)?), ("path3", make_path(3)?), ("star3", make_star(3)?)] {
        let mut worst = ExactValue::zero();
        for x in 0..g.site_count() {
            let gap = reversal_gap(&g, x, 50)?;
            if gap > worst {
                worst = gap;
            }
        }
        eq_check(report, format!("reversal-exact-{name}"), &worst, &ExactValue::zero(), Oracle);
    }
    let m33 = expected_hitting_time(&make_complete(3)?, &distinct, &Target::AllInformed)?;
    let converted = continuous_flooding_expectation(&m33, 3)?;
    eq_check(report, "convert-k3".into(), &converted, &ExactValue::ratio(4, 3), ClosedForm);
    let cdf = hitting_time_cdf(&make_complete(2)?, &distinct, &Target::AllInformed, 3)?;
    let expected = [0, 1, 1, 1].map(ExactValue::integer);
    report.push(
        "cdf-k2-total",
        cdf == expected,
        cdf.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
        "0,1,1,1".into(),
        Oracle,
    );
    Ok(())
}

struct Mc {
    reps: u64,
    master: u64,
    next: u64,
}

impl Mc {
    /// Each call draws from a fresh, independent seed stream.
    fn cfg(&mut self, reps: u64) -> EstimatorConfig {
        self.next += 1;
        EstimatorConfig::new(reps, derive_seed(self.master, self.next))
    }

    fn one(&mut self, g: &Graph, spec: StopSpec) -> Result<Estimate, Box<dyn std::error::Error>> {
        let cfg = self.cfg(self.reps);
        Ok(estimate(g, &Scenario::DistinctAll, &spec, &cfg)?.remove(0))
    }
}

fn within_sigmas(report: &mut VerifyReport, name: String, e: &Estimate, truth: f64) {
    let z = (e.mean - truth) / e.stderr;
    report.push(
        name,
        (e.mean - truth).abs() <= SIGMAS * e.stderr,
        format!("{:.6} (stderr {:.6}, z {:.3})", e.mean, e.stderr, z),
        format!("{truth:.6}"),
        Provenance::MonteCarlo,
    );
}

fn mc_suite(report: &mut VerifyReport, reps: u64, seed: u64) -> Result<(), Box<dyn std::error::Error>> {
    use Provenance::MonteCarlo;
    let mut mc = Mc { reps, master: seed, next: 0 };

    let e = mc.one(&make_complete(3)?, StopSpec::total())?;
    within_sigmas(report, "mc-total-k3".into(), &e, 4.0);
    let e = mc.one(&make_complete(8)?, StopSpec::default().with_target([0]))?;
    within_sigmas(report, "mc-single-info-k8".into(), &e, single_info_expectation_complete(8)?.to_f64());
    let e = mc.one(&make_star(2)?, StopSpec::total())?;
    within_sigmas(report, "mc-star-total-leaves2".into(), &e, star_total_expectation(2)?.to_f64());

    let k8 = make_complete(8)?;
    let tau = mc.one(&k8, StopSpec::default().with_target([0]))?;
    let y = mc.one(&k8, StopSpec::default().with_y(0))?;
    let gap = two_sample_mean_gap(&tau, &y);
    report.push("mc-reversal-k8", gap < 4.0, format!("{gap:.3}"), "< 4".into(), MonteCarlo);

    let (er, er_seed) = fixed_er();
    let cases = [
        ("k8".to_string(), k8.clone()),
        ("star8".to_string(), make_star(8)?),
        ("ring8".to_string(), make_ring(8)?),
        (format!("er12-seed{er_seed}"), er.clone()),
    ];
    for (name, g) in &cases {
        let total = mc.one(g, StopSpec::total())?;
        let mut worst = f64::NEG_INFINITY;
        for x in 0..g.site_count() {
            let tx = mc.one(g, StopSpec::default().with_target([x]))?;
            let sigma = (total.stderr.powi(2) + 4.0 * tx.stderr.powi(2)).sqrt();
            worst = worst.max((total.mean - 2.0 * tx.mean) / sigma);
        }
        report.push(
            format!("mc-universal-bound-{name}"),
            worst <= SIGMAS,
            format!("max (E[tau_V] - 2 E[tau_x]) / sigma = {worst:.3}"),
            format!("<= {SIGMAS}"),
            MonteCarlo,
        );
    }

    for leaves in [4, 16, 64] {
        let r = estimate_propagation_ratio(&make_star(leaves)?, false, &mc.cfg(reps))?;
        let truth = star_ratio(leaves)?.to_f64();
        report.push(
            format!("mc-star-ratio-leaves{leaves}"),
            (r.ratio - truth).abs() <= SIGMAS * r.ratio_stderr,
            format!("{:.6} (stderr {:.6})", r.ratio, r.ratio_stderr),
            format!("{truth:.6}"),
            MonteCarlo,
        );
    }

    for n in [64, 256] {
        let r = estimate_propagation_ratio(&make_complete(n)?, true, &mc.cfg(reps))?;
        let b = gfl_core::exact::total_time_bounds_approx(n)?;
        let (lo, hi) = (b.ratio_lower - SIGMAS * r.ratio_stderr, b.ratio_upper + SIGMAS * r.ratio_stderr);
        report.push(
            format!("mc-complete-ratio-n{n}"),
            lo <= r.ratio && r.ratio <= hi,
            format!("{:.6} (stderr {:.6})", r.ratio, r.ratio_stderr),
            format!("[{lo:.6}, {hi:.6}]"),
            MonteCarlo,
        );
    }

    let small = estimate_propagation_ratio(&make_ring(16)?, true, &mc.cfg(reps))?;
    let large = estimate_propagation_ratio(&make_ring(64)?, true, &mc.cfg(reps))?;
    report.push(
        "mc-ring-trend",
        large.ratio < small.ratio,
        format!("n=16: {:.6}, n=64: {:.6}", small.ratio, large.ratio),
        "ratio decreases with n".into(),
        MonteCarlo,
    );

    let r = estimate_propagation_ratio(&er, false, &mc.cfg(reps))?;
    let s = SIGMAS * r.ratio_stderr;
    report.push(
        format!("mc-ratio-window-er12-seed{er_seed}"),
        1.0 - s <= r.ratio && r.ratio <= 2.0 + s,
        format!("{:.6} (stderr {:.6})", r.ratio, r.ratio_stderr),
        format!("[{:.6}, {:.6}]", 1.0 - s, 2.0 + s),
        MonteCarlo,
    );
    Ok(())
}
