//! Acceptance criteria, one line each. Runs without the libtest harness so
//! every line is printed; exits non-zero if any criterion fails.

use std::process::Command;
use std::time::Instant;

use gfl_cli::commands::simulate_conversion;
use gfl_cli::spec::{EstimatorSpec, GraphSpec};
use gfl_cli::verify::fixed_er;
use gfl_core::exact::{
    continuous_flooding_expectation, harmonic_f64, recurrence_residual, ring_single_info_expectation,
    single_info_expectation_complete, star_ratio, total_time_bounds, total_time_bounds_approx,
};
use gfl_core::montecarlo::{estimate, estimate_propagation_ratio, two_sample_mean_gap};
use gfl_core::oracle::{exact_tables, expected_hitting_time, reversal_gap};
use gfl_core::process::DEFAULT_STEP_CAP;
use gfl_core::{
    make_complete, make_path, make_ring, make_star, EstimatorConfig, ExactValue, Graph, Scenario, StopSpec, Target,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SIGMAS: f64 = 3.0;

fn q(s: &str) -> ExactValue {
    s.parse().unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let mut parts = Vec::new();
    for n in 2..=4 {
        let g = make_complete(n).unwrap();
        let oracle = expected_hitting_time(&g, &Scenario::DistinctAll, &Target::Infos(vec![0])).unwrap();
        let formula = single_info_expectation_complete(n).unwrap();
        if oracle != formula {
            return Err(format!("n={n}: oracle {oracle} != {formula}"));
        }
        parts.push(format!("n={n}: {oracle}"));
    }
    Ok(parts.join(", "))
}

fn criterion_2() -> Outcome {
    let mut count = 0;
    for n in 3..=4 {
        let t = exact_tables(n, n).unwrap();
        for k in 2..n {
            let r = recurrence_residual(n, k, t.m_at(k), t.a_at(k + 1), t.a_at(k)).unwrap();
            if !r.is_zero() {
                return Err(format!("n={n} k={k}: residual {r}"));
            }
            count += 1;
        }
    }
    Ok(format!("{count} residuals are exactly 0"))
}

fn criterion_3() -> Outcome {
    for n in 3..=4 {
        let t = exact_tables(n, n).unwrap();
        let chain = t.interleaved();
        if let Some(w) = chain.windows(2).find(|w| w[0].1 > w[1].1) {
            return Err(format!("n={n}: {}={} > {}={}", w[0].0, w[0].1, w[1].0, w[1].1));
        }
        if !t.m.windows(2).all(|w| w[0] <= w[1]) || !t.a.windows(2).all(|w| w[0] <= w[1]) {
            return Err(format!("n={n}: monotonicity chain broken"));
        }
    }
    Ok("interleaving and monotonicity hold for n=3,4".into())
}

fn criterion_4() -> Outcome {
    let graphs =
        [("K3", make_complete(3).unwrap()), ("path3", make_path(3).unwrap()), ("star3", make_star(3).unwrap())];
    for (name, g) in &graphs {
        for x in 0..g.site_count() {
            let gap = reversal_gap(g, x, 50).unwrap();
            if !gap.is_zero() {
                return Err(format!("{name} site {x}: CDF gap {gap}"));
            }
        }
    }
    let k8 = make_complete(8).unwrap();
    let tau = &estimate(
        &k8,
        &Scenario::DistinctAll,
        &StopSpec::default().with_target([0]),
        &EstimatorConfig::new(100_000, 401),
    )
    .unwrap()[0];
    let y = &estimate(&k8, &Scenario::DistinctAll, &StopSpec::default().with_y(0), &EstimatorConfig::new(100_000, 402))
        .unwrap()[0];
    let gap = two_sample_mean_gap(tau, y);
    ensure(gap < 4.0, format!("exact gaps 0; K8 tau_0 {:.4} vs Y_0 {:.4}, gap {gap:.3} (< 4)", tau.mean, y.mean))
}

fn criterion_5() -> Outcome {
    let m33 = exact_tables(3, 3).unwrap().m_at(3).clone();
    let m44 = exact_tables(4, 4).unwrap().m_at(4).clone();
    let (b3, b4) = (total_time_bounds(3).unwrap(), total_time_bounds(4).unwrap());
    let window_ok = (b3.lower.clone(), b3.upper.clone(), b4.lower.clone(), b4.upper.clone())
        == (q("3"), q("9/2"), q("6"), q("33/4"));
    ensure(
        window_ok && m33 == q("4") && b3.contains(&m33) && b4.contains(&m44),
        format!("M_3(3)={m33} in [{}, {}], M_4(4)={m44} in [{}, {}]", b3.lower, b3.upper, b4.lower, b4.upper),
    )
}

fn criterion_6() -> Outcome {
    let reps = 20_000;
    let (er, er_seed) = fixed_er();
    let cases: Vec<(String, Graph)> = vec![
        ("K8".into(), make_complete(8).unwrap()),
        ("star(8)".into(), make_star(8).unwrap()),
        ("ring(8)".into(), make_ring(8).unwrap()),
        (format!("ER(12,0.4,seed {er_seed})"), er),
    ];
    let mut seed = 600;
    let mut worst_all = f64::NEG_INFINITY;
    for (name, g) in &cases {
        seed += 1;
        let total = estimate(g, &Scenario::DistinctAll, &StopSpec::total(), &EstimatorConfig::new(reps, seed))
            .unwrap()
            .remove(0);
        for x in 0..g.site_count() {
            seed += 1;
            let spec = StopSpec::default().with_target([x]);
            let tx = estimate(g, &Scenario::DistinctAll, &spec, &EstimatorConfig::new(reps, seed)).unwrap().remove(0);
            let sigma = (total.stderr.powi(2) + 4.0 * tx.stderr.powi(2)).sqrt();
            let excess = (total.mean - 2.0 * tx.mean) / sigma;
            if excess > SIGMAS {
                return Err(format!("{name} site {x}: E[tau_V] {:.3} > 2*{:.3} + 3 sigma", total.mean, tx.mean));
            }
            worst_all = worst_all.max(excess);
        }
    }
    Ok(format!("all sites satisfied; largest (E[tau_V] - 2E[tau_x])/sigma = {worst_all:.2}"))
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (n, seed) in [(256, 701), (1024, 702)] {
        let r =
            estimate_propagation_ratio(&make_complete(n).unwrap(), true, &EstimatorConfig::new(2_000, seed)).unwrap();
        let lo = 1.5 - 0.75 / harmonic_f64(n - 1) - SIGMAS * r.ratio_stderr;
        let hi = 1.5 + SIGMAS * r.ratio_stderr;
        ok &= lo <= r.ratio && r.ratio <= hi;
        parts.push(format!("n={n}: {:.4} in [{lo:.4}, {hi:.4}]", r.ratio));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_8() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (leaves, seed) in [(4, 801), (16, 802), (64, 803)] {
        let r = estimate_propagation_ratio(&make_star(leaves).unwrap(), false, &EstimatorConfig::new(10_000, seed))
            .unwrap();
        let truth = star_ratio(leaves).unwrap().to_f64();
        let z = (r.ratio - truth) / r.ratio_stderr;
        ok &= z.abs() <= SIGMAS;
        parts.push(format!("L={leaves}: {:.4} vs {truth:.4} (z {z:.2})", r.ratio));
    }
    ensure(ok, parts.join(", "))
}

fn criterion_9() -> Outcome {
    for n in 3..=5 {
        let oracle =
            expected_hitting_time(&make_ring(n).unwrap(), &Scenario::DistinctAll, &Target::Infos(vec![0])).unwrap();
        let formula = ring_single_info_expectation(n).unwrap();
        if oracle != formula {
            return Err(format!("ring({n}): oracle {oracle} != {formula}"));
        }
    }
    let cfg = |seed| EstimatorConfig::new(5_000, seed);
    let small = estimate_propagation_ratio(&make_ring(16).unwrap(), true, &cfg(901)).unwrap();
    let large = estimate_propagation_ratio(&make_ring(256).unwrap(), true, &cfg(902)).unwrap();
    ensure(
        large.ratio < small.ratio,
        format!("ring closed form exact for n=3..5; ratio n=16 {:.4} > n=256 {:.4}", small.ratio, large.ratio),
    )
}

fn criterion_10() -> Outcome {
    let m33 = expected_hitting_time(&make_complete(3).unwrap(), &Scenario::DistinctAll, &Target::AllInformed).unwrap();
    let converted = continuous_flooding_expectation(&m33, 3).unwrap();
    if converted != q("4/3") {
        return Err(format!("convert(M_3(3), 3) = {converted}"));
    }
    let n = 1024;
    let estimator = EstimatorSpec { reps: 2_000, seed: 1001, ci_level: 0.95, step_cap: DEFAULT_STEP_CAP };
    let c = simulate_conversion(&GraphSpec::Complete { n }, &estimator).unwrap();
    let b = total_time_bounds_approx(n).unwrap();
    let edges = (n * (n - 1) / 2) as f64;
    let tolerance = (SIGMAS * c.discrete_stderr + (b.upper - b.lower)) / edges;
    let reference = 3.0 * (n as f64).ln() / n as f64;
    let diff = (c.continuous - reference).abs();
    ensure(
        diff <= tolerance && c.tolerance == Some(tolerance),
        format!(
            "4/3 exact; n=1024: {:.6} vs 3 ln n / n = {reference:.6}, |diff| {diff:.6} <= {tolerance:.6}",
            c.continuous
        ),
    )
}

fn criterion_11() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_gfl");
    let dir = std::env::temp_dir().join(format!("gfl-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let graph = dir.join("graph.txt");
    std::fs::write(&graph, "0 1\n1 2\n2 3\n3 0\n0 2\n").unwrap();
    let g = graph.to_str().unwrap();
    let spec = dir.join("spec.json");
    let dumped = Command::new(bin)
        .args([
            "simulate",
            "--family",
            "star",
            "--leaves",
            "5",
            "--total",
            "--y",
            "0",
            "--reps",
            "4000",
            "--seed",
            "6",
            "--dump-spec",
        ])
        .output()
        .unwrap();
    std::fs::write(&spec, dumped.stdout).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec!["gen", "--family", "er", "--n", "20", "--p", "0.3", "--seed", "9"],
        vec![
            "simulate", "--family", "complete", "--n", "16", "--total", "--target", "0", "--y", "1", "--reps", "20000",
            "--seed", "42",
        ],
        vec![
            "simulate",
            "--edge-list",
            g,
            "--scenario",
            "duplicated",
            "--total",
            "--reps",
            "5000",
            "--seed",
            "3",
            "--format",
            "json",
        ],
        vec!["exact", "--formula", "bounds", "--n", "9"],
        vec!["oracle", "--n", "4", "--tables"],
        vec!["oracle", "--family", "path", "--n", "4", "--cdf", "site", "--index", "1", "--horizon", "12"],
        vec!["verify", "--suite", "all", "--reps", "2000", "--seed", "7"],
        vec!["ratio-sweep", "--family", "complete", "--n", "16,32", "--reps", "3000", "--seed", "5"],
        vec!["ratio-sweep", "--edge-list", g, "--reps", "3000", "--seed", "5"],
        vec!["convert", "--family", "complete", "--n", "32", "--reps", "3000", "--seed", "8"],
        vec!["convert", "--discrete-mean", "4", "--edges", "3"],
        vec!["replay", spec.to_str().unwrap()],
    ];
    let exec = |args: &[&str], threads: &str| {
        let out = Command::new(bin).args(args).args(["--threads", threads]).output().unwrap();
        if !out.status.success() {
            return Err(format!(
                "{args:?} exited with {:?}: {}",
                out.status.code(),
                String::from_utf8_lossy(&out.stderr)
            ));
        }
        Ok(out.stdout)
    };
    for args in &commands {
        let first = exec(args, "1")?;
        let second = exec(args, "1")?;
        let max = exec(args, "0")?;
        let four = exec(args, "4")?;
        if first.is_empty() || first != second || first != max || first != four {
            return Err(format!("{args:?} output differs between runs or thread counts"));
        }
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(format!("{} commands byte-identical across 2 runs and --threads 1/4/max", commands.len()))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("closed form vs oracle", criterion_1),
        ("recurrence residual", criterion_2),
        ("ordering and monotonicity chains", criterion_3),
        ("reversal duality", criterion_4),
        ("bounds containment", criterion_5),
        ("universal 2x bound", criterion_6),
        ("complete-graph ratio window", criterion_7),
        ("star ratio", criterion_8),
        ("ring trend and closed form", criterion_9),
        ("continuous-time conversion", criterion_10),
        ("reproducibility", criterion_11),
    ];
    let filter: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                println!("criterion {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
                failed.push(id);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
