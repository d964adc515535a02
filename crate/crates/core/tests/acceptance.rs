//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria listed in `KNOWN_UNATTAINABLE` are checked at their stated
//! tolerance and may print FAIL without failing the run; any other FAIL
//! makes the process exit with status 1.

use std::fs;
use std::path::Path;
use std::time::Instant;

use frfc::cli::checks::{
    coupled_demo, lp_duality_suite, optimal_scenario_round_trip, quantile_recovery,
    zero_mean_technology_suite,
};
use frfc::cli::experiments::{
    newsvendor_scenario, objective_tolerance, synthetic, two_product, two_product_checks,
    NewsvendorScenarioConfig, ProblemKind, SyntheticConfig, TwoProductConfig,
};
use frfc::forecasters::{fit_least_squares, fit_m5_structure, split_sse, Node, TreeHyper};
use frfc::numerics::RandomSource;
use frfc::problems::newsvendor::{
    analytical_unreliable_optimum, unreliable_optimality_residual, NewsvendorParams,
};
use frfc::problems::Observation;
use nalgebra::{DMatrix, DVector};

/// Criteria expected to fail, each with a ledger entry explaining why.
const KNOWN_UNATTAINABLE: &[u32] = &[2, 5, 8];

struct Outcome {
    id: u32,
    pass: bool,
}

fn line(results: &mut Vec<Outcome>, id: u32, pass: bool, detail: String, started: Instant) {
    println!(
        "{} criterion {id}: {detail} [{:.1}s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    results.push(Outcome { id, pass });
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn criterion_1(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let nv = NewsvendorParams::single_product();
    let phi = nv.critical_ratio();
    let z = analytical_unreliable_optimum(phi, nv.b).expect("valid parameters");
    let res = unreliable_optimality_residual(z, phi, nv.b).abs();
    let pass = (z - 214.73).abs() <= 0.01 && res <= 1e-8 && t.elapsed().as_secs_f64() < 1.0;
    line(
        results,
        1,
        pass,
        format!("analytical optimum {z:.4} (target 214.73 ± 0.01), residual {res:.1e}"),
        t,
    );
}

fn criterion_2(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let rows =
        newsvendor_scenario(&NewsvendorScenarioConfig::default()).expect("scenario search runs");
    let obj_ok = rows
        .iter()
        .all(|r| (r.search_cost - r.saa_cost).abs() <= objective_tolerance(r.saa_cost));
    let band_ok = rows.iter().all(|r| (205.0..=225.0).contains(&r.ratio));
    let ratios: Vec<String> = rows.iter().map(|r| format!("{:.2}", r.ratio)).collect();
    let worst = rows
        .iter()
        .map(|r| (r.search_cost - r.saa_cost).abs())
        .fold(0.0f64, f64::max);
    line(
        results,
        2,
        obj_ok && band_ok,
        format!(
            "D*/U* = [{}]; objective agreement {} (worst |Δ| = {worst:.2e}); band [205, 225] {}",
            ratios.join(", "),
            if obj_ok { "holds" } else { "violated" },
            if band_ok { "holds" } else { "violated" }
        ),
        t,
    );
}

fn criterion_3(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let report = two_product(&TwoProductConfig::default()).expect("scaling report runs");
    let checks = two_product_checks(&report);
    let detail: Vec<String> = report
        .rows
        .iter()
        .map(|r| {
            format!(
                "N={} gap {:.1e} sum {:.6} ({:.3}s vs {:.3}s)",
                r.n,
                r.rel_obj_gap,
                r.z_search.iter().sum::<f64>(),
                r.search_seconds,
                r.lp_seconds
            )
        })
        .collect();
    println!(
        "  info: LP time grows faster than search time: {:?}",
        report.lp_grows_faster
    );
    line(results, 3, checks.iter().all(|&c| c), detail.join("; "), t);
}

fn criterion_4(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let failures: Vec<(u64, String)> = (0..200u64)
        .filter_map(|k| {
            optimal_scenario_round_trip(40_000 + k)
                .err()
                .map(|e| (k, e))
        })
        .collect();
    line(
        results,
        4,
        failures.is_empty(),
        format!(
            "{} of 200 fixed-technology round trips failed {:?}",
            failures.len(),
            failures.first()
        ),
        t,
    );
}

fn criterion_5(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    match zero_mean_technology_suite(50_000, 50) {
        Ok(f) => line(
            results,
            5,
            f.is_empty(),
            format!("{} of 50 zero-mean-technology instances disagree with the first-stage-only optimum {:?}", f.len(), f.first()),
            t,
        ),
        Err(e) => line(results, 5, false, format!("solve error: {e}"), t),
    }
}

fn criterion_6(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    match coupled_demo(1000, 6) {
        Ok((h, at_hat, obj)) => {
            // [−D, −2D] would need h₂ = 2h₁.
            let breaks = (h[1] - 2.0 * h[0]).abs() > 1e-6 * (1.0 + h[0].abs());
            line(
                results,
                6,
                breaks && rel_close(at_hat, obj, 1e-6),
                format!(
                    "h* = {h:?}; sample cost at the one-scenario plan {at_hat:.6} vs SAA {obj:.6}"
                ),
                t,
            );
        }
        Err(e) => line(results, 6, false, e, t),
    }
}

fn criterion_7(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    match quantile_recovery(5000, 7) {
        Ok((q, cost, at_mean)) => line(
            results,
            7,
            (q - 92.8).abs() <= 0.03 * 92.8 && cost <= at_mean,
            format!("learned constant {q:.3} (target 92.8 ± 3%), cost {cost:.2} vs {at_mean:.2} at the sample mean"),
            t,
        ),
        Err(e) => line(results, 7, false, e, t),
    }
}

/// Criteria 8 and 9 share the gap runs.
fn criteria_8_9(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let mut ordering = Vec::new();
    let mut floors = Vec::new();
    for problem in [ProblemKind::Shipment, ProblemKind::Resource] {
        let cfg = SyntheticConfig {
            problem,
            oracles: true,
            ..SyntheticConfig::default()
        };
        let run = synthetic(&cfg).expect("synthetic run");
        assert!(run.report.error.is_none(), "{:?}", run.report.error);
        let med = |p: &str| run.report.median_b99_pct(p).expect("policy evaluated");
        let names = ["SAA", "KNN", "ERSAA", "LS", "CART", "AD", "M5AD"];
        let medians: Vec<String> = names.iter().map(|n| format!("{n} {:.3}", med(n))).collect();
        println!(
            "  info: {} median B99 %: {}",
            problem.name(),
            medians.join(", ")
        );
        let saa_worse = ["AD", "M5AD", "ERSAA"].iter().all(|p| med("SAA") > med(p));
        let ad_beats_ls = ["AD", "M5AD"].iter().all(|p| med(p) <= med("LS"));
        ordering.push((problem, saa_worse, ad_beats_ls));

        let worst = |name: &str| {
            run.report
                .summaries_for(name)
                .map(|s| s.b99_pct)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        floors.push((problem, worst("ORACLE"), worst("ORACLE_SELF")));
        println!(
            "  info: {} finished after {:.0}s",
            problem.name(),
            t.elapsed().as_secs_f64()
        );
    }
    let pass8 = ordering.iter().all(|(_, a, b)| *a && *b);
    let detail8: Vec<String> = ordering
        .iter()
        .map(|(p, a, b)| {
            format!(
                "{}: SAA above AD/M5AD/ERSAA {a}, AD/M5AD at or below LS {b}",
                p.name()
            )
        })
        .collect();
    line(results, 8, pass8, detail8.join("; "), t);
    let pass9 = floors
        .iter()
        .all(|(_, ind, own)| *ind <= 0.5 && *own <= 0.5);
    let detail9: Vec<String> = floors
        .iter()
        .map(|(p, ind, own)| {
            format!(
                "{}: max oracle B99 {ind:.4}% (independent), {own:.4}% (self)",
                p.name()
            )
        })
        .collect();
    line(results, 9, pass9, detail9.join("; "), t);
}

/// Best split SSE by brute force over every feature and every cut between
/// sorted distinct values.
fn exhaustive_best(data: &[Observation], min_leaf: usize) -> Option<f64> {
    let n = data.len();
    let s = data[0].x.len();
    let all: Vec<usize> = (0..n).collect();
    let mut best: Option<f64> = None;
    for j in 0..s {
        let mut values: Vec<f64> = data.iter().map(|o| o.x[j]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for w in values.windows(2) {
            let cut = 0.5 * (w[0] + w[1]);
            let (l, r): (Vec<usize>, Vec<usize>) = all.iter().partition(|&&i| data[i].x[j] <= cut);
            if l.len() < min_leaf || r.len() < min_leaf {
                continue;
            }
            let sse = split_sse(data, &l) + split_sse(data, &r);
            best = Some(best.map_or(sse, |b: f64| b.min(sse)));
        }
    }
    best
}

fn cart_matches_enumeration(cases: u64) -> Result<(), String> {
    for k in 0..cases {
        let mut rng = RandomSource::new(10_001, k);
        let n = 4 + rng.index(47);
        let s = 1 + rng.index(3);
        let m = 1 + rng.index(3);
        let data: Vec<Observation> = (0..n)
            .map(|_| {
                // Coarse grid values produce ties among covariates.
                let x: Vec<f64> = (0..s)
                    .map(|_| (rng.uniform(0.0, 10.0) * 2.0).round() / 2.0)
                    .collect();
                let xi = (0..m)
                    .map(|c| x[c % s] * (c as f64 + 1.0) + rng.uniform(-3.0, 3.0))
                    .collect();
                Observation { x, xi }
            })
            .collect();
        let min_leaf = 1 + rng.index(5);
        let hyper = TreeHyper {
            min_leaf,
            max_depth: 1,
        };
        let tree = fit_m5_structure(&data, &hyper).map_err(|e| e.to_string())?;
        let total = split_sse(&data, &(0..n).collect::<Vec<_>>());
        let oracle = exhaustive_best(&data, min_leaf).filter(|b| *b < total * (1.0 - 1e-12));
        match (tree.nodes[0], oracle) {
            (Node::Leaf { .. }, None) => {}
            (
                Node::Split {
                    feature, threshold, ..
                },
                Some(b),
            ) => {
                let (l, r): (Vec<usize>, Vec<usize>) =
                    (0..n).partition(|&i| data[i].x[feature] <= threshold);
                let got = split_sse(&data, &l) + split_sse(&data, &r);
                if !rel_close(got, b, 1e-9) {
                    return Err(format!("case {k}: greedy SSE {got} vs exhaustive {b}"));
                }
            }
            (node, o) => return Err(format!("case {k}: tree root {node:?} vs exhaustive {o:?}")),
        }
    }
    Ok(())
}

/// Normal equations `[1 X]ᵀ[1 X] β = [1 X]ᵀ y` solved by LU.
fn ls_matches_normal_equations(cases: u64) -> Result<f64, String> {
    let mut worst = 0.0f64;
    for k in 0..cases {
        let mut rng = RandomSource::new(10_002, k);
        let s = 1 + rng.index(4);
        let m = 1 + rng.index(3);
        let n = s + 2 + rng.index(60);
        let data: Vec<Observation> = (0..n)
            .map(|_| {
                let x: Vec<f64> = (0..s).map(|_| rng.uniform(-2.0, 2.0)).collect();
                let xi = (0..m)
                    .map(|_| rng.uniform(-5.0, 5.0) + x.iter().sum::<f64>())
                    .collect();
                Observation { x, xi }
            })
            .collect();
        let fit = fit_least_squares(&data).map_err(|e| e.to_string())?;
        let a = DMatrix::from_fn(n, s + 1, |r, c| if c == 0 { 1.0 } else { data[r].x[c - 1] });
        let ata = a.transpose() * &a;
        let lu = ata.lu();
        for j in 0..m {
            let y = DVector::from_fn(n, |r, _| data[r].xi[j]);
            let beta = lu
                .solve(&(a.transpose() * y))
                .ok_or("singular normal equations")?;
            let got = std::iter::once(fit.intercepts[j]).chain(fit.slopes[j].iter().copied());
            for (g, b) in got.zip(beta.iter()) {
                let err = (g - b).abs() / (1.0 + b.abs());
                worst = worst.max(err);
                if err > 1e-8 {
                    return Err(format!("case {k} output {j}: {g} vs {b}"));
                }
            }
        }
    }
    Ok(worst)
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .expect("output directory")
        .map(|e| {
            let e = e.expect("entry");
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).expect("readable"),
            )
        })
        .filter(|(name, _)| !name.contains("timing"))
        .collect();
    files.sort();
    files
}

/// Runs a set of seeded subcommands twice and compares every output byte.
fn seeded_runs_reproduce() -> Result<usize, String> {
    let commands: &[&[&str]] = &[
        &["newsvendor-scenario", "--reps", "2", "--n", "300"],
        &["two-product", "--sizes", "50,200"],
        &["dataset", "--problem", "resource", "--n", "50"],
        &[
            "synthetic",
            "--problem",
            "shipment",
            "--n",
            "60",
            "--policies",
            "SAA,KNN,ERSAA,LS,CART,AD,M5AD",
            "--covariates",
            "2",
            "--replications",
            "3",
            "--conditional-samples",
            "50",
        ],
    ];
    let dirs = [
        tempfile::tempdir().map_err(|e| e.to_string())?,
        tempfile::tempdir().map_err(|e| e.to_string())?,
    ];
    for dir in &dirs {
        for cmd in commands {
            let mut args = vec![
                "frfc".to_string(),
                "--out".into(),
                dir.path().display().to_string(),
            ];
            args.extend(cmd.iter().map(|s| s.to_string()));
            let code = frfc::cli::run_with_log(args, &mut std::io::sink());
            if code != 0 {
                return Err(format!("{cmd:?} exited with {code}"));
            }
        }
    }
    let (a, b) = (
        read_dir_bytes(dirs[0].path()),
        read_dir_bytes(dirs[1].path()),
    );
    if a != b {
        return Err("outputs differ between identical runs".into());
    }
    Ok(a.len())
}

fn criterion_10(results: &mut Vec<Outcome>) {
    let t = Instant::now();
    let lp = lp_duality_suite(10_000, 1000);
    let cart = cart_matches_enumeration(300);
    let ls = ls_matches_normal_equations(200);
    let repro = seeded_runs_reproduce();
    let pass = lp.is_empty() && cart.is_ok() && ls.is_ok() && repro.is_ok();
    line(
        results,
        10,
        pass,
        format!(
            "LP duality {} of 1000 failed {:?}; CART vs exhaustive {:?}; LS vs normal equations {:?}; byte-identical reruns {:?}",
            lp.len(),
            lp.first(),
            cart,
            ls.map(|w| format!("worst relative error {w:.1e}")),
            repro.map(|n| format!("{n} files"))
        ),
        t,
    );
}

fn main() {
    // libtest-style filter arguments are ignored; the suite always runs whole.
    let mut results = Vec::new();
    criterion_1(&mut results);
    criterion_2(&mut results);
    criterion_3(&mut results);
    criterion_4(&mut results);
    criterion_5(&mut results);
    criterion_6(&mut results);
    criterion_7(&mut results);
    criterion_10(&mut results);
    criteria_8_9(&mut results);

    let unexpected: Vec<u32> = results
        .iter()
        .filter(|o| !o.pass && !KNOWN_UNATTAINABLE.contains(&o.id))
        .map(|o| o.id)
        .collect();
    let passed = results.iter().filter(|o| o.pass).count();
    println!(
        "acceptance: {passed}/{} criteria pass; known unattainable: {KNOWN_UNATTAINABLE:?}",
        results.len()
    );
    if !unexpected.is_empty() {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
