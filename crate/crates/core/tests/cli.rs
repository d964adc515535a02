use std::fs;
use std::path::Path;

use frfc::cli::{run_with_log, EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use frfc::problems::analytical_unreliable_optimum;
use frfc::report::read_dataset;
use frfc::two_stage::FrfcProblem;

fn run(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["frfc", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run_with_log(argv, &mut std::io::sink())
}

fn config_line(text: &str) -> serde_json::Value {
    let line = text
        .lines()
        .find_map(|l| l.strip_prefix("# config: "))
        .unwrap();
    serde_json::from_str(line).unwrap()
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["no-such-command"]), EXIT_USAGE);
    assert_eq!(
        run(dir.path(), &["newsvendor-scenario", "--n", "0"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(
            dir.path(),
            &["newsvendor-scenario", "--phi-override", "1.5"]
        ),
        EXIT_USAGE
    );
    assert_eq!(
        run(dir.path(), &["two-product", "--sizes", "100,50"]),
        EXIT_USAGE
    );
    assert_eq!(
        run(dir.path(), &["synthetic", "--policies", "SAA,NOPE"]),
        EXIT_USAGE
    );

    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[dataset]\nno_such_key = 1\n").unwrap();
    let args = ["--config", cfg.to_str().unwrap(), "dataset", "--n", "5"];
    assert_eq!(run(dir.path(), &args), EXIT_USAGE);
    let missing = ["--config", "/nonexistent/frfc.toml", "dataset"];
    assert_eq!(run(dir.path(), &missing), EXIT_USAGE);
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[newsvendor_scenario]\nreps = 1\nn = 50\n\n[newsvendor_scenario.search.nelder_mead]\nepsilon = 1e-9\n",
    )
    .unwrap();
    let args = [
        "--config",
        cfg.to_str().unwrap(),
        "newsvendor-scenario",
        "--n",
        "80",
    ];
    assert_eq!(run(dir.path(), &args), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("newsvendor_scenario.csv")).unwrap();
    let c = config_line(&text);
    assert_eq!(c["reps"], 1);
    assert_eq!(c["n"], 80);
    assert_eq!(c["search"]["nelder_mead"]["epsilon"], 1e-9);
    // Untouched nested keys keep their defaults.
    assert_eq!(c["search"]["nelder_mead"]["max_iterations"], 5000);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 2);
}

#[test]
fn phi_override_moves_the_analytical_column() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "newsvendor-scenario",
        "--n",
        "200",
        "--reps",
        "1",
        "--phi-override",
        "0.8",
    ];
    assert_eq!(run(dir.path(), &args), EXIT_OK);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(dir.path().join("newsvendor_scenario.csv"))
        .unwrap();
    let h = r.headers().unwrap().clone();
    let col = h.iter().position(|c| c == "analytical").unwrap();
    let rec = r.records().next().unwrap().unwrap();
    let analytical: f64 = rec[col].parse().unwrap();
    let expected = analytical_unreliable_optimum(0.8, 100.0).unwrap();
    assert!((analytical - expected).abs() < 1e-6 * expected);
}

#[test]
fn instance_files_round_trip_and_bad_ones_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    for kind in [
        "newsvendor",
        "unreliable",
        "coupled",
        "two-product",
        "shipment",
    ] {
        assert_eq!(
            run(dir.path(), &["instance", "--problem", kind]),
            EXIT_OK,
            "{kind}"
        );
        let path = dir.path().join(format!("{kind}.toml"));
        let text = fs::read_to_string(&path).unwrap();
        FrfcProblem::from_toml(&text).unwrap();
        assert_eq!(
            run(dir.path(), &["instance", "--check", path.to_str().unwrap()]),
            EXIT_OK
        );
    }
    let bad = dir.path().join("bad.toml");
    fs::write(
        &bad,
        "first_stage_cost = [1.0]\nrecourse = [[1.0, -1.0]]\nsecond_stage_cost = [1.0]\ntechnology = [[1.0]]\n",
    )
    .unwrap();
    assert_eq!(
        run(dir.path(), &["instance", "--check", bad.to_str().unwrap()]),
        EXIT_RUNTIME
    );
}

#[test]
fn dataset_has_the_generator_shape() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(
            dir.path(),
            &["dataset", "--problem", "shipment", "--n", "40"]
        ),
        EXIT_OK
    );
    let text = fs::read_to_string(dir.path().join("dataset_shipment.csv")).unwrap();
    let data = read_dataset(text.as_bytes()).unwrap();
    assert_eq!(data.len(), 40);
    assert!(data.iter().all(|o| o.x.len() == 3 && o.xi.len() == 12));
    assert!(data.iter().flat_map(|o| &o.x).all(|&v| v >= 0.0));
    assert_eq!(config_line(&text)["n"], 40);
}

#[test]
fn selftest_passes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), &["selftest"]), EXIT_OK);
}
