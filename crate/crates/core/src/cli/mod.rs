//! The `frfc` command line: experiment subcommands, instance and dataset
//! export, and a fast self test.
//!
//! Every subcommand resolves its configuration from defaults, then the
//! matching table of the optional `--config` TOML file, then flags. The
//! resolved configuration is echoed as a `# config:` comment at the top of
//! every output file.

pub mod checks;
pub mod experiments;

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::policies::PolicyKind;
use crate::problems::newsvendor::{
    self, unreliable_optimality_residual, NewsvendorParams, TwoProductSetup,
};
use crate::report::{fmt, write_csv, write_dataset, Provenance};
use crate::two_stage::FrfcProblem;
use experiments::{
    NewsvendorScenarioConfig, NewsvendorScenarioRow, ProblemKind, SyntheticConfig, TwoProductConfig,
};

/// Exit statuses.
pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ACCEPTANCE: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Acceptance(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Acceptance(_) => EXIT_ACCEPTANCE,
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "frfc",
    version,
    about = "Optimal scenarios and application-driven forecasts for two-stage LPs"
)]
pub struct Cli {
    /// TOML file with one table per subcommand (e.g. `[synthetic]`).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Unreliable-supplier scenario search against SAA, per replication.
    NewsvendorScenario(NewsvendorArgs),
    /// Scenario search versus extensive-form SAA on the two-product newsvendor.
    TwoProduct(TwoProductArgs),
    /// Fit policies on synthetic data and estimate their optimality gaps.
    Synthetic(SyntheticArgs),
    /// Write a problem instance as TOML, or check that a file round-trips.
    Instance(InstanceArgs),
    /// Write a synthetic training dataset as CSV.
    Dataset(DatasetArgs),
    /// Fast property checks; exits with status 3 on failure.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct NewsvendorArgs {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub phi_override: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TwoProductArgs {
    /// Comma-separated, strictly increasing sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SyntheticArgs {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Comma-separated policy names: SAA, KNN, ERSAA, LS, CART, AD, M5AD.
    #[arg(long, value_delimiter = ',')]
    pub policies: Option<Vec<PolicyKind>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub covariates: Option<usize>,
    #[arg(long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub conditional_samples: Option<usize>,
    /// Add the ORACLE and ORACLE_SELF rows.
    #[arg(long)]
    pub oracles: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InstanceKind {
    Resource,
    Shipment,
    Newsvendor,
    Unreliable,
    Coupled,
    TwoProduct,
}

#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, value_enum, required_unless_present = "check")]
    pub problem: Option<InstanceKind>,
    /// Seed of the randomly drawn cost parameters (resource, shipment).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Parse this file, validate it and check that it round-trips.
    #[arg(long, conflicts_with = "problem")]
    pub check: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long, value_enum)]
    pub problem: Option<ProblemKind>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Messages go to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with_log(args, &mut io::stdout().lock())
}

/// [`run`] with progress and summaries written to `log` instead of stdout.
pub fn run_with_log<I, T>(args: I, log: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, log) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            match &e {
                CliError::Usage(m) => eprintln!("usage error: {m}"),
                CliError::Runtime(m) => eprintln!("error: {m}"),
                CliError::Acceptance(m) => eprintln!("self test failed: {m}"),
            }
            e.code()
        }
    }
}

/// Runs a parsed command; progress and summaries go to `log`.
pub fn execute(cli: &Cli, log: &mut dyn Write) -> Result<(), CliError> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            Some(
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?,
            )
        }
        None => None,
    };
    let file = file.as_ref();
    match &cli.command {
        Command::NewsvendorScenario(a) => {
            let mut cfg: NewsvendorScenarioConfig = from_file(file, "newsvendor_scenario")?;
            set(&mut cfg.n, a.n);
            set(&mut cfg.reps, a.reps);
            set(&mut cfg.seed, a.seed);
            if a.phi_override.is_some() {
                cfg.phi_override = a.phi_override;
            }
            cmd_newsvendor_scenario(&cfg, &cli.out, log)
        }
        Command::TwoProduct(a) => {
            let mut cfg: TwoProductConfig = from_file(file, "two_product")?;
            set(&mut cfg.sizes, a.sizes.clone());
            set(&mut cfg.seed, a.seed);
            cmd_two_product(&cfg, &cli.out, log)
        }
        Command::Synthetic(a) => {
            let mut cfg: SyntheticConfig = from_file(file, "synthetic")?;
            set(&mut cfg.problem, a.problem);
            set(&mut cfg.p, a.p);
            set(&mut cfg.n, a.n);
            set(&mut cfg.policies, a.policies.clone());
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.covariates, a.covariates);
            set(&mut cfg.replications, a.replications);
            set(&mut cfg.conditional_samples, a.conditional_samples);
            cfg.oracles |= a.oracles;
            cmd_synthetic(&cfg, &cli.out, log)
        }
        Command::Instance(a) => cmd_instance(a, &cli.out, log),
        Command::Dataset(a) => {
            let mut cfg: DatasetConfig = from_file(file, "dataset")?;
            set(&mut cfg.problem, a.problem);
            set(&mut cfg.p, a.p);
            set(&mut cfg.n, a.n);
            set(&mut cfg.seed, a.seed);
            cmd_dataset(&cfg, &cli.out)
        }
        Command::Selftest(a) => {
            let mut cfg: SelftestConfig = from_file(file, "selftest")?;
            set(&mut cfg.seed, a.seed);
            cmd_selftest(&cfg, log)
        }
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

/// Defaults overlaid with the `[key]` table of the config file. Nested
/// tables merge key by key, so a file may set a single leaf.
fn from_file<T: DeserializeOwned + Serialize + Default>(
    file: Option<&toml::Table>,
    key: &str,
) -> Result<T, CliError> {
    let Some(over) = file.and_then(|t| t.get(key)) else {
        return Ok(T::default());
    };
    let mut base =
        toml::Value::try_from(T::default()).map_err(|e| CliError::Runtime(e.to_string()))?;
    merge(&mut base, over.clone());
    base.try_into()
        .map_err(|e| CliError::Usage(format!("[{key}]: {e}")))
}

fn merge(base: &mut toml::Value, over: toml::Value) {
    match (base, over) {
        (toml::Value::Table(b), toml::Value::Table(o)) => {
            for (k, v) in o {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

fn provenance<C: Serialize>(tool: &str, seed: u64, cfg: &C) -> Provenance {
    Provenance::new(&format!("frfc {tool}"))
        .with("seed", seed)
        .with(
            "config",
            serde_json::to_string(cfg).expect("configs serialize"),
        )
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn pass_fail(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn cmd_newsvendor_scenario(
    cfg: &NewsvendorScenarioConfig,
    out: &Path,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::Usage)?;
    let rows = experiments::newsvendor_scenario(cfg).map_err(CliError::Runtime)?;
    let prov = provenance("newsvendor-scenario", cfg.seed, cfg);
    let header = NewsvendorScenarioRow::HEADER.map(String::from);
    let mut w = create(out, "newsvendor_scenario.csv")?;
    write_csv(&mut w, &prov, &header, rows.iter().map(|r| r.record()))?;
    w.flush()?;
    for r in &rows {
        writeln!(
            log,
            "replication {}: D*/U* = {:.2}, SAA = {:.2}, analytical = {:.2}",
            r.replication, r.ratio, r.saa_solution, r.analytical
        )?;
    }
    let count = |f: fn(&NewsvendorScenarioRow) -> bool| rows.iter().filter(|r| f(r)).count();
    let (within, in_band) = (count(|r| r.within_tolerance), count(|r| r.in_band));
    writeln!(
        log,
        "{} scenario search within tolerance of SAA in {within}/{} replications",
        pass_fail(within == rows.len()),
        rows.len()
    )?;
    writeln!(
        log,
        "D*/U* inside the reference band in {in_band}/{} replications",
        rows.len()
    )?;
    Ok(())
}

pub fn cmd_two_product(
    cfg: &TwoProductConfig,
    out: &Path,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::Usage)?;
    let report = experiments::two_product(cfg).map_err(CliError::Runtime)?;
    // Wall-clock columns go to their own file so that the main table stays
    // byte-reproducible.
    let header = report.header();
    let records = report.records();
    let timed = |name: &str| name.starts_with("t_");
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !timed(&header[i])).collect();
    let prov = provenance("two-product", cfg.seed, cfg);
    let mut w = create(out, "two_product.csv")?;
    write_csv(
        &mut w,
        &prov,
        &keep.iter().map(|&i| header[i].clone()).collect::<Vec<_>>(),
        records
            .iter()
            .map(|r| keep.iter().map(|&i| r[i].clone()).collect::<Vec<_>>()),
    )?;
    w.flush()?;
    let flag = match report.lp_grows_faster {
        Some(b) => b.to_string(),
        None => "undetermined".into(),
    };
    let tprov = provenance("two-product", cfg.seed, cfg).with("lp_grows_faster", &flag);
    let timing_cols: Vec<usize> = (0..header.len())
        .filter(|&i| i == 0 || timed(&header[i]))
        .collect();
    let mut w = create(out, "two_product_timing.csv")?;
    write_csv(
        &mut w,
        &tprov,
        &timing_cols
            .iter()
            .map(|&i| header[i].clone())
            .collect::<Vec<_>>(),
        records.iter().map(|r| {
            timing_cols
                .iter()
                .map(|&i| r[i].clone())
                .collect::<Vec<_>>()
        }),
    )?;
    w.flush()?;
    let checks = experiments::two_product_checks(&report);
    for (row, ok) in report.rows.iter().zip(&checks) {
        writeln!(
            log,
            "{} N = {}: search {:?} vs LP {:?}, relative gap {:.2e}, {:.3}s vs {:.3}s",
            pass_fail(*ok),
            row.n,
            row.z_search,
            row.z_lp,
            row.rel_obj_gap,
            row.search_seconds,
            row.lp_seconds
        )?;
    }
    writeln!(log, "LP time grows faster than search time: {flag}")?;
    Ok(())
}

pub fn cmd_synthetic(
    cfg: &SyntheticConfig,
    out: &Path,
    log: &mut dyn Write,
) -> Result<(), CliError> {
    cfg.validate().map_err(CliError::Usage)?;
    let run = experiments::synthetic(cfg).map_err(CliError::Runtime)?;
    let prov = provenance("synthetic", cfg.seed, cfg);
    let mut w = create(out, &format!("synthetic_{}.csv", cfg.problem.name()))?;
    run.report.write_csv(&mut w, &prov)?;
    w.flush()?;

    let header = ["policy", "median_B99_pct"].map(String::from);
    let mut names: Vec<&str> = Vec::new();
    for k in &cfg.policies {
        if !names.contains(&k.name()) {
            names.push(k.name());
        }
    }
    if cfg.oracles {
        names.extend(["ORACLE", "ORACLE_SELF"]);
    }
    let rows: Vec<Vec<String>> = names
        .iter()
        .map(|n| {
            vec![
                n.to_string(),
                run.report.median_b99_pct(n).map_or("NA".into(), fmt),
            ]
        })
        .collect();
    let mut w = create(
        out,
        &format!("synthetic_{}_summary.csv", cfg.problem.name()),
    )?;
    write_csv(&mut w, &prov, &header, rows.iter().cloned())?;
    w.flush()?;
    for r in &rows {
        writeln!(log, "{:>6}  median B99 = {}%", r[0], r[1])?;
    }
    match &run.report.error {
        Some(e) => Err(CliError::Runtime(format!(
            "gap estimation stopped early ({e}); partial results written"
        ))),
        None => Ok(()),
    }
}

pub fn cmd_instance(a: &InstanceArgs, out: &Path, log: &mut dyn Write) -> Result<(), CliError> {
    if let Some(path) = &a.check {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        let p = FrfcProblem::from_toml(&text).map_err(|e| CliError::Runtime(e.to_string()))?;
        let again =
            FrfcProblem::from_toml(&p.to_toml().map_err(|e| CliError::Runtime(e.to_string()))?)
                .map_err(|e| CliError::Runtime(e.to_string()))?;
        if again != p {
            return Err(CliError::Runtime("instance does not round-trip".into()));
        }
        writeln!(
            log,
            "{}: {} first-stage variables, {} recourse variables, {} scenario rows; round trip ok",
            p.name,
            p.n_first(),
            p.n_second(),
            p.scenario_dim()
        )?;
        return Ok(());
    }
    let kind = a.problem.expect("clap requires --problem without --check");
    let nv = NewsvendorParams::single_product();
    let err = |e: crate::problems::ProblemError| CliError::Runtime(e.to_string());
    let problem: FrfcProblem = match kind {
        InstanceKind::Resource => (*ProblemKind::Resource
            .instance(a.seed)
            .map_err(CliError::Runtime)?
            .problem)
            .clone(),
        InstanceKind::Shipment => (*ProblemKind::Shipment
            .instance(a.seed)
            .map_err(CliError::Runtime)?
            .problem)
            .clone(),
        InstanceKind::Newsvendor => (*newsvendor::standard(&nv).map_err(err)?.problem).clone(),
        InstanceKind::Unreliable => newsvendor::unreliable(&nv).map_err(err)?,
        InstanceKind::Coupled => (*newsvendor::coupled(&nv, 1e5).map_err(err)?.problem).clone(),
        InstanceKind::TwoProduct => {
            (*TwoProductSetup::default().instance().map_err(err)?.problem).clone()
        }
    };
    let text = problem
        .to_toml()
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let name = format!(
        "{}.toml",
        kind.to_possible_value()
            .expect("no skipped variants")
            .get_name()
    );
    let mut w = create(out, &name)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    writeln!(log, "wrote {}", out.join(name).display())?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetConfig {
    pub problem: ProblemKind,
    pub p: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Shipment,
            p: 1.0,
            n: 1000,
            seed: 11,
        }
    }
}

/// Same generator and stream as the `synthetic` training data.
pub fn cmd_dataset(cfg: &DatasetConfig, out: &Path) -> Result<(), CliError> {
    let syn = SyntheticConfig {
        problem: cfg.problem,
        p: cfg.p,
        n: cfg.n,
        seed: cfg.seed,
        ..SyntheticConfig::default()
    };
    syn.validate().map_err(CliError::Usage)?;
    let g = syn.generator().map_err(CliError::Runtime)?;
    let data = g
        .gen_dataset(&mut crate::numerics::RandomSource::new(cfg.seed, 2), cfg.n)
        .map_err(|e| CliError::Runtime(e.to_string()))?;
    let mut w = create(out, &format!("dataset_{}.csv", cfg.problem.name()))?;
    write_dataset(&mut w, &provenance("dataset", cfg.seed, cfg), &data)?;
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelftestConfig {
    pub seed: u64,
    pub lp_cases: usize,
    pub round_trips: usize,
    pub quantile_samples: usize,
}

impl Default for SelftestConfig {
    fn default() -> Self {
        Self {
            seed: 2024,
            lp_cases: 200,
            round_trips: 50,
            quantile_samples: 5000,
        }
    }
}

/// One line per check; `Err` lists the failed ones.
pub fn cmd_selftest(cfg: &SelftestConfig, log: &mut dyn Write) -> Result<(), CliError> {
    let mut failed = Vec::new();
    let mut report = |name: &str, ok: bool, detail: String| {
        let _ = writeln!(log, "{} {name}: {detail}", pass_fail(ok));
        if !ok {
            failed.push(name.to_string());
        }
    };

    let nv = NewsvendorParams::single_product();
    let phi = nv.critical_ratio();
    match newsvendor::analytical_unreliable_optimum(phi, nv.b) {
        Ok(z) => {
            let res = unreliable_optimality_residual(z, phi, nv.b).abs();
            report(
                "analytical",
                (z - 214.73).abs() <= 0.01 && res <= 1e-8,
                format!("z = {z:.4}, residual {res:.1e}"),
            );
        }
        Err(e) => report("analytical", false, e.to_string()),
    }

    let lp = checks::lp_duality_suite(cfg.seed, cfg.lp_cases);
    report(
        "lp-duality",
        lp.is_empty(),
        format!(
            "{} of {} programs failed {:?}",
            lp.len(),
            cfg.lp_cases,
            lp.first()
        ),
    );

    let trips: Vec<(u64, String)> = (0..cfg.round_trips as u64)
        .filter_map(|k| {
            checks::optimal_scenario_round_trip(cfg.seed.wrapping_add(k))
                .err()
                .map(|e| (k, e))
        })
        .collect();
    report(
        "optimal-scenario-round-trip",
        trips.is_empty(),
        format!(
            "{} of {} instances failed {:?}",
            trips.len(),
            cfg.round_trips,
            trips.first()
        ),
    );

    match checks::quantile_recovery(cfg.quantile_samples, cfg.seed) {
        Ok((q, cost, at_mean)) => report(
            "quantile-recovery",
            (q - 100.0 * phi).abs() <= 0.03 * 100.0 * phi && cost <= at_mean,
            format!("constant {q:.3}, cost {cost:.3} vs {at_mean:.3} at the mean"),
        ),
        Err(e) => report("quantile-recovery", false, e),
    }

    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Acceptance(failed.join(", ")))
    }
}
