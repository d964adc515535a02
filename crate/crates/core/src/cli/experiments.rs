//! The experiment suites behind the subcommands, callable without a process.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::evaluation::{estimate_gaps, Evaluated, GapConfig, GapReport};
use crate::forecasters::TreeHyper;
use crate::numerics::RandomSource;
use crate::policies::{fit_policy, Policy, PolicyHyper, PolicyKind};
use crate::problems::newsvendor::{
    self, analytical_unreliable_optimum, sample_unreliable, unreliable_demand_yield,
    MultiProductModel, NewsvendorParams, TwoProductSetup, UnreliableModel,
};
use crate::problems::{
    build_resource_allocation, build_shipment, Observation, ResourceAllocationParams,
    ShipmentParams, SyntheticGenerator,
};
use crate::scenario_search::{
    find_optimal_scenario, scaling_report, ScalingReport, ScenarioSpace, SearchConfig,
};
use crate::two_stage::{uniform_weights, Instance, UniquenessPerturbation, Workspace};

/// Selling price and shortage penalty kept when `ϕ` is overridden.
const OVERRIDE_PRICE: f64 = 4000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NewsvendorScenarioConfig {
    /// Samples per replication.
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    /// Critical ratio to use instead of the default cost parameters.
    pub phi_override: Option<f64>,
    pub search: SearchConfig,
}

impl Default for NewsvendorScenarioConfig {
    fn default() -> Self {
        Self {
            n: 1000,
            reps: 5,
            seed: 7,
            phi_override: None,
            search: SearchConfig::default(),
        }
    }
}

impl NewsvendorScenarioConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 || self.reps == 0 {
            return Err("--n and --reps must be positive".into());
        }
        if let Some(phi) = self.phi_override {
            if !(phi > 0.0 && phi < 1.0) {
                return Err(format!("--phi-override must lie in (0, 1), got {phi}"));
            }
        }
        Ok(())
    }

    /// Default costs, or `c = η` and `p = π = 4000` tuned to the override.
    pub fn params(&self) -> NewsvendorParams {
        match self.phi_override {
            None => NewsvendorParams::single_product(),
            Some(phi) => {
                let c = 2.0 * OVERRIDE_PRICE * (1.0 - phi) / (1.0 + phi);
                NewsvendorParams {
                    c,
                    p: OVERRIDE_PRICE,
                    eta: c,
                    pi: OVERRIDE_PRICE,
                    b: 100.0,
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewsvendorScenarioRow {
    pub replication: usize,
    pub d_star: f64,
    pub u_star: f64,
    pub ratio: f64,
    pub saa_solution: f64,
    pub analytical: f64,
    pub search_cost: f64,
    pub saa_cost: f64,
    /// Search objective within [`objective_tolerance`] of the SAA optimum.
    pub within_tolerance: bool,
    /// `D*/U*` in `[205, 225]`, or within 5% of the analytical value when `ϕ`
    /// is overridden.
    pub in_band: bool,
}

impl NewsvendorScenarioRow {
    pub const HEADER: [&'static str; 10] = [
        "replication",
        "D_star",
        "U_star",
        "D_over_U",
        "saa_solution",
        "analytical",
        "search_cost",
        "saa_cost",
        "within_tolerance",
        "in_band",
    ];

    pub fn record(&self) -> Vec<String> {
        use crate::report::fmt;
        vec![
            self.replication.to_string(),
            fmt(self.d_star),
            fmt(self.u_star),
            fmt(self.ratio),
            fmt(self.saa_solution),
            fmt(self.analytical),
            fmt(self.search_cost),
            fmt(self.saa_cost),
            self.within_tolerance.to_string(),
            self.in_band.to_string(),
        ]
    }
}

/// Objective tolerance between the searched plan and the SAA optimum.
pub fn objective_tolerance(saa_cost: f64) -> f64 {
    (1e-3 * saa_cost.abs()).max(0.5)
}

/// Unreliable-supplier scenario search against the SAA solution, one row
/// per replication. Replication `r` draws from stream `r` of the seed.
pub fn newsvendor_scenario(
    cfg: &NewsvendorScenarioConfig,
) -> Result<Vec<NewsvendorScenarioRow>, String> {
    cfg.validate()?;
    let nv = cfg.params();
    let phi = cfg.phi_override.unwrap_or_else(|| nv.critical_ratio());
    let analytical = analytical_unreliable_optimum(phi, nv.b).map_err(|e| e.to_string())?;
    let problem = Arc::new(newsvendor::unreliable(&nv).map_err(|e| e.to_string())?);
    let mut ws =
        Workspace::new(problem, UniquenessPerturbation::NONE).map_err(|e| e.to_string())?;
    let mut rows = Vec::with_capacity(cfg.reps);
    for r in 0..cfg.reps {
        let mut rng = RandomSource::new(cfg.seed, r as u64);
        let samples = sample_unreliable(&nv, &mut rng, cfg.n);
        let mut model = UnreliableModel(nv);
        let found = find_optimal_scenario(
            &mut model,
            ScenarioSpace::UnreliableSupplier,
            &samples,
            &cfg.search,
            &mut rng,
        )
        .map_err(|e| format!("replication {r}: {e}"))?;
        let saa = ws
            .saa(&samples, &uniform_weights(cfg.n))
            .map_err(|e| format!("replication {r}: {e}"))?;
        let (d, u) = unreliable_demand_yield(&found.scenario);
        let ratio = found.induced_z[0];
        let in_band = match cfg.phi_override {
            None => (205.0..=225.0).contains(&ratio),
            Some(_) => (ratio - analytical).abs() <= 0.05 * analytical,
        };
        let within =
            (found.sample_cost - saa.objective).abs() <= objective_tolerance(saa.objective);
        rows.push(NewsvendorScenarioRow {
            replication: r,
            d_star: d,
            u_star: u,
            ratio,
            saa_solution: saa.z[0],
            analytical,
            search_cost: found.sample_cost,
            saa_cost: saa.objective,
            within_tolerance: within,
            in_band,
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoProductConfig {
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub search: SearchConfig,
}

impl Default for TwoProductConfig {
    fn default() -> Self {
        Self {
            sizes: vec![100, 1000, 5000],
            seed: 3,
            search: SearchConfig::default(),
        }
    }
}

impl TwoProductConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.sizes.is_empty()
            || self.sizes[0] == 0
            || self.sizes.windows(2).any(|w| w[0] >= w[1])
        {
            return Err("--sizes must be positive and strictly increasing".into());
        }
        Ok(())
    }
}

/// Budget slack and relative objective gap of every row must stay within
/// these for the two-product run to pass.
pub const TWO_PRODUCT_GAP_TOL: f64 = 1e-3;
pub const BUDGET_TOL: f64 = 1e-6;

/// Scenario search versus extensive-form SAA on the budgeted two-product
/// newsvendor.
pub fn two_product(cfg: &TwoProductConfig) -> Result<ScalingReport, String> {
    cfg.validate()?;
    let setup = TwoProductSetup::default();
    let inst = setup.instance().map_err(|e| e.to_string())?;
    let mut ws = inst
        .workspace(UniquenessPerturbation::NONE)
        .map_err(|e| e.to_string())?;
    let mut model = MultiProductModel {
        products: setup.products.to_vec(),
        budget: setup.budget,
    };
    let mut rng = RandomSource::new(cfg.seed, 0);
    scaling_report(
        &mut ws,
        &mut model,
        ScenarioSpace::Rhs,
        &cfg.sizes,
        |r, n| setup.sample(r, n),
        &cfg.search,
        &mut rng,
    )
    .map_err(|e| e.to_string())
}

/// Whether each row meets the objective gap and fills the budget.
pub fn two_product_checks(report: &ScalingReport) -> Vec<bool> {
    let budget = TwoProductSetup::default().budget;
    report
        .rows
        .iter()
        .map(|r| {
            r.rel_obj_gap <= TWO_PRODUCT_GAP_TOL
                && (r.z_search.iter().sum::<f64>() - budget).abs() <= BUDGET_TOL
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Resource,
    Shipment,
}

impl ProblemKind {
    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::Resource => "resource",
            ProblemKind::Shipment => "shipment",
        }
    }

    /// The instance drawn from `seed`, with its demand dimension.
    pub fn instance(self, seed: u64) -> Result<Instance, String> {
        let mut rng = RandomSource::new(seed, 1);
        match self {
            ProblemKind::Resource => {
                build_resource_allocation(&ResourceAllocationParams::default_sized(&mut rng))
            }
            ProblemKind::Shipment => build_shipment(&ShipmentParams::default_sized(&mut rng)),
        }
        .map_err(|e| e.to_string())
    }
}

/// Covariates observed by the synthetic generators.
pub const N_COVARIATES: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub problem: ProblemKind,
    /// Degree of the covariate-to-demand map.
    pub p: f64,
    /// Training observations.
    pub n: usize,
    pub policies: Vec<PolicyKind>,
    /// Seeds the instance, the generator, the training data and the gap
    /// estimator on separate streams.
    pub seed: u64,
    pub covariates: usize,
    pub replications: usize,
    pub conditional_samples: usize,
    pub confidence: f64,
    /// Also evaluate the independent-sample and self-evaluation oracles.
    pub oracles: bool,
    pub hyper: PolicyHyper,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            problem: ProblemKind::Shipment,
            p: 1.0,
            n: 1000,
            policies: PolicyKind::ALL.to_vec(),
            seed: 11,
            covariates: 30,
            replications: 30,
            conditional_samples: 1000,
            confidence: 0.99,
            oracles: false,
            hyper: synthetic_hyper(),
        }
    }
}

/// Policy hyperparameters for the synthetic problems: leaves of at least 25
/// observations with no practical depth limit and room for one affine map
/// per client.
pub fn synthetic_hyper() -> PolicyHyper {
    let mut h = PolicyHyper::default();
    h.tree = TreeHyper {
        min_leaf: 25,
        max_depth: 1000,
    };
    h.ad.max_params = 128;
    h
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.p > 0.0) || !self.p.is_finite() {
            return Err(format!("--p must be positive, got {}", self.p));
        }
        if self.n == 0 {
            return Err("--n must be positive".into());
        }
        if self.policies.is_empty() {
            return Err("--policies is empty".into());
        }
        self.gap_config().validate().map_err(|e| e.to_string())
    }

    pub fn gap_config(&self) -> GapConfig {
        GapConfig {
            conditional_samples: self.conditional_samples,
            replications: self.replications,
            covariates: self.covariates,
            confidence: self.confidence,
            seed: self.seed,
        }
    }

    pub fn generator(&self) -> Result<SyntheticGenerator, String> {
        let inst = self.problem.instance(self.seed)?;
        SyntheticGenerator::new(inst.xi_dim(), N_COVARIATES, self.p, self.seed)
            .map_err(|e| e.to_string())
    }
}

/// Instance, generator, training data and fitted policies of one run.
pub struct SyntheticRun {
    pub instance: Instance,
    pub generator: SyntheticGenerator,
    pub train: Vec<Observation>,
    pub policies: Vec<Policy>,
    pub report: GapReport,
}

/// Generates training data, fits the requested policies and estimates their
/// optimality gaps.
pub fn synthetic(cfg: &SyntheticConfig) -> Result<SyntheticRun, String> {
    cfg.validate()?;
    let instance = cfg.problem.instance(cfg.seed)?;
    let generator = cfg.generator()?;
    let train = generator
        .gen_dataset(&mut RandomSource::new(cfg.seed, 2), cfg.n)
        .map_err(|e| e.to_string())?;
    let policies = cfg
        .policies
        .iter()
        .map(|&k| fit_policy(k, &instance, &train, &cfg.hyper).map_err(|e| format!("{k}: {e}")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rules: Vec<Evaluated<'_>> = policies.iter().map(Evaluated::Policy).collect();
    if cfg.oracles {
        rules.extend([Evaluated::IndependentOracle, Evaluated::SelfOracle]);
    }
    let report = estimate_gaps(&rules, &instance, &generator, &cfg.gap_config())
        .map_err(|e| e.to_string())?;
    Ok(SyntheticRun {
        instance,
        generator,
        train,
        policies,
        report,
    })
}
