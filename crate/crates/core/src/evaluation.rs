//! Out-of-sample evaluation: conditional optimality gaps with a one-sided
//! Student-t bound, and train/test cost comparisons.

use std::io::{self, Write};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::numerics::RandomSource;
use crate::policies::{fit_policy, Policy, PolicyError, PolicyHyper, PolicyKind};
use crate::problems::{Observation, SyntheticGenerator};
use crate::report::{fmt, write_csv, Provenance};
use crate::two_stage::{
    uniform_weights, Instance, SaaSolution, Scenario, TwoStageError, UniquenessPerturbation,
    Workspace,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("invalid evaluation settings: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Model(#[from] TwoStageError),
}

/// Anything that draws covariates and demand given a covariate.
pub trait ConditionalSampler {
    fn sample_covariate(&self, rng: &mut RandomSource) -> Vec<f64>;
    fn sample_conditional(&self, x: &[f64], rng: &mut RandomSource, n: usize) -> Vec<Vec<f64>>;
}

impl ConditionalSampler for SyntheticGenerator {
    fn sample_covariate(&self, rng: &mut RandomSource) -> Vec<f64> {
        SyntheticGenerator::sample_covariate(self, rng)
    }

    fn sample_conditional(&self, x: &[f64], rng: &mut RandomSource, n: usize) -> Vec<Vec<f64>> {
        SyntheticGenerator::sample_conditional(self, x, rng, n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapConfig {
    /// Demand draws per covariate and replication.
    pub conditional_samples: usize,
    pub replications: usize,
    pub covariates: usize,
    pub confidence: f64,
    pub seed: u64,
}

impl Default for GapConfig {
    fn default() -> Self {
        Self {
            conditional_samples: 1000,
            replications: 30,
            covariates: 30,
            confidence: 0.99,
            seed: 0,
        }
    }
}

impl GapConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        if self.conditional_samples == 0 || self.replications < 2 || self.covariates == 0 {
            return Err(EvalError::InvalidConfig(
                "need at least one sample and covariate and two replications".into(),
            ));
        }
        if !(self.confidence > 0.5 && self.confidence < 1.0) {
            return Err(EvalError::InvalidConfig(format!(
                "confidence = {}",
                self.confidence
            )));
        }
        Ok(())
    }

    /// `t` quantile at the configured confidence with `R − 1` degrees of freedom.
    pub fn t_quantile(&self) -> f64 {
        StudentsT::new(0.0, 1.0, (self.replications - 1) as f64)
            .expect("degrees of freedom are positive")
            .inverse_cdf(self.confidence)
    }

    fn covariate_rng(&self, i: usize) -> RandomSource {
        RandomSource::new(self.seed, 0).substream(i as u64)
    }

    fn replication_rng(&self, i: usize, r: usize) -> RandomSource {
        self.covariate_rng(i).substream(1 + r as u64)
    }
}

/// A decision rule under evaluation.
pub enum Evaluated<'a> {
    Policy(&'a Policy),
    /// The conditional SAA optimum on an independent conditional sample of
    /// the same size, fixed per covariate.
    IndependentOracle,
    /// The conditional SAA optimum of each replication's own sample.
    SelfOracle,
}

impl Evaluated<'_> {
    pub fn name(&self) -> String {
        match self {
            Evaluated::Policy(p) => p.kind().name().to_string(),
            Evaluated::IndependentOracle => "ORACLE".into(),
            Evaluated::SelfOracle => "ORACLE_SELF".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub covariate_index: usize,
    pub replication: usize,
    pub policy: String,
    pub policy_cost: f64,
    pub cond_opt: f64,
    pub gap: f64,
    /// `100 · gap / |cond_opt|`.
    pub gap_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapSummary {
    pub covariate_index: usize,
    pub x: Vec<f64>,
    pub policy: String,
    pub mean_gap: f64,
    pub sd_gap: f64,
    pub mean_cond_opt: f64,
    /// `mean + t·sd/√R`.
    pub b99: f64,
    /// `100 · b99 / |mean_cond_opt|`.
    pub b99_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub config: GapConfig,
    pub records: Vec<GapRecord>,
    pub summaries: Vec<GapSummary>,
    /// Set when a solve failed; the records cover the covariates finished
    /// before it.
    pub error: Option<String>,
}

impl GapReport {
    pub fn summaries_for<'s>(
        &'s self,
        policy: &'s str,
    ) -> impl Iterator<Item = &'s GapSummary> + 's {
        self.summaries.iter().filter(move |s| s.policy == policy)
    }

    pub fn median_b99_pct(&self, policy: &str) -> Option<f64> {
        let mut v: Vec<f64> = self.summaries_for(policy).map(|s| s.b99_pct).collect();
        if v.is_empty() {
            return None;
        }
        v.sort_by(f64::total_cmp);
        let n = v.len();
        Some(if n % 2 == 1 {
            v[n / 2]
        } else {
            0.5 * (v[n / 2 - 1] + v[n / 2])
        })
    }

    /// Long format: `covariate_index, replication, policy, policy_cost,
    /// cond_opt, gap_pct, B99_pct`.
    pub fn write_csv<W: Write>(&self, out: W, provenance: &Provenance) -> io::Result<()> {
        let header = [
            "covariate_index",
            "replication",
            "policy",
            "policy_cost",
            "cond_opt",
            "gap_pct",
            "B99_pct",
        ]
        .map(String::from);
        let b99 = |rec: &GapRecord| {
            self.summaries
                .iter()
                .find(|s| s.covariate_index == rec.covariate_index && s.policy == rec.policy)
                .map_or(f64::NAN, |s| s.b99_pct)
        };
        write_csv(
            out,
            provenance,
            &header,
            self.records.iter().map(|r| {
                vec![
                    r.covariate_index.to_string(),
                    r.replication.to_string(),
                    r.policy.clone(),
                    fmt(r.policy_cost),
                    fmt(r.cond_opt),
                    fmt(r.gap_pct),
                    fmt(b99(r)),
                ]
            }),
        )
    }
}

/// `(policy costs, conditional optimum)` for one replication: the average of
/// `G(z, ξ)` over a fresh conditional sample for each fixed decision, and
/// the SAA optimum of that sample. Decisions marked `None` take the SAA
/// solution itself.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_replication(
    ws: &mut Workspace,
    instance: &Instance,
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    decisions: &[Option<Vec<f64>>],
    config: &GapConfig,
    covariate_index: usize,
    replication: usize,
) -> Result<(Vec<f64>, f64), TwoStageError> {
    let (costs, opt) = replication_costs(
        ws,
        instance,
        sampler,
        x,
        decisions,
        config,
        (covariate_index, replication),
        None,
    )?;
    Ok((costs, opt.objective))
}

/// Body of [`evaluate_replication`]; `start` seeds the conditional SAA.
#[allow(clippy::too_many_arguments)]
fn replication_costs(
    ws: &mut Workspace,
    instance: &Instance,
    sampler: &dyn ConditionalSampler,
    x: &[f64],
    decisions: &[Option<Vec<f64>>],
    config: &GapConfig,
    (covariate_index, replication): (usize, usize),
    start: Option<&[f64]>,
) -> Result<(Vec<f64>, SaaSolution), TwoStageError> {
    let mut rng = config.replication_rng(covariate_index, replication);
    let samples: Vec<Scenario> = sampler
        .sample_conditional(x, &mut rng, config.conditional_samples)
        .iter()
        .map(|xi| instance.scenario(xi))
        .collect();
    let w = uniform_weights(samples.len());
    let opt = ws.saa_from(&samples, &w, start)?;
    let mut costs = Vec::with_capacity(decisions.len());
    for d in decisions {
        costs.push(match d {
            Some(z) => ws.expected_cost(z, &samples, &w)?,
            None => opt.objective,
        });
    }
    Ok((costs, opt))
}

/// Gap estimates for several decision rules on shared conditional samples.
pub fn estimate_gaps(
    rules: &[Evaluated<'_>],
    instance: &Instance,
    sampler: &dyn ConditionalSampler,
    config: &GapConfig,
) -> Result<GapReport, EvalError> {
    config.validate()?;
    if rules.is_empty() {
        return Err(EvalError::InvalidConfig("no decision rules".into()));
    }
    let mut ws = instance.workspace(UniquenessPerturbation::default())?;
    let t = config.t_quantile();
    let mut report = GapReport {
        config: config.clone(),
        records: vec![],
        summaries: vec![],
        error: None,
    };
    for i in 0..config.covariates {
        match gap_at_covariate(&mut ws, rules, instance, sampler, config, i, t) {
            Ok((records, summaries)) => {
                report.records.extend(records);
                report.summaries.extend(summaries);
            }
            Err(e) => {
                report.error = Some(format!("covariate {i}: {e}"));
                break;
            }
        }
    }
    Ok(report)
}

/// Gap estimate for a single policy.
pub fn estimate_gap(
    policy: &Policy,
    sampler: &dyn ConditionalSampler,
    config: &GapConfig,
) -> Result<GapReport, EvalError> {
    estimate_gaps(
        &[Evaluated::Policy(policy)],
        policy.instance(),
        sampler,
        config,
    )
}

fn gap_at_covariate(
    ws: &mut Workspace,
    rules: &[Evaluated<'_>],
    instance: &Instance,
    sampler: &dyn ConditionalSampler,
    config: &GapConfig,
    i: usize,
    t: f64,
) -> Result<(Vec<GapRecord>, Vec<GapSummary>), EvalError> {
    let mut rng = config.covariate_rng(i);
    let x = sampler.sample_covariate(&mut rng);
    let mut decisions = Vec::with_capacity(rules.len());
    for rule in rules {
        decisions.push(match rule {
            Evaluated::Policy(p) => {
                let mut pws = p.workspace()?;
                Some(p.decide_with(&mut pws, &x)?)
            }
            Evaluated::IndependentOracle => {
                let mut orng = config.covariate_rng(i).substream(0);
                let scen: Vec<Scenario> = sampler
                    .sample_conditional(&x, &mut orng, config.conditional_samples)
                    .iter()
                    .map(|xi| instance.scenario(xi))
                    .collect();
                Some(ws.saa(&scen, &uniform_weights(scen.len()))?.z)
            }
            Evaluated::SelfOracle => None,
        });
    }

    let mut records = Vec::new();
    let mut gaps = vec![Vec::with_capacity(config.replications); rules.len()];
    let mut opts = Vec::with_capacity(config.replications);
    // Conditional samples at one covariate are alike, so each SAA starts
    // from the previous optimum.
    let mut previous: Option<Vec<f64>> = None;
    for r in 0..config.replications {
        let (costs, sol) = replication_costs(
            ws,
            instance,
            sampler,
            &x,
            &decisions,
            config,
            (i, r),
            previous.as_deref(),
        )?;
        let opt = sol.objective;
        previous = Some(sol.z);
        opts.push(opt);
        for (k, rule) in rules.iter().enumerate() {
            let gap = costs[k] - opt;
            gaps[k].push(gap);
            records.push(GapRecord {
                covariate_index: i,
                replication: r,
                policy: rule.name(),
                policy_cost: costs[k],
                cond_opt: opt,
                gap,
                gap_pct: 100.0 * gap / opt.abs(),
            });
        }
    }
    let rr = config.replications as f64;
    let mean_opt = opts.iter().sum::<f64>() / rr;
    let summaries = rules
        .iter()
        .zip(&gaps)
        .map(|(rule, g)| {
            let mean = g.iter().sum::<f64>() / rr;
            let sd = (g.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (rr - 1.0)).sqrt();
            let b99 = mean + t * sd / rr.sqrt();
            GapSummary {
                covariate_index: i,
                x: x.clone(),
                policy: rule.name(),
                mean_gap: mean,
                sd_gap: sd,
                mean_cond_opt: mean_opt,
                b99,
                b99_pct: 100.0 * b99 / mean_opt.abs(),
            }
        })
        .collect();
    Ok((records, summaries))
}

/// How [`out_of_sample_costs`] splits the data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Holdout {
    /// Shuffle, then train on this fraction and test on the rest.
    Fraction(f64),
    /// Train and test on all rows, unshuffled.
    Identity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfSampleRow {
    pub policy: String,
    /// Mean test cost per replication.
    pub costs: Vec<f64>,
    pub mean: f64,
    pub sd: f64,
}

/// Fits every kind on the training part and averages `G(decide(x), ξ)` over
/// the test part, once per replication.
pub fn out_of_sample_costs(
    kinds: &[PolicyKind],
    instance: &Instance,
    data: &[Observation],
    hyper: &PolicyHyper,
    holdout: Holdout,
    replications: usize,
    rng: &mut RandomSource,
) -> Result<Vec<OutOfSampleRow>, EvalError> {
    if replications == 0 {
        return Err(EvalError::InvalidConfig(
            "replications must be positive".into(),
        ));
    }
    let mut costs = vec![Vec::with_capacity(replications); kinds.len()];
    let mut ws = instance.workspace(hyper.perturbation)?;
    for _ in 0..replications {
        let (train, test): (Vec<Observation>, Vec<Observation>) = match holdout {
            Holdout::Identity => (data.to_vec(), data.to_vec()),
            Holdout::Fraction(f) => {
                let cut = (f * data.len() as f64).round() as usize;
                if !(f > 0.0 && f < 1.0) || cut == 0 || cut >= data.len() {
                    return Err(EvalError::InvalidConfig(format!(
                        "split {f} of {} rows",
                        data.len()
                    )));
                }
                let mut shuffled = data.to_vec();
                shuffled.shuffle(rng.rng());
                let test = shuffled.split_off(cut);
                (shuffled, test)
            }
        };
        for (k, &kind) in kinds.iter().enumerate() {
            let policy = fit_policy(kind, instance, &train, hyper)?;
            let mut total = 0.0;
            for o in &test {
                let z = policy.decide_with(&mut ws, &o.x)?;
                total += ws.full_objective(&z, &instance.scenario(&o.xi))?;
            }
            costs[k].push(total / test.len() as f64);
        }
    }
    Ok(kinds
        .iter()
        .zip(costs)
        .map(|(kind, c)| {
            let n = c.len() as f64;
            let mean = c.iter().sum::<f64>() / n;
            let sd = if c.len() > 1 {
                (c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            OutOfSampleRow {
                policy: kind.name().to_string(),
                costs: c,
                mean,
                sd,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests;
