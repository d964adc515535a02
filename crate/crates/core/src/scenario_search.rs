//! Derivative-free search for an optimal scenario: minimize over `ξ̂` the
//! sample cost of the plan that the one-scenario problem at `ξ̂` induces.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::{nelder_mead, NelderMeadConfig, NumericsError, RandomSource};
use crate::problems::newsvendor::{unreliable_demand_yield, unreliable_scenario};
use crate::two_stage::{Scenario, ScenarioModel, TwoStageError, Workspace};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("no samples")]
    NoSamples,
    #[error("inner solve failed at the starting scenario: {0}")]
    InnerSolveFailed(TwoStageError),
    #[error(transparent)]
    Model(#[from] TwoStageError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("sample sizes must be positive and ascending")]
    InvalidSizes,
}

/// How search coordinates map to scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioSpace {
    /// The full right-hand side `h`; the technology stays at the problem's.
    Rhs,
    /// `(D, U)` of the unreliable-supplier newsvendor. `U ≤ 0` is outside
    /// the domain.
    UnreliableSupplier,
}

impl ScenarioSpace {
    pub fn encode(&self, s: &Scenario) -> Vec<f64> {
        match self {
            ScenarioSpace::Rhs => s.h.clone(),
            ScenarioSpace::UnreliableSupplier => {
                let (d, u) = unreliable_demand_yield(s);
                vec![d, u]
            }
        }
    }

    pub fn decode(&self, v: &[f64]) -> Option<Scenario> {
        match self {
            ScenarioSpace::Rhs => Some(Scenario::new(v.to_vec())),
            ScenarioSpace::UnreliableSupplier => {
                (v[1] > 0.0).then(|| unreliable_scenario(v[0], v[1]))
            }
        }
    }

    /// Sample mean of the encoded scenarios.
    pub fn mean(&self, samples: &[Scenario]) -> Vec<f64> {
        let mut acc = self
            .encode(&samples[0])
            .iter()
            .map(|_| 0.0)
            .collect::<Vec<_>>();
        for s in samples {
            for (a, v) in acc.iter_mut().zip(self.encode(s)) {
                *a += v;
            }
        }
        acc.iter().map(|a| a / samples.len() as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub nelder_mead: NelderMeadConfig,
    /// Extra Nelder–Mead runs started from randomly chosen samples.
    pub random_starts: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadConfig::default(),
            random_starts: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSearchResult {
    pub scenario: Scenario,
    pub induced_z: Vec<f64>,
    /// `(1/N) Σ G(z(ξ̂), ξₙ)`.
    pub sample_cost: f64,
    /// Sample cost of the plan induced by the sample-mean scenario.
    pub start_cost: f64,
    pub evaluations: usize,
    /// Evaluations whose inner solve failed or fell outside the domain.
    pub failed_evaluations: usize,
    pub elapsed: f64,
}

/// `(1/N) Σ G(z, ξₙ)`.
pub fn sample_cost(
    model: &mut dyn ScenarioModel,
    z: &[f64],
    samples: &[Scenario],
) -> Result<f64, TwoStageError> {
    let mut total = 0.0;
    for s in samples {
        total += model.cost(z, s)?;
    }
    Ok(total / samples.len() as f64)
}

/// Minimizes the sample cost of the induced plan with Nelder–Mead, starting
/// at the sample mean. Inner failures score `+∞` and are counted.
pub fn find_optimal_scenario(
    model: &mut dyn ScenarioModel,
    space: ScenarioSpace,
    samples: &[Scenario],
    config: &SearchConfig,
    rng: &mut RandomSource,
) -> Result<ScenarioSearchResult, SearchError> {
    if samples.is_empty() {
        return Err(SearchError::NoSamples);
    }
    let clock = Instant::now();
    let mut failed = 0usize;
    let mut evaluations = 0usize;
    let start = space.mean(samples);
    let start_scenario = space.decode(&start).ok_or(SearchError::InnerSolveFailed(
        TwoStageError::InvalidProblem("sample mean lies outside the scenario domain".into()),
    ))?;
    let start_z = model
        .plan(&start_scenario)
        .map_err(SearchError::InnerSolveFailed)?;
    let start_cost = sample_cost(model, &start_z, samples)?;

    // The plan of a scenario is any optimum of its one-scenario problem, and
    // which one is returned can depend on the solver's cache. The best plan
    // seen is kept instead of re-planning at the final point.
    let mut best_seen = (start_cost, start_z, start_scenario);
    let mut outer = |v: &[f64], failed: &mut usize| -> f64 {
        let value = space.decode(v).ok_or(()).and_then(|s| {
            let z = model.plan(&s).map_err(|_| ())?;
            let cost = sample_cost(model, &z, samples).map_err(|_| ())?;
            if cost < best_seen.0 {
                best_seen = (cost, z, s);
            }
            Ok(cost)
        });
        value.unwrap_or_else(|_| {
            *failed += 1;
            f64::INFINITY
        })
    };

    let mut starts = vec![start];
    for _ in 0..config.random_starts {
        starts.push(space.encode(&samples[rng.index(samples.len())]));
    }
    let mut any_run = false;
    for s in &starts {
        let r = match nelder_mead(|v| outer(v, &mut failed), s, &config.nelder_mead) {
            Ok(r) => r,
            // A random start outside the domain is skipped.
            Err(NumericsError::NonFiniteObjective) if any_run => continue,
            Err(e) => return Err(e.into()),
        };
        any_run = true;
        evaluations += r.evaluations;
    }
    let (sample_cost, induced_z, scenario) = best_seen;
    Ok(ScenarioSearchResult {
        scenario,
        induced_z,
        sample_cost,
        start_cost,
        evaluations,
        failed_evaluations: failed,
        elapsed: clock.elapsed().as_secs_f64(),
    })
}

/// One row of [`scaling_report`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n: usize,
    pub search_seconds: f64,
    pub lp_seconds: f64,
    pub z_search: Vec<f64>,
    pub z_lp: Vec<f64>,
    pub search_cost: f64,
    pub lp_cost: f64,
    /// `(search_cost − lp_cost) / max(1, |lp_cost|)`.
    pub rel_obj_gap: f64,
    pub scenario: Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// For the two largest sizes: LP time grew faster than search time.
    /// Informational; timings depend on the machine.
    pub lp_grows_faster: Option<bool>,
}

/// Times the scenario search against the SAA solve of `workspace` on the
/// same samples for each size.
pub fn scaling_report(
    workspace: &mut Workspace,
    model: &mut dyn ScenarioModel,
    space: ScenarioSpace,
    sizes: &[usize],
    mut sampler: impl FnMut(&mut RandomSource, usize) -> Vec<Scenario>,
    config: &SearchConfig,
    rng: &mut RandomSource,
) -> Result<ScalingReport, SearchError> {
    if sizes.is_empty() || sizes[0] == 0 || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SearchError::InvalidSizes);
    }
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let samples = sampler(rng, n);
        let search = find_optimal_scenario(model, space, &samples, config, rng)?;
        let clock = Instant::now();
        let lp = workspace.saa(&samples, &vec![1.0 / n as f64; n])?;
        let lp_seconds = clock.elapsed().as_secs_f64();
        let lp_cost = sample_cost(model, &lp.z, &samples)?;
        rows.push(ScalingRow {
            n,
            search_seconds: search.elapsed,
            lp_seconds,
            rel_obj_gap: (search.sample_cost - lp_cost) / lp_cost.abs().max(1.0),
            z_search: search.induced_z,
            z_lp: lp.z,
            search_cost: search.sample_cost,
            lp_cost,
            scenario: search.scenario,
        });
    }
    let lp_grows_faster = match rows.as_slice() {
        [.., a, b] => Some(b.lp_seconds / a.lp_seconds > b.search_seconds / a.search_seconds),
        _ => None,
    };
    Ok(ScalingReport {
        rows,
        lp_grows_faster,
    })
}

impl ScalingReport {
    pub fn header(&self) -> Vec<String> {
        let k = self.rows.first().map_or(0, |r| r.z_search.len());
        let mut h = vec!["N".to_string(), "t_search_s".into(), "t_lp_s".into()];
        h.extend((1..=k).map(|i| format!("z_search_{i}")));
        h.extend((1..=k).map(|i| format!("z_lp_{i}")));
        h.push("rel_obj_gap".into());
        h
    }

    pub fn records(&self) -> Vec<Vec<String>> {
        use crate::report::fmt;
        self.rows
            .iter()
            .map(|r| {
                let mut rec = vec![r.n.to_string(), fmt(r.search_seconds), fmt(r.lp_seconds)];
                rec.extend(r.z_search.iter().map(|v| fmt(*v)));
                rec.extend(r.z_lp.iter().map(|v| fmt(*v)));
                rec.push(fmt(r.rel_obj_gap));
                rec
            })
            .collect()
    }
}

#[cfg(test)]
mod tests;
