//! Application-driven training: choose forecast parameters by the cost of
//! the decisions they induce, `min_θ (1/N) Σ G(z(Ψ(θ, xₙ)), ξₙ)`.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forecasters::{
    column_means, fit_least_squares, fit_m5_structure, AffineForecaster, ForecastError, Forecaster,
    LeafPayload, TreeForecaster, TreeHyper,
};
use crate::numerics::{nelder_mead, NelderMeadConfig, NumericsError};
use crate::problems::Observation;
use crate::report::{fmt, write_csv, Provenance};
use crate::two_stage::{Scenario, ScenarioMap, ScenarioModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdError {
    #[error("{params} parameters exceed the cap of {cap}")]
    TooManyParameters { params: usize, cap: usize },
    #[error("bilevel cost is not finite at the start, even after perturbing it")]
    NonFiniteStart,
    #[error(transparent)]
    Forecast(#[from] ForecastError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdConfig {
    pub nelder_mead: NelderMeadConfig,
    /// Largest parameter vector Nelder–Mead is trusted with.
    pub max_params: usize,
}

impl Default for AdConfig {
    fn default() -> Self {
        Self {
            nelder_mead: NelderMeadConfig::default(),
            max_params: 64,
        }
    }
}

/// Forecast families trained by [`meta_train`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Family {
    /// `Ψ(θ, x) = θ`.
    Constant,
    /// `Ψ(θ, x) = θ₀ + Θx`.
    Affine,
}

/// The training data with realized scenarios precomputed, plus the model
/// that turns forecasts into plans and prices them.
pub struct BilevelProblem<'a> {
    model: &'a mut dyn ScenarioModel,
    map: &'a ScenarioMap,
    data: &'a [Observation],
    realized: Vec<Scenario>,
    inner_solves: usize,
}

impl<'a> BilevelProblem<'a> {
    pub fn new(
        model: &'a mut dyn ScenarioModel,
        map: &'a ScenarioMap,
        data: &'a [Observation],
    ) -> Self {
        let realized = data.iter().map(|o| map.scenario(&o.xi)).collect();
        Self {
            model,
            map,
            data,
            realized,
            inner_solves: 0,
        }
    }

    pub fn data(&self) -> &'a [Observation] {
        self.data
    }

    pub fn inner_solves(&self) -> usize {
        self.inner_solves
    }

    /// `(1/N) Σ G(z(ξ̂ₙ), ξₙ)` for forecasts `ξ̂ₙ = forecast(xₙ)`; `+∞` if
    /// any forecast or inner solve fails.
    pub fn cost_with(&mut self, mut forecast: impl FnMut(&[f64]) -> Option<Vec<f64>>) -> f64 {
        if self.data.is_empty() {
            return f64::INFINITY;
        }
        let mut total = 0.0;
        for (o, real) in self.data.iter().zip(&self.realized) {
            let Some(xi_hat) = forecast(&o.x) else {
                return f64::INFINITY;
            };
            if xi_hat.len() != o.xi.len() || xi_hat.iter().any(|v| !v.is_finite()) {
                return f64::INFINITY;
            }
            self.inner_solves += 1;
            let g = self
                .model
                .plan(&self.map.scenario(&xi_hat))
                .and_then(|z| self.model.cost(&z, real));
            match g {
                Ok(g) => total += g,
                Err(_) => return f64::INFINITY,
            }
        }
        total / self.data.len() as f64
    }

    pub fn cost(&mut self, f: &Forecaster) -> f64 {
        self.cost_with(|x| f.predict(x).ok())
    }

    /// The ex-post floor `(1/N) Σ G(z(ξₙ), ξₙ)`, reached by a perfect forecast.
    pub fn ideal_cost(&mut self) -> f64 {
        let data = self.data;
        let mut k = 0;
        self.cost_with(|_| {
            k += 1;
            Some(data[k - 1].xi.clone())
        })
    }
}

/// `bilevel_cost` of a fitted forecaster on `data`.
pub fn bilevel_cost(
    model: &mut dyn ScenarioModel,
    map: &ScenarioMap,
    data: &[Observation],
    f: &Forecaster,
) -> f64 {
    BilevelProblem::new(model, map, data).cost(f)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdTrainingRun {
    pub family: Family,
    pub theta_star: Vec<f64>,
    pub forecaster: AffineForecaster,
    pub start_cost: f64,
    pub final_cost: f64,
    /// Start cost, then the best cost after each Nelder–Mead iteration.
    pub cost_trace: Vec<f64>,
    /// Evaluations used at each trace entry.
    pub evaluation_trace: Vec<usize>,
    pub evaluations: usize,
    pub inner_solves: usize,
    pub converged: bool,
}

impl AdTrainingRun {
    /// Training log: `iteration, best_cost, evaluations`.
    pub fn write_log<W: Write>(&self, out: W, provenance: &Provenance) -> io::Result<()> {
        let header = ["iteration", "best_cost", "evaluations"].map(String::from);
        write_csv(
            out,
            provenance,
            &header,
            self.cost_trace
                .iter()
                .zip(&self.evaluation_trace)
                .enumerate()
                .map(|(i, (c, e))| vec![i.to_string(), fmt(*c), e.to_string()]),
        )
    }
}

fn forecaster_of(family: Family, m: usize, s: usize, theta: &[f64]) -> AffineForecaster {
    match family {
        Family::Constant => AffineForecaster::constant(theta.to_vec(), s),
        Family::Affine => {
            AffineForecaster::from_params(m, s, theta).expect("parameter count checked")
        }
    }
}

/// Nelder–Mead on the bilevel cost, started at the least
/// squares fit of the same family.
pub fn meta_train(
    problem: &mut BilevelProblem<'_>,
    family: Family,
    config: &AdConfig,
) -> Result<AdTrainingRun, AdError> {
    let data = problem.data();
    let (s, m) = crate::forecasters::shape(data)?;
    let n_params = match family {
        Family::Constant => m,
        Family::Affine => m * (s + 1),
    };
    if n_params > config.max_params {
        return Err(AdError::TooManyParameters {
            params: n_params,
            cap: config.max_params,
        });
    }
    let mut start = match family {
        Family::Constant => column_means(data.iter().map(|o| o.xi.as_slice()), m, data.len()),
        Family::Affine => fit_least_squares(data)?.params(),
    };
    let solves_before = problem.inner_solves();
    let mut objective = |theta: &[f64]| {
        let f = forecaster_of(family, m, s, theta);
        problem.cost_with(|x| f.predict(x).ok())
    };
    let mut start_cost = objective(&start);
    if !start_cost.is_finite() {
        for v in &mut start {
            *v += 0.01 * v.abs().max(1.0);
        }
        start_cost = objective(&start);
        if !start_cost.is_finite() {
            return Err(AdError::NonFiniteStart);
        }
    }
    let r = nelder_mead(&mut objective, &start, &config.nelder_mead)?;
    let mut cost_trace = vec![start_cost];
    cost_trace.extend(r.trace.iter().map(|c| c.min(start_cost)));
    let mut evaluation_trace = vec![1];
    evaluation_trace.extend(r.evaluation_trace.iter().map(|e| e + 1));
    let (theta_star, final_cost) = if r.value <= start_cost {
        (r.point, r.value)
    } else {
        (start, start_cost)
    };
    if let Some(last) = cost_trace.last_mut() {
        *last = final_cost;
    }
    Ok(AdTrainingRun {
        family,
        forecaster: forecaster_of(family, m, s, &theta_star),
        theta_star,
        start_cost,
        final_cost,
        cost_trace,
        evaluation_trace,
        evaluations: r.evaluations + 1,
        inner_solves: problem.inner_solves() - solves_before,
        converged: r.converged,
    })
}

/// Per-leaf outcome of [`m5_ad_train`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafRun {
    pub leaf: usize,
    pub cohort_size: usize,
    /// Cohort too small for a regression: a constant was trained instead.
    pub constant_fallback: bool,
    pub run: AdTrainingRun,
}

/// M5 partition with an AD-trained affine payload in every leaf.
pub fn m5_ad_train(
    model: &mut dyn ScenarioModel,
    map: &ScenarioMap,
    data: &[Observation],
    hyper: &TreeHyper,
    config: &AdConfig,
) -> Result<(TreeForecaster, Vec<LeafRun>), AdError> {
    let mut tree = fit_m5_structure(data, hyper)?;
    let mut runs = Vec::with_capacity(tree.leaves.len());
    for leaf in 0..tree.leaves.len() {
        let cohort = tree.cohort_data(leaf, data);
        let mut problem = BilevelProblem::new(&mut *model, map, &cohort);
        let (run, constant_fallback) = match meta_train(&mut problem, Family::Affine, config) {
            Ok(run) => (run, false),
            Err(AdError::Forecast(ForecastError::RankDeficient { .. })) => {
                (meta_train(&mut problem, Family::Constant, config)?, true)
            }
            Err(e) => return Err(e),
        };
        tree.leaves[leaf].payload = LeafPayload::Affine(run.forecaster.clone());
        runs.push(LeafRun {
            leaf,
            cohort_size: cohort.len(),
            constant_fallback,
            run,
        });
    }
    Ok((tree, runs))
}
