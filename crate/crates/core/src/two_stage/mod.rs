//! Two-stage stochastic linear programs with fixed recourse and fixed costs.
//!
//! ```text
//! min  cᵀz + E[Q(z, ξ)]      Q(z, ξ) = min { qᵀy : W y = h − T z, y ≥ 0 }
//! s.t. A z ≤ b, z ≥ 0
//! ```
//!
//! Only `h` (and, scenario-wise, `T`) is random. [`Workspace`] evaluates the
//! recourse function, solves one-scenario deterministic problems and sample
//! average approximations, reusing optimal bases across right-hand sides.

mod saa;
mod workspace;

pub use saa::{SaaMethod, SaaOptions, SaaSolution};
pub use workspace::{OneScenario, SecondStage, Workspace};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lp::{FamilyFailure, LpError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TwoStageError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("second stage is infeasible (instance lacks complete recourse)")]
    SecondStageInfeasible,
    #[error("second stage is unbounded")]
    SecondStageUnbounded,
    #[error("problem is infeasible")]
    Infeasible,
    #[error("problem is unbounded")]
    Unbounded,
    #[error("extensive form needs {columns} columns, the cap is {cap}")]
    SizeLimit { columns: usize, cap: usize },
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("decomposition did not converge within {0} iterations")]
    NotConverged(usize),
    #[error(transparent)]
    Lp(#[from] LpError),
}

pub type Result<T> = std::result::Result<T, TwoStageError>;

/// Problem data `(c, A, b, W, q, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrfcProblem {
    #[serde(default)]
    pub name: String,
    pub first_stage_cost: Vec<f64>,
    #[serde(default)]
    pub constraint_matrix: Vec<Vec<f64>>,
    #[serde(default)]
    pub constraint_rhs: Vec<f64>,
    pub recourse: Vec<Vec<f64>>,
    pub second_stage_cost: Vec<f64>,
    pub technology: Vec<Vec<f64>>,
}

impl FrfcProblem {
    /// Number of first-stage variables.
    pub fn n_first(&self) -> usize {
        self.first_stage_cost.len()
    }

    /// Number of second-stage variables.
    pub fn n_second(&self) -> usize {
        self.second_stage_cost.len()
    }

    /// Number of second-stage rows, the length of `h`.
    pub fn scenario_dim(&self) -> usize {
        self.recourse.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (n, ny, m) = (self.n_first(), self.n_second(), self.scenario_dim());
        let mismatch = |what: String| Err(TwoStageError::DimensionMismatch(what));
        if self.constraint_matrix.len() != self.constraint_rhs.len() {
            return mismatch(format!(
                "{} constraint rows, {} right-hand sides",
                self.constraint_matrix.len(),
                self.constraint_rhs.len()
            ));
        }
        if self.constraint_matrix.iter().any(|r| r.len() != n) {
            return mismatch(format!("constraint rows must have {n} columns"));
        }
        if self.recourse.iter().any(|r| r.len() != ny) {
            return mismatch(format!("recourse rows must have {ny} columns"));
        }
        if self.technology.len() != m || self.technology.iter().any(|r| r.len() != n) {
            return mismatch(format!("technology must be {m} x {n}"));
        }
        let finite = self
            .first_stage_cost
            .iter()
            .chain(self.constraint_matrix.iter().flatten())
            .chain(&self.constraint_rhs)
            .chain(self.recourse.iter().flatten())
            .chain(&self.second_stage_cost)
            .chain(self.technology.iter().flatten())
            .all(|v| v.is_finite());
        if !finite {
            return Err(TwoStageError::InvalidProblem(
                "non-finite coefficient".into(),
            ));
        }
        Ok(())
    }

    /// Largest violation of `A z ≤ b, z ≥ 0`.
    pub fn first_stage_violation(&self, z: &[f64]) -> f64 {
        let mut worst = z.iter().fold(0.0f64, |w, &v| w.max(-v));
        for (row, b) in self.constraint_matrix.iter().zip(&self.constraint_rhs) {
            worst = worst.max(crate::lp::dot(row, z) - b);
        }
        worst
    }

    pub fn to_toml(&self) -> std::result::Result<String, toml::ser::Error> {
        toml::to_string(self)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let p: Self =
            toml::from_str(text).map_err(|e| TwoStageError::InvalidProblem(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    fn check_scenario(&self, s: &Scenario) -> Result<()> {
        let m = self.scenario_dim();
        if s.h.len() != m {
            return Err(TwoStageError::DimensionMismatch(format!(
                "scenario has {} entries, problem has {m} rows",
                s.h.len()
            )));
        }
        if let Some(t) = &s.t_override {
            if t.len() != m || t.iter().any(|r| r.len() != self.n_first()) {
                return Err(TwoStageError::DimensionMismatch(format!(
                    "technology override must be {m} x {}",
                    self.n_first()
                )));
            }
        }
        if s.h.iter().any(|v| !v.is_finite()) {
            return Err(TwoStageError::InvalidProblem("non-finite scenario".into()));
        }
        Ok(())
    }

    fn check_first_stage(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.n_first() {
            return Err(TwoStageError::DimensionMismatch(format!(
                "decision has {} entries, expected {}",
                z.len(),
                self.n_first()
            )));
        }
        Ok(())
    }
}

/// A realization `ξ = (h, T)`. Without an override the problem's `T` applies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub h: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_override: Option<Vec<Vec<f64>>>,
}

impl Scenario {
    pub fn new(h: Vec<f64>) -> Self {
        Self {
            h,
            t_override: None,
        }
    }

    pub fn with_technology(h: Vec<f64>, t: Vec<Vec<f64>>) -> Self {
        Self {
            h,
            t_override: Some(t),
        }
    }

    pub fn technology<'a>(&'a self, p: &'a FrfcProblem) -> &'a [Vec<f64>] {
        self.t_override.as_deref().unwrap_or(&p.technology)
    }
}

/// Deterministic cost perturbation making LP optima unique.
///
/// Coordinate `i` of a cost vector of length `n` is scaled by
/// `1 + epsilon·(i+1)/(n+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniquenessPerturbation {
    pub epsilon: f64,
}

impl Default for UniquenessPerturbation {
    fn default() -> Self {
        Self { epsilon: 1e-6 }
    }
}

impl UniquenessPerturbation {
    pub const NONE: Self = Self { epsilon: 0.0 };

    pub fn new(epsilon: f64) -> Self {
        assert!(
            epsilon >= 0.0 && epsilon.is_finite(),
            "epsilon must be finite and nonnegative"
        );
        Self { epsilon }
    }

    pub fn is_none(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn multiplier(&self, i: usize, n: usize) -> f64 {
        1.0 + self.epsilon * (i + 1) as f64 / (n + 1) as f64
    }

    pub fn apply(&self, costs: &[f64]) -> Vec<f64> {
        let n = costs.len();
        costs
            .iter()
            .enumerate()
            .map(|(i, c)| c * self.multiplier(i, n))
            .collect()
    }
}

/// Anything that turns a scenario into a first-stage plan and prices a plan
/// under a realized scenario. Implemented by [`Workspace`] and by the
/// closed-form newsvendor models.
pub trait ScenarioModel {
    /// An optimal first-stage decision of the one-scenario problem.
    fn plan(&mut self, s: &Scenario) -> Result<Vec<f64>>;
    /// `G(z, ξ) = cᵀz + Q(z, ξ)`.
    fn cost(&mut self, z: &[f64], s: &Scenario) -> Result<f64>;
}

/// One entry of a [`ScenarioMap`]: `h[row] += coefficient · ξ[component]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapTerm {
    pub row: usize,
    pub component: usize,
    pub coefficient: f64,
}

/// Affine map from an uncertain vector `ξ` (demands) to a right-hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMap {
    pub base: Vec<f64>,
    pub terms: Vec<MapTerm>,
    pub xi_dim: usize,
}

impl ScenarioMap {
    /// `h = ξ` on the given rows, zero elsewhere.
    pub fn on_rows(m: usize, rows: &[usize], coefficient: f64) -> Self {
        Self {
            base: vec![0.0; m],
            terms: rows
                .iter()
                .enumerate()
                .map(|(component, &row)| MapTerm {
                    row,
                    component,
                    coefficient,
                })
                .collect(),
            xi_dim: rows.len(),
        }
    }

    pub fn scenario(&self, xi: &[f64]) -> Scenario {
        debug_assert_eq!(xi.len(), self.xi_dim);
        let mut h = self.base.clone();
        for t in &self.terms {
            h[t.row] += t.coefficient * xi[t.component];
        }
        Scenario::new(h)
    }
}

/// A problem together with the map that places uncertain data into `h`.
#[derive(Debug, Clone)]
pub struct Instance {
    pub problem: Arc<FrfcProblem>,
    pub map: ScenarioMap,
}

impl Instance {
    pub fn new(problem: FrfcProblem, map: ScenarioMap) -> Result<Self> {
        problem.validate()?;
        if map.base.len() != problem.scenario_dim()
            || map
                .terms
                .iter()
                .any(|t| t.row >= map.base.len() || t.component >= map.xi_dim)
        {
            return Err(TwoStageError::DimensionMismatch(
                "scenario map does not fit the problem".into(),
            ));
        }
        Ok(Self {
            problem: Arc::new(problem),
            map,
        })
    }

    pub fn xi_dim(&self) -> usize {
        self.map.xi_dim
    }

    pub fn scenario(&self, xi: &[f64]) -> Scenario {
        self.map.scenario(xi)
    }

    pub fn workspace(&self, pert: UniquenessPerturbation) -> Result<Workspace> {
        Workspace::new(self.problem.clone(), pert)
    }
}

pub(crate) fn family_error(e: FamilyFailure, second_stage: bool) -> TwoStageError {
    match (e, second_stage) {
        (FamilyFailure::Infeasible, true) => TwoStageError::SecondStageInfeasible,
        (FamilyFailure::Unbounded, true) => TwoStageError::SecondStageUnbounded,
        (FamilyFailure::Infeasible, false) => TwoStageError::Infeasible,
        (FamilyFailure::Unbounded, false) => TwoStageError::Unbounded,
        (FamilyFailure::Solver(e), _) => TwoStageError::Lp(e),
    }
}

/// `(Q(z, ξ), u)`: the recourse value and its equality multipliers.
pub fn second_stage_value(p: &FrfcProblem, z: &[f64], s: &Scenario) -> Result<(f64, Vec<f64>)> {
    let mut ws = Workspace::new(Arc::new(p.clone()), UniquenessPerturbation::NONE)?;
    let r = ws.second_stage(z, s)?;
    Ok((r.value, r.duals))
}

/// `G(z, ξ) = cᵀz + Q(z, ξ)`.
pub fn full_objective(p: &FrfcProblem, z: &[f64], s: &Scenario) -> Result<f64> {
    Workspace::new(Arc::new(p.clone()), UniquenessPerturbation::NONE)?.full_objective(z, s)
}

/// Solves `min cᵀz + qᵀy  s.t.  T z + W y = h, z ∈ Z, y ≥ 0` as one LP.
pub fn one_scenario_solve(
    p: &FrfcProblem,
    s: &Scenario,
    pert: UniquenessPerturbation,
) -> Result<(Vec<f64>, f64)> {
    let sol = Workspace::new(Arc::new(p.clone()), pert)?.one_scenario(s)?;
    Ok((sol.z, sol.objective))
}

/// Solves the sample average approximation with default options.
pub fn saa_solve(
    p: &FrfcProblem,
    scenarios: &[Scenario],
    weights: &[f64],
    pert: UniquenessPerturbation,
) -> Result<(Vec<f64>, f64)> {
    let sol = Workspace::new(Arc::new(p.clone()), pert)?.saa(scenarios, weights)?;
    Ok((sol.z, sol.objective))
}

/// The scenario `(T̄, T̄ z*)` whose one-scenario problem is solved by `z*`.
pub fn construct_optimal_scenario(
    p: &FrfcProblem,
    z_star: &[f64],
    t_mean: &[Vec<f64>],
) -> Result<Scenario> {
    p.check_first_stage(z_star)?;
    let m = p.scenario_dim();
    if t_mean.len() != m || t_mean.iter().any(|r| r.len() != z_star.len()) {
        return Err(TwoStageError::DimensionMismatch(format!(
            "mean technology must be {m} x {}",
            z_star.len()
        )));
    }
    let h = t_mean
        .iter()
        .map(|row| crate::lp::dot(row, z_star))
        .collect();
    Ok(Scenario::with_technology(h, t_mean.to_vec()))
}

/// Probability-weighted mean of the technology matrices.
pub fn mean_technology(p: &FrfcProblem, scenarios: &[Scenario], weights: &[f64]) -> Vec<Vec<f64>> {
    let mut t = vec![vec![0.0; p.n_first()]; p.scenario_dim()];
    for (s, &w) in scenarios.iter().zip(weights) {
        for (acc, row) in t.iter_mut().zip(s.technology(p)) {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += w * v;
            }
        }
    }
    t
}

/// Probability-weighted mean scenario. Carries a technology override only if
/// some scenario does.
pub fn mean_scenario(p: &FrfcProblem, scenarios: &[Scenario], weights: &[f64]) -> Scenario {
    let mut h = vec![0.0; p.scenario_dim()];
    for (s, &w) in scenarios.iter().zip(weights) {
        for (a, v) in h.iter_mut().zip(&s.h) {
            *a += w * v;
        }
    }
    if scenarios.iter().any(|s| s.t_override.is_some()) {
        Scenario::with_technology(h, mean_technology(p, scenarios, weights))
    } else {
        Scenario::new(h)
    }
}

pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n as f64; n]
}

pub(crate) fn check_weights(weights: &[f64], n: usize) -> Result<()> {
    if n == 0 {
        return Err(TwoStageError::InvalidWeights("no scenarios".into()));
    }
    if weights.len() != n {
        return Err(TwoStageError::InvalidWeights(format!(
            "{} weights for {n} scenarios",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(TwoStageError::InvalidWeights(
            "weights must be nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(TwoStageError::InvalidWeights(format!(
            "weights sum to {total}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
