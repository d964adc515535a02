use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::numerics::RandomSource;
use crate::two_stage::{
    FrfcProblem, Instance, Result as TsResult, Scenario, ScenarioMap, ScenarioModel, TwoStageError,
};

/// Unit cost `c`, selling price `p`, holding cost `η` and shortage penalty `π`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewsvendorParams {
    pub c: f64,
    pub p: f64,
    pub eta: f64,
    pub pi: f64,
    /// Upper end of the Uniform(0, b) demand.
    pub b: f64,
}

impl NewsvendorParams {
    /// `c = η = 300`, `p = π = 4000`, `b = 100`.
    pub fn single_product() -> Self {
        Self {
            c: 300.0,
            p: 4000.0,
            eta: 300.0,
            pi: 4000.0,
            b: 100.0,
        }
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let finite = [self.c, self.p, self.eta, self.pi, self.b]
            .iter()
            .all(|v| v.is_finite());
        if !finite
            || !(self.p > self.c)
            || self.c < 0.0
            || self.eta < 0.0
            || self.pi < 0.0
            || !(self.b > 0.0)
        {
            return Err(ProblemError::InvalidParams(format!("{self:?}")));
        }
        Ok(())
    }

    /// `ϕ = (p + π − c)/(p + π + η)`.
    pub fn critical_ratio(&self) -> f64 {
        critical_ratio(self.c, self.p, self.eta, self.pi)
    }

    /// `G(z, D) = (c−p)z + (p+η)[z−D]₊ + π[D−z]₊`.
    pub fn cost(&self, z: f64, d: f64) -> f64 {
        (self.c - self.p) * z + (self.p + self.eta) * (z - d).max(0.0) + self.pi * (d - z).max(0.0)
    }

    /// `(c−p)Uz + (p+η)[Uz−D]₊ + π[D−Uz]₊`.
    pub fn unreliable_cost(&self, z: f64, d: f64, u: f64) -> f64 {
        self.cost(u * z, d)
    }
}

pub fn critical_ratio(c: f64, p: f64, eta: f64, pi: f64) -> f64 {
    (p + pi - c) / (p + pi + eta)
}

/// Optimal order under Uniform(0, b) demand and Uniform(0, 1) yield.
pub fn analytical_unreliable_optimum(phi: f64, b: f64) -> Result<f64, ProblemError> {
    if !(phi > 0.0 && phi < 1.0) || !(b > 0.0) || !b.is_finite() {
        return Err(ProblemError::InvalidParams(format!("phi = {phi}, b = {b}")));
    }
    Ok(if phi <= 2.0 / 3.0 {
        1.5 * phi * b
    } else {
        b / (3.0 * (1.0 - phi)).sqrt()
    })
}

/// `∫₀¹ u F(zu) du − ϕ E[U]` for Uniform(0, b) demand and Uniform(0, 1) yield.
///
/// The integrand is polynomial on either side of the kink `u = b/z`, so
/// Simpson's rule on each piece is exact up to rounding.
pub fn unreliable_optimality_residual(z: f64, phi: f64, b: f64) -> f64 {
    let integrand = |u: f64| u * (z * u / b).clamp(0.0, 1.0);
    let kink = if z > b { b / z } else { 1.0 };
    let simpson = |a: f64, c: f64| {
        let panels = 8;
        let h = (c - a) / panels as f64;
        let mut s = integrand(a) + integrand(c);
        for k in 1..panels {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            s += w * integrand(a + k as f64 * h);
        }
        s * h / 3.0
    };
    let mut integral = simpson(0.0, kink);
    if kink < 1.0 {
        integral += simpson(kink, 1.0);
    }
    integral - 0.5 * phi
}

/// `min (c−p)z + (p+η)y⁺ + πy⁻  s.t.  y⁺ − y⁻ = z − D`, with `h = −D`, `T = −1`.
pub fn standard(params: &NewsvendorParams) -> Result<Instance, ProblemError> {
    params.validate()?;
    let problem = FrfcProblem {
        name: "newsvendor".into(),
        first_stage_cost: vec![params.c - params.p],
        constraint_matrix: vec![],
        constraint_rhs: vec![],
        recourse: vec![vec![1.0, -1.0]],
        second_stage_cost: vec![params.p + params.eta, params.pi],
        technology: vec![vec![-1.0]],
    };
    Ok(Instance::new(problem, ScenarioMap::on_rows(1, &[0], -1.0))?)
}

pub fn demand_scenario(d: f64) -> Scenario {
    Scenario::new(vec![-d])
}

/// Unreliable supplier: only `Uz` of the order `z` arrives and is paid for.
///
/// Second-stage variables `(y⁺, y⁻, v)` with rows `y⁺ − y⁻ − v = −D` and
/// `v − Uz = 0`; the random yield enters through the technology matrix.
pub fn unreliable(params: &NewsvendorParams) -> Result<FrfcProblem, ProblemError> {
    params.validate()?;
    Ok(FrfcProblem {
        name: "newsvendor-unreliable".into(),
        first_stage_cost: vec![0.0],
        constraint_matrix: vec![],
        constraint_rhs: vec![],
        recourse: vec![vec![1.0, -1.0, -1.0], vec![0.0, 0.0, 1.0]],
        second_stage_cost: vec![params.p + params.eta, params.pi, params.c - params.p],
        technology: vec![vec![0.0], vec![-1.0]],
    })
}

pub fn unreliable_scenario(d: f64, u: f64) -> Scenario {
    Scenario::with_technology(vec![-d, 0.0], vec![vec![0.0], vec![-u]])
}

/// `(D, U)` stored in an unreliable-supplier scenario.
pub fn unreliable_demand_yield(s: &Scenario) -> (f64, f64) {
    let u = s.t_override.as_ref().map_or(1.0, |t| -t[1][0]);
    (-s.h[0], u)
}

/// Newsvendor with the extra soft requirement `z ≥ 2D`, carried by a second
/// row `w₁ − w₂ = z − 2D` whose shortfall `w₂` costs `penalty` per unit.
pub fn coupled(params: &NewsvendorParams, penalty: f64) -> Result<Instance, ProblemError> {
    params.validate()?;
    if !(penalty > 0.0) {
        return Err(ProblemError::InvalidParams(format!("penalty = {penalty}")));
    }
    let problem = FrfcProblem {
        name: "newsvendor-coupled".into(),
        first_stage_cost: vec![params.c - params.p],
        constraint_matrix: vec![],
        constraint_rhs: vec![],
        recourse: vec![vec![1.0, -1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, -1.0]],
        second_stage_cost: vec![params.p + params.eta, params.pi, 0.0, penalty],
        technology: vec![vec![-1.0], vec![-1.0]],
    };
    let map = ScenarioMap {
        base: vec![0.0, 0.0],
        terms: vec![
            crate::two_stage::MapTerm {
                row: 0,
                component: 0,
                coefficient: -1.0,
            },
            crate::two_stage::MapTerm {
                row: 1,
                component: 0,
                coefficient: -2.0,
            },
        ],
        xi_dim: 1,
    };
    Ok(Instance::new(problem, map)?)
}

/// Independent products sharing the order budget `Σ zᵢ ≤ budget`.
pub fn multi_product(products: &[NewsvendorParams], budget: f64) -> Result<Instance, ProblemError> {
    if products.is_empty() || !(budget >= 0.0) {
        return Err(ProblemError::InvalidParams(
            "need products and a nonnegative budget".into(),
        ));
    }
    let k = products.len();
    let mut recourse = vec![vec![0.0; 2 * k]; k];
    let mut technology = vec![vec![0.0; k]; k];
    let mut q = Vec::with_capacity(2 * k);
    for (i, pr) in products.iter().enumerate() {
        pr.validate()?;
        recourse[i][2 * i] = 1.0;
        recourse[i][2 * i + 1] = -1.0;
        technology[i][i] = -1.0;
        q.extend([pr.p + pr.eta, pr.pi]);
    }
    let problem = FrfcProblem {
        name: "newsvendor-multi-product".into(),
        first_stage_cost: products.iter().map(|pr| pr.c - pr.p).collect(),
        constraint_matrix: vec![vec![1.0; k]],
        constraint_rhs: vec![budget],
        recourse,
        second_stage_cost: q,
        technology,
    };
    let rows: Vec<usize> = (0..k).collect();
    Ok(Instance::new(
        problem,
        ScenarioMap::on_rows(k, &rows, -1.0),
    )?)
}

/// The two-product experiment: products with demand Uniform(100, 400) and
/// Uniform(50, 150) and a budget of 300.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoProductSetup {
    pub products: [NewsvendorParams; 2],
    pub demand_ranges: [(f64, f64); 2],
    pub budget: f64,
}

impl Default for TwoProductSetup {
    fn default() -> Self {
        Self {
            products: [
                NewsvendorParams {
                    c: 300.0,
                    p: 1500.0,
                    eta: 300.0,
                    pi: 1500.0,
                    b: 400.0,
                },
                NewsvendorParams {
                    c: 1000.0,
                    p: 3000.0,
                    eta: 1000.0,
                    pi: 3000.0,
                    b: 150.0,
                },
            ],
            demand_ranges: [(100.0, 400.0), (50.0, 150.0)],
            budget: 300.0,
        }
    }
}

impl TwoProductSetup {
    pub fn instance(&self) -> Result<Instance, ProblemError> {
        multi_product(&self.products, self.budget)
    }

    pub fn sample(&self, rng: &mut RandomSource, n: usize) -> Vec<Scenario> {
        (0..n)
            .map(|_| {
                let d: Vec<f64> = self
                    .demand_ranges
                    .iter()
                    .map(|&(a, b)| rng.uniform(a, b))
                    .collect();
                Scenario::new(d.iter().map(|v| -v).collect())
            })
            .collect()
    }
}

/// Draws `n` unreliable-supplier scenarios, `D ~ U(0, b)`, `U ~ U(0, 1)`.
pub fn sample_unreliable(
    params: &NewsvendorParams,
    rng: &mut RandomSource,
    n: usize,
) -> Vec<Scenario> {
    (0..n)
        .map(|_| {
            let d = rng.uniform(0.0, params.b);
            let u = rng.uniform(0.0, 1.0);
            unreliable_scenario(d, u)
        })
        .collect()
}

/// Closed-form one-scenario solution and cost of the single-product model.
#[derive(Debug, Clone, Copy)]
pub struct NewsvendorModel(pub NewsvendorParams);

impl ScenarioModel for NewsvendorModel {
    fn plan(&mut self, s: &Scenario) -> TsResult<Vec<f64>> {
        check_len(s, 1)?;
        Ok(vec![(-s.h[0]).max(0.0)])
    }

    fn cost(&mut self, z: &[f64], s: &Scenario) -> TsResult<f64> {
        check_len(s, 1)?;
        Ok(self.0.cost(z[0], -s.h[0]))
    }
}

/// Closed form of the unreliable-supplier model: order `D/U`.
#[derive(Debug, Clone, Copy)]
pub struct UnreliableModel(pub NewsvendorParams);

impl ScenarioModel for UnreliableModel {
    fn plan(&mut self, s: &Scenario) -> TsResult<Vec<f64>> {
        check_len(s, 2)?;
        let (d, u) = unreliable_demand_yield(s);
        Ok(vec![if u > 0.0 { d.max(0.0) / u } else { 0.0 }])
    }

    fn cost(&mut self, z: &[f64], s: &Scenario) -> TsResult<f64> {
        check_len(s, 2)?;
        let (d, u) = unreliable_demand_yield(s);
        Ok(self.0.unreliable_cost(z[0], d, u))
    }
}

/// Closed form of the budgeted multi-product model: fill products in order
/// of their marginal profit until the budget runs out.
#[derive(Debug, Clone)]
pub struct MultiProductModel {
    pub products: Vec<NewsvendorParams>,
    pub budget: f64,
}

impl ScenarioModel for MultiProductModel {
    fn plan(&mut self, s: &Scenario) -> TsResult<Vec<f64>> {
        let k = self.products.len();
        check_len(s, k)?;
        let mut order: Vec<usize> = (0..k).collect();
        let slope = |i: usize| {
            let pr = &self.products[i];
            pr.c - pr.p - pr.pi
        };
        order.sort_by(|&a, &b| slope(a).total_cmp(&slope(b)).then(a.cmp(&b)));
        let mut left = self.budget;
        let mut z = vec![0.0; k];
        for i in order {
            if slope(i) >= 0.0 {
                continue;
            }
            let want = (-s.h[i]).max(0.0);
            z[i] = want.min(left);
            left -= z[i];
        }
        Ok(z)
    }

    fn cost(&mut self, z: &[f64], s: &Scenario) -> TsResult<f64> {
        check_len(s, self.products.len())?;
        Ok(self
            .products
            .iter()
            .enumerate()
            .map(|(i, pr)| pr.cost(z[i], -s.h[i]))
            .sum())
    }
}

fn check_len(s: &Scenario, m: usize) -> TsResult<()> {
    if s.h.len() != m {
        return Err(TwoStageError::DimensionMismatch(format!(
            "expected {m} rows, got {}",
            s.h.len()
        )));
    }
    Ok(())
}
