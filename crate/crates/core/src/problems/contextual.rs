use serde::{Deserialize, Serialize};

use super::ProblemError;
use crate::numerics::RandomSource;
use crate::two_stage::{FrfcProblem, Instance, ScenarioMap};

/// Resources `i` with cost `cᵢ` and yield `ρᵢ`; clients `j` with shortage
/// penalty `qⱼ`; service rates `μᵢⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceAllocationParams {
    pub cost: Vec<f64>,
    pub penalty: Vec<f64>,
    pub yield_rate: Vec<f64>,
    pub service_rate: Vec<Vec<f64>>,
}

impl ResourceAllocationParams {
    /// Seeded draws: `cᵢ ~ U(5, 15)`, `qⱼ ~ U(50, 100)`, `ρᵢ ~ U(0.7, 1)`,
    /// `μᵢⱼ ~ U(0.5, 1.5)`.
    pub fn random(n_resources: usize, n_clients: usize, rng: &mut RandomSource) -> Self {
        let cost = (0..n_resources).map(|_| rng.uniform(5.0, 15.0)).collect();
        let penalty = (0..n_clients).map(|_| rng.uniform(50.0, 100.0)).collect();
        let yield_rate = (0..n_resources).map(|_| rng.uniform(0.7, 1.0)).collect();
        let service_rate = (0..n_resources)
            .map(|_| (0..n_clients).map(|_| rng.uniform(0.5, 1.5)).collect())
            .collect();
        Self {
            cost,
            penalty,
            yield_rate,
            service_rate,
        }
    }

    /// 20 resources and 30 clients.
    pub fn default_sized(rng: &mut RandomSource) -> Self {
        Self::random(20, 30, rng)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let (ni, nj) = (self.cost.len(), self.penalty.len());
        let bad = |m: &str| Err(ProblemError::InvalidParams(m.to_string()));
        if ni == 0 || nj == 0 {
            return bad("need at least one resource and one client");
        }
        if self.yield_rate.len() != ni
            || self.service_rate.len() != ni
            || self.service_rate.iter().any(|r| r.len() != nj)
        {
            return bad("parameter shapes disagree");
        }
        if self.cost.iter().any(|c| !(*c > 0.0) || !c.is_finite()) {
            return bad("resource costs must be positive");
        }
        if self.penalty.iter().any(|q| !(*q > 0.0) || !q.is_finite()) {
            return bad("penalties must be positive");
        }
        if self.yield_rate.iter().any(|r| !(*r > 0.0 && *r <= 1.0)) {
            return bad("yields must lie in (0, 1]");
        }
        if self
            .service_rate
            .iter()
            .flatten()
            .any(|m| !(*m >= 0.0) || !m.is_finite())
        {
            return bad("service rates must be nonnegative");
        }
        Ok(())
    }
}

/// Resource allocation in equality form.
///
/// Second-stage columns are `yˢᵢⱼ` (row-major), resource slacks `sᵢ`,
/// unmet demand `yᶜⱼ` and surplus `tⱼ`:
///
/// ```text
/// Σⱼ yˢᵢⱼ + sᵢ − ρᵢ zᵢ = 0          (T = −ρᵢ, h = 0)
/// Σᵢ μᵢⱼ yˢᵢⱼ + yᶜⱼ − tⱼ = ξⱼ
/// ```
pub fn build_resource_allocation(
    params: &ResourceAllocationParams,
) -> Result<Instance, ProblemError> {
    params.validate()?;
    let (ni, nj) = (params.cost.len(), params.penalty.len());
    let ny = ni * nj + ni + 2 * nj;
    let (slack, unmet, surplus) = (ni * nj, ni * nj + ni, ni * nj + ni + nj);
    let mut recourse = vec![vec![0.0; ny]; ni + nj];
    let mut technology = vec![vec![0.0; ni]; ni + nj];
    for i in 0..ni {
        for j in 0..nj {
            recourse[i][i * nj + j] = 1.0;
            recourse[ni + j][i * nj + j] = params.service_rate[i][j];
        }
        recourse[i][slack + i] = 1.0;
        technology[i][i] = -params.yield_rate[i];
    }
    for j in 0..nj {
        recourse[ni + j][unmet + j] = 1.0;
        recourse[ni + j][surplus + j] = -1.0;
    }
    let mut q = vec![0.0; ny];
    q[unmet..unmet + nj].copy_from_slice(&params.penalty);
    let problem = FrfcProblem {
        name: format!("resource-allocation-{ni}x{nj}"),
        first_stage_cost: params.cost.clone(),
        constraint_matrix: vec![],
        constraint_rhs: vec![],
        recourse,
        second_stage_cost: q,
        technology,
    };
    let rows: Vec<usize> = (ni..ni + nj).collect();
    Ok(Instance::new(
        problem,
        ScenarioMap::on_rows(ni + nj, &rows, 1.0),
    )?)
}

/// Warehouses `i` producing at unit cost `c` (emergency cost `r`), shipping
/// to locations `j` at cost `sᵢⱼ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShipmentParams {
    pub production_cost: f64,
    pub emergency_cost: f64,
    pub shipping_cost: Vec<Vec<f64>>,
}

impl ShipmentParams {
    /// `c = 5`, `r = 10`, `sᵢⱼ ~ U(1, 5)`.
    pub fn random(n_warehouses: usize, n_locations: usize, rng: &mut RandomSource) -> Self {
        Self {
            production_cost: 5.0,
            emergency_cost: 10.0,
            shipping_cost: (0..n_warehouses)
                .map(|_| (0..n_locations).map(|_| rng.uniform(1.0, 5.0)).collect())
                .collect(),
        }
    }

    /// 5 warehouses and 12 locations.
    pub fn default_sized(rng: &mut RandomSource) -> Self {
        Self::random(5, 12, rng)
    }

    pub fn validate(&self) -> Result<(), ProblemError> {
        let ni = self.shipping_cost.len();
        let nj = self.shipping_cost.first().map_or(0, Vec::len);
        if ni == 0 || nj == 0 || self.shipping_cost.iter().any(|r| r.len() != nj) {
            return Err(ProblemError::InvalidParams(
                "shipping cost must be a nonempty matrix".into(),
            ));
        }
        if !(self.production_cost > 0.0
            && self.emergency_cost > self.production_cost
            && self.emergency_cost.is_finite())
        {
            return Err(ProblemError::InvalidParams("need r > c > 0".into()));
        }
        if self
            .shipping_cost
            .iter()
            .flatten()
            .any(|s| !(*s >= 0.0) || !s.is_finite())
        {
            return Err(ProblemError::InvalidParams(
                "shipping costs must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Shipment planning in equality form.
///
/// Second-stage columns are `yˢᵢⱼ` (row-major), emergency production `yʷᵢ`,
/// warehouse slack `sᵢ` and location surplus `tⱼ`:
///
/// ```text
/// Σⱼ yˢᵢⱼ − yʷᵢ + sᵢ − zᵢ = 0       (T = −I, h = 0)
/// Σᵢ yˢᵢⱼ − tⱼ = ξⱼ
/// ```
pub fn build_shipment(params: &ShipmentParams) -> Result<Instance, ProblemError> {
    params.validate()?;
    let ni = params.shipping_cost.len();
    let nj = params.shipping_cost[0].len();
    let ny = ni * nj + 2 * ni + nj;
    let (emergency, slack, surplus) = (ni * nj, ni * nj + ni, ni * nj + 2 * ni);
    let mut recourse = vec![vec![0.0; ny]; ni + nj];
    let mut technology = vec![vec![0.0; ni]; ni + nj];
    let mut q = vec![0.0; ny];
    for i in 0..ni {
        for j in 0..nj {
            recourse[i][i * nj + j] = 1.0;
            recourse[ni + j][i * nj + j] = 1.0;
            q[i * nj + j] = params.shipping_cost[i][j];
        }
        recourse[i][emergency + i] = -1.0;
        recourse[i][slack + i] = 1.0;
        q[emergency + i] = params.emergency_cost;
        technology[i][i] = -1.0;
    }
    for j in 0..nj {
        recourse[ni + j][surplus + j] = -1.0;
    }
    let problem = FrfcProblem {
        name: format!("shipment-{ni}x{nj}"),
        first_stage_cost: vec![params.production_cost; ni],
        constraint_matrix: vec![],
        constraint_rhs: vec![],
        recourse,
        second_stage_cost: q,
        technology,
    };
    let rows: Vec<usize> = (ni..ni + nj).collect();
    Ok(Instance::new(
        problem,
        ScenarioMap::on_rows(ni + nj, &rows, 1.0),
    )?)
}
