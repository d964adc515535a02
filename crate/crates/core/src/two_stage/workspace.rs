use std::sync::Arc;

use super::{
    family_error, FrfcProblem, Result, SaaOptions, Scenario, ScenarioModel, TwoStageError,
    UniquenessPerturbation,
};
use crate::lp::{dot, solve_lp, FamilyStats, LinearProgram, LpStatus, RhsFamily};

/// Solution of the recourse problem for one `(z, ξ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondStage {
    pub value: f64,
    pub duals: Vec<f64>,
    pub y: Vec<f64>,
}

/// First-stage decision of a one-scenario or sample problem.
#[derive(Debug, Clone, PartialEq)]
pub struct OneScenario {
    pub z: Vec<f64>,
    pub y: Vec<f64>,
    /// `cᵀz + qᵀy` with unperturbed costs.
    pub objective: f64,
}

/// Per-problem solver state. Bases found optimal for one right-hand side are
/// kept and reused for later ones.
#[derive(Debug, Clone)]
pub struct Workspace {
    problem: Arc<FrfcProblem>,
    pert: UniquenessPerturbation,
    c_pert: Vec<f64>,
    q_pert: Vec<f64>,
    recourse: RhsFamily,
    recourse_pert: Option<RhsFamily>,
    one_scenario: RhsFamily,
    pub options: SaaOptions,
}

impl Workspace {
    pub fn new(problem: Arc<FrfcProblem>, pert: UniquenessPerturbation) -> Result<Self> {
        problem.validate()?;
        let p = &*problem;
        let c_pert = pert.apply(&p.first_stage_cost);
        let q_pert = pert.apply(&p.second_stage_cost);
        let recourse = RhsFamily::new(p.recourse.clone(), p.second_stage_cost.clone())?;
        let recourse_pert = if pert.is_none() {
            None
        } else {
            Some(RhsFamily::new(p.recourse.clone(), q_pert.clone())?)
        };

        // [A I 0; T 0 W] [z; s; y] = [b; h]
        let (n, k, ny) = (p.n_first(), p.constraint_rhs.len(), p.n_second());
        let mut rows = Vec::with_capacity(k + p.scenario_dim());
        for (i, a) in p.constraint_matrix.iter().enumerate() {
            let mut row = vec![0.0; n + k + ny];
            row[..n].copy_from_slice(a);
            row[n + i] = 1.0;
            rows.push(row);
        }
        for (t, w) in p.technology.iter().zip(&p.recourse) {
            let mut row = vec![0.0; n + k + ny];
            row[..n].copy_from_slice(t);
            row[n + k..].copy_from_slice(w);
            rows.push(row);
        }
        let mut cost = c_pert.clone();
        cost.extend(std::iter::repeat(0.0).take(k));
        cost.extend_from_slice(&q_pert);
        let one_scenario = RhsFamily::new(rows, cost)?;

        Ok(Self {
            problem,
            pert,
            c_pert,
            q_pert,
            recourse,
            recourse_pert,
            one_scenario,
            options: SaaOptions::default(),
        })
    }

    pub fn with_options(mut self, options: SaaOptions) -> Self {
        self.options = options;
        self
    }

    pub fn problem(&self) -> &FrfcProblem {
        &self.problem
    }

    pub fn shared_problem(&self) -> Arc<FrfcProblem> {
        self.problem.clone()
    }

    pub fn perturbation(&self) -> UniquenessPerturbation {
        self.pert
    }

    pub(crate) fn perturbed_first_stage_cost(&self) -> &[f64] {
        &self.c_pert
    }

    pub(crate) fn perturbed_second_stage_cost(&self) -> &[f64] {
        &self.q_pert
    }

    /// Cache statistics of the recourse and one-scenario families.
    pub fn stats(&self) -> (FamilyStats, FamilyStats) {
        (self.recourse.stats(), self.one_scenario.stats())
    }

    fn rhs(&self, z: &[f64], s: &Scenario) -> Result<Vec<f64>> {
        let p = &*self.problem;
        p.check_first_stage(z)?;
        p.check_scenario(s)?;
        Ok(s.h
            .iter()
            .zip(s.technology(p))
            .map(|(h, t)| h - dot(t, z))
            .collect())
    }

    /// `Q(z, ξ)` with unperturbed costs.
    pub fn second_stage(&mut self, z: &[f64], s: &Scenario) -> Result<SecondStage> {
        let rhs = self.rhs(z, s)?;
        let sol = self
            .recourse
            .solve(&rhs)
            .map_err(|e| family_error(e, true))?;
        Ok(SecondStage {
            value: sol.objective,
            duals: sol.duals,
            y: sol.primal,
        })
    }

    /// Recourse under the perturbed costs, used by the decomposition.
    /// `hint` carries the cached basis of this scenario between calls.
    pub(crate) fn perturbed_second_stage(
        &mut self,
        z: &[f64],
        s: &Scenario,
        hint: &mut Option<usize>,
    ) -> Result<SecondStage> {
        let rhs = self.rhs(z, s)?;
        let family = self.recourse_pert.as_mut().unwrap_or(&mut self.recourse);
        let (sol, slot) = family
            .solve_hinted(&rhs, *hint)
            .map_err(|e| family_error(e, true))?;
        *hint = slot;
        Ok(SecondStage {
            value: sol.objective,
            duals: sol.duals,
            y: sol.primal,
        })
    }

    /// `G(z, ξ) = cᵀz + Q(z, ξ)`.
    pub fn full_objective(&mut self, z: &[f64], s: &Scenario) -> Result<f64> {
        let q = self.second_stage(z, s)?.value;
        Ok(dot(&self.problem.first_stage_cost, z) + q)
    }

    /// `Σ wₙ G(z, ξₙ)`.
    pub fn expected_cost(
        &mut self,
        z: &[f64],
        scenarios: &[Scenario],
        weights: &[f64],
    ) -> Result<f64> {
        super::check_weights(weights, scenarios.len())?;
        let mut total = dot(&self.problem.first_stage_cost, z);
        for (s, &w) in scenarios.iter().zip(weights) {
            if w != 0.0 {
                total += w * self.second_stage(z, s)?.value;
            }
        }
        Ok(total)
    }

    /// Optimal first stage of the deterministic problem at `s`.
    pub fn one_scenario(&mut self, s: &Scenario) -> Result<OneScenario> {
        let p = self.problem.clone();
        p.check_scenario(s)?;
        let (n, k) = (p.n_first(), p.constraint_rhs.len());
        let (z, y) = match &s.t_override {
            Some(t) if *t != p.technology => {
                let lp = self.one_scenario_lp(s);
                let sol = solve_lp(&lp)?;
                match sol.status {
                    LpStatus::Infeasible => return Err(TwoStageError::Infeasible),
                    LpStatus::Unbounded => return Err(TwoStageError::Unbounded),
                    LpStatus::Optimal => {}
                }
                (sol.primal[..n].to_vec(), sol.primal[n..].to_vec())
            }
            _ => {
                let mut rhs = p.constraint_rhs.clone();
                rhs.extend_from_slice(&s.h);
                let sol = self
                    .one_scenario
                    .solve(&rhs)
                    .map_err(|e| family_error(e, false))?;
                (sol.primal[..n].to_vec(), sol.primal[n + k..].to_vec())
            }
        };
        let objective = dot(&p.first_stage_cost, &z) + dot(&p.second_stage_cost, &y);
        Ok(OneScenario { z, y, objective })
    }

    /// The one-scenario problem over `(z, y)` with `A z ≤ b` as inequality rows.
    fn one_scenario_lp(&self, s: &Scenario) -> LinearProgram {
        let p = &*self.problem;
        let (n, ny) = (p.n_first(), p.n_second());
        let mut obj = self.c_pert.clone();
        obj.extend_from_slice(&self.q_pert);
        let mut lp = LinearProgram::new(obj);
        for (a, &b) in p.constraint_matrix.iter().zip(&p.constraint_rhs) {
            let mut row = a.clone();
            row.resize(n + ny, 0.0);
            lp.add_le(row, b);
        }
        for ((t, w), &h) in s.technology(p).iter().zip(&p.recourse).zip(&s.h) {
            let mut row = t.clone();
            row.extend_from_slice(w);
            lp.add_eq(row, h);
        }
        lp
    }

    /// Range of each first-stage coordinate over the optimal face of the
    /// (perturbed) one-scenario problem, with objective slack
    /// `tol·(1+|opt|)`.
    pub fn one_scenario_face(&mut self, s: &Scenario, tol: f64) -> Result<Vec<(f64, f64)>> {
        let best = self.one_scenario(s)?;
        let mut lp = self.one_scenario_lp(s);
        let opt = dot(&lp.objective[..best.z.len()], &best.z)
            + dot(&lp.objective[best.z.len()..], &best.y);
        let n = self.problem.n_first();
        lp.add_le(lp.objective.clone(), opt + tol * (1.0 + opt.abs()));
        let mut ranges = Vec::with_capacity(n);
        for i in 0..n {
            let mut bounds = [0.0; 2];
            for (slot, sign) in [(0, 1.0), (1, -1.0)] {
                let mut probe = lp.clone();
                probe.objective = vec![0.0; probe.n_vars()];
                probe.objective[i] = sign;
                let sol = solve_lp(&probe)?;
                bounds[slot] = match sol.status {
                    LpStatus::Optimal => sol.primal[i],
                    LpStatus::Unbounded => sign * f64::INFINITY,
                    LpStatus::Infeasible => best.z[i],
                };
            }
            ranges.push((bounds[0], bounds[1]));
        }
        Ok(ranges)
    }
}

impl ScenarioModel for Workspace {
    fn plan(&mut self, s: &Scenario) -> Result<Vec<f64>> {
        Ok(self.one_scenario(s)?.z)
    }

    fn cost(&mut self, z: &[f64], s: &Scenario) -> Result<f64> {
        self.full_objective(z, s)
    }
}
