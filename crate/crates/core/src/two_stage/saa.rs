use serde::{Deserialize, Serialize};

use super::{check_weights, mean_scenario, Result, Scenario, TwoStageError, Workspace};
use crate::lp::{dot, solve_lp, LinearProgram, LpStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SaaMethod {
    /// One LP over `z` and every `yₙ`.
    ExtensiveForm,
    /// Single-cut L-shaped method with an ∞-norm trust region.
    Decomposition,
    /// Extensive form for small samples, decomposition otherwise.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaaOptions {
    pub method: SaaMethod,
    /// Largest extensive form accepted, in columns.
    pub column_cap: usize,
    /// `Auto` switches to decomposition above this many rows.
    pub auto_row_limit: usize,
    /// Relative optimality tolerance of the decomposition.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SaaOptions {
    fn default() -> Self {
        Self {
            method: SaaMethod::Auto,
            column_cap: 20_000,
            auto_row_limit: 400,
            tolerance: 1e-9,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaaSolution {
    pub z: Vec<f64>,
    /// `cᵀz + Σ wₙ Q(z, ξₙ)` with unperturbed costs.
    pub objective: f64,
    pub method: SaaMethod,
    /// Master iterations of the decomposition; 0 for a direct solve.
    pub iterations: usize,
}

/// `θ ≥ alpha + betaᵀ z`
#[derive(Debug, Clone)]
struct Cut {
    alpha: f64,
    beta: Vec<f64>,
}

impl Workspace {
    /// Minimizes `cᵀz + Σ wₙ Q(z, ξₙ)` over `Z`.
    pub fn saa(&mut self, scenarios: &[Scenario], weights: &[f64]) -> Result<SaaSolution> {
        self.saa_from(scenarios, weights, None)
    }

    /// [`saa`](Self::saa) with a starting point for the decomposition,
    /// typically the solution of a similar sample. It changes the path to
    /// the optimum, not the optimum. The extensive form ignores it.
    pub fn saa_from(
        &mut self,
        scenarios: &[Scenario],
        weights: &[f64],
        start: Option<&[f64]>,
    ) -> Result<SaaSolution> {
        check_weights(weights, scenarios.len())?;
        for s in scenarios {
            self.problem().check_scenario(s)?;
        }
        if scenarios.len() == 1 {
            let sol = self.one_scenario(&scenarios[0])?;
            return Ok(SaaSolution {
                z: sol.z,
                objective: sol.objective,
                method: SaaMethod::ExtensiveForm,
                iterations: 0,
            });
        }
        let p = self.problem();
        let rows = p.constraint_rhs.len() + scenarios.len() * p.scenario_dim();
        let columns = p.n_first() + scenarios.len() * p.n_second();
        let method = match self.options.method {
            SaaMethod::Auto
                if rows <= self.options.auto_row_limit && columns <= self.options.column_cap =>
            {
                SaaMethod::ExtensiveForm
            }
            SaaMethod::Auto => SaaMethod::Decomposition,
            m => m,
        };
        match method {
            SaaMethod::ExtensiveForm => {
                if columns > self.options.column_cap {
                    return Err(TwoStageError::SizeLimit {
                        columns,
                        cap: self.options.column_cap,
                    });
                }
                self.extensive_form(scenarios, weights)
            }
            _ => self.decompose(scenarios, weights, start),
        }
    }

    fn extensive_form(&mut self, scenarios: &[Scenario], weights: &[f64]) -> Result<SaaSolution> {
        let p = self.shared_problem();
        let (n, ny) = (p.n_first(), p.n_second());
        let total = n + scenarios.len() * ny;
        let mut obj = Vec::with_capacity(total);
        obj.extend_from_slice(self.perturbed_first_stage_cost());
        for &w in weights {
            obj.extend(self.perturbed_second_stage_cost().iter().map(|q| w * q));
        }
        let mut lp = LinearProgram::new(obj);
        for (a, &b) in p.constraint_matrix.iter().zip(&p.constraint_rhs) {
            let mut row = a.clone();
            row.resize(total, 0.0);
            lp.add_le(row, b);
        }
        for (k, s) in scenarios.iter().enumerate() {
            for ((t, w), &h) in s.technology(&p).iter().zip(&p.recourse).zip(&s.h) {
                let mut row = vec![0.0; total];
                row[..n].copy_from_slice(t);
                row[n + k * ny..n + (k + 1) * ny].copy_from_slice(w);
                lp.add_eq(row, h);
            }
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Infeasible => return Err(TwoStageError::Infeasible),
            LpStatus::Unbounded => return Err(TwoStageError::Unbounded),
            LpStatus::Optimal => {}
        }
        let z = sol.primal[..n].to_vec();
        let objective = if self.perturbation().is_none() {
            let mut v = dot(&p.first_stage_cost, &z);
            for (k, &w) in weights.iter().enumerate() {
                v += w * dot(
                    &p.second_stage_cost,
                    &sol.primal[n + k * ny..n + (k + 1) * ny],
                );
            }
            v
        } else {
            self.expected_cost(&z, scenarios, weights)?
        };
        Ok(SaaSolution {
            z,
            objective,
            method: SaaMethod::ExtensiveForm,
            iterations: 0,
        })
    }

    /// Perturbed sample objective at `z` and the aggregated optimality cut.
    fn value_and_cut(
        &mut self,
        z: &[f64],
        scenarios: &[Scenario],
        weights: &[f64],
        hints: &mut [Option<usize>],
    ) -> Result<(f64, Cut)> {
        let p = self.shared_problem();
        let mut cut = Cut {
            alpha: 0.0,
            beta: vec![0.0; z.len()],
        };
        let mut value = dot(self.perturbed_first_stage_cost(), z);
        for ((s, &w), hint) in scenarios.iter().zip(weights).zip(hints) {
            if w == 0.0 {
                continue;
            }
            let r = self.perturbed_second_stage(z, s, hint)?;
            value += w * r.value;
            cut.alpha += w * dot(&r.duals, &s.h);
            for (t, u) in s.technology(&p).iter().zip(&r.duals) {
                if *u != 0.0 {
                    for (b, tv) in cut.beta.iter_mut().zip(t) {
                        *b -= w * u * tv;
                    }
                }
            }
        }
        Ok((value, cut))
    }

    fn master(&self, center: &[f64], radius: f64, cuts: &[Cut]) -> Result<(Vec<f64>, f64)> {
        let p = self.problem();
        let n = center.len();
        let mut obj = self.perturbed_first_stage_cost().to_vec();
        obj.push(1.0);
        let mut lp = LinearProgram::new(obj);
        lp.set_lower_bound(n, None);
        for (a, &b) in p.constraint_matrix.iter().zip(&p.constraint_rhs) {
            let mut row = a.clone();
            row.push(0.0);
            lp.add_le(row, b);
        }
        for i in 0..n {
            lp.set_lower_bound(i, Some((center[i] - radius).max(0.0)));
            let mut row = vec![0.0; n + 1];
            row[i] = 1.0;
            lp.add_le(row, center[i] + radius);
        }
        for cut in cuts {
            let mut row = cut.beta.clone();
            row.push(-1.0);
            lp.add_le(row, -cut.alpha);
        }
        let sol = solve_lp(&lp)?;
        match sol.status {
            LpStatus::Optimal => Ok((
                sol.primal[..n].iter().map(|v| v.max(0.0)).collect(),
                sol.objective,
            )),
            LpStatus::Infeasible => Err(TwoStageError::Infeasible),
            LpStatus::Unbounded => Err(TwoStageError::Unbounded),
        }
    }

    fn decompose(
        &mut self,
        scenarios: &[Scenario],
        weights: &[f64],
        start: Option<&[f64]>,
    ) -> Result<SaaSolution> {
        let given = start.filter(|z| {
            z.len() == self.problem().n_first()
                && z.iter().all(|v| v.is_finite())
                && self.problem().first_stage_violation(z) <= 1e-9
        });
        let warm = given.is_some();
        let mut center = match given {
            Some(z) => z.iter().map(|v| v.max(0.0)).collect(),
            None => {
                let mean = mean_scenario(self.problem(), scenarios, weights);
                self.one_scenario(&mean)?.z
            }
        };
        let mut hints = vec![None; scenarios.len()];
        let (mut f_center, cut) = self.value_and_cut(&center, scenarios, weights, &mut hints)?;
        let mut cuts = vec![cut];
        let scale = center.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let mut radius = (if warm { 0.02 } else { 0.25 } * scale).max(1.0);
        let min_radius = 1e-7 * (1.0 + scale);
        let tol = self.options.tolerance;

        for iteration in 1..=self.options.max_iterations {
            let (z, model) = self.master(&center, radius, &cuts)?;
            let predicted = f_center - model;
            if predicted <= tol * (1.0 + f_center.abs()) {
                let objective = if self.perturbation().is_none() {
                    f_center
                } else {
                    self.expected_cost(&center, scenarios, weights)?
                };
                return Ok(SaaSolution {
                    z: center,
                    objective,
                    method: SaaMethod::Decomposition,
                    iterations: iteration,
                });
            }
            let (f_z, cut) = self.value_and_cut(&z, scenarios, weights, &mut hints)?;
            cuts.push(cut);
            let actual = f_center - f_z;
            if actual >= 1e-4 * predicted {
                let step = z
                    .iter()
                    .zip(&center)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                if actual >= 0.5 * predicted && step >= 0.99 * radius {
                    radius = (2.0 * radius).min(1e12);
                }
                center = z;
                f_center = f_z;
            } else if actual < -predicted {
                radius = (0.5 * radius).max(min_radius);
            }
        }
        Err(TwoStageError::NotConverged(self.options.max_iterations))
    }
}
