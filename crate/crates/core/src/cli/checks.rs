//! Property checks shared by `selftest` and the acceptance suite. Each check
//! returns `Ok(())` or a message describing the first violated property.

use std::sync::Arc;

use crate::ad_training::{meta_train, AdConfig, BilevelProblem, Family};
use crate::lp::{solve_lp, LinearProgram, FEAS_TOL, GAP_TOL};
use crate::numerics::RandomSource;
use crate::problems::newsvendor::{self, NewsvendorModel, NewsvendorParams};
use crate::problems::{random_instance, Observation, TechnologyMode};
use crate::two_stage::{
    construct_optimal_scenario, full_objective, mean_technology, one_scenario_solve, saa_solve,
    ScenarioMap, UniquenessPerturbation, Workspace,
};

/// A feasible and bounded LP: rows are built around a feasible point and the
/// costs around a dual feasible point. Mixes equalities, `≤` rows, shifted
/// lower bounds and free variables.
pub fn random_lp(rng: &mut RandomSource) -> LinearProgram {
    let n = 1 + rng.index(8);
    let n_eq = rng.index(n.min(4) + 1);
    let n_le = rng.index(6);
    let lower: Vec<Option<f64>> = (0..n)
        .map(|_| match rng.index(4) {
            0 => None,
            1 => Some(rng.uniform(-3.0, 3.0)),
            _ => Some(0.0),
        })
        .collect();
    let x0: Vec<f64> = lower
        .iter()
        .map(|l| match l {
            // Some points sit on their bound so that degenerate vertices occur.
            Some(l) if rng.index(3) == 0 => *l,
            Some(l) => l + rng.uniform(0.0, 4.0),
            None => rng.uniform(-4.0, 4.0),
        })
        .collect();
    let row = |rng: &mut RandomSource| -> Vec<f64> {
        (0..n)
            .map(|_| {
                if rng.index(4) == 0 {
                    0.0
                } else {
                    rng.uniform(-3.0, 3.0)
                }
            })
            .collect()
    };
    let eq: Vec<Vec<f64>> = (0..n_eq).map(|_| row(rng)).collect();
    let le: Vec<Vec<f64>> = (0..n_le).map(|_| row(rng)).collect();
    let y: Vec<f64> = (0..n_eq).map(|_| rng.uniform(-2.0, 2.0)).collect();
    let w: Vec<f64> = (0..n_le)
        .map(|_| {
            if rng.index(2) == 0 {
                0.0
            } else {
                -rng.uniform(0.0, 2.0)
            }
        })
        .collect();
    let objective: Vec<f64> = (0..n)
        .map(|j| {
            let d = match lower[j] {
                None => 0.0,
                Some(_) if rng.index(3) == 0 => 0.0,
                Some(_) => rng.uniform(0.0, 2.0),
            };
            d + eq.iter().zip(&y).map(|(r, v)| r[j] * v).sum::<f64>()
                + le.iter().zip(&w).map(|(r, v)| r[j] * v).sum::<f64>()
        })
        .collect();
    let mut lp = LinearProgram::new(objective);
    for r in eq {
        let b = crate::lp::dot(&r, &x0);
        lp.add_eq(r, b);
    }
    for r in le {
        let b = crate::lp::dot(&r, &x0)
            + if rng.index(2) == 0 {
                0.0
            } else {
                rng.uniform(0.0, 2.0)
            };
        lp.add_le(r, b);
    }
    for (j, l) in lower.into_iter().enumerate() {
        lp.set_lower_bound(j, l);
    }
    lp
}

/// Primal feasibility, strong duality, dual sign conditions and
/// complementary slackness of the returned solution.
pub fn lp_certificates(lp: &LinearProgram) -> Result<(), String> {
    let sol = solve_lp(lp).map_err(|e| e.to_string())?;
    if !sol.is_optimal() {
        return Err(format!(
            "status {:?} on a feasible bounded program",
            sol.status
        ));
    }
    let scale = 1.0 + lp.rhs_norm();
    let res = lp.max_residual(&sol.primal);
    if res > FEAS_TOL * scale {
        return Err(format!("primal residual {res}"));
    }
    let dual = sol.dual_objective(lp);
    if (sol.objective - dual).abs() > GAP_TOL * (1.0 + sol.objective.abs()) {
        return Err(format!("primal {} dual {dual}", sol.objective));
    }
    let cs_tol = 1e-6 * scale;
    for (i, (row, &b)) in lp.le_matrix.iter().zip(&lp.le_rhs).enumerate() {
        let u = sol.duals_ineq[i];
        if u > 1e-9 {
            return Err(format!("row {i} multiplier {u} > 0"));
        }
        let slack = b - crate::lp::dot(row, &sol.primal);
        if (slack * u).abs() > cs_tol {
            return Err(format!("row {i}: slack {slack} times multiplier {u}"));
        }
    }
    for j in 0..lp.n_vars() {
        let d = sol.reduced_cost(lp, j);
        match lp.lower_bounds[j] {
            None if d.abs() > 1e-7 * (1.0 + lp.objective[j].abs()) => {
                return Err(format!("free variable {j} has reduced cost {d}"));
            }
            Some(l) => {
                if d < -1e-7 * (1.0 + lp.objective[j].abs()) {
                    return Err(format!("variable {j} has reduced cost {d} < 0"));
                }
                if (d * (sol.primal[j] - l)).abs() > cs_tol {
                    return Err(format!(
                        "variable {j}: reduced cost {d} at distance {}",
                        sol.primal[j] - l
                    ));
                }
            }
            None => {}
        }
    }
    Ok(())
}

/// `cases` random programs drawn from `seed`; returns the failures.
pub fn lp_duality_suite(seed: u64, cases: usize) -> Vec<(usize, String)> {
    (0..cases)
        .filter_map(|k| {
            let lp = random_lp(&mut RandomSource::new(seed, k as u64));
            lp_certificates(&lp).err().map(|e| (k, e))
        })
        .collect()
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Optimal-scenario round trip on a random fixed-technology instance:
/// the one-scenario value at `(T̄, T̄z*)` equals the one-scenario objective
/// at `z*`, and under the uniqueness perturbation the one-scenario solution
/// is `z*` itself whenever that solution is unique.
pub fn optimal_scenario_round_trip(seed: u64) -> Result<(), String> {
    let inst = random_instance(
        &mut RandomSource::new(seed, 0),
        5,
        6,
        20,
        TechnologyMode::Fixed,
    );
    let p = &inst.problem;
    let err = |e: crate::two_stage::TwoStageError| e.to_string();
    let (z, _) = saa_solve(
        p,
        &inst.scenarios,
        &inst.weights,
        UniquenessPerturbation::NONE,
    )
    .map_err(err)?;
    let t_mean = mean_technology(p, &inst.scenarios, &inst.weights);
    let s = construct_optimal_scenario(p, &z, &t_mean).map_err(err)?;
    let (_, best) = one_scenario_solve(p, &s, UniquenessPerturbation::NONE).map_err(err)?;
    let at_z = full_objective(p, &z, &s).map_err(err)?;
    if !close(best, at_z, 1e-6) {
        return Err(format!("one-scenario optimum {best} vs {at_z} at z*"));
    }

    let pert = UniquenessPerturbation::default();
    let (zp, _) = saa_solve(p, &inst.scenarios, &inst.weights, pert).map_err(err)?;
    let sp = construct_optimal_scenario(p, &zp, &t_mean).map_err(err)?;
    let mut ws = Workspace::new(Arc::new(p.clone()), pert).map_err(err)?;
    let face = ws.one_scenario_face(&sp, 1e-10).map_err(err)?;
    if face
        .iter()
        .all(|(lo, hi)| hi - lo <= 1e-6 * (1.0 + hi.abs()))
    {
        let zh = ws.one_scenario(&sp).map_err(err)?.z;
        let dist = zh
            .iter()
            .zip(&zp)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if dist > 1e-4 * (1.0 + sup_norm(&zp)) {
            return Err(format!(
                "perturbed solutions differ by {dist}: {zh:?} vs {zp:?}"
            ));
        }
    }
    Ok(())
}

/// Random instances whose scenario technologies average to zero: compares
/// the SAA optimum with the first-stage-only optimum `min{cᵀz : z ∈ Z}`
/// that the zero scenario induces. Returns the seeds that disagree.
pub fn zero_mean_technology_suite(seed: u64, cases: usize) -> Result<Vec<(u64, String)>, String> {
    let mut failures = Vec::new();
    for k in 0..cases as u64 {
        let inst = random_instance(
            &mut RandomSource::new(seed, k),
            5,
            6,
            20,
            TechnologyMode::ZeroMean,
        );
        let p = &inst.problem;
        let pert = UniquenessPerturbation::NONE;
        let (z, saa_obj) =
            saa_solve(p, &inst.scenarios, &inst.weights, pert).map_err(|e| e.to_string())?;
        let t_mean = mean_technology(p, &inst.scenarios, &inst.weights);
        let s = construct_optimal_scenario(p, &z, &t_mean).map_err(|e| e.to_string())?;
        let (z0, _) = one_scenario_solve(p, &s, pert).map_err(|e| e.to_string())?;
        // Price the first-stage-only decision in the stochastic problem.
        let mut ws = Workspace::new(Arc::new(p.clone()), pert).map_err(|e| e.to_string())?;
        let at_z0 = ws
            .expected_cost(&z0, &inst.scenarios, &inst.weights)
            .map_err(|e| e.to_string())?;
        if !close(at_z0, saa_obj, 1e-6) {
            failures.push((
                k,
                format!("first-stage-only decision costs {at_z0}, SAA optimum {saa_obj}"),
            ));
        }
    }
    Ok(failures)
}

/// Constant-family AD on the non-contextual newsvendor with Uniform(0, 100)
/// demand. Returns `(learned constant, its cost, cost of the mean forecast)`.
pub fn quantile_recovery(n: usize, seed: u64) -> Result<(f64, f64, f64), String> {
    let nv = NewsvendorParams::single_product();
    let mut rng = RandomSource::new(seed, 0);
    let data: Vec<Observation> = (0..n)
        .map(|_| Observation {
            x: vec![],
            xi: vec![rng.uniform(0.0, nv.b)],
        })
        .collect();
    let map = ScenarioMap::on_rows(1, &[0], -1.0);
    let mut model = NewsvendorModel(nv);
    let mut problem = BilevelProblem::new(&mut model, &map, &data);
    let run = meta_train(&mut problem, Family::Constant, &AdConfig::default())
        .map_err(|e| e.to_string())?;
    let mean = data.iter().map(|o| o.xi[0]).sum::<f64>() / n as f64;
    let at_mean = problem.cost_with(|_| Some(vec![mean]));
    Ok((run.theta_star[0], run.final_cost, at_mean))
}

/// The coupled-constraint demo. Returns `h*`, the sample cost of the
/// one-scenario solution at `h*` and the SAA objective.
pub fn coupled_demo(n: usize, seed: u64) -> Result<(Vec<f64>, f64, f64), String> {
    let nv = NewsvendorParams::single_product();
    let inst = newsvendor::coupled(&nv, 1e5).map_err(|e| e.to_string())?;
    let mut rng = RandomSource::new(seed, 0);
    let sample: Vec<_> = (0..n)
        .map(|_| inst.scenario(&[rng.uniform(0.0, nv.b)]))
        .collect();
    let w = crate::two_stage::uniform_weights(n);
    let p = &inst.problem;
    let pert = UniquenessPerturbation::NONE;
    let (z, obj) = saa_solve(p, &sample, &w, pert).map_err(|e| e.to_string())?;
    let s = construct_optimal_scenario(p, &z, &p.technology).map_err(|e| e.to_string())?;
    let (z_hat, _) = one_scenario_solve(p, &s, pert).map_err(|e| e.to_string())?;
    let mut ws = Workspace::new(p.clone(), pert).map_err(|e| e.to_string())?;
    let at_hat = ws
        .expected_cost(&z_hat, &sample, &w)
        .map_err(|e| e.to_string())?;
    Ok((s.h, at_hat, obj))
}
