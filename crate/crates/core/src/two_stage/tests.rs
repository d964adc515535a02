use proptest::prelude::*;

use super::*;
use crate::numerics::RandomSource;
use crate::problems::newsvendor::{self, NewsvendorParams};
use crate::problems::{random_instance, TechnologyMode};

fn nv() -> FrfcProblem {
    (*newsvendor::standard(&NewsvendorParams::single_product())
        .unwrap()
        .problem)
        .clone()
}

fn d(v: f64) -> Scenario {
    newsvendor::demand_scenario(v)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

#[test]
fn recourse_is_zero_at_matching_order() {
    let (v, _) = second_stage_value(&nv(), &[150.0], &d(150.0)).unwrap();
    assert_eq!(v, 0.0);
}

#[test]
fn recourse_values_match_closed_form() {
    let p = nv();
    let (v, u) = second_stage_value(&p, &[100.0], &d(150.0)).unwrap();
    assert!((v - 200_000.0).abs() < 1e-6);
    assert_eq!(u.len(), 1);
    let (v, _) = second_stage_value(&p, &[200.0], &d(100.0)).unwrap();
    assert!((v - 430_000.0).abs() < 1e-6);
    let g = full_objective(&p, &[100.0], &d(150.0)).unwrap();
    assert!((g + 170_000.0).abs() < 1e-6);
    assert_eq!(
        full_objective(&p, &[0.0], &Scenario::new(vec![0.0])).unwrap(),
        0.0
    );
}

#[test]
fn weak_duality_bounds_the_objective() {
    let p = nv();
    // Dual feasible set of the newsvendor recourse is −π ≤ u ≤ p + η.
    for &(z, dem) in &[(10.0, 50.0), (80.0, 20.0), (0.0, 0.0), (33.0, 33.0)] {
        let g = full_objective(&p, &[z], &d(dem)).unwrap();
        for k in 0..=10 {
            let u = -4000.0 + k as f64 * 830.0;
            let bound = p.first_stage_cost[0] * z + (-dem + z) * u;
            assert!(g >= bound - 1e-6, "z={z} D={dem} u={u}");
        }
    }
}

#[test]
fn one_scenario_newsvendor_orders_demand() {
    let (z, obj) =
        one_scenario_solve(&nv(), &d(214.73), UniquenessPerturbation::default()).unwrap();
    assert!((z[0] - 214.73).abs() < 1e-9);
    assert!((obj - (300.0 - 4000.0) * 214.73).abs() < 1e-6);
}

#[test]
fn one_scenario_unreliable_orders_ratio() {
    let p = newsvendor::unreliable(&NewsvendorParams::single_product()).unwrap();
    let s = newsvendor::unreliable_scenario(88.64, 0.41);
    let (z, _) = one_scenario_solve(&p, &s, UniquenessPerturbation::default()).unwrap();
    assert!((z[0] - 88.64 / 0.41).abs() < 1e-6, "{z:?}");
}

#[test]
fn one_scenario_two_products_fill_budget() {
    let inst = newsvendor::TwoProductSetup::default().instance().unwrap();
    let s = inst.scenario(&[347.94, 101.98]);
    let (z, _) = one_scenario_solve(&inst.problem, &s, UniquenessPerturbation::default()).unwrap();
    assert!(
        (z[0] - 198.02).abs() < 1e-6 && (z[1] - 101.98).abs() < 1e-6,
        "{z:?}"
    );
}

#[test]
fn saa_two_point_newsvendor_takes_upper_quantile() {
    let (z, _) = saa_solve(
        &nv(),
        &[d(100.0), d(200.0)],
        &[0.5, 0.5],
        UniquenessPerturbation::NONE,
    )
    .unwrap();
    assert!((z[0] - 200.0).abs() < 1e-9);
}

#[test]
fn saa_single_scenario_matches_one_scenario() {
    let p = nv();
    let pert = UniquenessPerturbation::default();
    let (z1, o1) = saa_solve(&p, &[d(77.0)], &[1.0], pert).unwrap();
    let (z2, o2) = one_scenario_solve(&p, &d(77.0), pert).unwrap();
    assert_eq!(z1, z2);
    assert_eq!(o1, o2);
}

#[test]
fn saa_rejects_bad_weights_and_oversized_forms() {
    let p = nv();
    let pert = UniquenessPerturbation::NONE;
    assert!(matches!(
        saa_solve(&p, &[d(1.0), d(2.0)], &[0.7, 0.7], pert),
        Err(TwoStageError::InvalidWeights(_))
    ));
    let scenarios: Vec<Scenario> = (0..20).map(|k| d(k as f64)).collect();
    let mut ws = Workspace::new(Arc::new(p), pert)
        .unwrap()
        .with_options(SaaOptions {
            method: SaaMethod::ExtensiveForm,
            column_cap: 10,
            ..Default::default()
        });
    assert!(matches!(
        ws.saa(&scenarios, &uniform_weights(20)),
        Err(TwoStageError::SizeLimit { .. })
    ));
}

#[test]
fn dimension_errors() {
    let p = nv();
    assert!(matches!(
        full_objective(&p, &[1.0, 2.0], &d(1.0)),
        Err(TwoStageError::DimensionMismatch(_))
    ));
    assert!(matches!(
        full_objective(&p, &[1.0], &Scenario::new(vec![1.0, 2.0])),
        Err(TwoStageError::DimensionMismatch(_))
    ));
    assert!(matches!(
        construct_optimal_scenario(&p, &[1.0], &[vec![1.0, 2.0]]),
        Err(TwoStageError::DimensionMismatch(_))
    ));
}

#[test]
fn missing_recourse_is_reported() {
    let mut p = nv();
    p.recourse = vec![vec![1.0, 0.0]];
    let r = second_stage_value(&p, &[10.0], &d(20.0));
    assert_eq!(r, Err(TwoStageError::SecondStageInfeasible));
}

#[test]
fn optimal_scenario_for_half_yield() {
    let p = newsvendor::unreliable(&NewsvendorParams::single_product()).unwrap();
    let z_star = 214.73;
    let t_mean = vec![vec![0.0], vec![-0.5]];
    let s = construct_optimal_scenario(&p, &[z_star], &t_mean).unwrap();
    // Summing the two rows gives y⁺ − y⁻ − Ūz = h₁ + h₂, so (0, −Ūz*) and
    // (−Ūz*, 0) describe the same one-scenario problem with D̄ = z*/2.
    assert_eq!(s.h, vec![0.0, -z_star / 2.0]);
    let pert = UniquenessPerturbation::NONE;
    let (z, _) = one_scenario_solve(&p, &s, pert).unwrap();
    assert!((z[0] - z_star).abs() < 1e-9);
    let (z, _) = one_scenario_solve(
        &p,
        &newsvendor::unreliable_scenario(z_star / 2.0, 0.5),
        pert,
    )
    .unwrap();
    assert!((z[0] - z_star).abs() < 1e-9);
}

/// With random `T` the mean-technology scenario is not optimal in general:
/// `E[Q(z, ξ)] = (a+b)z/2` here while `Q(z, ξ*) = 0`.
#[test]
fn random_technology_breaks_the_construction() {
    let p = FrfcProblem {
        name: String::new(),
        first_stage_cost: vec![-1.0],
        constraint_matrix: vec![vec![1.0]],
        constraint_rhs: vec![1.0],
        recourse: vec![vec![1.0, -1.0]],
        second_stage_cost: vec![1.5, 1.5],
        technology: vec![vec![1.0]],
    };
    let scenarios = vec![
        Scenario::with_technology(vec![0.0], vec![vec![1.0]]),
        Scenario::with_technology(vec![0.0], vec![vec![-1.0]]),
    ];
    let w = [0.5, 0.5];
    let (z, obj) = saa_solve(&p, &scenarios, &w, UniquenessPerturbation::NONE).unwrap();
    assert!(z[0].abs() < 1e-12 && obj.abs() < 1e-12);
    let s = construct_optimal_scenario(&p, &z, &mean_technology(&p, &scenarios, &w)).unwrap();
    let (z_hat, _) = one_scenario_solve(&p, &s, UniquenessPerturbation::NONE).unwrap();
    assert!((z_hat[0] - 1.0).abs() < 1e-12);
    let ws_cost = Workspace::new(Arc::new(p), UniquenessPerturbation::NONE)
        .unwrap()
        .expected_cost(&z_hat, &scenarios, &w)
        .unwrap();
    assert!((ws_cost - 0.5).abs() < 1e-12);
}

#[test]
fn zero_mean_technology_gives_zero_scenario() {
    let p = nv();
    let s = construct_optimal_scenario(&p, &[5.0], &[vec![0.0]]).unwrap();
    assert_eq!(s.h, vec![0.0]);
}

#[test]
fn problem_round_trips_through_toml() {
    let inst = newsvendor::TwoProductSetup::default().instance().unwrap();
    let text = inst.problem.to_toml().unwrap();
    let back = FrfcProblem::from_toml(&text).unwrap();
    assert_eq!(back, *inst.problem);
    assert!(FrfcProblem::from_toml("first_stage_cost = [1.0]").is_err());
}

#[test]
fn coupled_scenario_attains_saa_optimum() {
    let inst = newsvendor::coupled(&NewsvendorParams::single_product(), 1e5).unwrap();
    let p = &inst.problem;
    let mut rng = RandomSource::new(11, 0);
    let sample: Vec<Scenario> = (0..40)
        .map(|_| inst.scenario(&[rng.uniform(0.0, 100.0)]))
        .collect();
    let w = uniform_weights(sample.len());
    let (z, obj) = saa_solve(p, &sample, &w, UniquenessPerturbation::NONE).unwrap();
    let s = construct_optimal_scenario(p, &z, &p.technology).unwrap();
    assert!((s.h[0] - s.h[1]).abs() < 1e-12);
    let (z_hat, _) = one_scenario_solve(p, &s, UniquenessPerturbation::NONE).unwrap();
    let at_hat = Workspace::new(p.clone(), UniquenessPerturbation::NONE)
        .unwrap()
        .expected_cost(&z_hat, &sample, &w)
        .unwrap();
    assert!(close(at_hat, obj, 1e-6), "{at_hat} vs {obj}");
}

/// Minimum of the sample objective over a fine grid, an oracle independent
/// of the LP machinery for one-dimensional newsvendors.
fn grid_min(p: &NewsvendorParams, demands: &[f64]) -> f64 {
    let mut cands: Vec<f64> = demands.to_vec();
    cands.push(0.0);
    cands
        .iter()
        .map(|&z| demands.iter().map(|&dv| p.cost(z, dv)).sum::<f64>() / demands.len() as f64)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn decomposition_matches_breakpoint_oracle() {
    let params = NewsvendorParams::single_product();
    let p = nv();
    let mut rng = RandomSource::new(5, 1);
    let demands: Vec<f64> = (0..500).map(|_| rng.uniform(0.0, 100.0)).collect();
    let scenarios: Vec<Scenario> = demands.iter().map(|&v| d(v)).collect();
    let mut ws = Workspace::new(Arc::new(p), UniquenessPerturbation::NONE)
        .unwrap()
        .with_options(SaaOptions {
            method: SaaMethod::Decomposition,
            ..Default::default()
        });
    let sol = ws.saa(&scenarios, &uniform_weights(500)).unwrap();
    assert_eq!(sol.method, SaaMethod::Decomposition);
    let oracle = grid_min(&params, &demands);
    assert!(
        close(sol.objective, oracle, 1e-8),
        "{} vs {oracle}",
        sol.objective
    );
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn optimal_scenario_round_trip(seed in any::<u64>()) {
        let inst = random_instance(&mut RandomSource::new(seed, 0), 5, 6, 20, TechnologyMode::Fixed);
        let p = &inst.problem;
        let (z, _) = saa_solve(p, &inst.scenarios, &inst.weights, UniquenessPerturbation::NONE).unwrap();
        let t_mean = mean_technology(p, &inst.scenarios, &inst.weights);
        let s = construct_optimal_scenario(p, &z, &t_mean).unwrap();
        let (_, best) = one_scenario_solve(p, &s, UniquenessPerturbation::NONE).unwrap();
        let at_z = full_objective(p, &z, &s).unwrap();
        prop_assert!(close(best, at_z, 1e-6), "{} vs {}", best, at_z);

        let pert = UniquenessPerturbation::default();
        let (zp, _) = saa_solve(p, &inst.scenarios, &inst.weights, pert).unwrap();
        let sp = construct_optimal_scenario(p, &zp, &t_mean).unwrap();
        let mut ws = Workspace::new(Arc::new(p.clone()), pert).unwrap();
        let face = ws.one_scenario_face(&sp, 1e-10).unwrap();
        let unique = face.iter().all(|(lo, hi)| hi - lo <= 1e-6 * (1.0 + hi.abs()));
        if unique {
            let zh = ws.one_scenario(&sp).unwrap().z;
            let scale = 1.0 + zp.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let dist = zh.iter().zip(&zp).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            prop_assert!(dist <= 1e-4 * scale, "{:?} vs {:?}", zh, zp);
        }
    }

    #[test]
    fn extensive_form_is_consistent_with_scenario_costs(seed in any::<u64>()) {
        let inst = random_instance(&mut RandomSource::new(seed, 2), 5, 6, 20, TechnologyMode::Random);
        let p = &inst.problem;
        let (z, obj) = saa_solve(p, &inst.scenarios, &inst.weights, UniquenessPerturbation::NONE).unwrap();
        let mut total = 0.0;
        for (s, w) in inst.scenarios.iter().zip(&inst.weights) {
            total += w * full_objective(p, &z, s).unwrap();
        }
        prop_assert!(close(total, obj, 1e-8), "{} vs {}", total, obj);
    }

    #[test]
    fn decomposition_agrees_with_extensive_form(seed in any::<u64>(), perturb in any::<bool>()) {
        let inst = random_instance(&mut RandomSource::new(seed, 3), 5, 6, 20, TechnologyMode::Random);
        let pert = if perturb { UniquenessPerturbation::default() } else { UniquenessPerturbation::NONE };
        let problem = Arc::new(inst.problem.clone());
        let mut ext = Workspace::new(problem.clone(), pert).unwrap()
            .with_options(SaaOptions { method: SaaMethod::ExtensiveForm, ..Default::default() });
        let mut dec = Workspace::new(problem, pert).unwrap()
            .with_options(SaaOptions { method: SaaMethod::Decomposition, ..Default::default() });
        let a = ext.saa(&inst.scenarios, &inst.weights).unwrap();
        let b = dec.saa(&inst.scenarios, &inst.weights).unwrap();
        prop_assert!(close(a.objective, b.objective, 1e-7), "{} vs {}", a.objective, b.objective);
        prop_assert!(inst.problem.first_stage_violation(&b.z) <= 1e-7);
    }

    #[test]
    fn decomposition_start_does_not_change_the_optimum(
        seed in any::<u64>(),
        start in prop::collection::vec(0.0f64..5.0, 5),
    ) {
        let inst = random_instance(&mut RandomSource::new(seed, 4), 5, 6, 20, TechnologyMode::Random);
        let mut ws = Workspace::new(Arc::new(inst.problem.clone()), UniquenessPerturbation::NONE).unwrap()
            .with_options(SaaOptions { method: SaaMethod::Decomposition, ..Default::default() });
        let cold = ws.saa(&inst.scenarios, &inst.weights).unwrap();
        let n = inst.problem.n_first();
        // An infeasible start falls back to the default one.
        let warm = ws.saa_from(&inst.scenarios, &inst.weights, Some(&start[..n])).unwrap();
        prop_assert!(close(cold.objective, warm.objective, 1e-7), "{} vs {}", cold.objective, warm.objective);
        prop_assert!(inst.problem.first_stage_violation(&warm.z) <= 1e-7);
    }
}
