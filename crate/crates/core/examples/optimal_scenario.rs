//! The optimal scenario `(T̄, T̄z*)`: its one-scenario problem recovers the
//! SAA solution when T is fixed. With random T the construction can fail,
//! as the two-point counterexample shows.

use frfc::numerics::RandomSource;
use frfc::problems::{random_instance, TechnologyMode};
use frfc::two_stage::{
    construct_optimal_scenario, full_objective, mean_technology, one_scenario_solve, saa_solve,
    FrfcProblem, Scenario, UniquenessPerturbation,
};

fn main() {
    let pert = UniquenessPerturbation::default();
    let inst = random_instance(
        &mut RandomSource::new(5, 0),
        5,
        6,
        20,
        TechnologyMode::Fixed,
    );
    let p = &inst.problem;
    let (z_star, obj) = saa_solve(p, &inst.scenarios, &inst.weights, pert).unwrap();
    let s = construct_optimal_scenario(
        p,
        &z_star,
        &mean_technology(p, &inst.scenarios, &inst.weights),
    )
    .unwrap();
    let (z_hat, _) = one_scenario_solve(p, &s, pert).unwrap();
    println!("{} scenarios, SAA objective {obj:.4}", inst.scenarios.len());
    println!("z*  = {z_star:?}");
    println!("ẑ   = {z_hat:?}");
    println!("h*  = {:?}", s.h);

    // Z = [0, 1], c = −1, W = [1, −1], q = (1.5, 1.5), T = ±1.
    let p = FrfcProblem {
        name: "random-technology".into(),
        first_stage_cost: vec![-1.0],
        constraint_matrix: vec![vec![1.0]],
        constraint_rhs: vec![1.0],
        recourse: vec![vec![1.0, -1.0]],
        second_stage_cost: vec![1.5, 1.5],
        technology: vec![vec![1.0]],
    };
    let scen = vec![
        Scenario::with_technology(vec![0.0], vec![vec![1.0]]),
        Scenario::with_technology(vec![0.0], vec![vec![-1.0]]),
    ];
    let w = [0.5, 0.5];
    let none = UniquenessPerturbation::NONE;
    let (z, obj) = saa_solve(&p, &scen, &w, none).unwrap();
    let s = construct_optimal_scenario(&p, &z, &mean_technology(&p, &scen, &w)).unwrap();
    let (z_hat, _) = one_scenario_solve(&p, &s, none).unwrap();
    let cost: f64 = scen
        .iter()
        .zip(w)
        .map(|(s, w)| w * full_objective(&p, &z_hat, s).unwrap())
        .sum();
    println!("random T: SAA z = {z:?} (cost {obj}), optimal-scenario plan {z_hat:?} (cost {cost})");
}
