//! A newsvendor with the extra soft row `z ≥ 2D`. Demands enter both rows
//! as `[−D, −2D]`, yet the optimal scenario `[−z*, −z*]` lies outside that
//! family and still induces the SAA plan.

use frfc::numerics::RandomSource;
use frfc::problems::newsvendor::{coupled, NewsvendorParams};
use frfc::two_stage::{
    construct_optimal_scenario, one_scenario_solve, saa_solve, uniform_weights,
    UniquenessPerturbation, Workspace,
};

fn main() {
    let inst = coupled(&NewsvendorParams::single_product(), 1e5).unwrap();
    let p = &inst.problem;
    let mut rng = RandomSource::new(6, 0);
    let sample: Vec<_> = (0..1000)
        .map(|_| inst.scenario(&[rng.uniform(0.0, 100.0)]))
        .collect();
    let w = uniform_weights(sample.len());
    let none = UniquenessPerturbation::NONE;
    let (z, obj) = saa_solve(p, &sample, &w, none).unwrap();
    let s = construct_optimal_scenario(p, &z, &p.technology).unwrap();
    let (z_hat, _) = one_scenario_solve(p, &s, none).unwrap();
    let at_hat = Workspace::new(p.clone(), none)
        .unwrap()
        .expected_cost(&z_hat, &sample, &w)
        .unwrap();
    println!("SAA z* = {:.4}, objective {obj:.4}", z[0]);
    println!("h* = {:?}", s.h);
    println!("one-scenario plan {:.4}, sample cost {at_hat:.4}", z_hat[0]);
}
