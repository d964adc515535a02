//! Application-driven training. A constant forecast trained on newsvendor
//! costs lands on the critical quantile instead of the mean. An affine
//! forecast for the shipment problem is then trained from its least
//! squares start and its log is printed as CSV.

use frfc::ad_training::{meta_train, AdConfig, BilevelProblem, Family};
use frfc::numerics::RandomSource;
use frfc::problems::newsvendor::NewsvendorModel;
use frfc::problems::{
    build_shipment, NewsvendorParams, Observation, ShipmentParams, SyntheticGenerator,
};
use frfc::report::Provenance;
use frfc::two_stage::{ScenarioMap, UniquenessPerturbation};

fn main() {
    let nv = NewsvendorParams::single_product();
    let mut rng = RandomSource::new(7, 0);
    let data: Vec<Observation> = (0..5000)
        .map(|_| Observation {
            x: vec![],
            xi: vec![rng.uniform(0.0, nv.b)],
        })
        .collect();
    let map = ScenarioMap::on_rows(1, &[0], -1.0);
    let mut model = NewsvendorModel(nv);
    let mut problem = BilevelProblem::new(&mut model, &map, &data);
    let run = meta_train(&mut problem, Family::Constant, &AdConfig::default()).unwrap();
    let mean = data.iter().map(|o| o.xi[0]).sum::<f64>() / data.len() as f64;
    let at_mean = problem.cost_with(|_| Some(vec![mean]));
    println!(
        "AD forecast {:.2} (critical quantile {:.2}), cost {:.1} vs {:.1} at the mean {:.2}",
        run.theta_star[0],
        nv.b * nv.critical_ratio(),
        run.final_cost,
        at_mean,
        mean
    );

    let inst = build_shipment(&ShipmentParams::default_sized(&mut RandomSource::new(
        11, 1,
    )))
    .unwrap();
    let g = SyntheticGenerator::new(inst.map.xi_dim, 3, 1.0, 11).unwrap();
    let train = g.gen_dataset(&mut RandomSource::new(11, 2), 200).unwrap();
    let mut ws = inst.workspace(UniquenessPerturbation::default()).unwrap();
    let mut problem = BilevelProblem::new(&mut ws, &inst.map, &train);
    let config = AdConfig {
        max_params: 128,
        ..AdConfig::default()
    };
    let run = meta_train(&mut problem, Family::Affine, &config).unwrap();
    println!(
        "shipment: {} parameters, cost {:.2} -> {:.2} in {} evaluations ({} inner solves)",
        run.theta_star.len(),
        run.start_cost,
        run.final_cost,
        run.evaluations,
        run.inner_solves
    );
    let stride = (run.cost_trace.len() / 10).max(1);
    let mut log = Vec::new();
    run.write_log(&mut log, &Provenance::new("ad_training example"))
        .unwrap();
    for (i, line) in String::from_utf8(log).unwrap().lines().enumerate() {
        if i < 4 || i % stride == 0 {
            println!("{line}");
        }
    }
}
