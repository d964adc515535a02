//! The unreliable-supplier newsvendor: closed-form optimum, optimal
//! scenario search over (D, U) and the SAA solution on the same samples.

use std::sync::Arc;

use frfc::numerics::RandomSource;
use frfc::problems::newsvendor::{
    analytical_unreliable_optimum, sample_unreliable, unreliable, unreliable_demand_yield,
    NewsvendorParams, UnreliableModel,
};
use frfc::scenario_search::{find_optimal_scenario, ScenarioSpace, SearchConfig};
use frfc::two_stage::{uniform_weights, UniquenessPerturbation, Workspace};

fn main() {
    let nv = NewsvendorParams::single_product();
    let phi = nv.critical_ratio();
    let z_exact = analytical_unreliable_optimum(phi, nv.b).unwrap();
    println!("critical ratio {phi:.5}, analytical optimum {z_exact:.2}");

    let problem = Arc::new(unreliable(&nv).unwrap());
    let mut ws = Workspace::new(problem, UniquenessPerturbation::NONE).unwrap();
    let mut rng = RandomSource::new(7, 0);
    println!(
        "{:>5} {:>8} {:>6} {:>8} {:>8}",
        "rep", "D*", "U*", "D*/U*", "SAA"
    );
    for r in 0..5 {
        let samples = sample_unreliable(&nv, &mut rng, 1000);
        let mut model = UnreliableModel(nv);
        let found = find_optimal_scenario(
            &mut model,
            ScenarioSpace::UnreliableSupplier,
            &samples,
            &SearchConfig::default(),
            &mut rng,
        )
        .unwrap();
        let saa = ws.saa(&samples, &uniform_weights(samples.len())).unwrap();
        let (d, u) = unreliable_demand_yield(&found.scenario);
        println!("{r:>5} {d:>8.2} {u:>6.3} {:>8.2} {:>8.2}", d / u, saa.z[0]);
    }
}
