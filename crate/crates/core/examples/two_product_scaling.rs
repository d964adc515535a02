//! Scenario search against the SAA solve on the budgeted two-product
//! newsvendor for growing sample sizes.

use frfc::numerics::RandomSource;
use frfc::problems::newsvendor::{MultiProductModel, TwoProductSetup};
use frfc::scenario_search::{scaling_report, ScenarioSpace, SearchConfig};
use frfc::two_stage::UniquenessPerturbation;

fn main() {
    let setup = TwoProductSetup::default();
    let inst = setup.instance().unwrap();
    let mut ws = inst.workspace(UniquenessPerturbation::NONE).unwrap();
    let mut model = MultiProductModel {
        products: setup.products.to_vec(),
        budget: setup.budget,
    };
    let report = scaling_report(
        &mut ws,
        &mut model,
        ScenarioSpace::Rhs,
        &[100, 1000, 5000],
        |rng, n| setup.sample(rng, n),
        &SearchConfig::default(),
        &mut RandomSource::new(3, 0),
    )
    .unwrap();
    println!("{}", report.header().join("  "));
    for r in &report.rows {
        println!(
            "{:>5}  {:.4}s  {:.4}s  z_search {:?}  z_lp {:?}  gap {:.1e}",
            r.n, r.search_seconds, r.lp_seconds, r.z_search, r.z_lp, r.rel_obj_gap
        );
    }
    println!("LP time grows faster: {:?}", report.lp_grows_faster);
}
