use proptest::prelude::*;

use super::*;
use crate::problems::newsvendor::*;
use crate::problems::{random_instance, TechnologyMode};
use crate::two_stage::{uniform_weights, Instance, UniquenessPerturbation};

#[test]
fn unreliable_space_round_trips() {
    let space = ScenarioSpace::UnreliableSupplier;
    let s = unreliable_scenario(88.64, 0.41);
    assert_eq!(space.encode(&s), vec![88.64, 0.41]);
    assert_eq!(space.decode(&[88.64, 0.41]), Some(s));
    assert_eq!(space.decode(&[10.0, 0.0]), None);
    assert_eq!(space.decode(&[10.0, -0.2]), None);
}

#[test]
fn empty_sample_is_rejected() {
    let mut model = NewsvendorModel(NewsvendorParams::single_product());
    let r = find_optimal_scenario(
        &mut model,
        ScenarioSpace::Rhs,
        &[],
        &SearchConfig::default(),
        &mut RandomSource::new(0, 0),
    );
    assert_eq!(r, Err(SearchError::NoSamples));
}

#[test]
fn identical_samples_are_their_own_optimal_scenario() {
    let setup = TwoProductSetup::default();
    let inst = setup.instance().unwrap();
    let mut ws = inst.workspace(UniquenessPerturbation::default()).unwrap();
    let xi = Scenario::new(vec![-250.0, -90.0]);
    let samples = vec![xi.clone(); 7];
    let r = find_optimal_scenario(
        &mut ws,
        ScenarioSpace::Rhs,
        &samples,
        &SearchConfig::default(),
        &mut RandomSource::new(0, 0),
    )
    .unwrap();
    let z = ws.plan(&xi).unwrap();
    let g = ws.cost(&z, &xi).unwrap();
    assert!((r.sample_cost - g).abs() <= 1e-6 * (1.0 + g.abs()));
}

#[test]
fn unreliable_supplier_search_matches_saa() {
    let nv = NewsvendorParams::single_product();
    let mut rng = RandomSource::new(11, 0);
    let samples = sample_unreliable(&nv, &mut rng, 1000);
    let mut model = UnreliableModel(nv);
    let r = find_optimal_scenario(
        &mut model,
        ScenarioSpace::UnreliableSupplier,
        &samples,
        &SearchConfig::default(),
        &mut rng,
    )
    .unwrap();
    let (d, u) = unreliable_demand_yield(&r.scenario);
    assert!((r.induced_z[0] - d / u).abs() < 1e-9);
    assert!(
        (208.74..=221.07).contains(&r.induced_z[0]),
        "{}",
        r.induced_z[0]
    );
    let mut ws = Workspace::new(
        unreliable(&nv).unwrap().into(),
        UniquenessPerturbation::NONE,
    )
    .unwrap();
    let saa = ws.saa(&samples, &uniform_weights(1000)).unwrap();
    assert!(r.sample_cost >= saa.objective - 1e-6 * (1.0 + saa.objective.abs()));
    assert!(
        r.sample_cost - saa.objective <= 1e-3 * saa.objective.abs(),
        "{} vs {}",
        r.sample_cost,
        saa.objective
    );
    assert!(r.sample_cost <= r.start_cost);
}

#[test]
fn two_product_search_matches_saa() {
    let setup = TwoProductSetup::default();
    let mut rng = RandomSource::new(5, 0);
    let samples = setup.sample(&mut rng, 1000);
    let mut model = MultiProductModel {
        products: setup.products.to_vec(),
        budget: setup.budget,
    };
    let r = find_optimal_scenario(
        &mut model,
        ScenarioSpace::Rhs,
        &samples,
        &SearchConfig::default(),
        &mut rng,
    )
    .unwrap();
    let inst = setup.instance().unwrap();
    let mut ws = inst.workspace(UniquenessPerturbation::NONE).unwrap();
    let saa = ws.saa(&samples, &uniform_weights(1000)).unwrap();
    let gap = (r.sample_cost - saa.objective) / saa.objective.abs();
    assert!(
        (-1e-9..=1e-3).contains(&gap),
        "gap {gap}: {:?} vs {:?}",
        r.induced_z,
        saa.z
    );
    assert!((r.induced_z[0] + r.induced_z[1] - 300.0).abs() < 1e-6);
}

#[test]
fn scaling_report_rows() {
    let setup = TwoProductSetup::default();
    let inst = setup.instance().unwrap();
    let mut ws = inst.workspace(UniquenessPerturbation::NONE).unwrap();
    let mut model = MultiProductModel {
        products: setup.products.to_vec(),
        budget: setup.budget,
    };
    let mut rng = RandomSource::new(3, 0);
    let report = scaling_report(
        &mut ws,
        &mut model,
        ScenarioSpace::Rhs,
        &[1, 100],
        |r, n| setup.sample(r, n),
        &SearchConfig::default(),
        &mut rng,
    )
    .unwrap();
    assert_eq!(report.rows.len(), 2);
    let one = &report.rows[0];
    assert!(one.rel_obj_gap.abs() < 1e-9, "{one:?}");
    assert!(report.rows[1].rel_obj_gap <= 1e-3);
    assert!(report.lp_grows_faster.is_some());
    assert_eq!(
        report.header(),
        [
            "N",
            "t_search_s",
            "t_lp_s",
            "z_search_1",
            "z_search_2",
            "z_lp_1",
            "z_lp_2",
            "rel_obj_gap"
        ]
    );
    assert_eq!(report.records()[0][0], "1");
    let bad = scaling_report(
        &mut ws,
        &mut model,
        ScenarioSpace::Rhs,
        &[10, 5],
        |r, n| setup.sample(r, n),
        &SearchConfig::default(),
        &mut rng,
    );
    assert_eq!(bad, Err(SearchError::InvalidSizes));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn search_is_bracketed_by_mean_scenario_and_saa(seed in 0u64..10_000) {
        let mut rng = RandomSource::new(seed, 7);
        let inst = random_instance(&mut rng, 3, 3, 8, TechnologyMode::Fixed);
        let instance = Instance::new(inst.problem.clone(), crate::two_stage::ScenarioMap::on_rows(inst.problem.scenario_dim(), &[], 0.0)).unwrap();
        let mut ws = instance.workspace(UniquenessPerturbation::NONE).unwrap();
        let n = inst.scenarios.len();
        let r = find_optimal_scenario(&mut ws, ScenarioSpace::Rhs, &inst.scenarios, &SearchConfig::default(), &mut rng).unwrap();
        let recomputed = sample_cost(&mut ws, &r.induced_z, &inst.scenarios).unwrap();
        prop_assert!((recomputed - r.sample_cost).abs() <= 1e-9 * (1.0 + recomputed.abs()));
        prop_assert!(r.sample_cost <= r.start_cost + 1e-12);
        let saa = ws.saa(&inst.scenarios, &uniform_weights(n)).unwrap();
        prop_assert!(r.sample_cost >= saa.objective - 1e-6 * (1.0 + saa.objective.abs()));
    }
}
