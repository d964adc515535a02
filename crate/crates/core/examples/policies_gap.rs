//! Fits every policy on a small shipment dataset and estimates the
//! optimality gap bound B̂₉₉ at a handful of covariates.

use frfc::evaluation::{estimate_gaps, Evaluated, GapConfig};
use frfc::forecasters::TreeHyper;
use frfc::numerics::RandomSource;
use frfc::policies::{fit_policy, PolicyHyper, PolicyKind};
use frfc::problems::{build_shipment, ShipmentParams, SyntheticGenerator};

fn main() {
    let seed = 11;
    let inst = build_shipment(&ShipmentParams::default_sized(&mut RandomSource::new(
        seed, 1,
    )))
    .unwrap();
    let g = SyntheticGenerator::new(inst.map.xi_dim, 3, 1.0, seed).unwrap();
    let train = g.gen_dataset(&mut RandomSource::new(seed, 2), 300).unwrap();

    let mut hyper = PolicyHyper::default();
    hyper.tree = TreeHyper {
        min_leaf: 25,
        max_depth: 1000,
    };
    hyper.ad.max_params = 128;
    let policies: Vec<_> = PolicyKind::ALL
        .iter()
        .map(|&k| fit_policy(k, &inst, &train, &hyper).unwrap())
        .collect();
    let mut rules: Vec<Evaluated<'_>> = policies.iter().map(Evaluated::Policy).collect();
    rules.push(Evaluated::SelfOracle);

    let config = GapConfig {
        conditional_samples: 200,
        replications: 10,
        covariates: 5,
        seed,
        ..GapConfig::default()
    };
    let report = estimate_gaps(&rules, &inst, &g, &config).unwrap();
    for r in &rules {
        let name = r.name();
        println!(
            "{name:>12}  median B99 = {:.3}%",
            report.median_b99_pct(&name).unwrap()
        );
    }
}
