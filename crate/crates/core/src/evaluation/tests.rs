use super::*;
use crate::ad_training::bilevel_cost;
use crate::forecasters::TreeHyper;
use crate::problems::newsvendor::{standard, NewsvendorParams, TwoProductSetup};
use crate::problems::{build_shipment, ShipmentParams};
use crate::two_stage::{FrfcProblem, ScenarioMap};

fn small_config(seed: u64) -> GapConfig {
    GapConfig {
        conditional_samples: 200,
        replications: 8,
        covariates: 4,
        confidence: 0.99,
        seed,
    }
}

fn shipment() -> (Instance, SyntheticGenerator) {
    let inst = build_shipment(&ShipmentParams::random(2, 3, &mut RandomSource::new(5, 0))).unwrap();
    (inst, SyntheticGenerator::new(3, 3, 1.0, 6).unwrap())
}

fn quick_hyper() -> PolicyHyper {
    let mut h = PolicyHyper::default();
    h.tree = TreeHyper {
        min_leaf: 25,
        max_depth: 2,
    };
    h.ad.nelder_mead.max_evaluations = Some(400);
    h
}

#[test]
fn t_quantile_for_thirty_replications() {
    let t = GapConfig::default().t_quantile();
    assert!((t - 2.462).abs() < 1e-3, "{t}");
}

#[test]
fn invalid_settings_are_rejected() {
    let (inst, g) = shipment();
    let mut c = small_config(0);
    c.replications = 1;
    assert!(estimate_gaps(&[Evaluated::SelfOracle], &inst, &g, &c).is_err());
    assert!(estimate_gaps(&[], &inst, &g, &small_config(0)).is_err());
}

#[test]
fn self_oracle_has_zero_gap() {
    let (inst, g) = shipment();
    let r = estimate_gaps(&[Evaluated::SelfOracle], &inst, &g, &small_config(1)).unwrap();
    assert!(r.error.is_none());
    assert_eq!(r.summaries.len(), 4);
    assert!(r.summaries.iter().all(|s| s.b99 == 0.0));
}

#[test]
fn independent_oracle_gap_is_small_and_nonnegative() {
    let (inst, g) = shipment();
    let r = estimate_gaps(&[Evaluated::IndependentOracle], &inst, &g, &small_config(2)).unwrap();
    for s in &r.summaries {
        assert!(s.b99_pct < 2.0, "{s:?}");
        assert!(s.mean_gap >= -3.0 * s.sd_gap / 8f64.sqrt(), "{s:?}");
    }
}

#[test]
fn replications_do_not_depend_on_order() {
    let (inst, g) = shipment();
    let cfg = small_config(3);
    let mut ws = inst.workspace(UniquenessPerturbation::default()).unwrap();
    let x = vec![0.5, 0.5, 0.5];
    let z = Some(vec![60.0, 40.0]);
    let forward: Vec<_> = (0..4)
        .map(|r| evaluate_replication(&mut ws, &inst, &g, &x, &[z.clone()], &cfg, 0, r).unwrap())
        .collect();
    let mut backward: Vec<_> = (0..4)
        .rev()
        .map(|r| evaluate_replication(&mut ws, &inst, &g, &x, &[z.clone()], &cfg, 0, r).unwrap())
        .collect();
    backward.reverse();
    assert_eq!(forward, backward);
    assert_ne!(forward[0], forward[1]);
}

/// Adds a column forced to one by an extra row, so every second-stage value
/// grows by `shift`.
fn shifted(inst: &Instance, shift: f64) -> Instance {
    let p = &inst.problem;
    let mut recourse: Vec<Vec<f64>> = p
        .recourse
        .iter()
        .map(|r| r.iter().copied().chain([0.0]).collect())
        .collect();
    let mut extra = vec![0.0; p.n_second() + 1];
    extra[p.n_second()] = 1.0;
    recourse.push(extra);
    let mut technology = p.technology.clone();
    technology.push(vec![0.0; p.n_first()]);
    let mut q = p.second_stage_cost.clone();
    q.push(shift);
    let problem = FrfcProblem {
        recourse,
        technology,
        second_stage_cost: q,
        ..(**p).clone()
    };
    let mut base = inst.map.base.clone();
    base.push(1.0);
    Instance::new(
        problem,
        ScenarioMap {
            base,
            terms: inst.map.terms.clone(),
            xi_dim: inst.map.xi_dim,
        },
    )
    .unwrap()
}

#[test]
fn constant_cost_shift_leaves_absolute_gaps_unchanged() {
    let (inst, g) = shipment();
    let moved = shifted(&inst, 1000.0);
    let cfg = small_config(4);
    let z = vec![Some(vec![70.0, 10.0])];
    let mut ws = inst.workspace(UniquenessPerturbation::default()).unwrap();
    let mut ws2 = moved.workspace(UniquenessPerturbation::default()).unwrap();
    let x = [0.2, 1.0, 0.4];
    for r in 0..3 {
        let (c1, o1) = evaluate_replication(&mut ws, &inst, &g, &x, &z, &cfg, 0, r).unwrap();
        let (c2, o2) = evaluate_replication(&mut ws2, &moved, &g, &x, &z, &cfg, 0, r).unwrap();
        assert!((o2 - o1 - 1000.0).abs() < 1e-6);
        assert!(((c2[0] - o2) - (c1[0] - o1)).abs() < 1e-6);
    }
}

#[test]
fn reports_are_reproducible() {
    let (inst, g) = shipment();
    let data = g.gen_dataset(&mut RandomSource::new(1, 0), 100).unwrap();
    let p = fit_policy(PolicyKind::Ls, &inst, &data, &quick_hyper()).unwrap();
    let write = || {
        let r = estimate_gap(&p, &g, &small_config(5)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf, &Provenance::new("test").with("seed", 5))
            .unwrap();
        String::from_utf8(buf).unwrap()
    };
    let a = write();
    assert_eq!(a, write());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[3],
        "covariate_index,replication,policy,policy_cost,cond_opt,gap_pct,B99_pct"
    );
    assert_eq!(lines.len(), 4 + 4 * 8);
    assert!(lines[4].starts_with("0,0,LS,"));
}

#[test]
fn contextual_policies_beat_saa_on_strong_dependence() {
    let inst = TwoProductSetup::default().instance().unwrap();
    let g = SyntheticGenerator::new(2, 3, 1.0, 12).unwrap();
    let data = g.gen_dataset(&mut RandomSource::new(2, 0), 300).unwrap();
    let saa = fit_policy(PolicyKind::Saa, &inst, &data, &quick_hyper()).unwrap();
    let ad = fit_policy(PolicyKind::Ad, &inst, &data, &quick_hyper()).unwrap();
    let r = estimate_gaps(
        &[Evaluated::Policy(&saa), Evaluated::Policy(&ad)],
        &inst,
        &g,
        &small_config(6),
    )
    .unwrap();
    let (s, a) = (
        r.median_b99_pct("SAA").unwrap(),
        r.median_b99_pct("AD").unwrap(),
    );
    assert!(s > a, "SAA {s} vs AD {a}");
}

#[test]
fn duplicate_policies_give_identical_columns() {
    let (inst, g) = shipment();
    let data = g.gen_dataset(&mut RandomSource::new(3, 0), 60).unwrap();
    let rows = out_of_sample_costs(
        &[PolicyKind::Cart, PolicyKind::Cart],
        &inst,
        &data,
        &quick_hyper(),
        Holdout::Fraction(0.8),
        2,
        &mut RandomSource::new(1, 0),
    )
    .unwrap();
    assert_eq!(rows[0], rows[1]);
    assert_eq!(rows[0].costs.len(), 2);
    assert!(out_of_sample_costs(
        &[PolicyKind::Ls],
        &inst,
        &data,
        &quick_hyper(),
        Holdout::Fraction(1.0),
        1,
        &mut RandomSource::new(1, 0)
    )
    .is_err());
}

#[test]
fn identity_split_reproduces_the_training_cost() {
    let nv = NewsvendorParams::single_product();
    let inst = standard(&nv).unwrap();
    let mut rng = RandomSource::new(4, 0);
    let data: Vec<Observation> = (0..80)
        .map(|_| {
            let x = rng.uniform(0.0, 2.0);
            Observation {
                x: vec![x],
                xi: vec![20.0 + 15.0 * x + rng.uniform(0.0, 30.0)],
            }
        })
        .collect();
    let h = quick_hyper();
    let rows = out_of_sample_costs(
        &[PolicyKind::Ad],
        &inst,
        &data,
        &h,
        Holdout::Identity,
        1,
        &mut rng,
    )
    .unwrap();
    let p = fit_policy(PolicyKind::Ad, &inst, &data, &h).unwrap();
    let mut ws = inst.workspace(h.perturbation).unwrap();
    let cost = bilevel_cost(&mut ws, &inst.map, &data, p.forecaster().unwrap());
    assert!(
        (rows[0].mean - cost).abs() <= 1e-9 * cost.abs(),
        "{} vs {cost}",
        rows[0].mean
    );
}

#[test]
fn ad_beats_ls_under_asymmetric_costs() {
    let nv = NewsvendorParams::single_product();
    let inst = standard(&nv).unwrap();
    let mut rng = RandomSource::new(6, 0);
    let data: Vec<Observation> = (0..400)
        .map(|_| {
            let x = rng.uniform(0.0, 2.0);
            Observation {
                x: vec![x],
                xi: vec![20.0 + 15.0 * x + rng.uniform(0.0, 30.0)],
            }
        })
        .collect();
    let rows = out_of_sample_costs(
        &[PolicyKind::Ad, PolicyKind::Ls],
        &inst,
        &data,
        &quick_hyper(),
        Holdout::Fraction(0.8),
        3,
        &mut rng,
    )
    .unwrap();
    assert!(rows[0].mean <= rows[1].mean, "{rows:?}");
}
