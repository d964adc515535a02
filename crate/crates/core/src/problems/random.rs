use crate::numerics::RandomSource;
use crate::two_stage::{FrfcProblem, Scenario};

/// How the technology matrix varies across scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TechnologyMode {
    Fixed,
    Random,
    /// Random per scenario with probability-weighted mean exactly zero.
    ZeroMean,
}

/// A small random instance with discrete scenarios and probabilities.
#[derive(Debug, Clone)]
pub struct RandomInstance {
    pub problem: FrfcProblem,
    pub scenarios: Vec<Scenario>,
    pub weights: Vec<f64>,
}

/// Random instance with `n ≤ max_n` first-stage variables, `m ≤ max_m` rows
/// and at most `max_scenarios` scenarios.
///
/// `W = [I, −I, R]` with positive costs gives complete and bounded recourse;
/// `Z` is a box intersected with a random packing row.
pub fn random_instance(
    rng: &mut RandomSource,
    max_n: usize,
    max_m: usize,
    max_scenarios: usize,
    mode: TechnologyMode,
) -> RandomInstance {
    let n = 1 + rng.index(max_n);
    let m = 1 + rng.index(max_m);
    let extra = rng.index(3);
    let k = if mode == TechnologyMode::ZeroMean {
        2 + rng.index(max_scenarios.max(2) - 1)
    } else {
        1 + rng.index(max_scenarios)
    };

    let ny = 2 * m + extra;
    let mut recourse = vec![vec![0.0; ny]; m];
    for (i, row) in recourse.iter_mut().enumerate() {
        row[i] = 1.0;
        row[m + i] = -1.0;
        for v in &mut row[2 * m..] {
            *v = rng.uniform(-2.0, 2.0);
        }
    }
    let second_stage_cost = (0..ny).map(|_| rng.uniform(0.5, 10.0)).collect();
    let first_stage_cost = (0..n).map(|_| rng.uniform(-10.0, 10.0)).collect();

    let mut constraint_matrix = Vec::new();
    let mut constraint_rhs = Vec::new();
    for i in 0..n {
        let mut row = vec![0.0; n];
        row[i] = 1.0;
        constraint_matrix.push(row);
        constraint_rhs.push(rng.uniform(2.0, 20.0));
    }
    constraint_matrix.push((0..n).map(|_| rng.uniform(0.0, 1.0)).collect());
    constraint_rhs.push(rng.uniform(5.0, 30.0));

    let random_t = |rng: &mut RandomSource| -> Vec<Vec<f64>> {
        (0..m)
            .map(|_| (0..n).map(|_| rng.uniform(-2.0, 2.0)).collect())
            .collect()
    };
    let technology = random_t(rng);

    let raw: Vec<f64> = (0..k).map(|_| rng.uniform(0.1, 1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();

    let mut overrides: Vec<Option<Vec<Vec<f64>>>> = match mode {
        TechnologyMode::Fixed => vec![None; k],
        TechnologyMode::Random | TechnologyMode::ZeroMean => {
            (0..k).map(|_| Some(random_t(rng))).collect()
        }
    };
    if mode == TechnologyMode::ZeroMean {
        let mut mean = vec![vec![0.0; n]; m];
        for (t, &w) in overrides.iter().zip(&weights) {
            for (acc, row) in mean.iter_mut().zip(t.as_ref().unwrap()) {
                for (a, v) in acc.iter_mut().zip(row) {
                    *a += w * v;
                }
            }
        }
        for t in overrides.iter_mut().flatten() {
            for (row, mrow) in t.iter_mut().zip(&mean) {
                for (v, mv) in row.iter_mut().zip(mrow) {
                    *v -= mv;
                }
            }
        }
    }

    let scenarios = overrides
        .into_iter()
        .map(|t| {
            let h = (0..m).map(|_| rng.uniform(-10.0, 10.0)).collect();
            Scenario { h, t_override: t }
        })
        .collect();

    RandomInstance {
        problem: FrfcProblem {
            name: "random".into(),
            first_stage_cost,
            constraint_matrix,
            constraint_rhs,
            recourse,
            second_stage_cost,
            technology,
        },
        scenarios,
        weights,
    }
}
