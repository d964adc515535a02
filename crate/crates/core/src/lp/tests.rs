use super::*;
use proptest::prelude::*;

fn assert_certificates(lp: &LinearProgram, sol: &LpSolution) {
    assert!(sol.is_optimal());
    let feas = FEAS_TOL * (1.0 + lp.rhs_norm());
    assert!(
        lp.max_residual(&sol.primal) <= feas,
        "residual {}",
        lp.max_residual(&sol.primal)
    );
    let dual = sol.dual_objective(lp);
    assert!(
        (sol.objective - dual).abs() <= GAP_TOL * (1.0 + sol.objective.abs()),
        "primal {} dual {}",
        sol.objective,
        dual
    );
    for (i, (row, &b)) in lp.le_matrix.iter().zip(&lp.le_rhs).enumerate() {
        let slack = b - dot(row, &sol.primal);
        assert!(sol.duals_ineq[i] <= 1e-9);
        assert!((slack * sol.duals_ineq[i]).abs() <= 1e-6 * (1.0 + b.abs()));
    }
}

#[test]
fn single_variable_lower_bound() {
    let mut lp = LinearProgram::new(vec![1.0]);
    lp.add_ge(vec![1.0], 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.primal[0] - 1.0).abs() < 1e-12);
    assert!((sol.objective - 1.0).abs() < 1e-12);
    assert_certificates(&lp, &sol);
}

#[test]
fn newsvendor_recourse_at_matching_order_is_free() {
    // y+ - y- = z - D with z = D.
    let mut lp = LinearProgram::new(vec![4300.0, 4000.0]);
    lp.add_eq(vec![1.0, -1.0], 0.0);
    let sol = solve_lp(&lp).unwrap();
    assert_eq!(sol.primal, vec![0.0, 0.0]);
    assert_eq!(sol.objective, 0.0);
}

#[test]
fn unbounded_ray_detected() {
    let lp = LinearProgram::new(vec![-1.0]);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
}

#[test]
fn infeasible_rows_detected() {
    let mut lp = LinearProgram::new(vec![1.0, 1.0]);
    lp.add_eq(vec![1.0, 1.0], 1.0);
    lp.add_eq(vec![1.0, 1.0], 2.0);
    assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
}

#[test]
fn shape_errors() {
    let mut lp = LinearProgram::new(vec![1.0, 1.0]);
    lp.add_eq(vec![1.0], 1.0);
    assert!(matches!(solve_lp(&lp), Err(LpError::DimensionMismatch(_))));
    let mut lp = LinearProgram::new(vec![f64::NAN]);
    lp.add_eq(vec![1.0], 1.0);
    assert!(matches!(solve_lp(&lp), Err(LpError::NonFinite(_))));
}

#[test]
fn free_variables_and_shifted_bounds() {
    // min x0 - x1 with x0 free, x1 >= -2, x0 >= -5 (row), x1 <= 3 (row).
    let mut lp = LinearProgram::new(vec![1.0, -1.0]);
    lp.set_lower_bound(0, None).set_lower_bound(1, Some(-2.0));
    lp.add_ge(vec![1.0, 0.0], -5.0);
    lp.add_le(vec![0.0, 1.0], 3.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.primal[0] + 5.0).abs() < 1e-9);
    assert!((sol.primal[1] - 3.0).abs() < 1e-9);
    assert!((sol.objective + 8.0).abs() < 1e-9);
    assert_certificates(&lp, &sol);
}

#[test]
fn redundant_equalities_keep_duals_consistent() {
    let mut lp = LinearProgram::new(vec![1.0, 2.0, 3.0]);
    lp.add_eq(vec![1.0, 1.0, 1.0], 3.0);
    lp.add_eq(vec![2.0, 2.0, 2.0], 6.0);
    lp.add_ge(vec![0.0, 1.0, 1.0], 1.0);
    let sol = solve_lp(&lp).unwrap();
    assert!((sol.objective - 4.0).abs() < 1e-9);
    assert_certificates(&lp, &sol);
}

#[test]
fn repeated_solves_are_bitwise_identical() {
    let mut lp = LinearProgram::new(vec![-1.0, -2.0, 0.5]);
    lp.add_le(vec![1.0, 1.0, 1.0], 4.0);
    lp.add_le(vec![1.0, 3.0, 0.0], 6.0);
    let a = solve_lp(&lp).unwrap();
    let b = solve_lp(&lp).unwrap();
    assert_eq!(a.objective.to_bits(), b.objective.to_bits());
    assert_eq!(a, b);
}

/// Minimum of `c·x` over `{x ≥ 0, A x ≤ b}` in three variables, by
/// enumerating every choice of three active constraints.
fn vertex_oracle(c: &[f64; 3], a: &[[f64; 3]; 2], b: &[f64; 2]) -> f64 {
    let mut planes: Vec<([f64; 3], f64)> = vec![
        ([1.0, 0.0, 0.0], 0.0),
        ([0.0, 1.0, 0.0], 0.0),
        ([0.0, 0.0, 1.0], 0.0),
    ];
    planes.push((a[0], b[0]));
    planes.push((a[1], b[1]));
    let det3 = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let mut best = f64::INFINITY;
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                let m = [planes[i].0, planes[j].0, planes[k].0];
                let rhs = [planes[i].1, planes[j].1, planes[k].1];
                let d = det3(m);
                if d.abs() < 1e-12 {
                    continue;
                }
                let mut x = [0.0; 3];
                for (col, xc) in x.iter_mut().enumerate() {
                    let mut mc = m;
                    for r in 0..3 {
                        mc[r][col] = rhs[r];
                    }
                    *xc = det3(mc) / d;
                }
                let feasible = x.iter().all(|v| *v >= -1e-9)
                    && (0..2).all(|r| {
                        a[r].iter().zip(&x).map(|(p, q)| p * q).sum::<f64>() <= b[r] + 1e-9
                    });
                if feasible {
                    best = best.min(c.iter().zip(&x).map(|(p, q)| p * q).sum());
                }
            }
        }
    }
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_vertex_enumeration(
        c in prop::array::uniform3(-5.0f64..5.0),
        a0 in prop::array::uniform3(0.1f64..3.0),
        a1 in prop::array::uniform3(0.1f64..3.0),
        b in prop::array::uniform2(0.5f64..10.0),
    ) {
        let a = [a0, a1];
        let mut lp = LinearProgram::new(c.to_vec());
        lp.add_le(a0.to_vec(), b[0]);
        lp.add_le(a1.to_vec(), b[1]);
        let sol = solve_lp(&lp).unwrap();
        let expected = vertex_oracle(&c, &a, &b);
        prop_assert!((sol.objective - expected).abs() <= 1e-8 * (1.0 + expected.abs()));
        assert_certificates(&lp, &sol);
    }

    #[test]
    fn family_cache_agrees_with_fresh_solves(
        rhs in prop::collection::vec(prop::array::uniform2(-5.0f64..5.0), 1..12),
    ) {
        // y+ - y- + 0.5 w = r0 ; w - s = r1 with all costs positive: always feasible.
        let rows = vec![vec![1.0, -1.0, 0.5, 0.0], vec![0.0, 0.0, 1.0, -1.0]];
        let cost = vec![3.0, 2.0, 1.0, 0.5];
        let mut family = RhsFamily::new(rows.clone(), cost.clone()).unwrap();
        for r in &rhs {
            let cached = family.solve(r).unwrap();
            let mut lp = LinearProgram::new(cost.clone());
            lp.add_eq(rows[0].clone(), r[0]);
            lp.add_eq(rows[1].clone(), r[1]);
            let fresh = solve_lp(&lp).unwrap();
            prop_assert!((cached.objective - fresh.objective).abs() <= 1e-9 * (1.0 + fresh.objective.abs()));
            prop_assert!((dot(&cached.duals, r) - fresh.objective).abs() <= 1e-7 * (1.0 + fresh.objective.abs()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn warm_started_family_matches_fresh_solves(
        m in 2usize..7,
        extra in prop::collection::vec(-2.0f64..2.0, 7 * 4),
        cost in prop::collection::vec(0.1f64..5.0, 2 * 7 + 4),
        rhs in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 7), 1..25),
        hinted in any::<bool>(),
        capacity in 1usize..6,
    ) {
        let (rows, cost) = complete_recourse(m, &extra[..m * 4], &cost);
        let mut family = RhsFamily::new(rows.clone(), cost.clone()).unwrap().with_capacity(capacity);
        let mut hint = None;
        for r in &rhs {
            let r = &r[..m];
            let (sol, slot) = family.solve_hinted(r, if hinted { hint } else { None }).unwrap();
            check_family_solution(&rows, &cost, r, &sol);
            hint = slot;
        }
    }
}

#[test]
fn family_reuses_bases() {
    let rows = vec![vec![1.0, -1.0]];
    let mut family = RhsFamily::new(rows, vec![2.0, 1.0]).unwrap();
    for r in [1.0, 2.0, 3.0, -1.0, -4.0] {
        let sol = family.solve(&[r]).unwrap();
        let expected = if r >= 0.0 { 2.0 * r } else { -r };
        assert!((sol.objective - expected).abs() < 1e-12);
    }
    // The sign change is reached by one dual simplex pivot.
    assert_eq!(family.stats().solves, 1);
    assert_eq!(family.stats().warm, 1);
    assert_eq!(family.stats().hits, 3);
}

/// `[I −I R]` with positive costs: feasible and bounded for every rhs.
fn complete_recourse(m: usize, extra: &[f64], cost: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = extra.len() / m;
    let rows = (0..m)
        .map(|i| {
            let mut row = vec![0.0; 2 * m + k];
            row[i] = 1.0;
            row[m + i] = -1.0;
            row[2 * m..].copy_from_slice(&extra[i * k..(i + 1) * k]);
            row
        })
        .collect();
    (rows, cost[..2 * m + k].to_vec())
}

fn check_family_solution(rows: &[Vec<f64>], cost: &[f64], r: &[f64], sol: &RhsSolution) {
    let scale = 1.0 + sol.objective.abs();
    let fresh = {
        let mut lp = LinearProgram::new(cost.to_vec());
        for (row, &v) in rows.iter().zip(r) {
            lp.add_eq(row.clone(), v);
        }
        solve_lp(&lp).unwrap()
    };
    assert!((sol.objective - fresh.objective).abs() <= 1e-8 * scale);
    assert!((dot(&sol.duals, r) - sol.objective).abs() <= 1e-7 * scale);
    for (row, &v) in rows.iter().zip(r) {
        assert!((dot(row, &sol.primal) - v).abs() <= 1e-7 * (1.0 + v.abs()));
    }
    for (j, &c) in cost.iter().enumerate() {
        let reduced = c - rows
            .iter()
            .zip(&sol.duals)
            .map(|(row, y)| row[j] * y)
            .sum::<f64>();
        assert!(reduced >= -1e-7 * (1.0 + c.abs()), "reduced cost {reduced}");
        assert!(sol.primal[j] >= 0.0);
    }
}

#[test]
fn warm_starts_happen_on_drifting_rhs() {
    let m = 6;
    let extra: Vec<f64> = (0..m * 5)
        .map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0)
        .collect();
    let cost: Vec<f64> = (0..2 * m + 5).map(|j| 1.0 + (j % 4) as f64).collect();
    let (rows, cost) = complete_recourse(m, &extra, &cost);
    let mut family = RhsFamily::new(rows.clone(), cost.clone()).unwrap();
    let mut hint = None;
    for t in 0..60 {
        let r: Vec<f64> = (0..m)
            .map(|i| (0.3 * t as f64 + i as f64).sin() * 4.0)
            .collect();
        let (sol, slot) = family.solve_hinted(&r, hint).unwrap();
        check_family_solution(&rows, &cost, &r, &sol);
        hint = slot;
    }
    let stats = family.stats();
    assert!(stats.warm > 0, "{stats:?}");
    assert_eq!(stats.hits + stats.warm + stats.solves, 60);
}
