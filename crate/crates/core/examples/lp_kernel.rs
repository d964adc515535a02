//! Solve a small LP with the dense revised simplex, read its duals, then
//! reuse bases across right-hand sides with `RhsFamily`.

use frfc::lp::{solve_lp, LinearProgram, RhsFamily};

fn main() {
    // min −3x₁ − 2x₂  s.t.  x₁ + x₂ ≤ 4,  x₁ + 3x₂ ≤ 6,  x₁ − x₂ = 1
    let mut lp = LinearProgram::new(vec![-3.0, -2.0]);
    lp.add_le(vec![1.0, 1.0], 4.0)
        .add_le(vec![1.0, 3.0], 6.0)
        .add_eq(vec![1.0, -1.0], 1.0);
    let sol = solve_lp(&lp).expect("well-formed program");
    println!(
        "status {:?}, x = {:?}, objective {}",
        sol.status, sol.primal, sol.objective
    );
    println!(
        "equality duals {:?}, inequality duals {:?}",
        sol.duals_eq, sol.duals_ineq
    );
    println!("dual objective {}", sol.dual_objective(&lp));

    // Newsvendor recourse y⁺ − y⁻ = z − D for a stream of demands.
    let mut family =
        RhsFamily::new(vec![vec![1.0, -1.0]], vec![4300.0, 4000.0]).expect("shapes agree");
    for d in [10.0, 30.0, 55.0, 80.0, 95.0] {
        let r = family.solve(&[60.0 - d]).expect("feasible");
        println!(
            "D = {d:>4}: Q = {:>8.1}, dual {:>7.1}",
            r.objective, r.duals[0]
        );
    }
    let stats = family.stats();
    println!(
        "{} simplex solves, {} cached-basis hits",
        stats.solves, stats.hits
    );
}
