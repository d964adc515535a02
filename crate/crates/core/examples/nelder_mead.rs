//! Nelder–Mead on the Rosenbrock function, with and without an evaluation
//! budget.

use frfc::numerics::{nelder_mead, NelderMeadConfig};

fn rosenbrock(x: &[f64]) -> f64 {
    (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2)
}

fn main() {
    let cfg = NelderMeadConfig {
        epsilon: 1e-14,
        ..NelderMeadConfig::default()
    };
    let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &cfg).expect("finite start");
    println!(
        "minimum {:?} value {:.3e} after {} iterations, {} evaluations (converged: {})",
        r.point, r.value, r.iterations, r.evaluations, r.converged
    );

    let budget = NelderMeadConfig {
        max_evaluations: Some(60),
        restart: false,
        ..cfg
    };
    let r = nelder_mead(rosenbrock, &[-1.2, 1.0], &budget).expect("finite start");
    println!("with 60 evaluations: {:?} value {:.3e}", r.point, r.value);
}
