//! Least squares, CART and M5 fitted to synthetic shipment demand, compared
//! by mean squared error on fresh data; the tree is round-tripped through
//! JSON.

use frfc::forecasters::{fit_cart, fit_least_squares, fit_m5, Forecaster, TreeHyper};
use frfc::numerics::RandomSource;
use frfc::problems::{Observation, SyntheticGenerator};

fn mse(f: &Forecaster, data: &[Observation]) -> f64 {
    let mut total = 0.0;
    for o in data {
        let p = f.predict(&o.x).unwrap();
        total += p
            .iter()
            .zip(&o.xi)
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            / p.len() as f64;
    }
    total / data.len() as f64
}

fn main() {
    let g = SyntheticGenerator::new(12, 3, 2.0, 11).unwrap();
    let train = g.gen_dataset(&mut RandomSource::new(11, 2), 1000).unwrap();
    let test = g.gen_dataset(&mut RandomSource::new(11, 3), 1000).unwrap();
    let hyper = TreeHyper {
        min_leaf: 25,
        max_depth: 1000,
    };

    let models = [
        ("LS", Forecaster::Affine(fit_least_squares(&train).unwrap())),
        ("CART", Forecaster::Tree(fit_cart(&train, &hyper).unwrap())),
        ("M5", Forecaster::Tree(fit_m5(&train, &hyper).unwrap())),
    ];
    for (name, f) in &models {
        println!("{name:>5}: test MSE {:.3}", mse(f, &test));
    }
    if let Forecaster::Tree(t) = &models[2].1 {
        println!("M5 tree: {} leaves, depth {}", t.leaves.len(), t.depth());
    }
    let json = models[1].1.to_json();
    assert_eq!(Forecaster::from_json(&json).unwrap(), models[1].1);
    println!("CART JSON round trip ok ({} bytes)", json.len());
}
