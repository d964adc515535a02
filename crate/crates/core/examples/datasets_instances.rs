//! Writes a synthetic dataset to CSV and reads it back, then serializes
//! the resource allocation instance to TOML.

use frfc::numerics::RandomSource;
use frfc::problems::{build_resource_allocation, ResourceAllocationParams, SyntheticGenerator};
use frfc::report::{read_dataset, write_dataset, Provenance};
use frfc::two_stage::FrfcProblem;

fn main() {
    let inst = build_resource_allocation(&ResourceAllocationParams::default_sized(
        &mut RandomSource::new(1, 1),
    ))
    .unwrap();
    let g = SyntheticGenerator::new(inst.map.xi_dim, 3, 0.5, 1).unwrap();
    let data = g.gen_dataset(&mut RandomSource::new(1, 2), 5).unwrap();

    let mut csv = Vec::new();
    write_dataset(
        &mut csv,
        &Provenance::new("datasets example").with("seed", 1),
        &data,
    )
    .unwrap();
    let text = String::from_utf8(csv).unwrap();
    for line in text.lines().take(4) {
        println!("{}", &line[..line.len().min(100)]);
    }
    assert_eq!(read_dataset(text.as_bytes()).unwrap(), data);

    let toml = inst.problem.to_toml().unwrap();
    assert_eq!(FrfcProblem::from_toml(&toml).unwrap(), *inst.problem);
    println!(
        "\n{}: {} first-stage variables, {} recourse columns, {} recourse rows, {} bytes of TOML",
        inst.problem.name,
        inst.problem.first_stage_cost.len(),
        inst.problem.second_stage_cost.len(),
        inst.problem.recourse.len(),
        toml.len()
    );
    for line in toml.lines().take(6) {
        println!("{}", &line[..line.len().min(100)]);
    }
}
