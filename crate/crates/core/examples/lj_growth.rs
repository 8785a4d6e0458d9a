//! Grows a five-atom LJ cluster one frozen atom at a time.

use grovermin::pivot::{lj_growth, GrowthConfig};
use grovermin::rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let report = lj_growth(5, &GrowthConfig::default(), &mut rng::seeded(3))?;
    println!("trimer bond {:.5}", report.bond);
    for stage in &report.stages {
        let added = stage.geometry.last().expect("non-empty");
        println!(
            "{} atoms: E = {:.5}, added ({:.4}, {:.4}, {:.4}), distances {:.3?}",
            stage.atoms, stage.energy, added[0], added[1], added[2], stage.distances
        );
    }
    assert!((report.final_stage().energy + 9.1039).abs() < 0.05);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
