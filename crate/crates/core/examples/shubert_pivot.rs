//! Pivot hybrid on the Shubert function over [-10, 10]^2 with 1024 probes.

use grovermin::objectives::Shubert;
use grovermin::pivot::{pivot_grover_search, PivotConfig};
use grovermin::rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let bounds = [(-10.0, 10.0), (-10.0, 10.0)];
    let config = PivotConfig::default();
    for run in 0..4 {
        let r = pivot_grover_search(&Shubert, &bounds, 10, &config, &mut rng::split(0, run))?;
        let first = &r.generations[0];
        println!(
            "run {run}: {:.4} at ({:.4}, {:.4}) after {} generations; first threshold {:.2}, {} draws",
            r.best_value,
            r.best_point[0],
            r.best_point[1],
            r.generations.len(),
            first.threshold,
            first.draws
        );
        assert!(r.best_value >= -186.7310);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
