//! 100 seeded searches on the LJ trimer grid: rounds and iteration counts.

use std::f64::consts::PI;

use grovermin::encoding::{RegisterLayout, VariableSpec};
use grovermin::minsearch::{run_ensemble, Schedule, SearchConfig};
use grovermin::objectives::LjTrimer;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RegisterLayout::new(vec![
        VariableSpec::new("B", 5, 0.0001, 2.0)?,
        VariableSpec::new("A", 4, 0.0001, PI)?,
    ])?;
    let e = run_ensemble(
        &LjTrimer { shared_bond: true },
        &layout,
        &SearchConfig::new(Schedule::Incremental),
        100,
        11,
    )?;
    let s = &e.stats;
    println!(
        "success {:.2}, rounds mean {:.1} / median {}, iterations mean {:.1} / median {}",
        s.success_fraction,
        s.mean_rounds,
        s.median_rounds,
        s.mean_total_iterations,
        s.median_total_iterations
    );
    for bin in &s.rounds_histogram {
        println!("{:3} {}", bin.bin, "#".repeat(bin.count));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
