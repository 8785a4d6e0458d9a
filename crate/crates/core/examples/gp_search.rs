//! Threshold-adapted search on the 5+5 qubit Goldstein-Price grid with the
//! Baritompa schedule, printing the round-by-round trace.

use grovermin::encoding::RegisterLayout;
use grovermin::minsearch::{adapted_grover_min, Schedule, SearchConfig};
use grovermin::objectives::GoldsteinPrice;
use grovermin::rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RegisterLayout::uniform(&["x1", "x2"], 5, -3.2, 3.0)?;
    let mut config = SearchConfig::new(Schedule::baritompa());
    config.stop.stall_window = None;
    config.stop.target = Some(3.0);

    let result = adapted_grover_min(&GoldsteinPrice, &layout, &config, &mut rng::seeded(0))?;
    println!("round  k  marked  value");
    for r in &result.trace.rounds {
        println!(
            "{:5} {:2} {:7}  {}",
            r.round, r.iterations, r.marked_count, r.value
        );
    }
    println!(
        "best {} at {:?} after {} rounds, {} Grover iterations",
        result.best_value,
        result.best_point,
        result.trace.num_rounds(),
        result.trace.total_grover_iterations
    );
    assert_eq!(result.best_value, 3.0);
    assert_eq!(result.best_point, vec![0.0, -1.0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
