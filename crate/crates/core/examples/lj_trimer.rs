//! LJ trimer over (bond, angle) with the incremental schedule, checked against
//! the exhaustive grid scan.

use std::f64::consts::PI;

use grovermin::baseline::grid_brute_min;
use grovermin::encoding::{RegisterLayout, VariableSpec};
use grovermin::minsearch::{adapted_grover_min_observed, Schedule, SearchConfig};
use grovermin::objectives::LjTrimer;
use grovermin::rng;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RegisterLayout::new(vec![
        VariableSpec::new("B", 5, 0.0001, 2.0)?,
        VariableSpec::new("A", 4, 0.0001, PI)?,
    ])?;
    let trimer = LjTrimer { shared_bond: true };
    let grid = grid_brute_min(&trimer, &layout)?;

    let mut peak = Vec::new();
    let result = adapted_grover_min_observed(
        &trimer,
        &layout,
        &SearchConfig::new(Schedule::Incremental),
        &mut rng::seeded(1),
        &mut |view| peak.push(view.state.marked_probability(view.marked)),
    )?;

    for (r, p) in result.trace.rounds.iter().zip(&peak) {
        println!(
            "round {:2}: k = {:2}, marked {:3}, P(marked) = {p:.3}, measured {:.5}",
            r.round, r.iterations, r.marked_count, r.value
        );
    }
    let [b, a] = result.best_point[..] else {
        unreachable!()
    };
    println!(
        "best {:.5} at B = {b:.4}, A = {:.2} deg; grid minimum {:.5} from {} evaluations",
        result.best_value,
        a.to_degrees(),
        grid.value,
        grid.num_evaluations
    );
    assert_eq!(result.best_value, grid.value);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
