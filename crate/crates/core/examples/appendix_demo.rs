//! Two-qubit walk-through: one qubit per Goldstein-Price axis, one Grover step.

use grovermin::cli::appendix_demo;
use grovermin::encoding::RegisterLayout;
use grovermin::objectives::GoldsteinPrice;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let layout = RegisterLayout::uniform(&["x1", "x2"], 1, -3.2, 3.0)?;
    let demo = appendix_demo(&GoldsteinPrice, &layout)?;

    println!("grid values: {:?}", demo.values);
    println!("|s>      = {:?}", demo.source);
    println!("target   = {:?} at {:?}", demo.target, demo.target_point);
    println!("P_t|s>   = {:?}", demo.flipped);
    println!("G|s>     = {:?}", demo.final_state);

    // One step of the fast path lands on the same vector as the matrices.
    assert_eq!(demo.final_state, demo.fast_path);
    assert_eq!(demo.final_state, vec![1.0, 0.0, 0.0, 0.0]);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
