//! Marked-state probability under repeated Grover steps, simulated and closed
//! form side by side.

use grovermin::grover::{iterate, AmplificationPlan};
use grovermin::statevector::{MarkedSet, Statevector};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 10;
    let dim = 1usize << n;
    for m in [1usize, 4, 16] {
        let marked = MarkedSet::from_indices(dim, (0..m).map(|i| i * 61 % dim))?;
        let plan = AmplificationPlan::new(dim, m)?;
        println!("m = {m:2}: optimal k = {}", plan.optimal_iterations);

        let mut state = Statevector::uniform(n)?;
        for k in 0..=plan.optimal_iterations + 2 {
            if k > 0 {
                iterate(&mut state, &marked, 1);
            }
            let simulated = state.marked_probability(&marked);
            let law = plan.success_probability(k);
            println!("  k = {k:2}  simulated {simulated:.6}  law {law:.6}");
            assert!((simulated - law).abs() < 1e-9);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
