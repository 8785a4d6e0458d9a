//! Grover iteration and the amplification law it obeys.

use std::f64::consts::FRAC_PI_4;

use crate::statevector::{MarkedSet, Statevector};
use crate::{Error, Result};

/// One Grover step `G = P_s P_t`: phase-flip the marked indices, then invert
/// about the average. An empty marked set leaves only the diffusion.
pub fn grover_iteration(state: &mut Statevector, marked: &MarkedSet) {
    state.phase_flip(marked);
    state.diffusion();
}

/// Applies `k` Grover steps. `k = 0` leaves the state untouched.
pub fn iterate(state: &mut Statevector, marked: &MarkedSet, k: usize) {
    for _ in 0..k {
        grover_iteration(state, marked);
    }
}

/// Probability of measuring a marked index after `k` steps from the uniform
/// superposition: `sin^2((2k+1) asin(sqrt(m/N)))`.
pub fn success_probability(total: usize, marked: usize, k: usize) -> Result<f64> {
    let plan = AmplificationPlan::new(total, marked)?;
    Ok(plan.success_probability(k))
}

/// Rotation geometry for `m` marked items among `N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplificationPlan {
    pub total: usize,
    pub marked: usize,
    /// `asin(sqrt(m/N))`, in radians.
    pub theta: f64,
    /// `round(π/(4θ) - 1/2)`, never negative; zero when nothing is marked.
    pub optimal_iterations: usize,
}

impl AmplificationPlan {
    pub fn new(total: usize, marked: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::invalid("empty search space"));
        }
        if marked > total {
            return Err(Error::invalid(format!(
                "marked count {marked} exceeds search space {total}"
            )));
        }
        let theta = (marked as f64 / total as f64).sqrt().asin();
        let optimal_iterations = if marked == 0 {
            0
        } else {
            (FRAC_PI_4 / theta - 0.5).round().max(0.0) as usize
        };
        Ok(AmplificationPlan {
            total,
            marked,
            theta,
            optimal_iterations,
        })
    }

    pub fn success_probability(&self, k: usize) -> f64 {
        ((2 * k + 1) as f64 * self.theta).sin().powi(2)
    }
}
