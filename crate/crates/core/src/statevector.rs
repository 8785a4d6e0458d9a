//! Dense complex-amplitude register.
//!
//! Basis index `i` read most-significant bit first is the qubit string
//! `|q_{n-1} ... q_0>`, so `|0>⊗|0>` is index 0 and the first variable of a
//! register layout occupies the high bits.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::{Error, Result};

/// Largest register the simulator will allocate (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Largest register accepted by [`dense_reference_operators`].
pub const MAX_DENSE_QUBITS: usize = 6;

/// Drift in the squared norm tolerated before a state is renormalised.
const RENORM_TOLERANCE: f64 = 1e-10;

/// Set of basis indices singled out by an oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MarkedSet {
    mask: Vec<bool>,
    count: usize,
}

impl MarkedSet {
    pub fn from_predicate(len: usize, mut pred: impl FnMut(usize) -> bool) -> Self {
        let mask: Vec<bool> = (0..len).map(&mut pred).collect();
        let count = mask.iter().filter(|&&m| m).count();
        MarkedSet { mask, count }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut mask = vec![false; len];
        for i in indices {
            if i >= len {
                return Err(Error::invalid(format!("marked index {i} outside 0..{len}")));
            }
            mask[i] = true;
        }
        let count = mask.iter().filter(|&&m| m).count();
        Ok(MarkedSet { mask, count })
    }

    pub fn none(len: usize) -> Self {
        MarkedSet {
            mask: vec![false; len],
            count: 0,
        }
    }

    pub fn all(len: usize) -> Self {
        MarkedSet {
            mask: vec![true; len],
            count: len,
        }
    }

    #[inline]
    pub fn contains(&self, index: usize) -> bool {
        self.mask[index]
    }

    /// Number of marked indices.
    pub fn count(&self) -> usize {
        self.count
    }

    /// Size of the index space the set is defined over.
    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter_map(|(i, &m)| m.then_some(i))
    }
}

/// A register of `n` qubits held as `2^n` complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
    renormalizations: usize,
}

fn check_qubits(n: usize, cap: usize) -> Result<()> {
    if n == 0 || n > cap {
        return Err(Error::invalid(format!(
            "qubit count {n} outside supported range 1..={cap}"
        )));
    }
    Ok(())
}

impl Statevector {
    /// Hadamard on every qubit of `|0...0>`: all amplitudes equal `2^(-n/2)`.
    pub fn uniform(num_qubits: usize) -> Result<Self> {
        check_qubits(num_qubits, MAX_QUBITS)?;
        let dim = 1usize << num_qubits;
        let amp = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        Ok(Statevector {
            num_qubits,
            amplitudes: vec![amp; dim],
            renormalizations: 0,
        })
    }

    /// Builds a state from explicit amplitudes. The length must be a power of
    /// two and the squared norm within 1e-8 of one.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let dim = amplitudes.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude count {dim} is not a power of two >= 2"
            )));
        }
        let num_qubits = dim.trailing_zeros() as usize;
        check_qubits(num_qubits, MAX_QUBITS)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-8 {
            return Err(Error::invalid(format!("state norm {norm} is not 1")));
        }
        Ok(Statevector {
            num_qubits,
            amplitudes,
            renormalizations: 0,
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::from_amplitudes(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Number of basis states, `2^num_qubits`.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Born-rule probabilities `|a_i|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// How many times sampling had to renormalise a drifted state.
    pub fn renormalizations(&self) -> usize {
        self.renormalizations
    }

    /// Selective phase inversion `I - 2 Σ|t><t|` over the marked indices.
    pub fn phase_flip(&mut self, marked: &MarkedSet) {
        assert_eq!(
            marked.len(),
            self.dim(),
            "marked set sized for another register"
        );
        for (a, &m) in self.amplitudes.iter_mut().zip(&marked.mask) {
            if m {
                *a = -*a;
            }
        }
    }

    /// Inversion about the average, `2|s><s| - I`, in O(2^n).
    pub fn diffusion(&mut self) {
        let mean = self.amplitudes.iter().sum::<Complex64>() / self.dim() as f64;
        let twice = mean * 2.0;
        for a in &mut self.amplitudes {
            *a = twice - *a;
        }
    }

    pub fn marked_probability(&self, marked: &MarkedSet) -> f64 {
        assert_eq!(
            marked.len(),
            self.dim(),
            "marked set sized for another register"
        );
        marked
            .indices()
            .map(|i| self.amplitudes[i].norm_sqr())
            .sum()
    }

    fn checked_probabilities(&mut self) -> Result<Vec<f64>> {
        if self
            .amplitudes
            .iter()
            .any(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(Error::NumericFailure("non-finite amplitude".into()));
        }
        let norm = self.norm_sqr();
        if norm <= 0.0 {
            return Err(Error::NumericFailure("zero-norm state".into()));
        }
        if (norm - 1.0).abs() > RENORM_TOLERANCE {
            let scale = norm.sqrt().recip();
            for a in &mut self.amplitudes {
                *a *= scale;
            }
            self.renormalizations += 1;
        }
        Ok(self.probabilities())
    }

    /// Measures the register once, returning index `i` with probability `|a_i|^2`.
    ///
    /// The state is not collapsed; callers re-prepare between rounds.
    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<usize> {
        let probs = self.checked_probabilities()?;
        let total: f64 = probs.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_nonzero = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_nonzero = i;
                if target < acc {
                    return Ok(i);
                }
            }
        }
        Ok(last_nonzero)
    }

    /// Order in which repeated measurement without replacement visits the
    /// basis states (each draw removes the drawn index and renormalises the
    /// rest). Zero-probability indices never appear.
    ///
    /// Uses exponential keys `ln(u) / p`, which yields exactly that
    /// successive-draw distribution in one pass.
    pub fn draw_order<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<Vec<usize>> {
        let probs = self.checked_probabilities()?;
        let mut keyed: Vec<(f64, usize)> = probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, &p)| {
                // u in (0, 1]
                let u = 1.0 - rng.random::<f64>();
                (u.ln() / p, i)
            })
            .collect();
        keyed.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        Ok(keyed.into_iter().map(|(_, i)| i).collect())
    }
}

/// Explicit `(P_s, P_t)` matrices for small registers, with
/// `P_s[i][j] = 2/2^n - δ_ij` and `P_t = I` carrying `-1` on marked diagonal
/// entries. Test and demonstration path only; the simulator never builds them.
pub fn dense_reference_operators(
    num_qubits: usize,
    marked: &MarkedSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_qubits(num_qubits, MAX_DENSE_QUBITS)?;
    let dim = 1usize << num_qubits;
    if marked.len() != dim {
        return Err(Error::invalid(format!(
            "marked set covers {} indices, register has {dim}",
            marked.len()
        )));
    }
    let two_over_n = 2.0 / dim as f64;
    let ps = DMatrix::from_fn(
        dim,
        dim,
        |i, j| {
            if i == j {
                two_over_n - 1.0
            } else {
                two_over_n
            }
        },
    );
    let pt = DMatrix::from_fn(dim, dim, |i, j| match (i == j, marked.contains(i)) {
        (false, _) => 0.0,
        (true, true) => -1.0,
        (true, false) => 1.0,
    });
    Ok((ps, pt))
}
