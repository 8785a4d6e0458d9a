//! Basis index ↔ grid point mapping.
//!
//! A [`RegisterLayout`] splits the register into per-variable bit-fields. The
//! first variable takes the most-significant bits. Each field holds an integer
//! `k` in `0..2^q` mapped onto `[lo, hi]` with both endpoints included.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariableSpec {
    pub name: String,
    pub qubits: usize,
    pub lo: f64,
    pub hi: f64,
}

impl VariableSpec {
    pub fn new(name: impl Into<String>, qubits: usize, lo: f64, hi: f64) -> Result<Self> {
        let spec = VariableSpec {
            name: name.into(),
            qubits,
            lo,
            hi,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.qubits == 0 || self.qubits > 30 {
            return Err(Error::invalid(format!(
                "variable {}: qubit count {} outside 1..=30",
                self.name, self.qubits
            )));
        }
        if !(self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi) {
            return Err(Error::invalid(format!(
                "variable {}: need finite lo < hi, got [{}, {}]",
                self.name, self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Highest local integer, `2^q - 1`.
    pub fn max_level(&self) -> u64 {
        (1u64 << self.qubits) - 1
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.max_level() as f64
    }

    /// Grid value of local integer `k`.
    ///
    /// Evaluated as `(lo·(K-k) + hi·k) / K`, which lands on round values
    /// (0.0, -1.0 on the `[-3.2, 3.0]`, 5-qubit axis) where `lo + k·step`
    /// would leave a last-bit residue.
    pub fn value(&self, k: u64) -> f64 {
        let top = self.max_level();
        debug_assert!(k <= top);
        if k == 0 {
            self.lo
        } else if k == top {
            self.hi
        } else {
            (self.lo * (top - k) as f64 + self.hi * k as f64) / top as f64
        }
    }

    /// Nearest local integer to `x`, clamping out-of-range values.
    /// Returns the level and whether clamping happened.
    pub fn level(&self, x: f64) -> (u64, bool) {
        let top = self.max_level();
        if x < self.lo {
            return (0, true);
        }
        if x > self.hi {
            return (top, true);
        }
        // f64::round ties away from zero
        let k = ((x - self.lo) / self.step()).round();
        (k.clamp(0.0, top as f64) as u64, false)
    }
}

/// Ordered partition of a register into variables.
#[derive(Debug, Clone, PartialEq)]
pub struct RegisterLayout {
    variables: Vec<VariableSpec>,
    total_qubits: usize,
}

/// Result of [`RegisterLayout::encode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Encoded {
    pub index: usize,
    /// True if any coordinate was outside its range and got clamped.
    pub clamped: bool,
}

impl RegisterLayout {
    pub fn new(variables: Vec<VariableSpec>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::invalid(
                "register layout needs at least one variable",
            ));
        }
        for v in &variables {
            v.validate()?;
        }
        let total_qubits = variables.iter().map(|v| v.qubits).sum();
        if total_qubits > 40 {
            return Err(Error::invalid(format!(
                "layout uses {total_qubits} qubits, limit is 40"
            )));
        }
        Ok(RegisterLayout {
            variables,
            total_qubits,
        })
    }

    /// Same `qubits` and `[lo, hi]` on every axis.
    pub fn uniform(names: &[&str], qubits: usize, lo: f64, hi: f64) -> Result<Self> {
        let vars = names
            .iter()
            .map(|n| VariableSpec::new(*n, qubits, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vars)
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn arity(&self) -> usize {
        self.variables.len()
    }

    pub fn total_qubits(&self) -> usize {
        self.total_qubits
    }

    pub fn num_points(&self) -> usize {
        1usize << self.total_qubits
    }

    /// Per-variable `(lo, hi)` box.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        self.variables.iter().map(|v| (v.lo, v.hi)).collect()
    }

    /// Local integers of each variable, first variable first.
    pub fn levels(&self, index: usize) -> Result<Vec<u64>> {
        if index >= self.num_points() {
            return Err(Error::invalid(format!(
                "index {index} outside 0..{}",
                self.num_points()
            )));
        }
        let mut shift = self.total_qubits;
        Ok(self
            .variables
            .iter()
            .map(|v| {
                shift -= v.qubits;
                ((index as u64) >> shift) & v.max_level()
            })
            .collect())
    }

    pub fn decode(&self, index: usize) -> Result<Vec<f64>> {
        let levels = self.levels(index)?;
        Ok(self
            .variables
            .iter()
            .zip(levels)
            .map(|(v, k)| v.value(k))
            .collect())
    }

    /// Nearest grid index to `point`.
    pub fn encode(&self, point: &[f64]) -> Result<Encoded> {
        if point.len() != self.arity() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, layout has {} variables",
                point.len(),
                self.arity()
            )));
        }
        let mut index = 0u64;
        let mut clamped = false;
        for (v, &x) in self.variables.iter().zip(point) {
            if x.is_nan() {
                return Err(Error::invalid(format!("NaN coordinate for {}", v.name)));
            }
            let (k, c) = v.level(x);
            clamped |= c;
            index = (index << v.qubits) | k;
        }
        Ok(Encoded {
            index: index as usize,
            clamped,
        })
    }

    /// Snaps `point` onto the nearest grid point in place.
    pub fn snap(&self, point: &mut [f64]) -> Result<()> {
        let enc = self.encode(point)?;
        let grid = self.decode(enc.index)?;
        point.copy_from_slice(&grid);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn lj_bond_axis_level_sixteen() {
        let v = VariableSpec::new("B", 5, 0.0001, 2.0).unwrap();
        assert!((v.value(16) - 1.0323).abs() < 5e-5, "{}", v.value(16));
    }

    #[test]
    fn lj_angle_axis_level_five() {
        let v = VariableSpec::new("A", 4, 0.0001, PI).unwrap();
        let a = v.value(5);
        assert!((a - 1.0472).abs() < 1e-4, "{a}");
        assert!((a.to_degrees() - 60.0).abs() < 0.01);
    }

    #[test]
    fn endpoints_are_exact() {
        for q in 1..=8 {
            let v = VariableSpec::new("x", q, -3.2, 3.0).unwrap();
            assert_eq!(v.value(0), -3.2);
            assert_eq!(v.value(v.max_level()), 3.0);
        }
    }

    #[test]
    fn goldstein_price_grid_hits_round_values() {
        let layout = RegisterLayout::uniform(&["x1", "x2"], 5, -3.2, 3.0).unwrap();
        let enc = layout.encode(&[0.0, -1.0]).unwrap();
        assert_eq!(layout.levels(enc.index).unwrap(), vec![16, 11]);
        assert!(!enc.clamped);
        assert_eq!(layout.decode(enc.index).unwrap(), vec![0.0, -1.0]);
    }

    #[test]
    fn first_variable_takes_high_bits() {
        let layout = RegisterLayout::new(vec![
            VariableSpec::new("a", 2, 0.0, 3.0).unwrap(),
            VariableSpec::new("b", 3, 0.0, 7.0).unwrap(),
        ])
        .unwrap();
        assert_eq!(layout.total_qubits(), 5);
        assert_eq!(layout.decode(0b10_011).unwrap(), vec![2.0, 3.0]);
    }

    #[test]
    fn out_of_range_points_clamp() {
        let layout = RegisterLayout::uniform(&["x", "y"], 3, 0.0, 1.0).unwrap();
        let enc = layout.encode(&[-5.0, 9.0]).unwrap();
        assert!(enc.clamped);
        assert_eq!(layout.levels(enc.index).unwrap(), vec![0, 7]);
        assert!(layout.encode(&[f64::NAN, 0.5]).is_err());
        assert!(layout.encode(&[0.5]).is_err());
        assert!(layout.decode(64).is_err());
    }

    #[test]
    fn encode_rounds_half_away_from_zero() {
        let v = VariableSpec::new("x", 2, 0.0, 3.0).unwrap();
        assert_eq!(v.level(0.5).0, 1);
        assert_eq!(v.level(1.5).0, 2);
        assert_eq!(v.level(2.49).0, 2);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(VariableSpec::new("x", 0, 0.0, 1.0).is_err());
        assert!(VariableSpec::new("x", 3, 1.0, 1.0).is_err());
        assert!(VariableSpec::new("x", 3, 0.0, f64::INFINITY).is_err());
        assert!(RegisterLayout::new(vec![]).is_err());
    }

    #[test]
    fn exhaustive_round_trip_up_to_twelve_qubits() {
        let layouts = [
            RegisterLayout::uniform(&["x1", "x2"], 5, -3.2, 3.0).unwrap(),
            RegisterLayout::new(vec![
                VariableSpec::new("B", 5, 0.0001, 2.0).unwrap(),
                VariableSpec::new("A", 4, 0.0001, PI).unwrap(),
            ])
            .unwrap(),
            RegisterLayout::new(vec![
                VariableSpec::new("X", 4, -0.5, 0.5).unwrap(),
                VariableSpec::new("Y", 3, 0.01, 1.01).unwrap(),
                VariableSpec::new("Z", 3, 0.01, 1.01).unwrap(),
            ])
            .unwrap(),
            RegisterLayout::uniform(&["a", "b", "c"], 4, -1e3, 7.5).unwrap(),
        ];
        for layout in &layouts {
            assert!(layout.total_qubits() <= 12);
            let first = layout.decode(0).unwrap();
            let last = layout.decode(layout.num_points() - 1).unwrap();
            for (v, (f, l)) in layout.variables().iter().zip(first.iter().zip(&last)) {
                assert_eq!(*f, v.lo);
                assert_eq!(*l, v.hi);
            }
            for i in 0..layout.num_points() {
                let p = layout.decode(i).unwrap();
                assert_eq!(layout.encode(&p).unwrap().index, i);
            }
        }
    }

    #[test]
    fn values_strictly_increase_with_level() {
        for &(q, lo, hi) in &[
            (5, -3.2, 3.0),
            (4, 0.0001, PI),
            (8, 0.01, 1.01),
            (10, -10.0, 10.0),
        ] {
            let v = VariableSpec::new("x", q, lo, hi).unwrap();
            for k in 1..=v.max_level() {
                assert!(v.value(k) > v.value(k - 1));
            }
        }
    }
}
