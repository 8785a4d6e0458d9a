//! Classical reference minimisers.

use rayon::prelude::*;
use serde::Serialize;

use crate::encoding::RegisterLayout;
use crate::objectives::Objective;
use crate::{Error, Result};

/// Largest register the exhaustive scan accepts.
pub const MAX_BRUTE_QUBITS: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMinimum {
    #[serde(skip)]
    pub index: usize,
    pub value: f64,
    pub point: Vec<f64>,
    pub num_evaluations: usize,
}

fn check_arity(objective: &dyn Objective, arity: usize) -> Result<()> {
    if objective.arity() != arity {
        return Err(Error::invalid(format!(
            "objective {} takes {} inputs, domain has {arity}",
            objective.name(),
            objective.arity()
        )));
    }
    Ok(())
}

/// Evaluates every grid point of `layout` and returns the lowest, ties going
/// to the lowest index.
pub fn grid_brute_min<O: Objective + ?Sized>(
    objective: &O,
    layout: &RegisterLayout,
) -> Result<GridMinimum> {
    check_arity(&objective, layout.arity())?;
    if layout.total_qubits() > MAX_BRUTE_QUBITS {
        return Err(Error::invalid(format!(
            "exhaustive scan limited to {MAX_BRUTE_QUBITS} qubits"
        )));
    }
    let n = layout.num_points();
    let (value, index) = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = layout.decode(i).expect("index in range");
            (objective.evaluate(&p), i)
        })
        .reduce(|| (f64::INFINITY, usize::MAX), pick_lower);
    if index == usize::MAX {
        return Err(Error::NumericFailure(
            "objective returned NaN at every grid point".into(),
        ));
    }
    Ok(GridMinimum {
        index,
        value,
        point: layout.decode(index)?,
        num_evaluations: n,
    })
}

// NaN never wins; equal values resolve to the smaller index so the parallel
// reduction is order independent.
fn pick_lower(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    match (a.0.is_nan(), b.0.is_nan()) {
        (true, true) => (f64::INFINITY, usize::MAX),
        (true, false) => b,
        (false, true) => a,
        (false, false) => {
            if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                b
            } else {
                a
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub levels: usize,
    /// Grid points per axis at every level (endpoints included).
    pub points_per_axis: usize,
    /// Box width multiplier between levels.
    pub zoom: f64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig {
            levels: 5,
            points_per_axis: 33,
            zoom: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refined {
    pub value: f64,
    pub point: Vec<f64>,
    /// Best value after each level.
    pub level_values: Vec<f64>,
    pub num_evaluations: usize,
}

/// Zooming grid search: scan a grid over the box, shrink the box around the
/// incumbent by `zoom`, repeat. Boxes never leave the original domain.
pub fn refine_min<O: Objective + ?Sized>(
    objective: &O,
    domain: &[(f64, f64)],
    config: &RefineConfig,
) -> Result<Refined> {
    check_arity(&objective, domain.len())?;
    if config.levels == 0 {
        return Err(Error::invalid("refinement needs at least one level"));
    }
    if config.points_per_axis < 2 {
        return Err(Error::invalid("need at least two points per axis"));
    }
    if !(config.zoom > 0.0 && config.zoom < 1.0) {
        return Err(Error::invalid(format!(
            "zoom {} outside (0, 1)",
            config.zoom
        )));
    }
    for &(lo, hi) in domain {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!("bad interval [{lo}, {hi}]")));
        }
    }

    let dims = domain.len();
    let g = config.points_per_axis;
    let per_level = g
        .checked_pow(dims as u32)
        .ok_or_else(|| Error::invalid("refinement grid too large"))?;

    let mut window: Vec<(f64, f64)> = domain.to_vec();
    let mut best_point: Vec<f64> = domain.iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
    let mut best_value = objective.evaluate(&best_point);
    let mut evaluations = 1;
    let mut level_values = Vec::with_capacity(config.levels);

    for _ in 0..config.levels {
        let (value, flat) = (0..per_level)
            .into_par_iter()
            .map(|flat| {
                let p = grid_point(&window, g, flat);
                (objective.evaluate(&p), flat)
            })
            .reduce(|| (f64::INFINITY, usize::MAX), pick_lower);
        evaluations += per_level;
        if flat != usize::MAX && value < best_value {
            best_value = value;
            best_point = grid_point(&window, g, flat);
        }
        level_values.push(best_value);

        window = window
            .iter()
            .zip(domain)
            .zip(&best_point)
            .map(|((&(lo, hi), &(dlo, dhi)), &c)| {
                let half = 0.5 * (hi - lo) * config.zoom;
                ((c - half).max(dlo), (c + half).min(dhi))
            })
            .collect();
    }

    Ok(Refined {
        value: best_value,
        point: best_point,
        level_values,
        num_evaluations: evaluations,
    })
}

fn grid_point(window: &[(f64, f64)], g: usize, mut flat: usize) -> Vec<f64> {
    let mut p = vec![0.0; window.len()];
    for (x, &(lo, hi)) in p.iter_mut().zip(window).rev() {
        let k = flat % g;
        flat /= g;
        *x = lo + (hi - lo) * k as f64 / (g - 1) as f64;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::VariableSpec;
    use crate::objectives::{
        build_fixed_core, FnObjective, FreeAtomEnergy, FreeAtomTemplate, GoldsteinPrice, LjTrimer,
    };
    use rand::seq::SliceRandom;
    use std::f64::consts::PI;

    fn gp_layout() -> RegisterLayout {
        RegisterLayout::uniform(&["x1", "x2"], 5, -3.2, 3.0).unwrap()
    }

    fn trimer_layout() -> RegisterLayout {
        RegisterLayout::new(vec![
            VariableSpec::new("B", 5, 0.0001, 2.0).unwrap(),
            VariableSpec::new("A", 4, 0.0001, PI).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn goldstein_price_grid() {
        let m = grid_brute_min(&GoldsteinPrice, &gp_layout()).unwrap();
        assert_eq!(m.value, 3.0);
        assert_eq!(m.point, vec![0.0, -1.0]);
        assert_eq!(m.num_evaluations, 1024);
    }

    #[test]
    fn trimer_grid() {
        let m = grid_brute_min(&LjTrimer { shared_bond: true }, &trimer_layout()).unwrap();
        assert!((m.value + 2.9094).abs() < 5e-4, "{}", m.value);
        assert!((m.point[0] - 1.0323).abs() < 5e-5);
        assert!((m.point[1] - 1.0472).abs() < 1e-4);
        assert_eq!(m.num_evaluations, 512);
    }

    #[test]
    fn one_qubit_identity() {
        let layout = RegisterLayout::uniform(&["x"], 1, 0.0, 1.0).unwrap();
        let f = FnObjective::new("id", 1, |x: &[f64]| x[0]);
        let m = grid_brute_min(&f, &layout).unwrap();
        assert_eq!((m.value, m.index, m.point.clone()), (0.0, 0, vec![0.0]));
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let layout = RegisterLayout::uniform(&["x", "y"], 3, -1.0, 1.0).unwrap();
        let f = FnObjective::new("flat", 2, |_: &[f64]| 7.0);
        assert_eq!(grid_brute_min(&f, &layout).unwrap().index, 0);
        let g = FnObjective::new("abs", 2, |x: &[f64]| (x[0].abs() - 0.4).abs().min(0.1));
        let m = grid_brute_min(&g, &layout).unwrap();
        let first = (0..64)
            .find(|&i| g.evaluate(&layout.decode(i).unwrap()) == m.value)
            .unwrap();
        assert_eq!(m.index, first);
    }

    #[test]
    fn order_independent() {
        let layout = trimer_layout();
        let f = LjTrimer { shared_bond: true };
        let m = grid_brute_min(&f, &layout).unwrap();
        let mut order: Vec<usize> = (0..layout.num_points()).collect();
        order.shuffle(&mut crate::rng::seeded(99));
        let shuffled = order
            .iter()
            .map(|&i| f.evaluate(&layout.decode(i).unwrap()))
            .fold(f64::INFINITY, f64::min);
        assert_eq!(shuffled, m.value);
    }

    #[test]
    fn arity_mismatch_rejected() {
        let layout = RegisterLayout::uniform(&["x"], 2, 0.0, 1.0).unwrap();
        assert!(grid_brute_min(&GoldsteinPrice, &layout).is_err());
    }

    #[test]
    fn refine_trimer() {
        let r = refine_min(
            &LjTrimer { shared_bond: true },
            &[(0.5, 1.5), (0.5, 2.5)],
            &RefineConfig::default(),
        )
        .unwrap();
        assert!((r.value + 3.0).abs() < 1e-4, "{}", r.value);
        assert!(r.level_values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn refine_tetramer_free_atom() {
        let obj = FreeAtomEnergy {
            geometry: build_fixed_core(3, 1.0).unwrap(),
            template: FreeAtomTemplate::all_free(),
        };
        let r = refine_min(
            &obj,
            &[(-0.5, 0.5), (0.01, 1.01), (0.01, 1.01)],
            &RefineConfig::default(),
        )
        .unwrap();
        assert!((r.value + 6.0).abs() < 1e-3, "{}", r.value);
        assert!(r.level_values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn refine_rejects_bad_config() {
        let f = FnObjective::new("id", 1, |x: &[f64]| x[0]);
        let bad = RefineConfig {
            levels: 0,
            ..Default::default()
        };
        assert!(refine_min(&f, &[(0.0, 1.0)], &bad).is_err());
        let bad = RefineConfig {
            zoom: 1.5,
            ..Default::default()
        };
        assert!(refine_min(&f, &[(0.0, 1.0)], &bad).is_err());
        assert!(refine_min(&f, &[(0.0, 1.0), (0.0, 1.0)], &RefineConfig::default()).is_err());
    }
}
