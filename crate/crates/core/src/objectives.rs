//! Objective functions: Goldstein-Price, Shubert and Lennard-Jones clusters.
//!
//! Lennard-Jones energies use reduced units with well depth 1 at pair
//! separation 1, `V(r) = r^-12 - 2 r^-6`.

use crate::{Error, Result};

/// Returned instead of an overflowing energy when two atoms coincide.
pub const ENERGY_CAP: f64 = 1e12;

/// Pair separations at or below this count as coincident.
pub const COINCIDENT: f64 = 1e-8;

/// Real-valued function over a point in the search domain.
pub trait Objective: Send + Sync {
    fn arity(&self) -> usize;
    fn evaluate(&self, x: &[f64]) -> f64;
    fn name(&self) -> &str {
        "custom"
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

impl<T: Objective + ?Sized> Objective for Box<T> {
    fn arity(&self) -> usize {
        (**self).arity()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// Wraps a closure as an [`Objective`].
pub struct FnObjective<F> {
    arity: usize,
    name: String,
    f: F,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, arity: usize, f: F) -> Self {
        FnObjective {
            arity,
            name: name.into(),
            f,
        }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn arity(&self) -> usize {
        self.arity
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn name(&self) -> &str {
        &self.name
    }
}

pub fn gp_eval(x1: f64, x2: f64) -> f64 {
    let s = x1 + x2 + 1.0;
    let a = 19.0 - 14.0 * x1 + 3.0 * x1 * x1 - 14.0 * x2 + 6.0 * x1 * x2 + 3.0 * x2 * x2;
    let d = 2.0 * x1 - 3.0 * x2;
    let b = 18.0 - 32.0 * x1 + 12.0 * x1 * x1 + 48.0 * x2 - 36.0 * x1 * x2 + 27.0 * x2 * x2;
    (1.0 + s * s * a) * (30.0 + d * d * b)
}

fn shubert_factor(x: f64) -> f64 {
    (1..=5)
        .map(|i| {
            let i = i as f64;
            i * ((i + 1.0) * x + i).cos()
        })
        .sum()
}

pub fn shubert_eval(x1: f64, x2: f64) -> f64 {
    shubert_factor(x1) * shubert_factor(x2)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GoldsteinPrice;

impl Objective for GoldsteinPrice {
    fn arity(&self) -> usize {
        2
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        gp_eval(x[0], x[1])
    }
    fn name(&self) -> &str {
        "gp"
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Shubert;

impl Objective for Shubert {
    fn arity(&self) -> usize {
        2
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        shubert_eval(x[0], x[1])
    }
    fn name(&self) -> &str {
        "shubert"
    }
}

fn pair_energy(r: f64) -> f64 {
    if r <= COINCIDENT {
        return ENERGY_CAP;
    }
    let inv6 = r.powi(-6);
    inv6 * inv6 - 2.0 * inv6
}

/// Lennard-Jones pair potential in reduced units.
pub fn lj_pair(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 {
        return Err(Error::invalid(format!(
            "pair distance {r} must be positive"
        )));
    }
    Ok(pair_energy(r))
}

/// Three-atom energy from two bonds at atom 0 and the angle between them.
pub fn trimer_energy(b1: f64, b2: f64, angle: f64) -> f64 {
    let r12 = (b1 * b1 + b2 * b2 - 2.0 * b1 * b2 * angle.cos())
        .max(0.0)
        .sqrt();
    if r12 <= COINCIDENT || b1 <= COINCIDENT || b2 <= COINCIDENT {
        return ENERGY_CAP;
    }
    pair_energy(b1) + pair_energy(b2) + pair_energy(r12)
}

/// Trimer in internal coordinates.
///
/// With `shared_bond` the point is `(B, A)` and both bonds equal `B`;
/// otherwise it is `(B1, B2, A)`.
#[derive(Debug, Clone, Copy)]
pub struct LjTrimer {
    pub shared_bond: bool,
}

impl Objective for LjTrimer {
    fn arity(&self) -> usize {
        if self.shared_bond {
            2
        } else {
            3
        }
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        if self.shared_bond {
            trimer_energy(x[0], x[0], x[1])
        } else {
            trimer_energy(x[0], x[1], x[2])
        }
    }
    fn name(&self) -> &str {
        "lj-trimer"
    }
}

pub type Position = [f64; 3];

pub fn distance(a: &Position, b: &Position) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Total pair energy of a set of atoms.
pub fn total_energy(atoms: &[Position]) -> f64 {
    let mut e = 0.0;
    for (i, a) in atoms.iter().enumerate() {
        for b in &atoms[i + 1..] {
            e += pair_energy(distance(a, b));
        }
    }
    e
}

/// Frozen atoms with their mutual energy precomputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterGeometry {
    fixed: Vec<Position>,
    fixed_energy: f64,
}

impl ClusterGeometry {
    pub fn new(fixed: Vec<Position>) -> Result<Self> {
        for (i, a) in fixed.iter().enumerate() {
            if a.iter().any(|c| !c.is_finite()) {
                return Err(Error::invalid(format!(
                    "atom {i} has a non-finite coordinate"
                )));
            }
            for (j, b) in fixed.iter().enumerate().skip(i + 1) {
                if distance(a, b) <= COINCIDENT {
                    return Err(Error::invalid(format!("atoms {i} and {j} coincide")));
                }
            }
        }
        let fixed_energy = total_energy(&fixed);
        Ok(ClusterGeometry {
            fixed,
            fixed_energy,
        })
    }

    pub fn atoms(&self) -> &[Position] {
        &self.fixed
    }

    pub fn fixed_energy(&self) -> f64 {
        self.fixed_energy
    }

    /// Energy of the frozen atoms plus one free atom at `free`.
    pub fn cluster_energy(&self, free: &Position) -> f64 {
        let mut e = self.fixed_energy;
        for a in &self.fixed {
            let r = distance(a, free);
            if r <= COINCIDENT {
                return ENERGY_CAP;
            }
            e += pair_energy(r);
        }
        e
    }

    /// Freezes `free` into a new geometry.
    pub fn with_atom(&self, free: Position) -> Result<Self> {
        let mut fixed = self.fixed.clone();
        fixed.push(free);
        ClusterGeometry::new(fixed)
    }
}

/// Equilateral triangle of side `bond` in the `z = 0` plane, optionally capped
/// by the regular-tetrahedron apex above its centroid.
pub fn build_fixed_core(num_fixed: usize, bond: f64) -> Result<ClusterGeometry> {
    if !(bond.is_finite() && bond > 0.0) {
        return Err(Error::invalid(format!("bond {bond} must be positive")));
    }
    let h = bond * 3f64.sqrt() / 2.0;
    let mut atoms = vec![
        [-bond / 2.0, 0.0, 0.0],
        [bond / 2.0, 0.0, 0.0],
        [0.0, h, 0.0],
    ];
    match num_fixed {
        3 => {}
        4 => atoms.push(tetrahedron_apex(bond)),
        n => {
            return Err(Error::invalid(format!(
                "fixed core must have 3 or 4 atoms, got {n}"
            )))
        }
    }
    ClusterGeometry::new(atoms)
}

/// Apex completing a regular tetrahedron on the triangle of [`build_fixed_core`].
pub fn tetrahedron_apex(bond: f64) -> Position {
    [0.0, bond * 3f64.sqrt() / 6.0, bond * (2.0f64 / 3.0).sqrt()]
}

/// Five atoms: an equilateral triangle of side `side` in `z = 0`, centred on
/// the origin, with apexes at `z = ±apex_height`.
pub fn trigonal_bipyramid(side: f64, apex_height: f64) -> Vec<Position> {
    let r = side / 3f64.sqrt();
    vec![
        [r, 0.0, 0.0],
        [-r / 2.0, side / 2.0, 0.0],
        [-r / 2.0, -side / 2.0, 0.0],
        [0.0, 0.0, apex_height],
        [0.0, 0.0, -apex_height],
    ]
}

/// Each Cartesian axis of the added atom is either searched or held fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Axis {
    Free,
    Pinned(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeAtomTemplate {
    pub axes: [Axis; 3],
}

impl FreeAtomTemplate {
    pub fn all_free() -> Self {
        FreeAtomTemplate {
            axes: [Axis::Free; 3],
        }
    }

    pub fn pinned_x(x: f64) -> Self {
        FreeAtomTemplate {
            axes: [Axis::Pinned(x), Axis::Free, Axis::Free],
        }
    }

    pub fn arity(&self) -> usize {
        self.axes.iter().filter(|a| matches!(a, Axis::Free)).count()
    }

    /// Expands searched coordinates into a Cartesian position.
    pub fn position(&self, coords: &[f64]) -> Position {
        let mut it = coords.iter();
        let mut pos = [0.0; 3];
        for (p, axis) in pos.iter_mut().zip(&self.axes) {
            *p = match axis {
                Axis::Pinned(v) => *v,
                Axis::Free => *it.next().expect("too few searched coordinates"),
            };
        }
        pos
    }
}

/// One free atom added to a frozen cluster.
#[derive(Debug, Clone)]
pub struct FreeAtomEnergy {
    pub geometry: ClusterGeometry,
    pub template: FreeAtomTemplate,
}

impl Objective for FreeAtomEnergy {
    fn arity(&self) -> usize {
        self.template.arity()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        self.geometry.cluster_energy(&self.template.position(x))
    }
    fn name(&self) -> &str {
        "lj-grow"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(1.0)
    }

    #[test]
    fn goldstein_price_stationary_values() {
        for &(x, y, f) in &[
            (0.0, -1.0, 3.0),
            (-0.6, -0.4, 30.0),
            (1.8, 0.2, 84.0),
            (1.2, 0.8, 840.0),
        ] {
            let v = gp_eval(x, y);
            assert!(rel_close(v, f, 1e-9), "f({x},{y}) = {v}");
        }
    }

    #[test]
    fn shubert_origin() {
        let s: f64 = (1..=5).map(|i| i as f64 * (i as f64).cos()).sum();
        assert!((shubert_eval(0.0, 0.0) - s * s).abs() < 1e-12);
        assert!((shubert_eval(0.0, 0.0) - 19.8758).abs() < 5e-5);
    }

    #[test]
    fn shubert_global_minimum_value() {
        // Minimise the single-axis factor to high precision by a dense scan
        // plus golden-section polish; the global value is min*max of it.
        let scan = |lo: f64, hi: f64, sign: f64| {
            let n = 200_000;
            let mut best = (lo, f64::INFINITY);
            for i in 0..=n {
                let x = lo + (hi - lo) * i as f64 / n as f64;
                let v = sign * shubert_factor(x);
                if v < best.1 {
                    best = (x, v);
                }
            }
            let (mut a, mut b) = (best.0 - 1e-3, best.0 + 1e-3);
            let g = (5f64.sqrt() - 1.0) / 2.0;
            for _ in 0..100 {
                let c = b - g * (b - a);
                let d = a + g * (b - a);
                if sign * shubert_factor(c) < sign * shubert_factor(d) {
                    b = d;
                } else {
                    a = c;
                }
            }
            let x = (a + b) / 2.0;
            (x, shubert_factor(x))
        };
        let (_, fmin) = scan(-10.0, 10.0, 1.0);
        let (_, fmax) = scan(-10.0, 10.0, -1.0);
        let global = fmin * fmax;
        assert!((global - (-186.7309)).abs() < 1e-4, "{global}");
    }

    #[test]
    fn shubert_is_symmetric() {
        for &(a, b) in &[(1.3, -7.2), (0.01, 9.99), (-4.4, 2.5)] {
            assert_eq!(shubert_eval(a, b), shubert_eval(b, a));
        }
    }

    #[test]
    fn lj_pair_values() {
        assert_eq!(lj_pair(1.0).unwrap(), -1.0);
        let v2 = lj_pair(2.0).unwrap();
        assert!((v2 - (2f64.powi(-12) - 2.0 * 2f64.powi(-6))).abs() < 1e-15);
        assert!((v2 + 0.0310059).abs() < 1e-7);
        let far = lj_pair(50.0).unwrap();
        assert!(far < 0.0 && far > -1e-9);
        assert!(lj_pair(0.0).is_err());
        assert!(lj_pair(-1.0).is_err());
    }

    #[test]
    fn lj_pair_minimum_at_unit_separation() {
        let h = 1e-6;
        let d = (lj_pair(1.0 + h).unwrap() - lj_pair(1.0 - h).unwrap()) / (2.0 * h);
        assert!(d.abs() < 1e-6);
        assert!(lj_pair(1.01).unwrap() > -1.0);
        assert!(lj_pair(0.99).unwrap() > -1.0);
    }

    #[test]
    fn trimer_values() {
        assert!((trimer_energy(1.0323, 1.0323, 1.0472) - (-2.9094)).abs() < 5e-4);
        assert!((trimer_energy(1.0, 1.0, PI / 3.0) + 3.0).abs() < 1e-12);
        assert_eq!(trimer_energy(0.9, 1.2, 0.7), trimer_energy(1.2, 0.9, 0.7));
        assert_eq!(trimer_energy(1.0, 1.0, 0.0), ENERGY_CAP);
    }

    #[test]
    fn regular_tetrahedron_energy() {
        let core = build_fixed_core(4, 1.0).unwrap();
        assert!((core.fixed_energy() + 6.0).abs() < 1e-12);
        for (i, a) in core.atoms().iter().enumerate() {
            for b in &core.atoms()[i + 1..] {
                assert!((distance(a, b) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn trigonal_bipyramid_energy() {
        // D3h five-atom cluster: equatorial side a, apexes at ±h. Minimise
        // over (a, h) by zooming scans.
        let energy = |a: f64, h: f64| {
            let s = (a * a / 3.0 + h * h).sqrt();
            3.0 * lj_pair(a).unwrap() + 6.0 * lj_pair(s).unwrap() + lj_pair(2.0 * h).unwrap()
        };
        let (mut ca, mut ch, mut w) = (1.0, 0.8, 0.4);
        let mut best = f64::INFINITY;
        for _ in 0..12 {
            let mut next = (ca, ch);
            for i in 0..=40 {
                for j in 0..=40 {
                    let a = ca - w + 2.0 * w * i as f64 / 40.0;
                    let h = ch - w + 2.0 * w * j as f64 / 40.0;
                    let e = energy(a, h);
                    if e < best {
                        best = e;
                        next = (a, h);
                    }
                }
            }
            (ca, ch) = next;
            w /= 4.0;
        }
        assert!((best + 9.103852).abs() < 1e-6, "{best}");

        let mut atoms = trigonal_bipyramid(ca, ch);
        assert!((total_energy(&atoms) - best).abs() < 1e-12);
        let lower = atoms.pop().unwrap();
        let geom = ClusterGeometry::new(atoms).unwrap();
        assert!((geom.cluster_energy(&lower) - best).abs() < 1e-12);
    }

    #[test]
    fn receding_atom_leaves_trimer_energy() {
        let core = build_fixed_core(3, 1.0).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for &z in &[2.0, 4.0, 8.0, 100.0] {
            let e = core.cluster_energy(&[0.0, 0.0, z]);
            assert!(e > prev);
            prev = e;
        }
        assert!((prev + 3.0).abs() < 1e-9);
    }

    #[test]
    fn coincident_free_atom_is_capped() {
        let core = build_fixed_core(3, 1.0).unwrap();
        assert_eq!(core.cluster_energy(&[0.5, 0.0, 0.0]), ENERGY_CAP);
        assert!(ClusterGeometry::new(vec![[0.0; 3], [0.0; 3]]).is_err());
    }

    #[test]
    fn fixed_core_geometry() {
        let core = build_fixed_core(3, 1.0).unwrap();
        let centroid: Vec<f64> = (0..3)
            .map(|k| core.atoms().iter().map(|a| a[k]).sum::<f64>() / 3.0)
            .collect();
        assert!(centroid[0].abs() < 1e-15);
        assert!((centroid[1] - 3f64.sqrt() / 6.0).abs() < 1e-15);
        assert_eq!(centroid[2], 0.0);

        let apex = tetrahedron_apex(1.0);
        assert!((apex[1] - 0.288675).abs() < 1e-6);
        assert!((apex[2] - 0.816497).abs() < 1e-6);
        // grown optimum reported for the fourth atom sits within one 5-qubit
        // step of [0.01, 1.01] from the apex
        let reported = [0.0, 0.28444, 0.81344];
        assert!(distance(&apex, &reported) < 1.0 / 31.0);

        let core = build_fixed_core(3, 0.99889).unwrap();
        for (i, a) in core.atoms().iter().enumerate() {
            for b in &core.atoms()[i + 1..] {
                assert!((distance(a, b) - 0.99889).abs() < 1e-12);
            }
        }
        assert!(build_fixed_core(5, 1.0).is_err());
        assert!(build_fixed_core(3, 0.0).is_err());
    }

    #[test]
    fn template_expands_pinned_axes() {
        let t = FreeAtomTemplate::pinned_x(0.0);
        assert_eq!(t.arity(), 2);
        assert_eq!(t.position(&[0.3, 0.8]), [0.0, 0.3, 0.8]);
        assert_eq!(
            FreeAtomTemplate::all_free().position(&[1.0, 2.0, 3.0]),
            [1.0, 2.0, 3.0]
        );
    }
}
