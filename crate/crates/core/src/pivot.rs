//! Pivot hybrid: classical probes, Grover-amplified selection, Gaussian
//! resampling.
//!
//! Each generation holds `N` probes. The lowest fraction of them (by a
//! classical quantile) is marked, a register over the probe indices is
//! amplified towards the marked set, and pivots are measured out of it. New
//! probes are scattered around pivots chosen with Boltzmann weights. The
//! controlled-Hadamard spreading step is modelled by its output distribution
//! only.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::Normal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoding::{RegisterLayout, VariableSpec};
use crate::grover::{self, AmplificationPlan};
use crate::objectives::{
    build_fixed_core, distance, ClusterGeometry, FreeAtomEnergy, FreeAtomTemplate, LjTrimer,
    Objective, Position,
};
use crate::statevector::{MarkedSet, Statevector, MAX_QUBITS};
use crate::{Error, Result};

pub const DEFAULT_FRACTION: f64 = 0.15;
pub const DEFAULT_KT: f64 = 50.0;

/// Probe points and their objective values.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSet {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

impl ProbeSet {
    /// Evaluates `objective` at every point.
    pub fn evaluate<O: Objective + ?Sized>(objective: &O, points: Vec<Vec<f64>>) -> Self {
        let values = points.par_iter().map(|p| objective.evaluate(p)).collect();
        ProbeSet { points, values }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lowest value and its position, first occurrence on ties, NaN ignored.
    pub fn best(&self) -> Option<(usize, f64)> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| !v.is_nan())
            .fold(None, |acc, (i, &v)| match acc {
                Some((_, b)) if b <= v => acc,
                _ => Some((i, v)),
            })
    }
}

fn check_box(bounds: &[(f64, f64)]) -> Result<()> {
    if bounds.is_empty() {
        return Err(Error::invalid("search box has no coordinates"));
    }
    for (i, &(lo, hi)) in bounds.iter().enumerate() {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::invalid(format!(
                "coordinate {i}: empty interval [{lo}, {hi}]"
            )));
        }
    }
    Ok(())
}

/// `n` points drawn uniformly from the box. A coordinate with `lo == hi` is
/// held at that value.
pub fn generate_points<R: Rng + ?Sized>(
    bounds: &[(f64, f64)],
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_box(bounds)?;
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 probes, got {n}")));
    }
    Ok((0..n)
        .map(|_| {
            bounds
                .iter()
                .map(|&(lo, hi)| (lo + rng.random::<f64>() * (hi - lo)).clamp(lo, hi))
                .collect()
        })
        .collect())
}

/// Uniform probes over the box, evaluated.
pub fn generate_probes<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    bounds: &[(f64, f64)],
    n: usize,
    rng: &mut R,
) -> Result<ProbeSet> {
    check_arity(objective, bounds.len())?;
    Ok(ProbeSet::evaluate(
        objective,
        generate_points(bounds, n, rng)?,
    ))
}

fn check_arity<O: Objective + ?Sized>(objective: &O, dims: usize) -> Result<()> {
    if objective.arity() != dims {
        return Err(Error::invalid(format!(
            "objective {} takes {} inputs, box has {dims} coordinates",
            objective.name(),
            objective.arity()
        )));
    }
    Ok(())
}

/// Outcome of one amplified selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    /// Probe indices in the order they were measured.
    pub indices: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Quantile value; every pivot is at or below it.
    pub threshold: f64,
    pub marked_count: usize,
    /// Grover steps applied before each measurement.
    pub iterations_per_draw: usize,
    pub marked_probability: f64,
    pub draws: usize,
    /// Draws that landed on an unmarked index.
    pub rejected: usize,
    /// `iterations_per_draw * draws`: every measurement consumes a freshly
    /// amplified register.
    pub grover_iterations: usize,
}

/// Picks `ceil(fraction * N)` of the lowest probes by measuring an amplified
/// register over probe indices.
///
/// When `N` is not a power of two the register is padded with indices that
/// are never marked.
pub fn select_pivots<R: Rng + ?Sized>(
    probes: &ProbeSet,
    fraction: f64,
    rng: &mut R,
) -> Result<Selection> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "fraction {fraction} outside (0, 1]"
        )));
    }
    let n = probes.len();
    if n < 2 || probes.values.len() != n {
        return Err(Error::invalid("need at least 2 evaluated probes"));
    }
    let wanted = ((fraction * n as f64).ceil() as usize).clamp(1, n);

    let mut sorted = probes.values.clone();
    sorted.sort_by(f64::total_cmp);
    let threshold = sorted[wanted - 1];
    if threshold.is_nan() {
        return Err(Error::NumericFailure(format!(
            "fewer than {wanted} probes have a numeric value"
        )));
    }

    let qubits = n.next_power_of_two().trailing_zeros() as usize;
    if qubits > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "{n} probes exceed the simulator cap"
        )));
    }
    let dim = 1usize << qubits;
    let marked = MarkedSet::from_predicate(dim, |i| i < n && probes.values[i] <= threshold);
    let plan = AmplificationPlan::new(dim, marked.count())?;
    let k = plan.optimal_iterations;

    let mut state = Statevector::uniform(qubits)?;
    grover::iterate(&mut state, &marked, k);
    let marked_probability = state.marked_probability(&marked);

    let mut indices = Vec::with_capacity(wanted);
    let mut draws = 0;
    for i in state.draw_order(rng)? {
        draws += 1;
        if marked.contains(i) {
            indices.push(i);
            if indices.len() == wanted {
                break;
            }
        }
    }
    if indices.len() < wanted {
        return Err(Error::NumericFailure(
            "amplified register lost support on marked probes".into(),
        ));
    }

    Ok(Selection {
        points: indices.iter().map(|&i| probes.points[i].clone()).collect(),
        values: indices.iter().map(|&i| probes.values[i]).collect(),
        indices,
        threshold,
        marked_count: marked.count(),
        iterations_per_draw: k,
        marked_probability,
        draws,
        rejected: draws - wanted,
        grover_iterations: k * draws,
    })
}

/// Normalised `exp(-f/kT)`, shifted by the minimum so the largest weight is 1
/// before normalisation. NaN values get weight 0.
pub fn boltzmann_weights(values: &[f64], kt: f64) -> Result<Vec<f64>> {
    if kt.is_nan() || kt <= 0.0 {
        return Err(Error::invalid(format!("kT must be positive, got {kt}")));
    }
    let fmin = values
        .iter()
        .copied()
        .filter(|v| !v.is_nan())
        .fold(f64::INFINITY, f64::min);
    if !fmin.is_finite() {
        return Err(Error::NumericFailure("no finite value to weight".into()));
    }
    let raw: Vec<f64> = values
        .iter()
        .map(|&v| {
            if v.is_nan() {
                0.0
            } else {
                (-(v - fmin) / kt).exp()
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Pivots of one generation with their resampling parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotState {
    pub selection: Selection,
    pub weights: Vec<f64>,
    /// Per-coordinate Gaussian width in domain units.
    pub sigma: Vec<f64>,
    pub generation: usize,
}

impl PivotState {
    pub fn new(selection: Selection, kt: f64, sigma: Vec<f64>, generation: usize) -> Result<Self> {
        let weights = boltzmann_weights(&selection.values, kt)?;
        Ok(PivotState {
            selection,
            weights,
            sigma,
            generation,
        })
    }

    pub fn pivots(&self) -> &[Vec<f64>] {
        &self.selection.points
    }
}

/// Options for [`resample`].
#[derive(Debug, Clone, Copy)]
pub struct ResampleOptions<'a> {
    /// Carry the pivots over unchanged.
    pub elitism: bool,
    /// Snap every offspring onto this grid.
    pub snap: Option<&'a RegisterLayout>,
}

/// New probe positions: the pivots (with elitism) followed by offspring, each a
/// Boltzmann-chosen pivot plus per-coordinate Gaussian noise, clamped to the
/// box. The result always has `n` points.
pub fn resample<R: Rng + ?Sized>(
    state: &PivotState,
    n: usize,
    bounds: &[(f64, f64)],
    options: ResampleOptions<'_>,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    check_box(bounds)?;
    let pivots = state.pivots();
    if pivots.is_empty() {
        return Err(Error::invalid("no pivots to resample around"));
    }
    if state.sigma.len() != bounds.len() || pivots.iter().any(|p| p.len() != bounds.len()) {
        return Err(Error::invalid("pivot dimension does not match the box"));
    }
    let noise = state
        .sigma
        .iter()
        .map(|&s| Normal::new(0.0, s).map_err(|e| Error::invalid(format!("sigma {s}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let chooser = WeightedIndex::new(&state.weights)
        .map_err(|e| Error::NumericFailure(format!("Boltzmann weights: {e}")))?;

    let mut out: Vec<Vec<f64>> = Vec::with_capacity(n);
    if options.elitism {
        out.extend(pivots.iter().take(n).cloned());
    }
    while out.len() < n {
        let base = &pivots[chooser.sample(rng)];
        let mut child: Vec<f64> = base
            .iter()
            .zip(&noise)
            .zip(bounds)
            .map(|((&x, d), &(lo, hi))| (x + d.sample(rng)).clamp(lo, hi))
            .collect();
        if let Some(layout) = options.snap {
            layout.snap(&mut child)?;
        }
        out.push(child);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PivotConfig {
    pub fraction: f64,
    pub kt: f64,
    /// Initial width as a fraction of each coordinate's range.
    pub sigma_init_fraction: f64,
    pub sigma_decay: f64,
    pub sigma_floor: f64,
    /// Generations without a lower best before stopping.
    pub stall_generations: usize,
    pub max_generations: usize,
    pub elitism: bool,
    /// Restrict probes to the grid of a register layout over the same box.
    pub snap: Option<RegisterLayout>,
}

impl Default for PivotConfig {
    fn default() -> Self {
        PivotConfig {
            fraction: DEFAULT_FRACTION,
            kt: DEFAULT_KT,
            sigma_init_fraction: 0.125,
            sigma_decay: 0.95,
            sigma_floor: 1e-4,
            stall_generations: 30,
            max_generations: 500,
            elitism: true,
            snap: None,
        }
    }
}

impl PivotConfig {
    fn validate(&self, bounds: &[(f64, f64)]) -> Result<()> {
        if !(self.sigma_init_fraction >= 0.0 && self.sigma_init_fraction.is_finite()) {
            return Err(Error::invalid("sigma_init_fraction must be non-negative"));
        }
        if !(self.sigma_decay > 0.0 && self.sigma_decay <= 1.0) {
            return Err(Error::invalid("sigma_decay must lie in (0, 1]"));
        }
        if !(self.sigma_floor >= 0.0 && self.sigma_floor.is_finite()) {
            return Err(Error::invalid("sigma_floor must be non-negative"));
        }
        if self.stall_generations == 0 {
            return Err(Error::invalid("stall_generations must be at least 1"));
        }
        if let Some(layout) = &self.snap {
            if layout.bounds() != bounds {
                return Err(Error::invalid("snap layout must span the search box"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub num_pivots: usize,
    pub sigma: Vec<f64>,
    pub threshold: f64,
    pub marked_count: usize,
    pub draws: usize,
    pub grover_iterations: usize,
    /// Best value seen up to and including this generation.
    pub best_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PivotResult {
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub generations: Vec<GenerationRecord>,
    pub total_grover_iterations: usize,
    pub evaluations: usize,
    /// Stopped on the stall rule rather than the generation cap.
    pub converged: bool,
}

/// Runs the hybrid on `2^qubits` probes per generation until the best value
/// stalls or `max_generations` is reached.
pub fn pivot_grover_search<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    bounds: &[(f64, f64)],
    qubits: usize,
    config: &PivotConfig,
    rng: &mut R,
) -> Result<PivotResult> {
    check_box(bounds)?;
    check_arity(objective, bounds.len())?;
    config.validate(bounds)?;
    if qubits == 0 || qubits > MAX_QUBITS {
        return Err(Error::invalid(format!(
            "qubits {qubits} outside 1..={MAX_QUBITS}"
        )));
    }
    let n = 1usize << qubits;
    let snap = config.snap.as_ref();

    let mut points = generate_points(bounds, n, rng)?;
    if let Some(layout) = snap {
        for p in &mut points {
            layout.snap(p)?;
        }
    }
    let mut probes = ProbeSet::evaluate(objective, points);
    let mut evaluations = n;
    let (i0, v0) = probes
        .best()
        .ok_or_else(|| Error::NumericFailure("objective is NaN at every probe".into()))?;
    let mut best_value = v0;
    let mut best_point = probes.points[i0].clone();

    let mut sigma: Vec<f64> = bounds
        .iter()
        .map(|&(lo, hi)| (hi - lo) * config.sigma_init_fraction)
        .collect();
    let mut generations = Vec::new();
    let mut total_grover_iterations = 0;
    let mut stall = 0;
    let mut converged = false;

    for generation in 0..config.max_generations {
        let selection = select_pivots(&probes, config.fraction, rng)?;
        total_grover_iterations += selection.grover_iterations;
        let state = PivotState::new(selection, config.kt, sigma.clone(), generation)?;

        let next = resample(
            &state,
            n,
            bounds,
            ResampleOptions {
                elitism: config.elitism,
                snap,
            },
            rng,
        )?;
        probes = ProbeSet::evaluate(objective, next);
        evaluations += n;

        match probes.best() {
            Some((i, v)) if v < best_value => {
                best_value = v;
                best_point = probes.points[i].clone();
                stall = 0;
            }
            _ => stall += 1,
        }
        generations.push(GenerationRecord {
            generation,
            num_pivots: state.selection.indices.len(),
            sigma: state.sigma,
            threshold: state.selection.threshold,
            marked_count: state.selection.marked_count,
            draws: state.selection.draws,
            grover_iterations: state.selection.grover_iterations,
            best_value,
        });

        if stall >= config.stall_generations {
            converged = true;
            break;
        }
        for s in &mut sigma {
            *s = (*s * config.sigma_decay).max(config.sigma_floor);
        }
    }

    Ok(PivotResult {
        best_value,
        best_point,
        generations,
        total_grover_iterations,
        evaluations,
        converged,
    })
}

/// Which coordinates of the added atom are searched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GrowthMethod {
    /// X held at 0; Y and Z each get `qubits_per_axis` qubits.
    PinnedX,
    /// X, Y, Z all searched on a 4+3+3 register.
    FreeXyz,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthConfig {
    pub method: GrowthMethod,
    pub qubits_per_axis: usize,
    /// Qubits for the bond and angle of the trimer stage.
    pub trimer_qubits: (usize, usize),
    /// Also search the mirrored `Z < 0` box for the fifth atom.
    pub mirror_fifth: bool,
    /// Keep probes on each stage's register grid.
    pub snap_to_grid: bool,
    /// Search settings shared by every stage; its `snap` field is ignored.
    pub pivot: PivotConfig,
}

impl Default for GrowthConfig {
    fn default() -> Self {
        GrowthConfig {
            method: GrowthMethod::PinnedX,
            qubits_per_axis: 5,
            trimer_qubits: (5, 5),
            mirror_fifth: true,
            snap_to_grid: false,
            pivot: PivotConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthStage {
    pub atoms: usize,
    pub energy: f64,
    /// Every atom after this stage, the added one last.
    pub geometry: Vec<Position>,
    /// Distances from the added atom to each earlier atom.
    pub distances: Vec<f64>,
    pub grover_iterations: usize,
    pub generations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    /// Equilateral bond taken from the trimer stage.
    pub bond: f64,
    pub stages: Vec<GrowthStage>,
}

impl GrowthReport {
    pub fn final_stage(&self) -> &GrowthStage {
        self.stages
            .last()
            .expect("growth always has a trimer stage")
    }
}

const TRIMER_BOND: (f64, f64) = (0.0001, 2.0);
const TRIMER_ANGLE: (f64, f64) = (0.0001, std::f64::consts::PI);
const UPPER: (f64, f64) = (0.01, 1.01);
const LOWER: (f64, f64) = (-1.01, -0.01);
const FREE_X: (f64, f64) = (-0.5, 0.5);

/// Grows a cluster to `target_atoms` (3, 4 or 5): a hybrid trimer search over
/// (bond, angle), then one frozen atom per stage.
pub fn lj_growth<R: Rng + ?Sized>(
    target_atoms: usize,
    config: &GrowthConfig,
    rng: &mut R,
) -> Result<GrowthReport> {
    if !(3..=5).contains(&target_atoms) {
        return Err(Error::invalid(format!(
            "growth supports 3 to 5 atoms, got {target_atoms}"
        )));
    }
    if config.qubits_per_axis == 0 {
        return Err(Error::invalid("qubits_per_axis must be positive"));
    }

    let (qb, qa) = config.trimer_qubits;
    let trimer_box = [TRIMER_BOND, TRIMER_ANGLE];
    let pivot = stage_pivot(config, &trimer_box, &[qb, qa])?;
    let trimer = pivot_grover_search(
        &LjTrimer { shared_bond: true },
        &trimer_box,
        qb + qa,
        &pivot,
        rng,
    )?;
    let bond = trimer.best_point[0];
    let mut geometry = build_fixed_core(3, bond)?;
    let mut stages = vec![GrowthStage {
        atoms: 3,
        energy: geometry.fixed_energy(),
        geometry: geometry.atoms().to_vec(),
        distances: vec![bond, bond],
        grover_iterations: trimer.total_grover_iterations,
        generations: trimer.generations.len(),
    }];

    for atoms in 4..=target_atoms {
        let mut boxes = vec![UPPER];
        if atoms == 5 && config.mirror_fifth {
            boxes.push(LOWER);
        }
        let mut best: Option<(Position, f64)> = None;
        let mut iterations = 0;
        let mut generations = 0;
        for z in boxes {
            let (template, bounds, split) = match config.method {
                GrowthMethod::PinnedX => {
                    let q = config.qubits_per_axis;
                    (FreeAtomTemplate::pinned_x(0.0), vec![UPPER, z], vec![q, q])
                }
                GrowthMethod::FreeXyz => (
                    FreeAtomTemplate::all_free(),
                    vec![FREE_X, UPPER, z],
                    vec![4, 3, 3],
                ),
            };
            let objective = FreeAtomEnergy {
                geometry: geometry.clone(),
                template,
            };
            let pivot = stage_pivot(config, &bounds, &split)?;
            let r = pivot_grover_search(&objective, &bounds, split.iter().sum(), &pivot, rng)?;
            iterations += r.total_grover_iterations;
            generations += r.generations.len();
            if best.is_none_or(|(_, e)| r.best_value < e) {
                best = Some((template.position(&r.best_point), r.best_value));
            }
        }
        let (atom, energy) = best.expect("at least one box searched");
        stages.push(freeze(
            &mut geometry,
            atom,
            energy,
            iterations,
            generations,
        )?);
    }

    Ok(GrowthReport { bond, stages })
}

fn freeze(
    geometry: &mut ClusterGeometry,
    atom: Position,
    energy: f64,
    grover_iterations: usize,
    generations: usize,
) -> Result<GrowthStage> {
    let distances = geometry
        .atoms()
        .iter()
        .map(|a| distance(a, &atom))
        .collect();
    *geometry = geometry.with_atom(atom)?;
    Ok(GrowthStage {
        atoms: geometry.atoms().len(),
        energy,
        geometry: geometry.atoms().to_vec(),
        distances,
        grover_iterations,
        generations,
    })
}

fn stage_pivot(
    growth: &GrowthConfig,
    bounds: &[(f64, f64)],
    split: &[usize],
) -> Result<PivotConfig> {
    let mut config = growth.pivot.clone();
    config.snap = None;
    if growth.snap_to_grid {
        let vars = bounds
            .iter()
            .zip(split)
            .enumerate()
            .map(|(i, (&(lo, hi), &q))| VariableSpec::new(format!("x{i}"), q, lo, hi))
            .collect::<Result<Vec<_>>>()?;
        config.snap = Some(RegisterLayout::new(vars)?);
    }
    Ok(config)
}
