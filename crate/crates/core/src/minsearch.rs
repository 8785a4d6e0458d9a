//! Threshold-adapted Grover minimum search.
//!
//! Every round prepares the uniform superposition, marks all grid points whose
//! objective is at or below the best value measured so far, applies the
//! number of Grover steps the schedule prescribes for that round, measures
//! once, and lowers the threshold if the measured value beats it. The first
//! round has no threshold, so every index is marked.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::grid_brute_min;
use crate::encoding::RegisterLayout;
use crate::grover;
use crate::objectives::Objective;
use crate::rng;
use crate::statevector::{MarkedSet, Statevector, MAX_QUBITS};
use crate::{Error, Result};

/// Per-round iteration counts from Baritompa et al.
pub const BARITOMPA: [usize; 24] = [
    0, 0, 0, 1, 1, 0, 1, 1, 2, 1, 2, 3, 1, 4, 5, 1, 6, 2, 7, 9, 11, 13, 16, 5,
];

/// How many Grover steps precede each measurement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Schedule {
    /// The fixed 24-entry list; with `extend` it keeps repeating the last
    /// entry afterwards, otherwise the schedule ends.
    Baritompa {
        extend: bool,
    },
    /// 1, 2, 3, ... without end.
    Incremental,
    Constant(usize),
    Custom(Vec<usize>),
}

impl Schedule {
    pub fn baritompa() -> Self {
        Schedule::Baritompa { extend: true }
    }

    /// Iterations for 0-based `round`, and whether the entry lies past the end
    /// of a finite list. `None` once the schedule is exhausted.
    pub fn iterations(&self, round: usize) -> Option<(usize, bool)> {
        match self {
            Schedule::Baritompa { extend } => match BARITOMPA.get(round) {
                Some(&k) => Some((k, false)),
                None if *extend => Some((BARITOMPA[BARITOMPA.len() - 1], true)),
                None => None,
            },
            Schedule::Incremental => Some((round + 1, false)),
            Schedule::Constant(k) => Some((*k, false)),
            Schedule::Custom(list) => list.get(round).map(|&k| (k, false)),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Baritompa { extend: true } => f.write_str("baritompa"),
            Schedule::Baritompa { extend: false } => f.write_str("baritompa-strict"),
            Schedule::Incremental => f.write_str("incremental"),
            Schedule::Constant(k) => write!(f, "constant:{k}"),
            Schedule::Custom(list) => {
                f.write_str("custom:")?;
                for (i, k) in list.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{k}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "baritompa" => return Ok(Schedule::baritompa()),
            "baritompa-strict" => return Ok(Schedule::Baritompa { extend: false }),
            "incremental" => return Ok(Schedule::Incremental),
            _ => {}
        }
        let bad = || Error::invalid(format!("unrecognised schedule {s:?}"));
        if let Some(k) = s.strip_prefix("constant:") {
            return k.trim().parse().map(Schedule::Constant).map_err(|_| bad());
        }
        if let Some(list) = s.strip_prefix("custom:") {
            return list
                .split(',')
                .map(|k| k.trim().parse::<usize>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Schedule::Custom)
                .map_err(|_| bad());
        }
        Err(bad())
    }
}

impl Serialize for Schedule {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Schedule {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

/// Which grid points the oracle marks relative to the threshold `M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Marking {
    /// `f <= M`; the incumbent stays marked.
    #[default]
    AtMost,
    /// `f < M`.
    Below,
}

/// Rounds without improvement before a search is declared converged.
pub const DEFAULT_STALL_WINDOW: usize = 11;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule {
    /// Stop after this many consecutive rounds without a lower threshold.
    pub stall_window: Option<usize>,
    /// Stop as soon as a measured value is at or below this.
    pub target: Option<f64>,
    /// Hard cap on rounds for unbounded schedules.
    pub max_rounds: usize,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            stall_window: Some(DEFAULT_STALL_WINDOW),
            target: None,
            max_rounds: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub schedule: Schedule,
    pub stop: StopRule,
    pub marking: Marking,
}

impl SearchConfig {
    pub fn new(schedule: Schedule) -> Self {
        SearchConfig {
            schedule,
            stop: StopRule::default(),
            marking: Marking::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RoundRecord {
    /// 1-based round number.
    pub round: usize,
    pub iterations: usize,
    pub index: usize,
    pub point: Vec<f64>,
    pub value: f64,
    /// Threshold in force while marking; `None` means no threshold yet.
    pub threshold_before: Option<f64>,
    /// Threshold after the measurement, `min(threshold_before, value)`.
    pub threshold: f64,
    pub marked_count: usize,
    /// The iteration count came from extending a finite schedule.
    pub extended: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SearchTrace {
    pub rounds: Vec<RoundRecord>,
    pub total_grover_iterations: usize,
    /// Round on which the final best value was first measured.
    pub best_round: usize,
    /// Grover iterations spent up to and including `best_round`.
    pub iterations_to_best: usize,
}

impl SearchTrace {
    pub fn num_rounds(&self) -> usize {
        self.rounds.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    Target,
    Stalled,
    ScheduleExhausted,
    RoundLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub best_value: f64,
    pub best_index: usize,
    pub best_point: Vec<f64>,
    pub trace: SearchTrace,
    pub converged: bool,
    pub stop_reason: StopReason,
}

/// Runs `n_runs` independent searches in parallel, member `k` on stream `k`
/// of `base_seed`. Results come back in member order, failures included.
pub fn run_members<O: Objective + ?Sized>(
    landscape: &Landscape<'_, O>,
    config: &SearchConfig,
    n_runs: usize,
    base_seed: u64,
) -> Vec<Result<SearchResult>> {
    landscape.values();
    (0..n_runs)
        .into_par_iter()
        .map(|run| {
            let mut rng = rng::split(base_seed, run as u64);
            search(landscape, config, &mut rng, &mut |_| {})
        })
        .collect()
}

/// What an observer sees just before each measurement.
pub struct RoundView<'a> {
    pub round: usize,
    pub state: &'a Statevector,
    pub marked: &'a MarkedSet,
    pub threshold: Option<f64>,
}

/// Objective values over every grid point, computed on first use.
pub struct Landscape<'a, O: ?Sized> {
    objective: &'a O,
    layout: &'a RegisterLayout,
    values: OnceLock<Vec<f64>>,
}

impl<'a, O: Objective + ?Sized> Landscape<'a, O> {
    pub fn new(objective: &'a O, layout: &'a RegisterLayout) -> Result<Self> {
        if objective.arity() != layout.arity() {
            return Err(Error::invalid(format!(
                "objective {} takes {} inputs, layout has {} variables",
                objective.name(),
                objective.arity(),
                layout.arity()
            )));
        }
        if layout.total_qubits() > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "layout needs {} qubits, simulator cap is {MAX_QUBITS}",
                layout.total_qubits()
            )));
        }
        Ok(Landscape {
            objective,
            layout,
            values: OnceLock::new(),
        })
    }

    pub fn layout(&self) -> &RegisterLayout {
        self.layout
    }

    pub fn values(&self) -> &[f64] {
        self.values.get_or_init(|| {
            (0..self.layout.num_points())
                .into_par_iter()
                .map(|i| {
                    self.objective
                        .evaluate(&self.layout.decode(i).expect("in range"))
                })
                .collect()
        })
    }

    pub fn value(&self, index: usize) -> f64 {
        match self.values.get() {
            Some(v) => v[index],
            None => self
                .objective
                .evaluate(&self.layout.decode(index).expect("in range")),
        }
    }

    fn mark(&self, threshold: Option<f64>, marking: Marking) -> MarkedSet {
        let n = self.layout.num_points();
        match threshold {
            None => MarkedSet::all(n),
            Some(m) => {
                let values = self.values();
                match marking {
                    Marking::AtMost => MarkedSet::from_predicate(n, |i| values[i] <= m),
                    Marking::Below => MarkedSet::from_predicate(n, |i| values[i] < m),
                }
            }
        }
    }
}

pub fn adapted_grover_min<O, R>(
    objective: &O,
    layout: &RegisterLayout,
    config: &SearchConfig,
    rng: &mut R,
) -> Result<SearchResult>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let landscape = Landscape::new(objective, layout)?;
    search(&landscape, config, rng, &mut |_| {})
}

/// As [`adapted_grover_min`], calling `observer` with the amplified state
/// before every measurement.
pub fn adapted_grover_min_observed<O, R>(
    objective: &O,
    layout: &RegisterLayout,
    config: &SearchConfig,
    rng: &mut R,
    observer: &mut dyn FnMut(RoundView<'_>),
) -> Result<SearchResult>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let landscape = Landscape::new(objective, layout)?;
    search(&landscape, config, rng, observer)
}

/// Runs one search against a shared [`Landscape`].
pub fn search<O, R>(
    landscape: &Landscape<'_, O>,
    config: &SearchConfig,
    rng: &mut R,
    observer: &mut dyn FnMut(RoundView<'_>),
) -> Result<SearchResult>
where
    O: Objective + ?Sized,
    R: Rng + ?Sized,
{
    let layout = landscape.layout();
    let n_qubits = layout.total_qubits();
    let stop = &config.stop;

    let mut trace = SearchTrace::default();
    let mut threshold: Option<f64> = None;
    let mut best_index = 0usize;
    let mut since_improvement = 0usize;

    let stop_reason = loop {
        let round = trace.rounds.len();
        if round >= stop.max_rounds {
            break StopReason::RoundLimit;
        }
        let Some((k, extended)) = config.schedule.iterations(round) else {
            break StopReason::ScheduleExhausted;
        };

        let marked = landscape.mark(threshold, config.marking);
        let mut state = Statevector::uniform(n_qubits)?;
        grover::iterate(&mut state, &marked, k);
        observer(RoundView {
            round: round + 1,
            state: &state,
            marked: &marked,
            threshold,
        });

        let index = state.sample(rng)?;
        let value = landscape.value(index);
        if value.is_nan() {
            return Err(Error::NumericFailure(format!(
                "objective is NaN at index {index}"
            )));
        }
        trace.total_grover_iterations += k;

        let improved = threshold.is_none_or(|m| value < m);
        let after = if improved { value } else { threshold.unwrap() };
        if improved {
            best_index = index;
            since_improvement = 0;
            trace.best_round = round + 1;
            trace.iterations_to_best = trace.total_grover_iterations;
        } else {
            since_improvement += 1;
        }
        trace.rounds.push(RoundRecord {
            round: round + 1,
            iterations: k,
            index,
            point: layout.decode(index)?,
            value,
            threshold_before: threshold,
            threshold: after,
            marked_count: marked.count(),
            extended,
        });
        threshold = Some(after);

        if stop.target.is_some_and(|t| after <= t) {
            break StopReason::Target;
        }
        if stop.stall_window.is_some_and(|w| since_improvement >= w) {
            break StopReason::Stalled;
        }
    };

    let Some(best_value) = threshold else {
        return Err(Error::invalid(
            "search stopped before its first measurement",
        ));
    };
    Ok(SearchResult {
        best_value,
        best_index,
        best_point: layout.decode(best_index)?,
        trace,
        converged: matches!(stop_reason, StopReason::Target | StopReason::Stalled),
        stop_reason,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HistogramBin {
    pub bin: usize,
    pub count: usize,
}

fn histogram(samples: impl Iterator<Item = usize>) -> Vec<HistogramBin> {
    let mut counts = std::collections::BTreeMap::new();
    for s in samples {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .map(|(bin, count)| HistogramBin { bin, count })
        .collect()
}

fn mean(xs: &[usize]) -> f64 {
    xs.iter().sum::<usize>() as f64 / xs.len() as f64
}

fn median(xs: &[usize]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_unstable();
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2] as f64
    } else {
        (v[n / 2 - 1] + v[n / 2]) as f64 / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleStats {
    pub runs: usize,
    pub successes: usize,
    pub success_fraction: f64,
    /// Grid minimum a run must reach to count as a success.
    pub reference_value: f64,
    pub mean_rounds: f64,
    pub median_rounds: f64,
    pub mean_total_iterations: f64,
    pub median_total_iterations: f64,
    pub mean_iterations_to_best: f64,
    pub median_iterations_to_best: f64,
    pub rounds_histogram: Vec<HistogramBin>,
    pub iterations_histogram: Vec<HistogramBin>,
}

impl EnsembleStats {
    pub fn from_results(results: &[SearchResult], reference_value: f64) -> Result<Self> {
        if results.is_empty() {
            return Err(Error::invalid("ensemble needs at least one run"));
        }
        let rounds: Vec<usize> = results.iter().map(|r| r.trace.num_rounds()).collect();
        let totals: Vec<usize> = results
            .iter()
            .map(|r| r.trace.total_grover_iterations)
            .collect();
        let to_best: Vec<usize> = results.iter().map(|r| r.trace.iterations_to_best).collect();
        let successes = results
            .iter()
            .filter(|r| r.best_value <= reference_value)
            .count();
        Ok(EnsembleStats {
            runs: results.len(),
            successes,
            success_fraction: successes as f64 / results.len() as f64,
            reference_value,
            mean_rounds: mean(&rounds),
            median_rounds: median(&rounds),
            mean_total_iterations: mean(&totals),
            median_total_iterations: median(&totals),
            mean_iterations_to_best: mean(&to_best),
            median_iterations_to_best: median(&to_best),
            rounds_histogram: histogram(rounds.iter().copied()),
            iterations_histogram: histogram(totals.iter().copied()),
        })
    }
}

#[derive(Debug, Clone)]
pub struct Ensemble {
    /// Run `i` used stream `i` of the base seed.
    pub results: Vec<SearchResult>,
    pub stats: EnsembleStats,
}

/// `n_runs` independent searches in parallel, run `i` seeded from stream `i`
/// of `base_seed`. Success means reaching the exhaustive grid minimum.
pub fn run_ensemble<O>(
    objective: &O,
    layout: &RegisterLayout,
    config: &SearchConfig,
    n_runs: usize,
    base_seed: u64,
) -> Result<Ensemble>
where
    O: Objective + ?Sized,
{
    if n_runs == 0 {
        return Err(Error::invalid("ensemble needs at least one run"));
    }
    let reference = grid_brute_min(objective, layout)?;
    let landscape = Landscape::new(objective, layout)?;
    let results = run_members(&landscape, config, n_runs, base_seed)
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let stats = EnsembleStats::from_results(&results, reference.value)?;
    Ok(Ensemble { results, stats })
}
