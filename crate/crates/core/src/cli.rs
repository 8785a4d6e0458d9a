//! Config-driven experiment runner behind the `grovermin` binary.
//!
//! Every experiment has an embedded TOML config with the reference grid
//! layout, so `grovermin run gp` needs no arguments. Randomness flows from one
//! seed; run `k` of a multi-run experiment draws from stream `k`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{grid_brute_min, GridMinimum};
use crate::encoding::{RegisterLayout, VariableSpec};
use crate::grover;
use crate::minsearch::{
    self, EnsembleStats, HistogramBin, Landscape, Marking, Schedule, SearchConfig, SearchResult,
    StopRule, DEFAULT_STALL_WINDOW,
};
use crate::objectives::{GoldsteinPrice, LjTrimer, Objective, Shubert};
use crate::pivot::{self, GrowthConfig, GrowthMethod, GrowthReport, PivotConfig, PivotResult};
use crate::rng;
use crate::statevector::{
    dense_reference_operators, MarkedSet, Statevector, MAX_DENSE_QUBITS, MAX_QUBITS,
};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    AppendixDemo,
    Gp,
    LjTrimer,
    ShubertPivot,
    LjGrow,
    Brute,
    Ensemble,
}

impl Experiment {
    pub const ALL: [Experiment; 7] = [
        Experiment::AppendixDemo,
        Experiment::Gp,
        Experiment::LjTrimer,
        Experiment::ShubertPivot,
        Experiment::LjGrow,
        Experiment::Brute,
        Experiment::Ensemble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::AppendixDemo => "appendix-demo",
            Experiment::Gp => "gp",
            Experiment::LjTrimer => "lj-trimer",
            Experiment::ShubertPivot => "shubert-pivot",
            Experiment::LjGrow => "lj-grow",
            Experiment::Brute => "brute",
            Experiment::Ensemble => "ensemble",
        }
    }

    /// The embedded config text.
    pub fn default_config(self) -> &'static str {
        match self {
            Experiment::AppendixDemo => include_str!("../configs/appendix-demo.toml"),
            Experiment::Gp => include_str!("../configs/gp.toml"),
            Experiment::LjTrimer => include_str!("../configs/lj-trimer.toml"),
            Experiment::ShubertPivot => include_str!("../configs/shubert-pivot.toml"),
            Experiment::LjGrow => include_str!("../configs/lj-grow.toml"),
            Experiment::Brute => include_str!("../configs/brute.toml"),
            Experiment::Ensemble => include_str!("../configs/ensemble.toml"),
        }
    }

    fn uses_search(self) -> bool {
        matches!(
            self,
            Experiment::Gp | Experiment::LjTrimer | Experiment::Ensemble
        )
    }

    fn is_stochastic(self) -> bool {
        !matches!(self, Experiment::AppendixDemo | Experiment::Brute)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObjectiveKind {
    GoldsteinPrice,
    Shubert,
    /// Shared bond and angle, `(B, A)`.
    LjTrimer,
    /// Both bonds and the angle, `(B1, B2, A)`.
    LjTrimerFull,
}

impl ObjectiveKind {
    pub fn build(self) -> Box<dyn Objective> {
        match self {
            ObjectiveKind::GoldsteinPrice => Box::new(GoldsteinPrice),
            ObjectiveKind::Shubert => Box::new(Shubert),
            ObjectiveKind::LjTrimer => Box::new(LjTrimer { shared_bond: true }),
            ObjectiveKind::LjTrimerFull => Box::new(LjTrimer { shared_bond: false }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchSection {
    pub schedule: Schedule,
    pub marking: Marking,
    /// 0 disables the stall rule.
    pub stall_window: usize,
    pub target: Option<f64>,
    pub max_rounds: usize,
}

impl Default for SearchSection {
    fn default() -> Self {
        SearchSection {
            schedule: Schedule::baritompa(),
            marking: Marking::AtMost,
            stall_window: DEFAULT_STALL_WINDOW,
            target: None,
            max_rounds: StopRule::default().max_rounds,
        }
    }
}

impl SearchSection {
    pub fn to_config(&self) -> SearchConfig {
        SearchConfig {
            schedule: self.schedule.clone(),
            stop: StopRule {
                stall_window: (self.stall_window > 0).then_some(self.stall_window),
                target: self.target,
                max_rounds: self.max_rounds,
            },
            marking: self.marking,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PivotSection {
    pub fraction: f64,
    pub kt: f64,
    pub sigma_init_fraction: f64,
    pub sigma_decay: f64,
    pub sigma_floor: f64,
    pub stall_generations: usize,
    pub max_generations: usize,
    pub elitism: bool,
    /// Keep probes on the layout grid.
    pub snap: bool,
}

impl Default for PivotSection {
    fn default() -> Self {
        let d = PivotConfig::default();
        PivotSection {
            fraction: d.fraction,
            kt: d.kt,
            sigma_init_fraction: d.sigma_init_fraction,
            sigma_decay: d.sigma_decay,
            sigma_floor: d.sigma_floor,
            stall_generations: d.stall_generations,
            max_generations: d.max_generations,
            elitism: d.elitism,
            snap: false,
        }
    }
}

impl PivotSection {
    pub fn to_config(&self, layout: Option<&RegisterLayout>) -> PivotConfig {
        PivotConfig {
            fraction: self.fraction,
            kt: self.kt,
            sigma_init_fraction: self.sigma_init_fraction,
            sigma_decay: self.sigma_decay,
            sigma_floor: self.sigma_floor,
            stall_generations: self.stall_generations,
            max_generations: self.max_generations,
            elitism: self.elitism,
            snap: if self.snap { layout.cloned() } else { None },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GrowthSection {
    pub atoms: usize,
    pub method: GrowthMethod,
    pub qubits_per_axis: usize,
    pub trimer_qubits: [usize; 2],
    pub mirror_fifth: bool,
    pub snap_to_grid: bool,
}

impl Default for GrowthSection {
    fn default() -> Self {
        let d = GrowthConfig::default();
        GrowthSection {
            atoms: 5,
            method: d.method,
            qubits_per_axis: d.qubits_per_axis,
            trimer_qubits: [d.trimer_qubits.0, d.trimer_qubits.1],
            mirror_fifth: d.mirror_fifth,
            snap_to_grid: d.snap_to_grid,
        }
    }
}

/// One experiment, as read from TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    #[serde(default)]
    pub objective: Option<ObjectiveKind>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "one")]
    pub runs: usize,
    /// Directory for artifacts; nothing is written without it.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub emit_distributions: bool,
    #[serde(default)]
    pub layout: Vec<VariableSpec>,
    #[serde(default)]
    pub search: SearchSection,
    #[serde(default)]
    pub pivot: PivotSection,
    #[serde(default)]
    pub growth: GrowthSection,
}

fn one() -> usize {
    1
}

impl RunConfig {
    /// Parses and validates; errors carry the offending line.
    pub fn parse(src: &str) -> Result<Self> {
        let config: RunConfig = toml::from_str(src).map_err(|e| Error::Config {
            line: e.span().map_or(1, |s| {
                src[..s.start.min(src.len())].matches('\n').count() + 1
            }),
            message: e.message().trim().to_string(),
        })?;
        config.validate(src)?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&src)
    }

    pub fn embedded(experiment: Experiment) -> Self {
        Self::parse(experiment.default_config()).expect("embedded configs are valid")
    }

    fn validate(&self, src: &str) -> Result<()> {
        let at = |section: Option<&str>, key: &str, message: String| Error::Config {
            line: key_line(src, section, key),
            message,
        };
        let exp = self.experiment;
        if self.runs == 0 {
            return Err(at(None, "runs", "runs must be at least 1".into()));
        }
        if exp.is_stochastic() && self.seed.is_none() {
            return Err(at(
                None,
                "experiment",
                format!("{} needs a seed", exp.name()),
            ));
        }
        if exp == Experiment::LjGrow {
            let g = &self.growth;
            if !(3..=5).contains(&g.atoms) {
                return Err(at(
                    Some("growth"),
                    "atoms",
                    format!("atoms {} outside 3..=5", g.atoms),
                ));
            }
            if g.qubits_per_axis == 0 || g.trimer_qubits.contains(&0) {
                return Err(at(
                    Some("growth"),
                    "qubits_per_axis",
                    "qubit counts must be positive".into(),
                ));
            }
        } else {
            let Some(kind) = self.objective else {
                return Err(at(
                    None,
                    "experiment",
                    format!("{} needs an objective", exp.name()),
                ));
            };
            if self.layout.is_empty() {
                return Err(at(None, "objective", "layout has no variables".into()));
            }
            for (i, v) in self.layout.iter().enumerate() {
                VariableSpec::new(v.name.clone(), v.qubits, v.lo, v.hi).map_err(|e| {
                    Error::Config {
                        line: nth_header_line(src, "[[layout]]", i),
                        message: e.to_string(),
                    }
                })?;
            }
            let layout = self.register()?;
            let arity = kind.build().arity();
            if arity != layout.arity() {
                return Err(at(
                    None,
                    "objective",
                    format!(
                        "objective takes {arity} inputs, layout has {} variables",
                        layout.arity()
                    ),
                ));
            }
            let cap = if exp == Experiment::AppendixDemo {
                MAX_DENSE_QUBITS
            } else {
                MAX_QUBITS
            };
            if layout.total_qubits() > cap {
                return Err(at(
                    None,
                    "objective",
                    format!(
                        "layout uses {} qubits, {} allows {cap}",
                        layout.total_qubits(),
                        exp.name()
                    ),
                ));
            }
        }
        if exp.uses_search() && self.search.max_rounds == 0 {
            return Err(at(
                Some("search"),
                "max_rounds",
                "max_rounds must be positive".into(),
            ));
        }
        if matches!(exp, Experiment::ShubertPivot | Experiment::LjGrow) {
            let p = &self.pivot;
            if !(p.fraction > 0.0 && p.fraction <= 1.0) {
                return Err(at(
                    Some("pivot"),
                    "fraction",
                    format!("fraction {} outside (0, 1]", p.fraction),
                ));
            }
            if p.kt.is_nan() || p.kt <= 0.0 {
                return Err(at(
                    Some("pivot"),
                    "kt",
                    format!("kt must be positive, got {}", p.kt),
                ));
            }
            if !(p.sigma_decay > 0.0 && p.sigma_decay <= 1.0) {
                return Err(at(
                    Some("pivot"),
                    "sigma_decay",
                    "sigma_decay must lie in (0, 1]".into(),
                ));
            }
            if p.stall_generations == 0 {
                return Err(at(
                    Some("pivot"),
                    "stall_generations",
                    "stall_generations must be positive".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn register(&self) -> Result<RegisterLayout> {
        RegisterLayout::new(self.layout.clone())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn objective_fn(&self) -> Result<Box<dyn Objective>> {
        self.objective
            .map(ObjectiveKind::build)
            .ok_or_else(|| Error::invalid(format!("{} needs an objective", self.experiment.name())))
    }

    fn growth_config(&self) -> GrowthConfig {
        let g = &self.growth;
        GrowthConfig {
            method: g.method,
            qubits_per_axis: g.qubits_per_axis,
            trimer_qubits: (g.trimer_qubits[0], g.trimer_qubits[1]),
            mirror_fifth: g.mirror_fifth,
            snap_to_grid: g.snap_to_grid,
            pivot: self.pivot.to_config(None),
        }
    }
}

// Line of `key = ...` inside `[section]` (top level when `None`), falling back
// to the section header, then to line 1.
fn key_line(src: &str, section: Option<&str>, key: &str) -> usize {
    let mut current: Option<String> = None;
    let mut header = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('[') {
            let name = line
                .trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string();
            if section == Some(name.as_str()) && header.is_none() {
                header = Some(i + 1);
            }
            current = Some(name);
            continue;
        }
        if current.as_deref() == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    header.unwrap_or(1)
}

fn nth_header_line(src: &str, header: &str, n: usize) -> usize {
    src.lines()
        .enumerate()
        .filter(|(_, l)| l.trim() == header)
        .nth(n)
        .map_or(1, |(i, _)| i + 1)
}

/// The two-qubit walk-through with every intermediate vector and matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AppendixDemo {
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// Step 1: `|s>`.
    pub source: Vec<f64>,
    /// Step 2: `P_s = 2|s><s| - I`.
    pub p_s: Vec<Vec<f64>>,
    /// Step 3: lowest grid point, found classically, and `|t>`.
    pub target_index: usize,
    pub target_point: Vec<f64>,
    pub target: Vec<f64>,
    /// Step 4: `P_t = I - 2|t><t|`.
    pub p_t: Vec<Vec<f64>>,
    /// Step 5: `P_t|s>` and `P_s P_t |s>` from the dense matrices.
    pub flipped: Vec<f64>,
    pub final_state: Vec<f64>,
    /// The same step through the fast statevector path.
    pub fast_path: Vec<f64>,
}

/// Builds the dense walk-through for a small register.
pub fn appendix_demo<O: Objective + ?Sized>(
    objective: &O,
    layout: &RegisterLayout,
) -> Result<AppendixDemo> {
    let n = layout.total_qubits();
    let min = grid_brute_min(objective, layout)?;
    let marked = MarkedSet::from_indices(layout.num_points(), [min.index])?;
    let (ps, pt) = dense_reference_operators(n, &marked)?;
    let dim = layout.num_points();
    let source = nalgebra::DVector::from_element(dim, (dim as f64).sqrt().recip());
    let flipped = &pt * &source;
    let final_state = &ps * &flipped;

    let mut state = Statevector::uniform(n)?;
    grover::grover_iteration(&mut state, &marked);

    let rows = |m: &nalgebra::DMatrix<f64>| -> Vec<Vec<f64>> {
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    };
    let grid = (0..dim)
        .map(|i| layout.decode(i))
        .collect::<Result<Vec<_>>>()?;
    Ok(AppendixDemo {
        values: grid.iter().map(|p| objective.evaluate(p)).collect(),
        grid,
        source: source.iter().copied().collect(),
        p_s: rows(&ps),
        target_index: min.index,
        target_point: min.point,
        target: (0..dim)
            .map(|i| f64::from(u8::from(i == min.index)))
            .collect(),
        p_t: rows(&pt),
        flipped: flipped.iter().copied().collect(),
        final_state: final_state.iter().copied().collect(),
        fast_path: state.amplitudes().iter().map(|a| a.re).collect(),
    })
}

impl AppendixDemo {
    fn describe(&self) -> String {
        let vec = |v: &[f64]| {
            let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
            format!("({})", parts.join(", "))
        };
        let mut s = String::new();
        let _ = writeln!(s, "Step (1) |s> = {}", vec(&self.source));
        let _ = writeln!(s, "Step (2) P_s =");
        for row in &self.p_s {
            let _ = writeln!(s, "  {}", vec(row));
        }
        let _ = writeln!(
            s,
            "Step (3) lowest grid point {} (index {}), |t> = {}",
            vec(&self.target_point),
            self.target_index,
            vec(&self.target)
        );
        let _ = writeln!(s, "Step (4) P_t =");
        for row in &self.p_t {
            let _ = writeln!(s, "  {}", vec(row));
        }
        let _ = writeln!(
            s,
            "Step (5) P_t|s> = {}, G|s> = P_s P_t|s> = {}",
            vec(&self.flipped),
            vec(&self.final_state)
        );
        s
    }
}

/// Writes `index, coordinates..., f, probability` for every basis state with
/// non-zero probability.
pub fn emit_distribution<O: Objective + ?Sized>(
    state: &Statevector,
    layout: &RegisterLayout,
    objective: &O,
    path: &Path,
) -> Result<()> {
    write_distribution(state, layout, |p| objective.evaluate(p), path)
}

fn write_distribution(
    state: &Statevector,
    layout: &RegisterLayout,
    value: impl Fn(&[f64]) -> f64,
    path: &Path,
) -> Result<()> {
    if state.dim() != layout.num_points() {
        return Err(Error::invalid("state and layout disagree on register size"));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_io(path, e))?;
    let mut header = vec!["index".to_string()];
    header.extend(layout.variables().iter().map(|v| v.name.clone()));
    header.extend(["f".to_string(), "probability".to_string()]);
    w.write_record(&header)?;
    for (i, p) in state.probabilities().into_iter().enumerate() {
        if p > 0.0 {
            let point = layout.decode(i)?;
            let mut row = vec![i.to_string()];
            row.extend(point.iter().map(f64::to_string));
            row.push(value(&point).to_string());
            row.push(p.to_string());
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_io(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Csv(e)
    }
}

/// A file produced by a run, held in memory until written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone)]
pub enum Report {
    Appendix(AppendixDemo),
    Search(Vec<SearchResult>),
    Pivot(Vec<PivotResult>),
    Growth(GrowthReport),
    Brute(GridMinimum),
    Ensemble {
        results: Vec<SearchResult>,
        stats: EnsembleStats,
    },
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    /// Text for standard output; the last line is the summary.
    pub stdout: String,
    /// JSON and CSV documents, in the order they are written.
    pub artifacts: Vec<Artifact>,
    pub report: Report,
}

impl RunOutput {
    pub fn summary(&self) -> &str {
        self.stdout.lines().last().unwrap_or("")
    }

    pub fn artifact(&self, name: &str) -> Option<&str> {
        self.artifacts
            .iter()
            .find(|a| a.name == name)
            .map(|a| a.content.as_str())
    }
}

#[derive(Serialize)]
struct RoundDoc<'a> {
    round: usize,
    iterations: usize,
    index: usize,
    point: &'a [f64],
    value: f64,
    threshold: f64,
    marked_count: usize,
}

#[derive(Serialize)]
struct SearchDoc<'a> {
    run_id: usize,
    seed: u64,
    schedule: String,
    rounds: Vec<RoundDoc<'a>>,
    best_value: f64,
    best_point: &'a [f64],
    total_iterations: usize,
    iterations_to_best: usize,
    converged: bool,
    stop_reason: minsearch::StopReason,
}

fn search_doc<'a>(
    run_id: usize,
    seed: u64,
    schedule: &Schedule,
    r: &'a SearchResult,
) -> SearchDoc<'a> {
    SearchDoc {
        run_id,
        seed,
        schedule: schedule.to_string(),
        rounds: r
            .trace
            .rounds
            .iter()
            .map(|x| RoundDoc {
                round: x.round,
                iterations: x.iterations,
                index: x.index,
                point: &x.point,
                value: x.value,
                threshold: x.threshold,
                marked_count: x.marked_count,
            })
            .collect(),
        best_value: r.best_value,
        best_point: &r.best_point,
        total_iterations: r.trace.total_grover_iterations,
        iterations_to_best: r.trace.iterations_to_best,
        converged: r.converged,
        stop_reason: r.stop_reason,
    }
}

#[derive(Serialize)]
struct PivotDoc<'a> {
    run_id: usize,
    seed: u64,
    objective: &'a str,
    generations: &'a [pivot::GenerationRecord],
    best_value: f64,
    best_point: &'a [f64],
    total_iterations: usize,
    evaluations: usize,
    converged: bool,
}

fn json_lines<T: Serialize>(docs: impl IntoIterator<Item = T>) -> Result<String> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&serde_json::to_string(&d)?);
        out.push('\n');
    }
    Ok(out)
}

fn pretty<T: Serialize>(doc: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(doc)? + "\n")
}

fn histogram_csv(bins: &[HistogramBin]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for b in bins {
        w.serialize(b)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::NumericFailure(format!("histogram buffer: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(","))
}

fn summary_line(
    exp: Experiment,
    runs: usize,
    best: f64,
    point: &[f64],
    rounds: usize,
    iterations: usize,
) -> String {
    format!(
        "experiment={} runs={runs} best={best} point={} rounds={rounds} total_iterations={iterations}",
        exp.name(),
        fmt_point(point)
    )
}

fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        fs::write(&path, &a.content).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

/// Runs the experiment, writing artifacts under `config.out` when set. If a
/// multi-run experiment fails part-way, the runs completed before the failure
/// are written before the error is returned.
pub fn run(config: &RunConfig) -> Result<RunOutput> {
    let dist_dir = match (&config.out, config.emit_distributions) {
        (Some(out), true) => {
            let d = out.join("distributions");
            fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
            Some(d)
        }
        _ => None,
    };
    let output = match config.experiment {
        Experiment::AppendixDemo => run_appendix(config, dist_dir.as_deref()),
        Experiment::Gp | Experiment::LjTrimer => run_search(config, dist_dir.as_deref()),
        Experiment::ShubertPivot => run_pivot(config),
        Experiment::LjGrow => run_growth(config),
        Experiment::Brute => run_brute(config),
        Experiment::Ensemble => run_ensemble(config),
    };
    match (output, &config.out) {
        (Ok(o), Some(dir)) => {
            write_artifacts(dir, &o.artifacts)?;
            Ok(o)
        }
        (Err(Failure { partial, error }), Some(dir)) => {
            write_artifacts(dir, &partial)?;
            Err(error)
        }
        (Ok(o), None) => Ok(o),
        (Err(f), None) => Err(f.error),
    }
}

struct Failure {
    partial: Vec<Artifact>,
    error: Error,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure {
            partial: Vec::new(),
            error,
        }
    }
}

type Outcome = std::result::Result<RunOutput, Failure>;

fn run_appendix(config: &RunConfig, dist_dir: Option<&Path>) -> Outcome {
    let layout = config.register()?;
    let objective = config.objective_fn()?;
    let demo = appendix_demo(&*objective, &layout)?;
    if let Some(dir) = dist_dir {
        let n = layout.total_qubits();
        let source = Statevector::uniform(n)?;
        write_distribution(
            &source,
            &layout,
            |p| objective.evaluate(p),
            &dir.join("step1_source.csv"),
        )?;
        let last = Statevector::from_real(&demo.final_state)?;
        write_distribution(
            &last,
            &layout,
            |p| objective.evaluate(p),
            &dir.join("step5_final.csv"),
        )?;
    }
    let mut stdout = demo.describe();
    stdout.push_str(&summary_line(
        config.experiment,
        1,
        demo.values[demo.target_index],
        &demo.target_point,
        1,
        1,
    ));
    stdout.push('\n');
    Ok(RunOutput {
        stdout,
        artifacts: vec![Artifact {
            name: "appendix.json".into(),
            content: pretty(&demo)?,
        }],
        report: Report::Appendix(demo),
    })
}

fn run_search(config: &RunConfig, dist_dir: Option<&Path>) -> Outcome {
    let layout = config.register()?;
    let objective = config.objective_fn()?;
    let landscape = Landscape::new(&*objective, &layout)?;
    let search = config.search.to_config();
    let seed = config.seed();

    let mut results = Vec::with_capacity(config.runs);
    let mut failure = None;
    for run_id in 0..config.runs {
        let mut rng = rng::split(seed, run_id as u64);
        let mut io_error = None;
        let outcome = minsearch::search(&landscape, &search, &mut rng, &mut |view| {
            if let (Some(dir), None) = (dist_dir, &io_error) {
                let path = dir.join(format!("run{run_id:03}_round{:03}.csv", view.round));
                if let Err(e) = write_distribution(
                    view.state,
                    &layout,
                    |p| landscape_value(&landscape, &layout, p),
                    &path,
                ) {
                    io_error = Some(e);
                }
            }
        });
        match (outcome, io_error) {
            (Ok(r), None) => results.push(r),
            (Err(e), _) | (Ok(_), Some(e)) => {
                failure = Some(e);
                break;
            }
        }
    }
    let traces = json_lines(
        results
            .iter()
            .enumerate()
            .map(|(i, r)| search_doc(i, seed, &search.schedule, r)),
    )?;
    let artifacts = vec![Artifact {
        name: "traces.jsonl".into(),
        content: traces,
    }];
    if let Some(error) = failure {
        return Err(Failure {
            partial: artifacts,
            error,
        });
    }

    let best = best_search(&results);
    let stdout = summary_line(
        config.experiment,
        config.runs,
        best.best_value,
        &best.best_point,
        best.trace.num_rounds(),
        best.trace.total_grover_iterations,
    ) + "\n";
    Ok(RunOutput {
        stdout,
        artifacts,
        report: Report::Search(results),
    })
}

fn landscape_value<O: Objective + ?Sized>(
    land: &Landscape<'_, O>,
    layout: &RegisterLayout,
    p: &[f64],
) -> f64 {
    match layout.encode(p) {
        Ok(e) => land.value(e.index),
        Err(_) => f64::NAN,
    }
}

// Lowest best value, earliest run on ties.
fn best_search(results: &[SearchResult]) -> &SearchResult {
    results
        .iter()
        .reduce(|a, b| if b.best_value < a.best_value { b } else { a })
        .expect("at least one run")
}

fn run_pivot(config: &RunConfig) -> Outcome {
    let layout = config.register()?;
    let objective = config.objective_fn()?;
    let pivot = config.pivot.to_config(Some(&layout));
    let bounds = layout.bounds();
    let seed = config.seed();
    let outcomes: Vec<Result<PivotResult>> = (0..config.runs)
        .into_par_iter()
        .map(|run_id| {
            let mut rng = rng::split(seed, run_id as u64);
            pivot::pivot_grover_search(
                &*objective,
                &bounds,
                layout.total_qubits(),
                &pivot,
                &mut rng,
            )
        })
        .collect();
    let mut results = Vec::with_capacity(config.runs);
    let mut failure = None;
    for o in outcomes {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let traces = json_lines(results.iter().enumerate().map(|(i, r)| PivotDoc {
        run_id: i,
        seed,
        objective: objective.name(),
        generations: &r.generations,
        best_value: r.best_value,
        best_point: &r.best_point,
        total_iterations: r.total_grover_iterations,
        evaluations: r.evaluations,
        converged: r.converged,
    }))?;
    let artifacts = vec![Artifact {
        name: "traces.jsonl".into(),
        content: traces,
    }];
    if let Some(error) = failure {
        return Err(Failure {
            partial: artifacts,
            error,
        });
    }
    let best = results
        .iter()
        .reduce(|a, b| if b.best_value < a.best_value { b } else { a })
        .expect("at least one run");
    let stdout = summary_line(
        config.experiment,
        config.runs,
        best.best_value,
        &best.best_point,
        best.generations.len(),
        best.total_grover_iterations,
    ) + "\n";
    Ok(RunOutput {
        stdout,
        artifacts,
        report: Report::Pivot(results),
    })
}

#[derive(Serialize)]
struct GrowthDoc<'a> {
    seed: u64,
    method: GrowthMethod,
    #[serde(flatten)]
    report: &'a GrowthReport,
}

fn run_growth(config: &RunConfig) -> Outcome {
    let growth = config.growth_config();
    let seed = config.seed();
    let report = pivot::lj_growth(config.growth.atoms, &growth, &mut rng::split(seed, 0))?;
    let last = report.final_stage();
    let rounds = report.stages.iter().map(|s| s.generations).sum();
    let iterations = report.stages.iter().map(|s| s.grover_iterations).sum();
    let atom = last.geometry.last().expect("stages hold atoms");
    let mut stdout = String::new();
    for s in &report.stages {
        let _ = writeln!(
            stdout,
            "atoms={} energy={} added={} distances={}",
            s.atoms,
            s.energy,
            fmt_point(s.geometry.last().expect("stages hold atoms")),
            fmt_point(&s.distances)
        );
    }
    stdout.push_str(&summary_line(
        config.experiment,
        1,
        last.energy,
        atom,
        rounds,
        iterations,
    ));
    stdout.push('\n');
    let content = pretty(&GrowthDoc {
        seed,
        method: growth.method,
        report: &report,
    })?;
    Ok(RunOutput {
        stdout,
        artifacts: vec![Artifact {
            name: "growth.json".into(),
            content,
        }],
        report: Report::Growth(report),
    })
}

fn run_brute(config: &RunConfig) -> Outcome {
    let layout = config.register()?;
    let objective = config.objective_fn()?;
    let m = grid_brute_min(&*objective, &layout)?;
    let stdout = format!(
        "experiment=brute best={} point={} num_evaluations={}\n",
        m.value,
        fmt_point(&m.point),
        m.num_evaluations
    );
    Ok(RunOutput {
        stdout,
        artifacts: vec![Artifact {
            name: "brute.json".into(),
            content: pretty(&m)?,
        }],
        report: Report::Brute(m),
    })
}

fn run_ensemble(config: &RunConfig) -> Outcome {
    let layout = config.register()?;
    let objective = config.objective_fn()?;
    let reference = grid_brute_min(&*objective, &layout)?;
    let landscape = Landscape::new(&*objective, &layout)?;
    let search = config.search.to_config();
    let seed = config.seed();

    let mut results = Vec::with_capacity(config.runs);
    let mut failure = None;
    for o in minsearch::run_members(&landscape, &search, config.runs, seed) {
        match o {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let runs = json_lines(
        results
            .iter()
            .enumerate()
            .map(|(i, r)| search_doc(i, seed, &search.schedule, r)),
    )?;
    let mut artifacts = vec![Artifact {
        name: "runs.jsonl".into(),
        content: runs,
    }];
    if let Some(error) = failure {
        return Err(Failure {
            partial: artifacts,
            error,
        });
    }

    let stats = EnsembleStats::from_results(&results, reference.value)?;
    artifacts.push(Artifact {
        name: "stats.json".into(),
        content: pretty(&stats)?,
    });
    artifacts.push(Artifact {
        name: "rounds_histogram.csv".into(),
        content: histogram_csv(&stats.rounds_histogram)?,
    });
    artifacts.push(Artifact {
        name: "iterations_histogram.csv".into(),
        content: histogram_csv(&stats.iterations_histogram)?,
    });
    let best = best_search(&results);
    let stdout = format!(
        "{} success_fraction={} mean_rounds={} mean_total_iterations={}\n",
        summary_line(
            config.experiment,
            config.runs,
            best.best_value,
            &best.best_point,
            best.trace.num_rounds(),
            best.trace.total_grover_iterations,
        ),
        stats.success_fraction,
        stats.mean_rounds,
        stats.mean_total_iterations
    );
    Ok(RunOutput {
        stdout,
        artifacts,
        report: Report::Ensemble { results, stats },
    })
}

/// Threshold-adapted Grover minimum search, simulated.
#[derive(Debug, Parser)]
#[command(name = "grovermin", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one experiment from its embedded or a given config.
    Run {
        #[arg(value_enum)]
        experiment: Experiment,
        #[command(flatten)]
        options: RunOptions,
    },
    /// Exhaustive grid scan.
    Brute {
        #[command(flatten)]
        options: RunOptions,
    },
    /// Independent seeded searches with summary statistics.
    Ensemble {
        #[command(flatten)]
        options: RunOptions,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunOptions {
    /// TOML config; the experiment's embedded config otherwise.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "N")]
    pub runs: Option<usize>,
    /// Directory for JSON traces and CSV files.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// baritompa, incremental or constant:K.
    #[arg(long)]
    pub schedule: Option<Schedule>,
    /// Write the probability distribution before every measurement.
    #[arg(long)]
    pub emit_distributions: bool,
}

impl Command {
    /// Loads the config and applies command-line overrides.
    pub fn resolve(&self) -> Result<RunConfig> {
        let (experiment, o) = match self {
            Command::Run {
                experiment,
                options,
            } => (*experiment, options),
            Command::Brute { options } => (Experiment::Brute, options),
            Command::Ensemble { options } => (Experiment::Ensemble, options),
        };
        let mut config = match &o.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::embedded(experiment),
        };
        if config.experiment != experiment {
            return Err(Error::invalid(format!(
                "config describes {}, but {} was requested",
                config.experiment.name(),
                experiment.name()
            )));
        }
        if let Some(seed) = o.seed {
            config.seed = Some(seed);
        }
        if let Some(runs) = o.runs {
            if runs == 0 {
                return Err(Error::invalid("--runs must be at least 1"));
            }
            config.runs = runs;
        }
        if let Some(out) = &o.out {
            config.out = Some(out.clone());
        }
        if let Some(schedule) = &o.schedule {
            if !experiment.uses_search() {
                return Err(Error::invalid(format!(
                    "{} takes no schedule",
                    experiment.name()
                )));
            }
            config.search.schedule = schedule.clone();
        }
        config.emit_distributions |= o.emit_distributions;
        if config.emit_distributions && config.out.is_none() {
            return Err(Error::invalid(
                "distributions need an output directory (--out)",
            ));
        }
        Ok(config)
    }
}

/// Entry point of the binary.
pub fn main_entry() -> ExitCode {
    let cli = Cli::parse();
    match cli.command.resolve().and_then(|c| run(&c)) {
        Ok(out) => {
            print!("{}", out.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("grovermin: {e}");
            match e {
                Error::Config { .. } | Error::InvalidArgument(_) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
