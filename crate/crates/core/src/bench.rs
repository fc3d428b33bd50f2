//! Benchmark harness: seeded constraint-set generation with a known
//! optimum, repeated runs per algorithm, and aggregate metrics.
//!
//! Each generated set pins one target solution with soft-positive rules
//! (one per selected element, so the recommended counts match the target
//! and its quantity penalty is zero) and adds hard and soft-negative noise
//! rules whose bodies the target does not satisfy. The target therefore
//! scores exactly the reward ceiling, which no solution can exceed, giving
//! every benchmark cell a verified optimum. A verification pass re-scores
//! the target and regenerates on failure.
//!
//! Raw per-run records are persisted alongside the aggregates so every
//! reported mean can be recomputed from disk.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{Atom, ConstraintError, ConstraintSet, Literal, Rule, RuleKind};
use crate::reward::total_reward;
use crate::search::{run_search, Algorithm, SearchConfig, SearchError};
use crate::space::{DesignSolution, DesignSpace, SpaceError};

const MAX_GENERATION_ATTEMPTS: u64 = 20;

/// Shape of the randomized rules layered on top of the target-pinning
/// soft-positive rules.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    /// Number of hard rules; their bodies never hold at the target.
    pub hard_rules: usize,
    /// Number of soft-negative rules; likewise unsatisfied at the target.
    pub soft_negative_rules: usize,
    /// Inclusive range of body lengths for hard rules.
    pub hard_body: (usize, usize),
    /// Inclusive range of body lengths for soft-negative rules.
    pub negative_body: (usize, usize),
    /// Probability that a noise literal mirrors a target element (the body
    /// still keeps at least one literal the target falsifies), pulling the
    /// noise into the target's neighborhood.
    pub mixed_fraction: f64,
    /// Probability, per single-select pinning rule, of emitting one extra
    /// soft-positive rule that conjoins the pinned element with a target
    /// element of another single-select dimension. The extra rules are
    /// satisfied at the target and leave every element's own pin intact;
    /// they reward co-occurrence the way multi-literal recommendations do.
    pub paired_positive_fraction: f64,
    /// Probability that a falsified noise literal is written as the
    /// negation of a target element instead of a plain unselected atom.
    /// Negated-target hard rules penalize partial walks toward the target,
    /// which makes instances markedly harder for tree search.
    pub negation_fraction: f64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        Self {
            hard_rules: 3,
            soft_negative_rules: 4,
            hard_body: (2, 2),
            negative_body: (1, 2),
            mixed_fraction: 0.5,
            paired_positive_fraction: 0.35,
            negation_fraction: 0.25,
        }
    }
}

impl NoiseParams {
    /// No noise at all: the generated set pins the target and nothing else.
    pub fn none() -> Self {
        Self {
            hard_rules: 0,
            soft_negative_rules: 0,
            hard_body: (1, 1),
            negative_body: (1, 1),
            mixed_fraction: 0.0,
            paired_positive_fraction: 0.0,
            negation_fraction: 0.0,
        }
    }

    /// Plain obstacles only: positive non-target noise bodies, no coupling
    /// between dimensions. Every searcher sees an honest per-element
    /// gradient toward the target.
    pub fn gentle() -> Self {
        Self {
            hard_rules: 2,
            soft_negative_rules: 3,
            hard_body: (2, 2),
            negative_body: (1, 2),
            mixed_fraction: 0.0,
            paired_positive_fraction: 0.0,
            negation_fraction: 0.0,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid benchmark spec: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Constraints(#[from] ConstraintError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error("target solution is invalid: {}", .0.join("; "))]
    InvalidTarget(Vec<String>),
    #[error("could not generate a constraint set with the target at the ceiling after {attempts} attempts")]
    Generation { attempts: u64 },
    #[error("failed to write {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Generate a constraint set whose verified optimum is the reward ceiling,
/// attained by `target`.
pub fn generate_constraint_set(
    space: &DesignSpace,
    target: &DesignSolution,
    noise: &NoiseParams,
    seed: u64,
) -> Result<ConstraintSet, BenchError> {
    let violations = space.validate_solution(target);
    if !violations.is_empty() {
        return Err(BenchError::InvalidTarget(violations));
    }
    let weights = crate::reward::RewardWeights::default();
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix(seed).wrapping_add(attempt));
        let cs = build_candidate_set(space, target, noise, &mut rng);
        let breakdown = total_reward(space, &cs, target, &weights);
        if breakdown.total == weights.beta {
            return Ok(cs);
        }
    }
    Err(BenchError::Generation { attempts: MAX_GENERATION_ATTEMPTS })
}

fn build_candidate_set(
    space: &DesignSpace,
    target: &DesignSolution,
    noise: &NoiseParams,
    rng: &mut impl Rng,
) -> ConstraintSet {
    let mut rules = Vec::new();

    // Pin every selected element with its own soft-positive rule, then add
    // co-occurrence rules over pairs of single-select target elements.
    let single_dims: Vec<usize> = space
        .dimensions
        .iter()
        .enumerate()
        .filter(|(_, d)| !d.multi_select)
        .map(|(i, _)| i)
        .collect();
    let mut positive_index = 0;
    let mut push_positive = |body: Vec<Literal>, rules: &mut Vec<Rule>| {
        positive_index += 1;
        rules.push(Rule { kind: RuleKind::SoftPositive, index: positive_index, body });
    };
    let mut pairs = Vec::new();
    for (dim_pos, dim) in space.dimensions.iter().enumerate() {
        let selected = &target.selections[&dim.dimension_id];
        for elem in &dim.elements {
            if !selected.contains(&elem.element_id) {
                continue;
            }
            let pin = Literal::positive(Atom::new(
                dim.dimension_id.clone(),
                elem.element_id.clone(),
            ));
            let partners: Vec<usize> =
                single_dims.iter().copied().filter(|&i| i != dim_pos).collect();
            if !dim.multi_select
                && !partners.is_empty()
                && rng.gen::<f64>() < noise.paired_positive_fraction
            {
                let other = partners[rng.gen_range(0..partners.len())];
                pairs.push(vec![
                    pin.clone(),
                    Literal::positive(target_atom(space, target, other, rng)),
                ]);
            }
            push_positive(vec![pin], &mut rules);
        }
    }
    for body in pairs {
        push_positive(body, &mut rules);
    }

    for index in 1..=noise.hard_rules {
        rules.push(noise_rule(space, target, RuleKind::Hard, index as u32, noise.hard_body, noise, rng));
    }
    for index in 1..=noise.soft_negative_rules {
        rules.push(noise_rule(space, target, RuleKind::SoftNegative, index as u32, noise.negative_body, noise, rng));
    }

    ConstraintSet::from_rules(rules)
}

/// A positive atom over one of the target's selections in the dimension at
/// `dim_pos`.
fn target_atom(
    space: &DesignSpace,
    target: &DesignSolution,
    dim_pos: usize,
    rng: &mut impl Rng,
) -> Atom {
    let dim = &space.dimensions[dim_pos];
    let selected = &target.selections[&dim.dimension_id];
    let picks: Vec<&String> = selected.iter().collect();
    Atom::new(dim.dimension_id.clone(), picks[rng.gen_range(0..picks.len())].clone())
}

/// A rule whose body mixes target-true literals with at least one literal
/// the target falsifies, so the rule never fires at the target.
fn noise_rule(
    space: &DesignSpace,
    target: &DesignSolution,
    kind: RuleKind,
    index: u32,
    body_range: (usize, usize),
    noise: &NoiseParams,
    rng: &mut impl Rng,
) -> Rule {
    let (lo, hi) = body_range;
    let lo = lo.clamp(1, space.dimensions.len());
    let hi = hi.clamp(lo, space.dimensions.len());
    let len = rng.gen_range(lo..=hi);
    let dims = crate::search::sample_indices(space.dimensions.len(), len, rng);
    let forced_false = rng.gen_range(0..len);

    let body = dims
        .iter()
        .enumerate()
        .map(|(slot, &dim_pos)| {
            let make_true = slot != forced_false && rng.gen::<f64>() < noise.mixed_fraction;
            if make_true {
                Literal::positive(target_atom(space, target, dim_pos, rng))
            } else {
                falsified_literal(space, target, dim_pos, noise.negation_fraction, rng)
            }
        })
        .collect();
    Rule { kind, index, body }
}

/// A literal that is false under the target: a positive atom over an
/// unselected element, or (with `negation_fraction` probability, and always
/// when every element is selected) a negated atom over a selected one.
fn falsified_literal(
    space: &DesignSpace,
    target: &DesignSolution,
    dim_pos: usize,
    negation_fraction: f64,
    rng: &mut impl Rng,
) -> Literal {
    let dim = &space.dimensions[dim_pos];
    let selected = &target.selections[&dim.dimension_id];
    let unselected: Vec<&str> = dim
        .elements
        .iter()
        .map(|e| e.element_id.as_str())
        .filter(|id| !selected.contains(*id))
        .collect();
    if !unselected.is_empty() && rng.gen::<f64>() >= negation_fraction {
        let pick = unselected[rng.gen_range(0..unselected.len())];
        Literal::positive(Atom::new(dim.dimension_id.clone(), pick.to_string()))
    } else {
        Literal::negative(target_atom(space, target, dim_pos, rng))
    }
}

/// Where the benchmark space comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum SpaceSource {
    Path { path: PathBuf },
    Inline { space: DesignSpace },
}

/// Where the benchmark constraint sets come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum ConstraintSource {
    Paths { paths: Vec<PathBuf> },
    Generated {
        count: usize,
        generator_seed: u64,
        #[serde(default)]
        noise: NoiseParams,
    },
}

/// A full benchmark specification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub space: SpaceSource,
    pub constraint_sets: ConstraintSource,
    pub algorithms: Vec<Algorithm>,
    #[serde(default = "default_runs_per_cell")]
    pub runs_per_cell: usize,
    #[serde(default)]
    pub base_seed: u64,
    /// Per-run search parameters; the seed field is ignored and replaced by
    /// a seed derived from `base_seed` and the cell coordinates.
    #[serde(default)]
    pub search: SearchConfig,
    #[serde(default = "default_workers")]
    pub workers: usize,
}

fn default_runs_per_cell() -> usize {
    10
}

fn default_workers() -> usize {
    1
}

impl BenchSpec {
    pub fn from_json(text: &str) -> Result<Self, BenchError> {
        serde_json::from_str(text).map_err(|e| BenchError::InvalidSpec(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, BenchError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }
}

/// One finished (or failed) run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub constraint_set: usize,
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub best_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations_run: Option<usize>,
    pub converged: bool,
    pub hit_rmax: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub validity_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean metrics for one (algorithm, constraint set) cell. Convergence and
/// validity cells are absent for beam search, which has neither.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub algorithm: Algorithm,
    pub constraint_set: usize,
    pub runs: usize,
    pub failed_runs: usize,
    pub mean_best_reward: f64,
    pub mean_best_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_convergence_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_convergence_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_validity_ratio: Option<f64>,
}

/// Mean metrics for one algorithm over every constraint set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub failed_runs: usize,
    pub mean_best_reward: f64,
    pub mean_best_time_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_convergence_reward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_convergence_time_seconds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mean_validity_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub cells: Vec<CellAggregate>,
    pub records: Vec<RunRecord>,
}

/// Execute a benchmark spec: every algorithm on every constraint set,
/// `runs_per_cell` seeded runs each. A failed run is recorded and skipped
/// by the aggregates; the bench continues.
pub fn run_bench(spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    if spec.runs_per_cell == 0 {
        return Err(BenchError::InvalidSpec("runs_per_cell must be at least 1".into()));
    }
    if spec.algorithms.is_empty() {
        return Err(BenchError::InvalidSpec("algorithms must not be empty".into()));
    }
    let space = match &spec.space {
        SpaceSource::Path { path } => DesignSpace::from_path(path)?,
        SpaceSource::Inline { space } => space.clone(),
    };
    let violations = space.validate();
    if !violations.is_empty() {
        return Err(BenchError::InvalidSpec(format!(
            "space is invalid: {}",
            violations.join("; ")
        )));
    }

    let constraint_sets: Vec<ConstraintSet> = match &spec.constraint_sets {
        ConstraintSource::Paths { paths } => {
            if paths.is_empty() {
                return Err(BenchError::InvalidSpec("constraint set list is empty".into()));
            }
            paths
                .iter()
                .map(|path| {
                    let text = std::fs::read_to_string(path).map_err(|source| BenchError::Io {
                        path: path.display().to_string(),
                        source,
                    })?;
                    Ok(ConstraintSet::parse(&text, &space)?)
                })
                .collect::<Result<_, BenchError>>()?
        }
        ConstraintSource::Generated { count, generator_seed, noise } => {
            if *count == 0 {
                return Err(BenchError::InvalidSpec("generated set count must be at least 1".into()));
            }
            (0..*count)
                .map(|i| {
                    let set_seed = mix(generator_seed.wrapping_add(i as u64));
                    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(set_seed);
                    let target = crate::search::random_solution(&space, &mut rng);
                    generate_constraint_set(&space, &target, noise, set_seed)
                })
                .collect::<Result<_, BenchError>>()?
        }
    };

    // one task per run, in deterministic order
    struct Task {
        set: usize,
        algorithm: Algorithm,
        run: usize,
        seed: u64,
    }
    let mut tasks = Vec::new();
    for set in 0..constraint_sets.len() {
        for (algo_pos, &algorithm) in spec.algorithms.iter().enumerate() {
            for run in 0..spec.runs_per_cell {
                let seed = mix(mix(mix(spec.base_seed.wrapping_add(set as u64))
                    .wrapping_add(algo_pos as u64))
                .wrapping_add(run as u64));
                tasks.push(Task { set, algorithm, run, seed });
            }
        }
    }

    let execute = |task: &Task| -> RunRecord {
        let config = SearchConfig { seed: task.seed, ..spec.search.clone() };
        match run_search(task.algorithm, &space, &constraint_sets[task.set], &config) {
            Ok(outcome) => {
                let beam = task.algorithm == Algorithm::Beam;
                RunRecord {
                    constraint_set: task.set,
                    algorithm: task.algorithm,
                    run: task.run,
                    seed: task.seed,
                    best_reward: Some(outcome.best_reward),
                    best_time_seconds: Some(outcome.best_time_seconds),
                    iterations_run: Some(outcome.iterations_run),
                    converged: outcome.converged,
                    hit_rmax: outcome.hit_rmax,
                    convergence_time_seconds: if beam { None } else { outcome.convergence_time_seconds },
                    convergence_reward: if beam { None } else { outcome.convergence_reward },
                    validity_ratio: if beam { None } else { outcome.validity_ratio() },
                    wall_time_seconds: Some(outcome.wall_time_seconds),
                    error: None,
                }
            }
            Err(err) => RunRecord {
                constraint_set: task.set,
                algorithm: task.algorithm,
                run: task.run,
                seed: task.seed,
                best_reward: None,
                best_time_seconds: None,
                iterations_run: None,
                converged: false,
                hit_rmax: false,
                convergence_time_seconds: None,
                convergence_reward: None,
                validity_ratio: None,
                wall_time_seconds: None,
                error: Some(err.to_string()),
            },
        }
    };

    let records: Vec<RunRecord> = if spec.workers <= 1 {
        tasks.iter().map(execute).collect()
    } else {
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots: Vec<std::sync::Mutex<Option<RunRecord>>> =
            tasks.iter().map(|_| std::sync::Mutex::new(None)).collect();
        std::thread::scope(|scope| {
            for _ in 0..spec.workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= tasks.len() {
                        break;
                    }
                    *slots[i].lock().unwrap() = Some(execute(&tasks[i]));
                });
            }
        });
        slots
            .into_iter()
            .map(|slot| slot.into_inner().unwrap().expect("every task ran"))
            .collect()
    };

    let mut cells = Vec::new();
    for set in 0..constraint_sets.len() {
        for &algorithm in &spec.algorithms {
            let cell_records: Vec<&RunRecord> = records
                .iter()
                .filter(|r| r.constraint_set == set && r.algorithm == algorithm)
                .collect();
            cells.push(aggregate(algorithm, set, &cell_records));
        }
    }

    Ok(BenchReport { cells, records })
}

fn aggregate(algorithm: Algorithm, constraint_set: usize, records: &[&RunRecord]) -> CellAggregate {
    let ok: Vec<&&RunRecord> = records.iter().filter(|r| r.error.is_none()).collect();
    let mean = |values: Vec<f64>| -> Option<f64> {
        if values.is_empty() {
            None
        } else {
            Some(values.iter().sum::<f64>() / values.len() as f64)
        }
    };
    CellAggregate {
        algorithm,
        constraint_set,
        runs: records.len(),
        failed_runs: records.len() - ok.len(),
        mean_best_reward: mean(ok.iter().filter_map(|r| r.best_reward).collect()).unwrap_or(f64::NAN),
        mean_best_time_seconds: mean(ok.iter().filter_map(|r| r.best_time_seconds).collect())
            .unwrap_or(f64::NAN),
        mean_convergence_reward: mean(ok.iter().filter_map(|r| r.convergence_reward).collect()),
        mean_convergence_time_seconds: mean(
            ok.iter().filter_map(|r| r.convergence_time_seconds).collect(),
        ),
        mean_validity_ratio: mean(ok.iter().filter_map(|r| r.validity_ratio).collect()),
    }
}

impl BenchReport {
    /// Per-algorithm means over every constraint set and run.
    pub fn algorithm_summaries(&self) -> Vec<AlgorithmSummary> {
        let mut algorithms: Vec<Algorithm> = Vec::new();
        for record in &self.records {
            if !algorithms.contains(&record.algorithm) {
                algorithms.push(record.algorithm);
            }
        }
        algorithms
            .into_iter()
            .map(|algorithm| {
                let records: Vec<&RunRecord> = self
                    .records
                    .iter()
                    .filter(|r| r.algorithm == algorithm)
                    .collect();
                let cell = aggregate(algorithm, 0, &records);
                AlgorithmSummary {
                    algorithm,
                    runs: cell.runs,
                    failed_runs: cell.failed_runs,
                    mean_best_reward: cell.mean_best_reward,
                    mean_best_time_seconds: cell.mean_best_time_seconds,
                    mean_convergence_reward: cell.mean_convergence_reward,
                    mean_convergence_time_seconds: cell.mean_convergence_time_seconds,
                    mean_validity_ratio: cell.mean_validity_ratio,
                }
            })
            .collect()
    }
}

/// Report CSV header, mirroring the benchmark table layout.
pub const REPORT_CSV_HEADER: &str =
    "Algorithm,Constraint Set,Best Reward,Best Time(s),Conv. Reward,Conv. Time(s),Validity Ratio";

/// Write per-cell aggregates as CSV. Cells without a value (beam search
/// convergence and validity) are marked `N/A`.
pub fn write_report_csv(report: &BenchReport, path: impl AsRef<Path>) -> Result<(), BenchError> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(REPORT_CSV_HEADER);
    out.push('\n');
    let fmt = |v: Option<f64>| match v {
        Some(v) if v.is_finite() => format!("{v:.3}"),
        _ => "N/A".to_string(),
    };
    for cell in &report.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            cell.algorithm,
            cell.constraint_set + 1,
            fmt(Some(cell.mean_best_reward)),
            fmt(Some(cell.mean_best_time_seconds)),
            fmt(cell.mean_convergence_reward),
            fmt(cell.mean_convergence_time_seconds),
            fmt(cell.mean_validity_ratio),
        ));
    }
    std::fs::write(path, out).map_err(|source| BenchError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Write raw per-run records as JSON lines.
pub fn write_raw_jsonl(report: &BenchReport, path: impl AsRef<Path>) -> Result<(), BenchError> {
    let path = path.as_ref();
    let io_err = |source: std::io::Error| BenchError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut file = std::fs::File::create(path).map_err(io_err)?;
    for record in &report.records {
        let line = serde_json::to_string(record).expect("record serializes");
        writeln!(file, "{line}").map_err(io_err)?;
    }
    Ok(())
}

/// Deterministic 64-bit mixer for seed derivation.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Distinct element ids mentioned by soft-positive rules, used by tests to
/// cross-check the pinning construction.
#[allow(dead_code)]
pub(crate) fn positive_mentions(cs: &ConstraintSet) -> BTreeSet<(String, String)> {
    let mut out = BTreeSet::new();
    for rule in &cs.rules {
        if rule.kind == RuleKind::SoftPositive {
            for lit in &rule.body {
                if !lit.negated {
                    out.insert((lit.atom.dimension_id.clone(), lit.atom.element_id.clone()));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reward::RewardWeights;
    use crate::space::{Dimension, Element};

    fn small_space() -> DesignSpace {
        let mut a = Dimension::new("a", "A");
        for i in 1..=4 {
            a = a.element(Element::new(format!("a{i}"), format!("A{i}")));
        }
        let mut b = Dimension::new("b", "B");
        for i in 1..=3 {
            b = b.element(Element::new(format!("b{i}"), format!("B{i}")));
        }
        let mut m = Dimension::new("m", "M").multi_select(2);
        for i in 1..=4 {
            m = m.element(Element::new(format!("m{i}"), format!("M{i}")));
        }
        DesignSpace::new("bench_small").dimension(a).dimension(b).dimension(m)
    }

    fn target() -> DesignSolution {
        DesignSolution::new()
            .select("a", &["a2"])
            .select("b", &["b1"])
            .select("m", &["m1", "m3"])
    }

    #[test]
    fn target_attains_the_ceiling() {
        let space = small_space();
        let cs = generate_constraint_set(&space, &target(), &NoiseParams::default(), 7).unwrap();
        let breakdown = total_reward(&space, &cs, &target(), &RewardWeights::default());
        assert_eq!(breakdown.total, 10.0);
        assert_eq!(breakdown.quantity_penalty, 0.0);
        assert_eq!(breakdown.counts.hard, 0);
        assert_eq!(breakdown.counts.soft_negative, 0);
    }

    #[test]
    fn zero_noise_yields_only_pinning_rules() {
        let space = small_space();
        let cs = generate_constraint_set(&space, &target(), &NoiseParams::none(), 3).unwrap();
        assert!(cs.rules.iter().all(|r| r.kind == RuleKind::SoftPositive));
        // one rule per selected element: a2, b1, m1, m3
        assert_eq!(cs.len(), 4);
        assert!(cs.rules.iter().all(|r| r.body.len() == 1));
        let mentions = positive_mentions(&cs);
        assert!(mentions.contains(&("m".into(), "m1".into())));
        assert!(mentions.contains(&("m".into(), "m3".into())));
    }

    #[test]
    fn no_enumerated_solution_beats_the_target() {
        let space = small_space();
        let weights = RewardWeights::default();
        let cs = generate_constraint_set(&space, &target(), &NoiseParams::default(), 99).unwrap();
        let best = space
            .enumerate_solutions(10_000)
            .unwrap()
            .iter()
            .map(|s| total_reward(&space, &cs, s, &weights).total)
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, 10.0);
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let space = small_space();
        let a = generate_constraint_set(&space, &target(), &NoiseParams::default(), 5).unwrap();
        let b = generate_constraint_set(&space, &target(), &NoiseParams::default(), 5).unwrap();
        assert_eq!(a, b);
        let c = generate_constraint_set(&space, &target(), &NoiseParams::default(), 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_target_is_rejected() {
        let space = small_space();
        let bad = DesignSolution::new().select("a", &["a1"]);
        assert!(matches!(
            generate_constraint_set(&space, &bad, &NoiseParams::default(), 0),
            Err(BenchError::InvalidTarget(_))
        ));
    }

    fn quick_spec(space: DesignSpace, algorithms: Vec<Algorithm>) -> BenchSpec {
        BenchSpec {
            space: SpaceSource::Inline { space },
            constraint_sets: ConstraintSource::Generated {
                count: 2,
                generator_seed: 11,
                noise: NoiseParams::default(),
            },
            algorithms,
            runs_per_cell: 2,
            base_seed: 1,
            search: SearchConfig {
                max_iterations: 400,
                ..SearchConfig::default()
            },
            workers: 1,
        }
    }

    #[test]
    fn bench_produces_one_cell_per_algorithm_and_set() {
        let report = run_bench(&quick_spec(small_space(), vec![Algorithm::Mcts, Algorithm::Beam]))
            .unwrap();
        assert_eq!(report.cells.len(), 4);
        assert_eq!(report.records.len(), 8);
        for cell in &report.cells {
            assert_eq!(cell.runs, 2);
            assert_eq!(cell.failed_runs, 0);
            if cell.algorithm == Algorithm::Beam {
                assert!(cell.mean_convergence_reward.is_none());
                assert!(cell.mean_convergence_time_seconds.is_none());
                assert!(cell.mean_validity_ratio.is_none());
            } else {
                assert!(cell.mean_validity_ratio.is_some());
            }
        }
    }

    #[test]
    fn cell_means_match_raw_records() {
        let report = run_bench(&quick_spec(small_space(), vec![Algorithm::Sa])).unwrap();
        for cell in &report.cells {
            let rewards: Vec<f64> = report
                .records
                .iter()
                .filter(|r| r.constraint_set == cell.constraint_set && r.error.is_none())
                .filter_map(|r| r.best_reward)
                .collect();
            let mean = rewards.iter().sum::<f64>() / rewards.len() as f64;
            assert!((cell.mean_best_reward - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn reward_columns_reproduce_under_identical_seeds() {
        let spec = quick_spec(small_space(), vec![Algorithm::Mcts, Algorithm::Ga]);
        let a = run_bench(&spec).unwrap();
        let b = run_bench(&spec).unwrap();
        let rewards = |r: &BenchReport| -> Vec<(usize, Option<f64>, Option<f64>, Option<f64>)> {
            r.records
                .iter()
                .map(|rec| (rec.constraint_set, rec.best_reward, rec.convergence_reward, rec.validity_ratio))
                .collect()
        };
        assert_eq!(rewards(&a), rewards(&b));
    }

    #[test]
    fn parallel_workers_give_the_same_records() {
        let mut spec = quick_spec(small_space(), vec![Algorithm::Mcts, Algorithm::Beam]);
        let sequential = run_bench(&spec).unwrap();
        spec.workers = 4;
        let parallel = run_bench(&spec).unwrap();
        let strip_times = |r: &BenchReport| -> Vec<(usize, Option<f64>)> {
            r.records
                .iter()
                .map(|rec| (rec.constraint_set, rec.best_reward))
                .collect()
        };
        assert_eq!(strip_times(&sequential), strip_times(&parallel));
    }

    #[test]
    fn all_zero_space_reports_zero_best() {
        let space = DesignSpace::new("flat")
            .dimension(
                Dimension::new("d", "D")
                    .element(Element::new("x", "X"))
                    .element(Element::new("y", "Y")),
            );
        let spec = BenchSpec {
            space: SpaceSource::Inline { space },
            constraint_sets: ConstraintSource::Paths { paths: vec![] },
            algorithms: vec![Algorithm::Mcts],
            runs_per_cell: 1,
            base_seed: 0,
            search: SearchConfig::default(),
            workers: 1,
        };
        // empty path list is refused
        assert!(matches!(run_bench(&spec), Err(BenchError::InvalidSpec(_))));

        let dir = tempfile::tempdir().unwrap();
        let empty = dir.path().join("empty.rules");
        std::fs::write(&empty, "").unwrap();
        let spec = BenchSpec {
            constraint_sets: ConstraintSource::Paths { paths: vec![empty] },
            algorithms: Algorithm::ALL.to_vec(),
            ..spec
        };
        let report = run_bench(&spec).unwrap();
        for cell in &report.cells {
            assert_eq!(cell.mean_best_reward, 0.0);
        }
    }

    #[test]
    fn report_csv_has_table_header_and_na_cells() {
        let report = run_bench(&quick_spec(small_space(), vec![Algorithm::Beam])).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("report.csv");
        write_report_csv(&report, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), REPORT_CSV_HEADER);
        let first = lines.next().unwrap();
        assert!(first.starts_with("beam,1,"));
        assert!(first.ends_with("N/A,N/A,N/A"));

        let raw_path = dir.path().join("raw.jsonl");
        write_raw_jsonl(&report, &raw_path).unwrap();
        let raw = std::fs::read_to_string(&raw_path).unwrap();
        assert_eq!(raw.lines().count(), report.records.len());
    }
}
