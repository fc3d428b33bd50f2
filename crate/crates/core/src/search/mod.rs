//! Searchers over a design space: tree search guided by the constraint
//! reward, plus genetic, annealing, and beam baselines behind the same
//! entry point and convergence rule.
//!
//! All searchers are seeded and deterministic: identical inputs including
//! the seed produce identical reward traces and best solutions. Timing
//! fields are the only non-reproducible outputs.

pub mod beam;
pub mod ga;
pub mod mcts;
mod path;
pub mod sa;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constraints::{ConstraintSet, KindTotals, SatisfactionCounts};
use crate::reward::{combine, constraint_reward, RewardBreakdown, RewardWeights};
use crate::space::{DesignSolution, DesignSpace};

pub use mcts::{uct_score, MctsRun, SimulationRecord, Tree, TreeNode};
pub use path::{PathState, Step};

/// Deterministic generator used by every searcher.
pub(crate) type SearchRng = rand_chacha::ChaCha8Rng;

/// The available searchers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Mcts,
    Ga,
    Sa,
    Beam,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Mcts, Algorithm::Ga, Algorithm::Sa, Algorithm::Beam];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Mcts => "mcts",
            Algorithm::Ga => "ga",
            Algorithm::Sa => "sa",
            Algorithm::Beam => "beam",
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mcts" => Ok(Algorithm::Mcts),
            "ga" => Ok(Algorithm::Ga),
            "sa" => Ok(Algorithm::Sa),
            "beam" => Ok(Algorithm::Beam),
            other => Err(format!("unknown algorithm '{other}' (expected mcts, ga, sa, or beam)")),
        }
    }
}

/// Shared search parameters. The iteration unit depends on the searcher:
/// tree iterations for MCTS, generations for GA, annealing steps for SA,
/// expansion layers for beam search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Exploration coefficient of the tree policy.
    pub exploration: f64,
    /// Length of the sliding convergence window.
    pub window: usize,
    /// Maximum reward range within the window that counts as converged.
    pub epsilon: f64,
    /// Safety bound on iterations.
    pub max_iterations: usize,
    pub seed: u64,
    pub weights: RewardWeights,
    pub ga_population: usize,
    pub ga_tournament: usize,
    pub sa_initial_temperature: f64,
    pub sa_cooling_rate: f64,
    pub beam_width: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            exploration: 5.0,
            window: 100,
            epsilon: 0.1,
            max_iterations: 20_000,
            seed: 0,
            weights: RewardWeights::default(),
            ga_population: 100,
            ga_tournament: 3,
            sa_initial_temperature: 1000.0,
            sa_cooling_rate: 0.999,
            beam_width: 5,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        self.weights
            .validate()
            .map_err(SearchError::InvalidConfig)?;
        if self.window == 0 {
            return Err(SearchError::InvalidConfig("window must be at least 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(SearchError::InvalidConfig("max_iterations must be at least 1".into()));
        }
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(SearchError::InvalidConfig(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            )));
        }
        if self.ga_population < 2 {
            return Err(SearchError::InvalidConfig("ga_population must be at least 2".into()));
        }
        if self.ga_tournament == 0 {
            return Err(SearchError::InvalidConfig("ga_tournament must be at least 1".into()));
        }
        if !(self.sa_cooling_rate > 0.0 && self.sa_cooling_rate <= 1.0) {
            return Err(SearchError::InvalidConfig(format!(
                "sa_cooling_rate must be in (0, 1], got {}",
                self.sa_cooling_rate
            )));
        }
        if !(self.sa_initial_temperature > 0.0) {
            return Err(SearchError::InvalidConfig(format!(
                "sa_initial_temperature must be positive, got {}",
                self.sa_initial_temperature
            )));
        }
        if self.beam_width == 0 {
            return Err(SearchError::InvalidConfig("beam_width must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("design space is invalid: {}", .0.join("; "))]
    InvalidSpace(Vec<String>),
}

/// The result of one search run.
///
/// `convergence_*` fields describe the moment the run stopped itself,
/// either through the sliding-window rule or by reaching the reward
/// ceiling; they are absent when the iteration cap cut the run short and
/// for beam search, which has no convergence notion. `converged` is true
/// only for window-rule stops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub algorithm: Algorithm,
    pub seed: u64,
    pub best_solution: DesignSolution,
    pub best_reward: f64,
    /// Iteration (1-based) whose evaluation first reached `best_reward`.
    pub best_iteration: usize,
    pub best_time_seconds: f64,
    /// One entry per iteration; the per-iteration meaning depends on the
    /// searcher (simulation reward, generation best, current state reward,
    /// or completed-solution reward).
    pub reward_trace: Vec<f64>,
    pub iterations_run: usize,
    pub wall_time_seconds: f64,
    /// Complete solutions scored during the run.
    pub evaluated_count: usize,
    /// Scored solutions that fired no hard rule.
    pub valid_count: usize,
    pub converged: bool,
    pub hit_rmax: bool,
    pub convergence_iteration: Option<usize>,
    pub convergence_time_seconds: Option<f64>,
    pub convergence_reward: Option<f64>,
}

impl SearchOutcome {
    pub fn validity_ratio(&self) -> Option<f64> {
        if self.evaluated_count == 0 {
            None
        } else {
            Some(self.valid_count as f64 / self.evaluated_count as f64)
        }
    }
}

/// True when `history` holds at least `window` entries and the last
/// `window` of them span a range of at most `epsilon`.
pub fn check_convergence(history: &[f64], window: usize, epsilon: f64) -> bool {
    if window == 0 || history.len() < window {
        return false;
    }
    let tail = &history[history.len() - window..];
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &v in tail {
        min = min.min(v);
        max = max.max(v);
    }
    max - min <= epsilon
}

/// Run one searcher on a space and constraint set.
pub fn run_search(
    algorithm: Algorithm,
    space: &DesignSpace,
    constraints: &ConstraintSet,
    config: &SearchConfig,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    let violations = space.validate();
    if !violations.is_empty() {
        return Err(SearchError::InvalidSpace(violations));
    }
    Ok(match algorithm {
        Algorithm::Mcts => mcts::search(space, constraints, config),
        Algorithm::Ga => ga::search(space, constraints, config),
        Algorithm::Sa => sa::search(space, constraints, config),
        Algorithm::Beam => beam::search(space, constraints, config),
    })
}

/// Precomputed per-search scoring context, so repeated evaluations do not
/// rebuild rule totals and recommended counts.
pub(crate) struct Scorer<'a> {
    space: &'a DesignSpace,
    constraints: &'a ConstraintSet,
    totals: KindTotals,
    recommended: BTreeMap<String, usize>,
    weights: RewardWeights,
}

impl<'a> Scorer<'a> {
    pub(crate) fn new(
        space: &'a DesignSpace,
        constraints: &'a ConstraintSet,
        weights: &RewardWeights,
    ) -> Self {
        Self {
            space,
            constraints,
            totals: constraints.totals(),
            recommended: constraints.recommended_counts(space),
            weights: *weights,
        }
    }

    pub(crate) fn score(&self, solution: &DesignSolution) -> RewardBreakdown {
        let counts = self.constraints.evaluate(solution);
        let penalty = crate::reward::quantity_penalty(solution, &self.recommended);
        combine(
            constraint_reward(&counts, &self.totals, &self.weights),
            penalty,
            counts,
            &self.weights,
        )
    }

    /// Score a partial walk: any rule touching a dimension that is not yet
    /// final counts as unsatisfied, and the quantity penalty covers only
    /// final multi-select dimensions.
    pub(crate) fn score_partial(&self, state: &PathState) -> RewardBreakdown {
        let mut counts = SatisfactionCounts::default();
        'rules: for rule in &self.constraints.rules {
            for lit in &rule.body {
                let Some(dim_pos) = self
                    .space
                    .dimensions
                    .iter()
                    .position(|d| d.dimension_id == lit.atom.dimension_id)
                else {
                    continue 'rules;
                };
                if dim_pos >= state.cursor() {
                    continue 'rules;
                }
                let dim = &self.space.dimensions[dim_pos];
                let selected = dim
                    .element_index(&lit.atom.element_id)
                    .is_some_and(|idx| state.has_selected(dim_pos, idx));
                if selected == lit.negated {
                    continue 'rules;
                }
            }
            match rule.kind {
                crate::constraints::RuleKind::Hard => counts.hard += 1,
                crate::constraints::RuleKind::SoftPositive => counts.soft_positive += 1,
                crate::constraints::RuleKind::SoftNegative => counts.soft_negative += 1,
            }
        }
        let mut penalty = 0.0;
        for (dimension_id, &rec) in &self.recommended {
            let Some(dim_pos) = self
                .space
                .dimensions
                .iter()
                .position(|d| &d.dimension_id == dimension_id)
            else {
                continue;
            };
            if dim_pos < state.cursor() {
                penalty += (state.selected_indices(dim_pos).len() as f64 - rec as f64).abs();
            }
        }
        combine(
            constraint_reward(&counts, &self.totals, &self.weights),
            penalty,
            counts,
            &self.weights,
        )
    }

    pub(crate) fn ceiling(&self) -> f64 {
        self.weights.beta
    }
}

/// Sample a uniform valid solution: one uniform element per single-select
/// dimension; for multi-select dimensions a uniform size in `1..=max_count`
/// followed by a uniform subset of that size.
///
/// Useful for seeding baselines and for picking benchmark targets.
pub fn random_solution(space: &DesignSpace, rng: &mut impl Rng) -> DesignSolution {
    let mut solution = DesignSolution::new();
    for dim in &space.dimensions {
        let m = dim.elements.len();
        let picks: Vec<usize> = if dim.multi_select {
            let size = rng.gen_range(1..=dim.effective_max_count().min(m));
            sample_indices(m, size, rng)
        } else {
            vec![rng.gen_range(0..m)]
        };
        let ids = picks
            .into_iter()
            .map(|i| dim.elements[i].element_id.clone())
            .collect();
        solution.selections.insert(dim.dimension_id.clone(), ids);
    }
    solution
}

/// `count` distinct indices from `0..m`, uniform without replacement.
pub(crate) fn sample_indices(m: usize, count: usize, rng: &mut impl Rng) -> Vec<usize> {
    debug_assert!(count <= m);
    let mut pool: Vec<usize> = (0..m).collect();
    for i in 0..count {
        let j = rng.gen_range(i..m);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}

/// Bookkeeping shared by all searchers: the reward trace, the running best,
/// evaluation counts, and stop-condition timing.
pub(crate) struct Tracker {
    algorithm: Algorithm,
    seed: u64,
    started: Instant,
    trace: Vec<f64>,
    best: Option<Best>,
    evaluated: usize,
    valid: usize,
}

struct Best {
    reward: f64,
    solution: DesignSolution,
    iteration: usize,
    seconds: f64,
}

impl Tracker {
    pub(crate) fn new(algorithm: Algorithm, seed: u64) -> Self {
        Self {
            algorithm,
            seed,
            started: Instant::now(),
            trace: Vec::new(),
            best: None,
            evaluated: 0,
            valid: 0,
        }
    }

    /// Record one scored complete solution. Ties keep the earliest best.
    pub(crate) fn record_candidate(
        &mut self,
        solution: &DesignSolution,
        breakdown: &RewardBreakdown,
        iteration: usize,
    ) {
        self.evaluated += 1;
        if breakdown.counts.is_valid() {
            self.valid += 1;
        }
        let improves = self.best.as_ref().is_none_or(|b| breakdown.total > b.reward);
        if improves {
            self.best = Some(Best {
                reward: breakdown.total,
                solution: solution.clone(),
                iteration,
                seconds: self.started.elapsed().as_secs_f64(),
            });
        }
    }

    pub(crate) fn push_trace(&mut self, value: f64) {
        self.trace.push(value);
    }

    pub(crate) fn trace(&self) -> &[f64] {
        &self.trace
    }

    pub(crate) fn finish(
        self,
        iterations_run: usize,
        ceiling: f64,
        converged: bool,
        stopped_at: Option<usize>,
    ) -> SearchOutcome {
        let wall = self.started.elapsed().as_secs_f64();
        let best = self.best.expect("search evaluated at least one solution");
        let convergence_reward = stopped_at.map(|_| best.reward);
        let convergence_time_seconds = stopped_at.map(|_| wall);
        SearchOutcome {
            algorithm: self.algorithm,
            seed: self.seed,
            best_reward: best.reward,
            best_solution: best.solution,
            best_iteration: best.iteration,
            best_time_seconds: best.seconds,
            reward_trace: self.trace,
            iterations_run,
            wall_time_seconds: wall,
            evaluated_count: self.evaluated,
            valid_count: self.valid,
            converged,
            hit_rmax: best.reward >= ceiling,
            convergence_iteration: stopped_at,
            convergence_time_seconds,
            convergence_reward,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn convergence_needs_a_full_window() {
        let flat = vec![7.3; 100];
        assert!(check_convergence(&flat, 100, 0.1));
        assert!(!check_convergence(&flat[..99], 100, 0.1));
    }

    #[test]
    fn convergence_respects_epsilon_boundary() {
        let mut history = vec![5.0; 99];
        history.push(5.11);
        assert!(!check_convergence(&history, 100, 0.1));
        history[99] = 5.1;
        assert!(check_convergence(&history, 100, 0.1));
    }

    #[test]
    fn convergence_looks_only_at_the_tail() {
        let mut history = vec![0.0, 100.0, -50.0];
        history.extend(std::iter::repeat(2.0).take(100));
        assert!(check_convergence(&history, 100, 0.1));
    }

    #[test]
    fn sampled_indices_are_distinct_and_in_range() {
        let mut rng = SearchRng::seed_from_u64(5);
        for _ in 0..50 {
            let picks = sample_indices(10, 4, &mut rng);
            assert_eq!(picks.len(), 4);
            let set: std::collections::BTreeSet<_> = picks.iter().collect();
            assert_eq!(set.len(), 4);
            assert!(picks.iter().all(|&i| i < 10));
        }
    }

    #[test]
    fn unknown_algorithm_name_is_rejected() {
        assert!("hillclimb".parse::<Algorithm>().is_err());
        assert_eq!("MCTS".parse::<Algorithm>().unwrap(), Algorithm::Mcts);
    }
}
