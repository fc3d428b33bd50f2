//! Annealing baseline: a single walker over complete solutions with a
//! geometric cooling schedule. Neighbors either replace one dimension's
//! selection with a fresh legal one, or add/remove a single element of a
//! multi-select dimension. Improving moves are always taken; worsening
//! moves pass a Metropolis test whose acceptance probability decays with
//! the temperature.
//!
//! The reward trace holds the walker's current reward after every step, so
//! the sliding-window rule fires once the chain stops moving.

use rand::Rng;
use rand::SeedableRng;

use crate::constraints::ConstraintSet;
use crate::space::{DesignSolution, DesignSpace};

use super::{
    check_convergence, random_solution, sample_indices, Algorithm, Scorer, SearchConfig,
    SearchOutcome, SearchRng, Tracker,
};

pub fn search(space: &DesignSpace, constraints: &ConstraintSet, config: &SearchConfig) -> SearchOutcome {
    let scorer = Scorer::new(space, constraints, &config.weights);
    let mut rng = SearchRng::seed_from_u64(config.seed);
    let mut tracker = Tracker::new(Algorithm::Sa, config.seed);

    let mut current = random_solution(space, &mut rng);
    let mut current_reward = {
        let breakdown = scorer.score(&current);
        tracker.record_candidate(&current, &breakdown, 1);
        breakdown.total
    };
    tracker.push_trace(current_reward);

    let mut steps = 1;
    let mut converged = false;
    let mut stopped_at = None;

    for step in 2..=config.max_iterations {
        steps = step;
        let temperature = config.sa_initial_temperature * config.sa_cooling_rate.powi(step as i32 - 1);

        let candidate = neighbor(space, &current, &mut rng);
        let breakdown = scorer.score(&candidate);
        tracker.record_candidate(&candidate, &breakdown, step);

        let improvement = breakdown.total - current_reward;
        if improvement >= 0.0 || accept_worsening(improvement, temperature, &mut rng) {
            current = candidate;
            current_reward = breakdown.total;
        }
        tracker.push_trace(current_reward);

        if check_convergence(tracker.trace(), config.window, config.epsilon) {
            converged = true;
            stopped_at = Some(step);
            break;
        }
    }

    tracker.finish(steps, scorer.ceiling(), converged, stopped_at)
}

/// Metropolis test for a worsening move (`improvement < 0`). As the
/// temperature approaches zero only improving moves survive.
pub(crate) fn accept_worsening(improvement: f64, temperature: f64, rng: &mut impl Rng) -> bool {
    if temperature <= 0.0 {
        return false;
    }
    rng.gen::<f64>() < (improvement / temperature).exp()
}

/// One random legal edit of the solution.
fn neighbor(space: &DesignSpace, current: &DesignSolution, rng: &mut impl Rng) -> DesignSolution {
    let mut next = current.clone();
    let dim = &space.dimensions[rng.gen_range(0..space.dimensions.len())];
    let m = dim.elements.len();
    let gene = next
        .selections
        .get_mut(&dim.dimension_id)
        .expect("solution covers every dimension");

    if !dim.multi_select {
        gene.clear();
        gene.insert(dim.elements[rng.gen_range(0..m)].element_id.clone());
        return next;
    }

    #[derive(Clone, Copy)]
    enum Edit {
        Replace,
        Add,
        Remove,
    }
    let mut edits = vec![Edit::Replace];
    if gene.len() < dim.effective_max_count().min(m) {
        edits.push(Edit::Add);
    }
    if gene.len() > 1 {
        edits.push(Edit::Remove);
    }
    match edits[rng.gen_range(0..edits.len())] {
        Edit::Replace => {
            let size = rng.gen_range(1..=dim.effective_max_count().min(m));
            gene.clear();
            for i in sample_indices(m, size, rng) {
                gene.insert(dim.elements[i].element_id.clone());
            }
        }
        Edit::Add => {
            let absent: Vec<&str> = dim
                .elements
                .iter()
                .map(|e| e.element_id.as_str())
                .filter(|id| !gene.contains(*id))
                .collect();
            gene.insert(absent[rng.gen_range(0..absent.len())].to_string());
        }
        Edit::Remove => {
            let victim = gene
                .iter()
                .nth(rng.gen_range(0..gene.len()))
                .cloned()
                .expect("gene is non-empty");
            gene.remove(&victim);
        }
    }
    next
}
