//! Beam baseline: a deterministic layer-by-layer sweep over the canonical
//! walk, keeping the `beam_width` highest-scoring partial walks per layer.
//! Partial walks are scored with the partial reward, under which any rule
//! touching an unfinished dimension counts as unsatisfied; a finished walk
//! scores exactly its full reward.
//!
//! The sweep has no convergence notion: it ends when every kept walk is
//! complete. Completed walks are scored (and counted) once, at the layer
//! where they complete, even if a later layer prunes them.

use crate::constraints::ConstraintSet;
use crate::space::DesignSpace;

use super::path::PathState;
use super::{Algorithm, Scorer, SearchConfig, SearchOutcome, Tracker};

pub fn search(space: &DesignSpace, constraints: &ConstraintSet, config: &SearchConfig) -> SearchOutcome {
    let scorer = Scorer::new(space, constraints, &config.weights);
    let mut tracker = Tracker::new(Algorithm::Beam, config.seed);

    struct Entry {
        state: PathState,
        score: f64,
    }

    let root = PathState::new(space);
    let root_score = scorer.score_partial(&root).total;
    let mut beam = vec![Entry { state: root, score: root_score }];
    let mut layers = 0;

    while beam.iter().any(|e| !e.state.is_complete()) {
        layers += 1;
        let mut next: Vec<Entry> = Vec::new();
        for entry in beam {
            if entry.state.is_complete() {
                next.push(entry);
                continue;
            }
            for step in entry.state.legal_steps(space) {
                let mut state = entry.state.clone();
                state.apply(space, step);
                if state.is_complete() {
                    let solution = state.to_solution(space);
                    let breakdown = scorer.score(&solution);
                    tracker.record_candidate(&solution, &breakdown, layers);
                    tracker.push_trace(breakdown.total);
                    next.push(Entry { state, score: breakdown.total });
                } else {
                    let score = scorer.score_partial(&state).total;
                    next.push(Entry { state, score });
                }
            }
        }
        // stable: ties keep generation order
        next.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(std::cmp::Ordering::Equal));
        next.truncate(config.beam_width);
        beam = next;
    }

    tracker.finish(layers, scorer.ceiling(), false, None)
}
