//! Genetic baseline: one gene per dimension (subset-valued for multi-select
//! dimensions), tournament selection, per-dimension uniform crossover, and
//! mutation that either resamples a dimension or toggles one element of a
//! multi-select gene. Offspring that exceed cardinality bounds are repaired
//! rather than discarded. Every individual is produced by selection and
//! variation; nothing carries over unchanged.
//!
//! Iterations count fitness evaluations, one per individual, so the
//! evaluation budget is directly comparable with the other searchers. The
//! reward trace holds each evaluated individual's fitness in order and the
//! shared window rule applies to it; a window of mutating individuals
//! rarely collapses below the threshold, so runs typically end at the
//! evaluation cap. The reported best is the best individual ever evaluated,
//! which can exceed anything alive in the final population.

use std::collections::BTreeSet;

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
    let mut tracker = Tracker::new(Algorithm::Ga, config.seed);

    let mut population: Vec<DesignSolution> = (0..config.ga_population)
        .map(|_| random_solution(space, &mut rng))
        .collect();

    let mut evaluations = 0;
    let mut converged = false;
    let mut stopped_at = None;

    'search: loop {
        let mut fitness = Vec::with_capacity(population.len());
        for individual in &population {
            evaluations += 1;
            let breakdown = scorer.score(individual);
            tracker.record_candidate(individual, &breakdown, evaluations);
            tracker.push_trace(breakdown.total);
            fitness.push(breakdown.total);

            if check_convergence(tracker.trace(), config.window, config.epsilon) {
                converged = true;
                stopped_at = Some(evaluations);
                break 'search;
            }
            if evaluations >= config.max_iterations {
                break 'search;
            }
        }

        let mut next = Vec::with_capacity(config.ga_population);
        while next.len() < config.ga_population {
            let a = tournament(&fitness, config.ga_tournament, &mut rng);
            let b = tournament(&fitness, config.ga_tournament, &mut rng);
            let mut child = crossover(space, &population[a], &population[b], &mut rng);
            mutate(space, &mut child, &mut rng);
            repair(space, &mut child, &mut rng);
            next.push(child);
        }
        population = next;
    }

    tracker.finish(evaluations, scorer.ceiling(), converged, stopped_at)
}

/// Index of the fittest of `size` individuals drawn with replacement.
fn tournament(fitness: &[f64], size: usize, rng: &mut impl Rng) -> usize {
    let mut winner = rng.gen_range(0..fitness.len());
    for _ in 1..size {
        let challenger = rng.gen_range(0..fitness.len());
        if fitness[challenger] > fitness[winner] {
            winner = challenger;
        }
    }
    winner
}

/// Per-dimension uniform crossover: each gene comes from one parent.
fn crossover(
    space: &DesignSpace,
    a: &DesignSolution,
    b: &DesignSolution,
    rng: &mut impl Rng,
) -> DesignSolution {
    let mut child = DesignSolution::new();
    for dim in &space.dimensions {
        let source = if rng.gen::<bool>() { a } else { b };
        let gene = source
            .selections
            .get(&dim.dimension_id)
            .cloned()
            .unwrap_or_default();
        child.selections.insert(dim.dimension_id.clone(), gene);
    }
    child
}

/// Each dimension mutates with probability `1/n`: single-select genes are
/// resampled; multi-select genes are either resampled or have one element
/// toggled.
fn mutate(space: &DesignSpace, child: &mut DesignSolution, rng: &mut impl Rng) {
    let n = space.dimensions.len().max(1);
    for dim in &space.dimensions {
        if rng.gen_range(0..n) != 0 {
            continue;
        }
        let m = dim.elements.len();
        let gene = child
            .selections
            .get_mut(&dim.dimension_id)
            .expect("crossover filled every dimension");
        if !dim.multi_select {
            gene.clear();
            gene.insert(dim.elements[rng.gen_range(0..m)].element_id.clone());
        } else if rng.gen::<bool>() {
            let size = rng.gen_range(1..=dim.effective_max_count().min(m));
            gene.clear();
            for i in sample_indices(m, size, rng) {
                gene.insert(dim.elements[i].element_id.clone());
            }
        } else {
            let toggled = &dim.elements[rng.gen_range(0..m)].element_id;
            if !gene.remove(toggled) {
                gene.insert(toggled.clone());
            }
        }
    }
}

/// Enforce cardinality bounds: trim oversized genes at random, refill empty
/// ones with one random element.
fn repair(space: &DesignSpace, child: &mut DesignSolution, rng: &mut impl Rng) {
    for dim in &space.dimensions {
        let max = dim.effective_max_count();
        let gene = child
            .selections
            .get_mut(&dim.dimension_id)
            .expect("crossover filled every dimension");
        while gene.len() > max {
            let victim = gene
                .iter()
                .nth(rng.gen_range(0..gene.len()))
                .cloned()
                .expect("gene is non-empty");
            gene.remove(&victim);
        }
        if gene.is_empty() {
            gene.insert(
                dim.elements[rng.gen_range(0..dim.elements.len())]
                    .element_id
                    .clone(),
            );
        }
        // drop element ids that no longer resolve (defends against foreign genes)
        let known: BTreeSet<&str> = dim.elements.iter().map(|e| e.element_id.as_str()).collect();
        gene.retain(|id| known.contains(id.as_str()));
        if gene.is_empty() {
            gene.insert(
                dim.elements[rng.gen_range(0..dim.elements.len())]
                    .element_id
                    .clone(),
            );
        }
    }
}
