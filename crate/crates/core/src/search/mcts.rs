//! Tree search over the canonical walk of a design space.
//!
//! Each node extends its parent's walk by one step; a root-to-leaf path is
//! a complete solution. Iterations run the usual four phases: descend along
//! maximal tree-policy scores while nodes are fully expanded, expand one
//! untried step, roll the walk out to completion with uniform random steps,
//! score the rollout, and propagate the reward back up the path.
//!
//! A run stops as soon as a rollout reaches the reward ceiling, when the
//! sliding window of recent rollout rewards settles, or at the iteration
//! cap, whichever comes first. The reported best solution is the
//! highest-reward rollout observed, with ties resolved toward the earliest
//! iteration.

use rand::Rng;
use rand::SeedableRng;
use serde::Serialize;

use crate::constraints::ConstraintSet;
use crate::space::DesignSpace;

use super::path::{PathState, Step};
use super::{check_convergence, Algorithm, Scorer, SearchConfig, SearchOutcome, SearchRng, Tracker};

/// Tree-policy score: mean node reward plus an exploration bonus that
/// shrinks as the node is visited relative to its parent.
///
/// Callers must only score visited nodes under a visited parent.
pub fn uct_score(reward_sum: f64, visits: u64, parent_visits: u64, exploration: f64) -> f64 {
    debug_assert!(visits >= 1, "only visited nodes are scored");
    debug_assert!(parent_visits >= 1);
    let n = visits as f64;
    reward_sum / n + exploration * ((parent_visits as f64).ln() / n).sqrt()
}

/// The step a node added to its parent's walk.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "element_id")]
pub enum NodeChoice {
    /// Selected one element of the node's dimension.
    Element(String),
    /// Closed a multi-select dimension ("none").
    Stop,
}

/// One node of the search tree.
#[derive(Debug, Clone)]
pub struct TreeNode {
    pub id: usize,
    pub parent: Option<usize>,
    /// Absent for the root.
    pub dimension_id: Option<String>,
    /// Absent for the root.
    pub choice: Option<NodeChoice>,
    pub visits: u64,
    pub reward_sum: f64,
    pub children: Vec<usize>,
    state: PathState,
    untried: Vec<Step>,
}

impl TreeNode {
    /// The walk state accumulated from the root to this node.
    pub fn state(&self) -> &PathState {
        &self.state
    }

    pub fn is_terminal(&self) -> bool {
        self.state.is_complete()
    }

    /// Steps not yet expanded into children.
    pub fn untried_len(&self) -> usize {
        self.untried.len()
    }
}

/// Arena of nodes; index 0 is the root.
#[derive(Debug, Clone)]
pub struct Tree {
    nodes: Vec<TreeNode>,
}

impl Tree {
    fn with_root(space: &DesignSpace) -> Self {
        let state = PathState::new(space);
        let untried = state.legal_steps(space);
        Self {
            nodes: vec![TreeNode {
                id: 0,
                parent: None,
                dimension_id: None,
                choice: None,
                visits: 0,
                reward_sum: 0.0,
                children: Vec::new(),
                state,
                untried,
            }],
        }
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, id: usize) -> &TreeNode {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> impl Iterator<Item = &TreeNode> {
        self.nodes.iter()
    }

    fn add_child(&mut self, parent: usize, space: &DesignSpace, step: Step) -> usize {
        let mut state = self.nodes[parent].state.clone();
        let dimension_id = space.dimensions[state.cursor()].dimension_id.clone();
        let choice = match step {
            Step::Element(i) => {
                NodeChoice::Element(space.dimensions[state.cursor()].elements[i].element_id.clone())
            }
            Step::Stop => NodeChoice::Stop,
        };
        state.apply(space, step);
        let untried = state.legal_steps(space);
        let id = self.nodes.len();
        self.nodes.push(TreeNode {
            id,
            parent: Some(parent),
            dimension_id: Some(dimension_id),
            choice: Some(choice),
            visits: 0,
            reward_sum: 0.0,
            children: Vec::new(),
            state,
            untried,
        });
        self.nodes[parent].children.push(id);
        id
    }
}

/// One simulation: the tree path it went through and the reward it scored.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationRecord {
    pub iteration: usize,
    /// Node ids from the root down to the expanded node.
    pub path: Vec<usize>,
    pub reward: f64,
}

/// A search outcome together with the final tree and the per-iteration
/// simulation log, for callers that inspect search internals.
#[derive(Debug)]
pub struct MctsRun {
    pub outcome: SearchOutcome,
    pub tree: Tree,
    pub simulations: Vec<SimulationRecord>,
}

pub fn search(space: &DesignSpace, constraints: &ConstraintSet, config: &SearchConfig) -> SearchOutcome {
    search_traced(space, constraints, config).outcome
}

/// Like [`search`], additionally returning the tree and simulation log.
pub fn search_traced(
    space: &DesignSpace,
    constraints: &ConstraintSet,
    config: &SearchConfig,
) -> MctsRun {
    let scorer = Scorer::new(space, constraints, &config.weights);
    let mut rng = SearchRng::seed_from_u64(config.seed);
    let mut tree = Tree::with_root(space);
    let mut tracker = Tracker::new(Algorithm::Mcts, config.seed);
    let mut simulations = Vec::new();

    let mut iterations_run = 0;
    let mut converged = false;
    let mut stopped_at = None;

    for iteration in 1..=config.max_iterations {
        iterations_run = iteration;

        // Selection: descend while fully expanded and non-terminal. Exact
        // score ties (common once sibling statistics equalize) are broken
        // uniformly at random so no child is starved by its position.
        let mut node = 0usize;
        while tree.nodes[node].untried.is_empty() && !tree.nodes[node].children.is_empty() {
            let parent_visits = tree.nodes[node].visits.max(1);
            let mut best_child = tree.nodes[node].children[0];
            let mut best_score = f64::NEG_INFINITY;
            let mut ties = 1u32;
            for &child in &tree.nodes[node].children {
                let c = &tree.nodes[child];
                let score = uct_score(c.reward_sum, c.visits, parent_visits, config.exploration);
                if score > best_score {
                    best_score = score;
                    best_child = child;
                    ties = 1;
                } else if score == best_score {
                    ties += 1;
                    if rng.gen_range(0..ties) == 0 {
                        best_child = child;
                    }
                }
            }
            node = best_child;
        }

        // Expansion: attach one untried step, chosen uniformly.
        if !tree.nodes[node].untried.is_empty() {
            let pick = rng.gen_range(0..tree.nodes[node].untried.len());
            let step = tree.nodes[node].untried.swap_remove(pick);
            node = tree.add_child(node, space, step);
        }

        // Simulation: uniform random completion of the walk.
        let mut state = tree.nodes[node].state.clone();
        loop {
            let steps = state.legal_steps(space);
            if steps.is_empty() {
                break;
            }
            let step = steps[rng.gen_range(0..steps.len())];
            state.apply(space, step);
        }
        let solution = state.to_solution(space);
        let breakdown = scorer.score(&solution);
        let reward = breakdown.total;
        tracker.record_candidate(&solution, &breakdown, iteration);
        tracker.push_trace(reward);

        // Backpropagation along the tree path.
        let mut path = Vec::new();
        let mut cursor = Some(node);
        while let Some(id) = cursor {
            path.push(id);
            cursor = tree.nodes[id].parent;
        }
        path.reverse();
        for &id in &path {
            tree.nodes[id].visits += 1;
            tree.nodes[id].reward_sum += reward;
        }
        simulations.push(SimulationRecord { iteration, path, reward });

        if reward >= scorer.ceiling() {
            stopped_at = Some(iteration);
            break;
        }
        if check_convergence(tracker.trace(), config.window, config.epsilon) {
            converged = true;
            stopped_at = Some(iteration);
            break;
        }
    }

    let outcome = tracker.finish(iterations_run, scorer.ceiling(), converged, stopped_at);
    MctsRun { outcome, tree, simulations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Element};

    fn tiny_space() -> DesignSpace {
        DesignSpace::new("tiny")
            .dimension(
                Dimension::new("d1", "D1")
                    .element(Element::new("a", "A"))
                    .element(Element::new("b", "B")),
            )
            .dimension(
                Dimension::new("d2", "D2")
                    .element(Element::new("c", "C"))
                    .element(Element::new("d", "D")),
            )
    }

    #[test]
    fn uct_matches_closed_form() {
        let expected = 5.0 + 5.0 * (2.0f64.ln()).sqrt();
        assert!((uct_score(5.0, 1, 2, 5.0) - expected).abs() < 1e-9);
        // no exploration: pure mean
        assert_eq!(uct_score(6.0, 2, 10, 0.0), 3.0);
        // parent visited once: bonus vanishes
        assert_eq!(uct_score(5.0, 1, 1, 5.0), 5.0);
    }

    #[test]
    fn ceiling_rollout_terminates_search() {
        let space = tiny_space();
        let cs = ConstraintSet::parse(
            "soft_positive_constraint(x,1) :- d1(x,a).\nsoft_positive_constraint(x,2) :- d2(x,c).\n",
            &space,
        )
        .unwrap();
        let outcome = search(&space, &cs, &SearchConfig::default().with_seed(11));
        assert!(outcome.hit_rmax);
        assert_eq!(outcome.best_reward, 10.0);
        assert!(outcome.best_solution.selects("d1", "a"));
        assert!(outcome.best_solution.selects("d2", "c"));
        assert!(!outcome.converged);
        assert!(outcome.convergence_iteration.is_some());
    }

    #[test]
    fn empty_constraints_converge_by_window() {
        let space = tiny_space();
        let outcome = search(&space, &ConstraintSet::empty(), &SearchConfig::default().with_seed(3));
        assert!(outcome.converged);
        assert_eq!(outcome.best_reward, 0.0);
        assert_eq!(outcome.iterations_run, 100);
        assert_eq!(outcome.convergence_iteration, Some(100));
    }

    #[test]
    fn single_solution_space_is_found_in_one_iteration() {
        let space = DesignSpace::new("one")
            .dimension(Dimension::new("d", "D").element(Element::new("only", "Only")));
        let outcome = search(&space, &ConstraintSet::empty(), &SearchConfig::default().with_seed(0));
        assert_eq!(outcome.best_iteration, 1);
        assert!(outcome.best_solution.selects("d", "only"));
    }

    #[test]
    fn identical_seeds_reproduce_traces() {
        let space = tiny_space();
        let cs = ConstraintSet::parse("soft_negative_constraint(x,1) :- d2(x,d).", &space).unwrap();
        let config = SearchConfig::default().with_seed(42);
        let a = search(&space, &cs, &config);
        let b = search(&space, &cs, &config);
        assert_eq!(a.reward_trace, b.reward_trace);
        assert_eq!(a.best_solution, b.best_solution);
        assert_eq!(a.best_reward, b.best_reward);
    }

    #[test]
    fn node_statistics_match_simulation_log() {
        let space = tiny_space();
        let cs = ConstraintSet::parse("soft_negative_constraint(x,1) :- d1(x,b).", &space).unwrap();
        let mut config = SearchConfig::default().with_seed(9);
        config.max_iterations = 200;
        config.window = 1000; // never converges within the cap
        let run = search_traced(&space, &cs, &config);

        let mut visits = vec![0u64; run.tree.len()];
        let mut rewards = vec![0.0f64; run.tree.len()];
        for sim in &run.simulations {
            for &id in &sim.path {
                visits[id] += 1;
                rewards[id] += sim.reward;
            }
        }
        for node in run.tree.nodes() {
            assert_eq!(node.visits, visits[node.id], "visit mismatch at node {}", node.id);
            assert_eq!(node.reward_sum, rewards[node.id], "reward mismatch at node {}", node.id);
            let child_sum: u64 = node.children.iter().map(|&c| run.tree.node(c).visits).sum();
            assert!(node.visits >= child_sum);
        }
    }

    #[test]
    fn tree_paths_decode_to_valid_prefixes() {
        let space = tiny_space();
        let cs = ConstraintSet::empty();
        let run = search_traced(&space, &cs, &SearchConfig::default().with_seed(1));
        for node in run.tree.nodes() {
            if node.is_terminal() {
                let solution = node.state().to_solution(&space);
                assert!(space.validate_solution(&solution).is_empty());
            }
        }
    }
}
