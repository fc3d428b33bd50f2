//! Canonical walk over a design space: dimensions are assigned in
//! declaration order, and within a multi-select dimension elements are
//! picked with strictly increasing index until the bound is reached or the
//! walk stops the dimension explicitly. Every complete walk decodes to a
//! distinct valid solution, and every valid solution has exactly one walk.

use std::collections::BTreeSet;

use crate::space::{DesignSolution, DesignSpace};

/// One move of the walk: pick the element at an index of the current
/// dimension, or close a multi-select dimension that already holds at
/// least one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Step {
    Element(usize),
    Stop,
}

/// Selections accumulated along a walk; dimensions before `cursor` are
/// final, the dimension at `cursor` may be partially filled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathState {
    selected: Vec<Vec<usize>>,
    cursor: usize,
}

impl PathState {
    pub fn new(space: &DesignSpace) -> Self {
        Self {
            selected: vec![Vec::new(); space.dimensions.len()],
            cursor: 0,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.cursor == self.selected.len()
    }

    /// Index of the first dimension that is not yet final.
    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Selected element indices for one dimension (ascending).
    pub fn selected_indices(&self, dim_index: usize) -> &[usize] {
        &self.selected[dim_index]
    }

    /// Moves legal from this state; empty exactly when the walk is complete.
    pub fn legal_steps(&self, space: &DesignSpace) -> Vec<Step> {
        if self.is_complete() {
            return Vec::new();
        }
        let dim = &space.dimensions[self.cursor];
        let current = &self.selected[self.cursor];
        let mut steps = Vec::new();
        if !dim.multi_select {
            for i in 0..dim.elements.len() {
                steps.push(Step::Element(i));
            }
            return steps;
        }
        let next = current.last().map_or(0, |&i| i + 1);
        if current.len() < dim.effective_max_count() {
            for i in next..dim.elements.len() {
                steps.push(Step::Element(i));
            }
        }
        if !current.is_empty() {
            steps.push(Step::Stop);
        }
        steps
    }

    /// Apply a legal move, advancing to the next dimension when the current
    /// one is done.
    pub fn apply(&mut self, space: &DesignSpace, step: Step) {
        debug_assert!(!self.is_complete(), "cannot step a complete walk");
        let dim = &space.dimensions[self.cursor];
        match step {
            Step::Element(i) => {
                debug_assert!(i < dim.elements.len());
                debug_assert!(self.selected[self.cursor].last().is_none_or(|&last| i > last));
                self.selected[self.cursor].push(i);
                if !dim.multi_select
                    || self.selected[self.cursor].len() == dim.effective_max_count()
                {
                    self.cursor += 1;
                }
            }
            Step::Stop => {
                debug_assert!(dim.multi_select && !self.selected[self.cursor].is_empty());
                self.cursor += 1;
            }
        }
    }

    /// Decode a complete walk into a solution.
    pub fn to_solution(&self, space: &DesignSpace) -> DesignSolution {
        debug_assert!(self.is_complete(), "walk must be complete");
        let mut solution = DesignSolution::new();
        for (dim, picks) in space.dimensions.iter().zip(&self.selected) {
            let ids: BTreeSet<String> = picks
                .iter()
                .map(|&i| dim.elements[i].element_id.clone())
                .collect();
            solution.selections.insert(dim.dimension_id.clone(), ids);
        }
        solution
    }

    /// Whether the element at `elem_index` of dimension `dim_index` is
    /// selected so far.
    pub fn has_selected(&self, dim_index: usize, elem_index: usize) -> bool {
        self.selected[dim_index].contains(&elem_index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Element};

    fn space() -> DesignSpace {
        DesignSpace::new("s")
            .dimension(
                Dimension::new("a", "A")
                    .element(Element::new("a1", "A1"))
                    .element(Element::new("a2", "A2")),
            )
            .dimension(
                Dimension::new("m", "M")
                    .multi_select(2)
                    .element(Element::new("m1", "M1"))
                    .element(Element::new("m2", "M2"))
                    .element(Element::new("m3", "M3")),
            )
    }

    #[test]
    fn single_select_advances_immediately() {
        let space = space();
        let mut path = PathState::new(&space);
        assert_eq!(path.legal_steps(&space).len(), 2);
        path.apply(&space, Step::Element(1));
        assert_eq!(path.cursor(), 1);
    }

    #[test]
    fn multi_select_offers_increasing_indices_and_stop() {
        let space = space();
        let mut path = PathState::new(&space);
        path.apply(&space, Step::Element(0));
        // fresh multi dimension: all three elements, no stop yet
        assert_eq!(
            path.legal_steps(&space),
            vec![Step::Element(0), Step::Element(1), Step::Element(2)]
        );
        path.apply(&space, Step::Element(1));
        // one picked: only higher indices plus stop
        assert_eq!(path.legal_steps(&space), vec![Step::Element(2), Step::Stop]);
        path.apply(&space, Step::Element(2));
        // bound of two reached: dimension closed automatically
        assert!(path.is_complete());
        let solution = path.to_solution(&space);
        assert_eq!(solution.selected_count("m"), 2);
        assert!(solution.selects("m", "m2") && solution.selects("m", "m3"));
    }

    #[test]
    fn stop_closes_a_multi_dimension() {
        let space = space();
        let mut path = PathState::new(&space);
        path.apply(&space, Step::Element(0));
        path.apply(&space, Step::Element(2));
        assert_eq!(path.legal_steps(&space), vec![Step::Stop]);
        path.apply(&space, Step::Stop);
        assert!(path.is_complete());
        assert_eq!(path.to_solution(&space).selected_count("m"), 1);
    }

    #[test]
    fn every_walk_yields_a_distinct_valid_solution() {
        let space = space();
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![PathState::new(&space)];
        while let Some(state) = stack.pop() {
            if state.is_complete() {
                let solution = state.to_solution(&space);
                assert!(space.validate_solution(&solution).is_empty());
                assert!(seen.insert(format!("{solution:?}")), "duplicate walk");
                continue;
            }
            for step in state.legal_steps(&space) {
                let mut next = state.clone();
                next.apply(&space, step);
                stack.push(next);
            }
        }
        assert_eq!(seen.len() as u128, space.solution_count());
    }
}
