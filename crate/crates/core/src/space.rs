//! The structured design-space model: orthogonal dimensions holding discrete
//! elements, and solutions selecting one (or, for multi-select dimensions,
//! several) elements per dimension.
//!
//! A [`DesignSpace`] is the declarative input to everything else in this
//! crate: constraints bind against it, searchers walk it, and action plans
//! consume selections drawn from it. Spaces are immutable once constructed
//! and safe to share across concurrent search runs.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default selection bound for multi-select dimensions that do not declare
/// their own `max_count`.
pub const DEFAULT_MAX_COUNT: usize = 3;

/// Current version of the design-space config schema.
pub const SCHEMA_VERSION: u32 = 1;

/// One selectable option within a dimension.
///
/// The optional payload carries flat string key-value data for tuple-like
/// elements, e.g. `{"field": "sales", "aggregation": "sum"}` for a measure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Element {
    pub element_id: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub payload: BTreeMap<String, String>,
}

impl Element {
    pub fn new(element_id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            element_id: element_id.into(),
            label: label.into(),
            payload: BTreeMap::new(),
        }
    }

    pub fn with_payload(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.payload.insert(key.into(), value.into());
        self
    }
}

/// One independent decision axis: a finite, ordered set of elements.
///
/// `multi_select` dimensions admit between 1 and `max_count` simultaneous
/// selections; all others take exactly one element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dimension {
    pub dimension_id: String,
    pub label: String,
    #[serde(default)]
    pub multi_select: bool,
    /// Upper selection bound; only meaningful when `multi_select` is set.
    /// Absent means [`DEFAULT_MAX_COUNT`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_count: Option<usize>,
    pub elements: Vec<Element>,
}

impl Dimension {
    pub fn new(dimension_id: impl Into<String>, label: impl Into<String>) -> Self {
        Self {
            dimension_id: dimension_id.into(),
            label: label.into(),
            multi_select: false,
            max_count: None,
            elements: Vec::new(),
        }
    }

    pub fn multi_select(mut self, max_count: usize) -> Self {
        self.multi_select = true;
        self.max_count = Some(max_count);
        self
    }

    pub fn element(mut self, element: Element) -> Self {
        self.elements.push(element);
        self
    }

    /// Effective selection bound: 1 for single-select dimensions, the
    /// declared or default `max_count` otherwise.
    pub fn effective_max_count(&self) -> usize {
        if self.multi_select {
            self.max_count.unwrap_or(DEFAULT_MAX_COUNT)
        } else {
            1
        }
    }

    /// Position of an element within this dimension, if present.
    pub fn element_index(&self, element_id: &str) -> Option<usize> {
        self.elements.iter().position(|e| e.element_id == element_id)
    }

    pub fn find_element(&self, element_id: &str) -> Option<&Element> {
        self.elements.iter().find(|e| e.element_id == element_id)
    }
}

/// An ordered collection of orthogonal dimensions.
///
/// Dimension order is significant: it is the expansion order used by the
/// searchers and the iteration order of [`DesignSpace::enumerate_solutions`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpace {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub space_id: String,
    pub dimensions: Vec<Dimension>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// One point in a design space: a set of selected element ids per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSolution {
    pub selections: BTreeMap<String, BTreeSet<String>>,
}

impl DesignSolution {
    pub fn new() -> Self {
        Self { selections: BTreeMap::new() }
    }

    pub fn select(mut self, dimension_id: impl Into<String>, element_ids: &[&str]) -> Self {
        self.selections.insert(
            dimension_id.into(),
            element_ids.iter().map(|s| s.to_string()).collect(),
        );
        self
    }

    /// Whether `element_id` is selected in `dimension_id`.
    pub fn selects(&self, dimension_id: &str, element_id: &str) -> bool {
        self.selections
            .get(dimension_id)
            .is_some_and(|set| set.contains(element_id))
    }

    pub fn selected_count(&self, dimension_id: &str) -> usize {
        self.selections.get(dimension_id).map_or(0, |s| s.len())
    }
}

impl Default for DesignSolution {
    fn default() -> Self {
        Self::new()
    }
}

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid design-space document: {0}")]
    Format(#[from] serde_json::Error),
    #[error("solution count {required} exceeds enumeration cap {cap}")]
    CapacityExceeded { required: u128, cap: usize },
}

impl DesignSpace {
    pub fn new(space_id: impl Into<String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            space_id: space_id.into(),
            dimensions: Vec::new(),
        }
    }

    pub fn dimension(mut self, dimension: Dimension) -> Self {
        self.dimensions.push(dimension);
        self
    }

    pub fn find_dimension(&self, dimension_id: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.dimension_id == dimension_id)
    }

    /// Parse a design-space config document (JSON).
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, SpaceError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SpaceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design space serializes")
    }

    /// Check the structural invariants of the space.
    ///
    /// Returns one human-readable description per violation; an empty list
    /// means the space is well formed. Violations are data, not failures.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.dimensions.is_empty() {
            violations.push(format!("space '{}' has no dimensions", self.space_id));
        }
        let mut seen_dims = BTreeSet::new();
        for dim in &self.dimensions {
            if !seen_dims.insert(dim.dimension_id.clone()) {
                violations.push(format!("duplicate dimension id '{}'", dim.dimension_id));
            }
            if dim.elements.is_empty() {
                violations.push(format!("dimension '{}' has no elements", dim.dimension_id));
            }
            let mut seen_elems = BTreeSet::new();
            for elem in &dim.elements {
                if !seen_elems.insert(elem.element_id.clone()) {
                    violations.push(format!(
                        "dimension '{}' has duplicate element id '{}'",
                        dim.dimension_id, elem.element_id
                    ));
                }
            }
            if dim.multi_select {
                let max = dim.effective_max_count();
                if max == 0 {
                    violations.push(format!(
                        "dimension '{}' declares max_count 0; at least one selection is required",
                        dim.dimension_id
                    ));
                } else if !dim.elements.is_empty() && max > dim.elements.len() {
                    violations.push(format!(
                        "dimension '{}' declares max_count {} but only has {} elements",
                        dim.dimension_id,
                        max,
                        dim.elements.len()
                    ));
                }
            }
        }
        violations
    }

    /// Check a solution against this space.
    ///
    /// Empty result means: every dimension carries an entry, cardinality
    /// bounds hold, and every selected element exists in its dimension.
    pub fn validate_solution(&self, solution: &DesignSolution) -> Vec<String> {
        let mut violations = Vec::new();
        for dim in &self.dimensions {
            match solution.selections.get(&dim.dimension_id) {
                None => violations.push(format!(
                    "solution is missing an entry for dimension '{}'",
                    dim.dimension_id
                )),
                Some(selected) => {
                    if selected.is_empty() {
                        violations.push(format!(
                            "dimension '{}' has an empty selection; at least one element is required",
                            dim.dimension_id
                        ));
                    }
                    let max = dim.effective_max_count();
                    if selected.len() > max {
                        violations.push(format!(
                            "dimension '{}' selects {} elements but allows at most {}",
                            dim.dimension_id,
                            selected.len(),
                            max
                        ));
                    }
                    for element_id in selected {
                        if dim.find_element(element_id).is_none() {
                            violations.push(format!(
                                "dimension '{}' has no element '{}'",
                                dim.dimension_id, element_id
                            ));
                        }
                    }
                }
            }
        }
        for dimension_id in solution.selections.keys() {
            if self.find_dimension(dimension_id).is_none() {
                violations.push(format!(
                    "solution references unknown dimension '{}'",
                    dimension_id
                ));
            }
        }
        violations
    }

    /// Total number of valid solutions: the product over single-select
    /// dimensions of their element counts, times the product over
    /// multi-select dimensions of the number of non-empty selections of
    /// size at most `max_count`.
    pub fn solution_count(&self) -> u128 {
        let mut total: u128 = 1;
        for dim in &self.dimensions {
            let m = dim.elements.len() as u128;
            let per_dim = if dim.multi_select {
                (1..=dim.effective_max_count() as u128)
                    .map(|s| binomial(m, s))
                    .sum::<u128>()
            } else {
                m
            };
            total = total.saturating_mul(per_dim);
        }
        total
    }

    /// Exhaustively list every valid solution, in a deterministic order:
    /// dimensions in declaration order, selections within a dimension in
    /// index-lexicographic order.
    ///
    /// Refuses to materialize more than `cap` solutions.
    pub fn enumerate_solutions(&self, cap: usize) -> Result<Vec<DesignSolution>, SpaceError> {
        let required = self.solution_count();
        if required > cap as u128 {
            return Err(SpaceError::CapacityExceeded { required, cap });
        }

        let per_dim: Vec<Vec<Vec<usize>>> = self
            .dimensions
            .iter()
            .map(|dim| {
                if dim.multi_select {
                    subsets_in_order(dim.elements.len(), dim.effective_max_count())
                } else {
                    (0..dim.elements.len()).map(|i| vec![i]).collect()
                }
            })
            .collect();

        let mut out = Vec::with_capacity(required as usize);
        let mut picks = vec![0usize; self.dimensions.len()];
        loop {
            let mut solution = DesignSolution::new();
            for (pos, dim) in self.dimensions.iter().enumerate() {
                let chosen: BTreeSet<String> = per_dim[pos][picks[pos]]
                    .iter()
                    .map(|&i| dim.elements[i].element_id.clone())
                    .collect();
                solution.selections.insert(dim.dimension_id.clone(), chosen);
            }
            out.push(solution);

            // odometer increment, least-significant (last) dimension first
            let mut pos = self.dimensions.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                picks[pos] += 1;
                if picks[pos] < per_dim[pos].len() {
                    break;
                }
                picks[pos] = 0;
            }
        }
    }
}

/// All non-empty index subsets of `{0..m}` with size at most `max_count`,
/// in lexicographic order over strictly increasing index sequences.
pub(crate) fn subsets_in_order(m: usize, max_count: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::new();
    fn descend(start: usize, m: usize, max_count: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        for i in start..m {
            current.push(i);
            out.push(current.clone());
            if current.len() < max_count {
                descend(i + 1, m, max_count, current, out);
            }
            current.pop();
        }
    }
    if max_count > 0 {
        descend(0, m, max_count, &mut current, &mut out);
    }
    out
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result.saturating_mul(n - i) / (i + 1);
    }
    result
}
