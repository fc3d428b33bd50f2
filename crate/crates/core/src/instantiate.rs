//! Builds a data-fact design space from a tabular dataset: fixed fact-type
//! and title dimensions, plus breakdown, measure, subspace, and focus
//! dimensions instantiated from the dataset's columns and values.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{DesignSpace, Dimension, Element};

/// Default bound on distinct values enumerated per column when building
/// subspace and focus dimensions.
pub const DEFAULT_VALUE_CAP: usize = 20;

/// Hard bound on distinct values retained per column in a profile.
const PROFILE_DISTINCT_CAP: usize = 1000;

/// The ten fixed fact-type elements.
pub const FACT_TYPES: [&str; 10] = [
    "Value",
    "Difference",
    "Proportion",
    "Trend",
    "Categorization",
    "Distribution",
    "Rank",
    "Association",
    "Extreme",
    "Outlier",
];

/// The four fixed visualization-title elements.
pub const VISUALIZATION_TITLES: [&str; 4] = [
    "Data highlighting",
    "Stating an issue",
    "Making an evaluation or judgment",
    "Asking a question",
];

/// Aggregations paired with each numerical field in the measure dimension.
pub const AGGREGATIONS: [&str; 5] = ["sum", "mean", "max", "min", "count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Categorical,
    Temporal,
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnProfile {
    pub name: String,
    pub kind: ColumnKind,
    /// Distinct non-empty values in first-appearance order, capped.
    pub distinct_values: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetProfile {
    pub columns: Vec<ColumnProfile>,
    pub row_count: usize,
}

impl DatasetProfile {
    pub fn non_numerical_columns(&self) -> impl Iterator<Item = &ColumnProfile> {
        self.columns
            .iter()
            .filter(|c| c.kind != ColumnKind::Numerical)
    }

    pub fn numerical_columns(&self) -> impl Iterator<Item = &ColumnProfile> {
        self.columns
            .iter()
            .filter(|c| c.kind == ColumnKind::Numerical)
    }
}

#[derive(Debug, Error)]
pub enum InstantiateError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed dataset: {0}")]
    Malformed(String),
    #[error("dataset has no data rows")]
    Empty,
    #[error("row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("cannot build a fact space: {0}")]
    MissingColumns(String),
}

/// Profile a comma-delimited, UTF-8, header-bearing file: infer each
/// column's kind and collect its distinct values.
///
/// A column is temporal when every non-empty cell is an ISO 8601 date
/// (`YYYY-MM-DD`) or a four-digit year, numerical when every non-empty cell
/// parses as a finite number, and categorical otherwise. The temporal check
/// runs first so year columns do not fall into the numerical bucket.
pub fn profile_dataset(path: impl AsRef<Path>) -> Result<DatasetProfile, InstantiateError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| InstantiateError::Io {
        path: path.display().to_string(),
        source,
    })?;
    profile_text(&text)
}

/// In-memory variant of [`profile_dataset`].
pub fn profile_text(text: &str) -> Result<DatasetProfile, InstantiateError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| InstantiateError::Malformed(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(|h| h.is_empty()) {
        return Err(InstantiateError::Malformed("missing header row".into()));
    }

    let mut distinct: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    let mut seen: Vec<BTreeSet<String>> = vec![BTreeSet::new(); headers.len()];
    let mut all_temporal = vec![true; headers.len()];
    let mut all_numerical = vec![true; headers.len()];
    let mut non_empty = vec![0usize; headers.len()];
    let mut row_count = 0usize;

    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| InstantiateError::Malformed(e.to_string()))?;
        if record.len() != headers.len() {
            return Err(InstantiateError::Ragged {
                row: i + 2, // 1-based, counting the header
                found: record.len(),
                expected: headers.len(),
            });
        }
        row_count += 1;
        for (col, raw) in record.iter().enumerate() {
            let value = raw.trim();
            if value.is_empty() {
                continue;
            }
            non_empty[col] += 1;
            if !is_temporal(value) {
                all_temporal[col] = false;
            }
            if !is_numerical(value) {
                all_numerical[col] = false;
            }
            if seen[col].len() < PROFILE_DISTINCT_CAP && seen[col].insert(value.to_string()) {
                distinct[col].push(value.to_string());
            }
        }
    }
    if row_count == 0 {
        return Err(InstantiateError::Empty);
    }

    let columns = headers
        .into_iter()
        .enumerate()
        .map(|(col, name)| {
            let kind = if non_empty[col] == 0 {
                ColumnKind::Categorical
            } else if all_temporal[col] {
                ColumnKind::Temporal
            } else if all_numerical[col] {
                ColumnKind::Numerical
            } else {
                ColumnKind::Categorical
            };
            ColumnProfile {
                name,
                kind,
                distinct_values: std::mem::take(&mut distinct[col]),
            }
        })
        .collect();

    Ok(DatasetProfile { columns, row_count })
}

fn is_temporal(value: &str) -> bool {
    let bytes = value.as_bytes();
    match bytes.len() {
        // four-digit year
        4 => bytes.iter().all(|b| b.is_ascii_digit()),
        // ISO 8601 calendar date
        10 => {
            bytes[4] == b'-'
                && bytes[7] == b'-'
                && bytes.iter().enumerate().all(|(i, b)| {
                    if i == 4 || i == 7 {
                        *b == b'-'
                    } else {
                        b.is_ascii_digit()
                    }
                })
                && value[5..7].parse::<u8>().is_ok_and(|m| (1..=12).contains(&m))
                && value[8..10].parse::<u8>().is_ok_and(|d| (1..=31).contains(&d))
        }
        _ => false,
    }
}

fn is_numerical(value: &str) -> bool {
    value.parse::<f64>().is_ok_and(|v| v.is_finite())
}

/// Build the six-dimension fact space from a profile.
///
/// Requires at least one categorical or temporal column and at least one
/// numerical column. `value_cap` bounds the values enumerated per column in
/// the subspace and focus dimensions.
pub fn build_fact_space(
    profile: &DatasetProfile,
    value_cap: usize,
    space_id: impl Into<String>,
) -> Result<DesignSpace, InstantiateError> {
    let non_numerical: Vec<&ColumnProfile> = profile.non_numerical_columns().collect();
    let numerical: Vec<&ColumnProfile> = profile.numerical_columns().collect();
    if non_numerical.is_empty() || numerical.is_empty() {
        return Err(InstantiateError::MissingColumns(format!(
            "need at least one categorical or temporal column and one numerical column, \
             found {} non-numerical and {} numerical",
            non_numerical.len(),
            numerical.len()
        )));
    }

    let mut ids = IdAllocator::default();

    let mut fact_type = Dimension::new("fact_type", "Fact Type");
    for label in FACT_TYPES {
        fact_type = fact_type.element(Element::new(ids.allocate(label), label));
    }

    let mut breakdown = Dimension::new("breakdown", "Breakdown");
    let mut ids_breakdown = IdAllocator::default();
    for col in &non_numerical {
        breakdown = breakdown.element(
            Element::new(ids_breakdown.allocate(&col.name), &col.name)
                .with_payload("field", &col.name),
        );
    }

    let mut measure = Dimension::new("measure", "Measure");
    let mut ids_measure = IdAllocator::default();
    for col in &numerical {
        for agg in AGGREGATIONS {
            measure = measure.element(
                Element::new(
                    ids_measure.allocate(&format!("{}_{agg}", col.name)),
                    format!("({}, {agg})", col.name),
                )
                .with_payload("field", &col.name)
                .with_payload("aggregation", agg),
            );
        }
    }
    let measure_len = measure.elements.len();
    measure.multi_select = true;
    measure.max_count = Some(crate::space::DEFAULT_MAX_COUNT.min(measure_len));

    let value_dimension = |dimension_id: &str, label: &str| {
        let mut dim = Dimension::new(dimension_id, label);
        let mut ids = IdAllocator::default();
        for col in &non_numerical {
            for value in col.distinct_values.iter().take(value_cap) {
                dim = dim.element(
                    Element::new(
                        ids.allocate(&format!("{}_{value}", col.name)),
                        format!("({}, {value})", col.name),
                    )
                    .with_payload("field", &col.name)
                    .with_payload("value", value),
                );
            }
        }
        let len = dim.elements.len();
        dim.multi_select = true;
        dim.max_count = Some(crate::space::DEFAULT_MAX_COUNT.min(len.max(1)));
        dim
    };
    let subspace = value_dimension("subspace", "Subspace");
    let focus = value_dimension("focus", "Focus");

    let mut title = Dimension::new("visualization_title", "Visualization Title");
    let mut ids_title = IdAllocator::default();
    for label in VISUALIZATION_TITLES {
        title = title.element(Element::new(ids_title.allocate(label), label));
    }

    Ok(DesignSpace::new(space_id)
        .dimension(fact_type)
        .dimension(breakdown)
        .dimension(measure)
        .dimension(subspace)
        .dimension(focus)
        .dimension(title))
}

/// Turns arbitrary labels into unique identifier-safe element ids:
/// lowercase alphanumerics and underscores, deduplicated with a numeric
/// suffix on collision.
#[derive(Default)]
struct IdAllocator {
    used: BTreeSet<String>,
}

impl IdAllocator {
    fn allocate(&mut self, label: &str) -> String {
        let base = sanitize_id(label);
        let mut candidate = base.clone();
        let mut n = 1;
        while !self.used.insert(candidate.clone()) {
            n += 1;
            candidate = format!("{base}_{n}");
        }
        candidate
    }
}

fn sanitize_id(label: &str) -> String {
    let mut out = String::with_capacity(label.len());
    let mut last_underscore = true; // trims leading separators
    for c in label.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
            last_underscore = false;
        } else if !last_underscore {
            out.push('_');
            last_underscore = true;
        }
    }
    while out.ends_with('_') {
        out.pop();
    }
    if out.is_empty() {
        out.push('c');
    }
    if out.as_bytes()[0].is_ascii_digit() {
        out.insert(0, 'c');
    }
    out
}
