//! A small declarative rule language over dimension-element atoms, with
//! three rule kinds that steer search: hard rules mark forbidden
//! combinations, soft-positive rules mark recommended ones, soft-negative
//! rules mark discouraged ones.
//!
//! Rules take the form `head :- body.` where the head names the kind and an
//! integer index, and the body is a conjunction of possibly negated atoms:
//!
//! ```text
//! hard_constraint(x, 1) :- D1(x, e11).
//! soft_positive_constraint(x, 2) :- D1(x, e13), D2(x, e21).
//! soft_negative_constraint(x, 3) :- not D3(x, e31).
//! ```
//!
//! An atom `D(x, e)` is true under a solution exactly when element `e` is
//! selected in dimension `D`; `not` flips it. Because solutions are
//! complete assignments, negation-as-failure coincides with classical
//! negation, and a direct conjunctive evaluator is sufficient: there is no
//! rule chaining and no derived atoms. A rule is satisfied when every body
//! literal is true, and each `(kind, index)` pair counts at most once.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{DesignSolution, DesignSpace};

/// The three rule heads, in display order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Hard,
    SoftPositive,
    SoftNegative,
}

impl RuleKind {
    pub fn head_predicate(self) -> &'static str {
        match self {
            RuleKind::Hard => "hard_constraint",
            RuleKind::SoftPositive => "soft_positive_constraint",
            RuleKind::SoftNegative => "soft_negative_constraint",
        }
    }

    fn from_head(head: &str) -> Option<Self> {
        match head {
            "hard_constraint" => Some(RuleKind::Hard),
            "soft_positive_constraint" => Some(RuleKind::SoftPositive),
            "soft_negative_constraint" => Some(RuleKind::SoftNegative),
            _ => None,
        }
    }
}

/// An elementary proposition: element `element_id` is selected in
/// dimension `dimension_id`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atom {
    pub dimension_id: String,
    pub element_id: String,
}

impl Atom {
    pub fn new(dimension_id: impl Into<String>, element_id: impl Into<String>) -> Self {
        Self {
            dimension_id: dimension_id.into(),
            element_id: element_id.into(),
        }
    }

    pub fn holds(&self, solution: &DesignSolution) -> bool {
        solution.selects(&self.dimension_id, &self.element_id)
    }
}

/// An atom or its negation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Literal {
    pub atom: Atom,
    #[serde(default)]
    pub negated: bool,
}

impl Literal {
    pub fn positive(atom: Atom) -> Self {
        Self { atom, negated: false }
    }

    pub fn negative(atom: Atom) -> Self {
        Self { atom, negated: true }
    }

    pub fn holds(&self, solution: &DesignSolution) -> bool {
        self.atom.holds(solution) != self.negated
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "not ")?;
        }
        write!(f, "{}(x, {})", self.atom.dimension_id, self.atom.element_id)
    }
}

/// One rule: a kind, an index unique within its set, and a non-empty
/// conjunctive body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub kind: RuleKind,
    pub index: u32,
    pub body: Vec<Literal>,
}

impl Rule {
    pub fn satisfied_by(&self, solution: &DesignSolution) -> bool {
        self.body.iter().all(|lit| lit.holds(solution))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}(x, {}) :- ", self.kind.head_predicate(), self.index)?;
        for (i, lit) in self.body.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{lit}")?;
        }
        write!(f, ".")
    }
}

/// Per-kind rule totals for a constraint set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct KindTotals {
    pub hard: usize,
    pub soft_positive: usize,
    pub soft_negative: usize,
}

/// Per-kind counts of rules satisfied by one solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SatisfactionCounts {
    pub hard: usize,
    pub soft_positive: usize,
    pub soft_negative: usize,
}

impl SatisfactionCounts {
    /// A solution is valid when it triggers no hard rule.
    pub fn is_valid(&self) -> bool {
        self.hard == 0
    }
}

#[derive(Debug, Error)]
pub enum ConstraintError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: unknown {what} '{symbol}'")]
    Binding {
        line: usize,
        what: &'static str,
        symbol: String,
    },
    #[error("line {line}: duplicate rule {head}(x, {index})")]
    DuplicateIndex {
        line: usize,
        head: &'static str,
        index: u32,
    },
}

/// An immutable collection of parsed rules, bound against a design space.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub rules: Vec<Rule>,
}

impl ConstraintSet {
    pub fn empty() -> Self {
        Self { rules: Vec::new() }
    }

    pub fn from_rules(rules: Vec<Rule>) -> Self {
        Self { rules }
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Parse rule text against a space. Every referenced dimension and
    /// element must exist in the space; `%`-prefixed lines are comments.
    pub fn parse(text: &str, space: &DesignSpace) -> Result<Self, ConstraintError> {
        let mut rules = Vec::new();
        let mut seen: BTreeSet<(RuleKind, u32)> = BTreeSet::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = lineno + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            let rule = parse_rule_line(trimmed, line)?;
            for lit in &rule.body {
                let dim = space.find_dimension(&lit.atom.dimension_id).ok_or_else(|| {
                    ConstraintError::Binding {
                        line,
                        what: "dimension",
                        symbol: lit.atom.dimension_id.clone(),
                    }
                })?;
                if dim.find_element(&lit.atom.element_id).is_none() {
                    return Err(ConstraintError::Binding {
                        line,
                        what: "element",
                        symbol: format!("{}.{}", lit.atom.dimension_id, lit.atom.element_id),
                    });
                }
            }
            if !seen.insert((rule.kind, rule.index)) {
                return Err(ConstraintError::DuplicateIndex {
                    line,
                    head: rule.kind.head_predicate(),
                    index: rule.index,
                });
            }
            rules.push(rule);
        }
        Ok(Self { rules })
    }

    /// Canonical text form: one rule per line in stored order, trailing
    /// newline after the last rule; the empty set serializes to an empty
    /// string. `parse(to_text(cs))` reproduces the set structurally.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for rule in &self.rules {
            out.push_str(&rule.to_string());
            out.push('\n');
        }
        out
    }

    pub fn totals(&self) -> KindTotals {
        let mut totals = KindTotals::default();
        for rule in &self.rules {
            match rule.kind {
                RuleKind::Hard => totals.hard += 1,
                RuleKind::SoftPositive => totals.soft_positive += 1,
                RuleKind::SoftNegative => totals.soft_negative += 1,
            }
        }
        totals
    }

    /// Count satisfied rules per kind: a rule fires when all its body
    /// literals hold under the solution, and each rule counts at most once.
    pub fn evaluate(&self, solution: &DesignSolution) -> SatisfactionCounts {
        let mut counts = SatisfactionCounts::default();
        for rule in &self.rules {
            if rule.satisfied_by(solution) {
                match rule.kind {
                    RuleKind::Hard => counts.hard += 1,
                    RuleKind::SoftPositive => counts.soft_positive += 1,
                    RuleKind::SoftNegative => counts.soft_negative += 1,
                }
            }
        }
        counts
    }

    /// Recommended element counts for multi-select dimensions: the number
    /// of distinct elements of each multi-select dimension that appear as
    /// positive literals in soft-positive rule bodies. Dimensions with no
    /// such mention are absent from the map.
    pub fn recommended_counts(&self, space: &DesignSpace) -> BTreeMap<String, usize> {
        let mut mentioned: BTreeMap<String, BTreeSet<&str>> = BTreeMap::new();
        for rule in &self.rules {
            if rule.kind != RuleKind::SoftPositive {
                continue;
            }
            for lit in &rule.body {
                if lit.negated {
                    continue;
                }
                let is_multi = space
                    .find_dimension(&lit.atom.dimension_id)
                    .is_some_and(|d| d.multi_select);
                if is_multi {
                    mentioned
                        .entry(lit.atom.dimension_id.clone())
                        .or_default()
                        .insert(&lit.atom.element_id);
                }
            }
        }
        mentioned
            .into_iter()
            .map(|(dim, elems)| (dim, elems.len()))
            .collect()
    }
}

/// Line-level parser. Grammar, whitespace-insensitive within the line:
///
/// ```text
/// rule    := kind "(" "x" "," int ")" ":-" literal { "," literal } "."
/// literal := [ "not" ] ident "(" "x" "," ident ")"
/// ident   := [A-Za-z_][A-Za-z0-9_]*
/// ```
fn parse_rule_line(text: &str, line: usize) -> Result<Rule, ConstraintError> {
    let mut scanner = Scanner::new(text, line);
    let head = scanner.ident("rule head")?;
    let kind = RuleKind::from_head(&head).ok_or_else(|| scanner.error(format!(
        "unknown rule head '{head}' (expected hard_constraint, soft_positive_constraint, or soft_negative_constraint)"
    )))?;
    scanner.expect('(')?;
    scanner.instance_symbol()?;
    scanner.expect(',')?;
    let index = scanner.integer()?;
    scanner.expect(')')?;
    scanner.expect(':')?;
    scanner.expect_raw('-')?;

    let mut body = Vec::new();
    loop {
        let mut name = scanner.ident("literal")?;
        let negated = name == "not";
        if negated {
            name = scanner.ident("negated literal")?;
        }
        scanner.expect('(')?;
        scanner.instance_symbol()?;
        scanner.expect(',')?;
        let element = scanner.ident("element")?;
        scanner.expect(')')?;
        body.push(Literal {
            atom: Atom::new(name, element),
            negated,
        });
        scanner.skip_ws();
        match scanner.peek() {
            Some(',') => {
                scanner.bump();
            }
            Some('.') => {
                scanner.bump();
                break;
            }
            other => {
                return Err(scanner.error(match other {
                    Some(c) => format!("expected ',' or '.' after literal, found '{c}'"),
                    None => "rule is not terminated with '.'".to_string(),
                }))
            }
        }
    }
    scanner.skip_ws();
    if let Some(c) = scanner.peek() {
        return Err(scanner.error(format!("unexpected trailing input starting at '{c}'")));
    }
    if body.is_empty() {
        return Err(scanner.error("rule body is empty".to_string()));
    }
    Ok(Rule { kind, index, body })
}

struct Scanner<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
}

impl<'a> Scanner<'a> {
    fn new(text: &'a str, line: usize) -> Self {
        Self {
            chars: text.chars().peekable(),
            line,
        }
    }

    fn error(&self, message: String) -> ConstraintError {
        ConstraintError::Parse {
            line: self.line,
            message,
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        self.chars.next()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
    }

    fn expect(&mut self, wanted: char) -> Result<(), ConstraintError> {
        self.skip_ws();
        self.expect_raw(wanted)
    }

    fn expect_raw(&mut self, wanted: char) -> Result<(), ConstraintError> {
        match self.bump() {
            Some(c) if c == wanted => Ok(()),
            Some(c) => Err(self.error(format!("expected '{wanted}', found '{c}'"))),
            None => Err(self.error(format!("expected '{wanted}', found end of line"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ConstraintError> {
        self.skip_ws();
        let mut out = String::new();
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                out.push(c);
                self.bump();
            }
            Some(c) => return Err(self.error(format!("expected {what} identifier, found '{c}'"))),
            None => return Err(self.error(format!("expected {what} identifier, found end of line"))),
        }
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            out.push(self.bump().unwrap());
        }
        Ok(out)
    }

    fn integer(&mut self) -> Result<u32, ConstraintError> {
        self.skip_ws();
        let mut digits = String::new();
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            digits.push(self.bump().unwrap());
        }
        if digits.is_empty() {
            return Err(self.error("expected integer rule index".to_string()));
        }
        digits
            .parse()
            .map_err(|_| self.error(format!("rule index '{digits}' is out of range")))
    }

    /// The fixed instance symbol: rules range over a single instance `x`.
    fn instance_symbol(&mut self) -> Result<(), ConstraintError> {
        let sym = self.ident("instance symbol")?;
        if sym != "x" {
            return Err(self.error(format!("expected instance symbol 'x', found '{sym}'")));
        }
        Ok(())
    }
}
