//! Turns a solved design solution into a concrete outcome: a plan maps
//! dimensions to named actions, each action consumes the elements selected
//! in its dimensions, and a composer folds the partial outputs into one
//! document.
//!
//! The registry ships a single deterministic built-in, `template_render`;
//! external-service actions (text or image generators) register through the
//! same interface and are configured by the embedding application.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::{DesignSolution, DesignSpace};

/// How partial outputs fold into the final document: `Concat` joins text
/// parts with a blank line; `MergeKeyed` merges structured parts key by
/// key, with later actions overriding earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Composer {
    Concat,
    MergeKeyed,
}

/// One step of a plan: a registered action, the dimensions it consumes,
/// and free-form string parameters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedAction {
    pub action: String,
    pub dimensions: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parameters: BTreeMap<String, String>,
}

/// An ordered list of actions plus the composer for their outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionPlan {
    pub composer: Composer,
    pub actions: Vec<PlannedAction>,
}

impl ActionPlan {
    pub fn from_json(text: &str) -> Result<Self, ActionError> {
        serde_json::from_str(text).map_err(|e| ActionError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ActionError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ActionError::Config(format!("failed to read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }
}

/// One selected element handed to an action, with its dimension retained.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GatheredElement {
    pub dimension_id: String,
    pub element_id: String,
    pub label: String,
    pub payload: BTreeMap<String, String>,
}

/// The element set one action consumes, in dimension order then element
/// order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ElementSet {
    pub action: String,
    pub elements: Vec<GatheredElement>,
}

impl ElementSet {
    /// Labels of the elements selected in one dimension, in element order.
    pub fn labels_for(&self, dimension_id: &str) -> Vec<&str> {
        self.elements
            .iter()
            .filter(|e| e.dimension_id == dimension_id)
            .map(|e| e.label.as_str())
            .collect()
    }
}

/// Output of one action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type", content = "content")]
pub enum PartPayload {
    Text(String),
    Structured(BTreeMap<String, serde_json::Value>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomePart {
    pub action: String,
    pub payload: PartPayload,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum OutcomeStatus {
    Completed,
    Failed { action: String, message: String },
}

/// The executed plan: partial outputs in plan order, the composed document
/// when every action succeeded, and the failure marker otherwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub parts: Vec<OutcomePart>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub composed: Option<PartPayload>,
    pub status: OutcomeStatus,
}

#[derive(Debug, Error)]
pub enum ActionError {
    #[error("plan configuration error: {0}")]
    Config(String),
    #[error("action '{action}' failed: {message}")]
    Failed { action: String, message: String },
}

/// An action: element set and parameters in, partial payload out.
pub trait ActionFn: Send + Sync {
    fn run(
        &self,
        elements: &ElementSet,
        parameters: &BTreeMap<String, String>,
    ) -> Result<PartPayload, String>;
}

impl<F> ActionFn for F
where
    F: Fn(&ElementSet, &BTreeMap<String, String>) -> Result<PartPayload, String> + Send + Sync,
{
    fn run(
        &self,
        elements: &ElementSet,
        parameters: &BTreeMap<String, String>,
    ) -> Result<PartPayload, String> {
        self(elements, parameters)
    }
}

/// Named actions available to plans. Immutable once handed to execution.
pub struct ActionRegistry {
    actions: BTreeMap<String, Box<dyn ActionFn>>,
}

impl ActionRegistry {
    pub fn empty() -> Self {
        Self { actions: BTreeMap::new() }
    }

    /// Registry with the deterministic built-ins.
    pub fn builtin() -> Self {
        let mut registry = Self::empty();
        registry.register("template_render", template_render);
        registry
    }

    pub fn register(&mut self, name: impl Into<String>, action: impl ActionFn + 'static) {
        self.actions.insert(name.into(), Box::new(action));
    }

    pub fn contains(&self, name: &str) -> bool {
        self.actions.contains_key(name)
    }

    fn get(&self, name: &str) -> Option<&dyn ActionFn> {
        self.actions.get(name).map(|b| b.as_ref())
    }
}

/// Check a plan against a space and registry: unknown actions, unknown
/// dimensions, and space dimensions no action consumes are all reported.
pub fn validate_plan(
    plan: &ActionPlan,
    space: &DesignSpace,
    registry: &ActionRegistry,
) -> Vec<String> {
    let mut violations = Vec::new();
    let mut covered: BTreeSet<&str> = BTreeSet::new();
    for planned in &plan.actions {
        if !registry.contains(&planned.action) {
            violations.push(format!("unknown action '{}'", planned.action));
        }
        for dimension_id in &planned.dimensions {
            if space.find_dimension(dimension_id).is_none() {
                violations.push(format!(
                    "action '{}' references unknown dimension '{}'",
                    planned.action, dimension_id
                ));
            } else {
                covered.insert(dimension_id);
            }
        }
    }
    for dim in &space.dimensions {
        if !covered.contains(dim.dimension_id.as_str()) {
            violations.push(format!(
                "dimension '{}' is not consumed by any action",
                dim.dimension_id
            ));
        }
    }
    violations
}

/// Collect, per action, the elements the solution selected in that
/// action's dimensions. Dimension provenance is retained and ordering is
/// deterministic: the plan's dimension order, then element order within
/// the dimension.
pub fn gather_elements(
    plan: &ActionPlan,
    space: &DesignSpace,
    solution: &DesignSolution,
) -> Result<Vec<ElementSet>, ActionError> {
    plan.actions
        .iter()
        .map(|planned| {
            let mut elements = Vec::new();
            for dimension_id in &planned.dimensions {
                let dim = space.find_dimension(dimension_id).ok_or_else(|| {
                    ActionError::Config(format!(
                        "action '{}' references unknown dimension '{}'",
                        planned.action, dimension_id
                    ))
                })?;
                let selected = solution.selections.get(dimension_id).ok_or_else(|| {
                    ActionError::Config(format!(
                        "solution has no entry for dimension '{dimension_id}'"
                    ))
                })?;
                for element in &dim.elements {
                    if selected.contains(&element.element_id) {
                        elements.push(GatheredElement {
                            dimension_id: dimension_id.clone(),
                            element_id: element.element_id.clone(),
                            label: element.label.clone(),
                            payload: element.payload.clone(),
                        });
                    }
                }
            }
            Ok(ElementSet { action: planned.action.clone(), elements })
        })
        .collect()
}

/// Run the plan's actions in order and compose their outputs. The first
/// failing action marks the outcome failed and skips the rest; an empty
/// plan completes with no parts and no composed document.
pub fn execute_plan(
    plan: &ActionPlan,
    space: &DesignSpace,
    solution: &DesignSolution,
    registry: &ActionRegistry,
) -> Result<Outcome, ActionError> {
    let element_sets = gather_elements(plan, space, solution)?;
    let mut parts = Vec::new();
    for (planned, elements) in plan.actions.iter().zip(&element_sets) {
        let action = registry.get(&planned.action).ok_or_else(|| {
            ActionError::Config(format!("unknown action '{}'", planned.action))
        })?;
        match action.run(elements, &planned.parameters) {
            Ok(payload) => parts.push(OutcomePart { action: planned.action.clone(), payload }),
            Err(message) => {
                return Ok(Outcome {
                    parts,
                    composed: None,
                    status: OutcomeStatus::Failed {
                        action: planned.action.clone(),
                        message,
                    },
                })
            }
        }
    }
    let composed = compose(plan.composer, &parts)?;
    Ok(Outcome {
        parts,
        composed,
        status: OutcomeStatus::Completed,
    })
}

fn compose(composer: Composer, parts: &[OutcomePart]) -> Result<Option<PartPayload>, ActionError> {
    if parts.is_empty() {
        return Ok(None);
    }
    match composer {
        Composer::Concat => {
            let mut texts = Vec::with_capacity(parts.len());
            for part in parts {
                match &part.payload {
                    PartPayload::Text(t) => texts.push(t.as_str()),
                    PartPayload::Structured(_) => {
                        return Err(ActionError::Config(format!(
                            "concat composer requires text parts, but action '{}' produced a structured part",
                            part.action
                        )))
                    }
                }
            }
            Ok(Some(PartPayload::Text(texts.join("\n\n"))))
        }
        Composer::MergeKeyed => {
            let mut merged = BTreeMap::new();
            for part in parts {
                match &part.payload {
                    PartPayload::Structured(map) => {
                        for (k, v) in map {
                            merged.insert(k.clone(), v.clone()); // later wins
                        }
                    }
                    PartPayload::Text(_) => {
                        return Err(ActionError::Config(format!(
                            "merge_keyed composer requires structured parts, but action '{}' produced text",
                            part.action
                        )))
                    }
                }
            }
            Ok(Some(PartPayload::Structured(merged)))
        }
    }
}

/// Built-in deterministic action: substitutes `{dimension_id}` placeholders
/// in the `template` parameter with the labels selected in that dimension,
/// joined by `", "`. `{{` and `}}` escape literal braces. Placeholders must
/// name dimensions bound to this action.
pub fn template_render(
    elements: &ElementSet,
    parameters: &BTreeMap<String, String>,
) -> Result<PartPayload, String> {
    let template = parameters
        .get("template")
        .ok_or("missing required parameter 'template'")?;
    let mut out = String::with_capacity(template.len());
    let mut chars = template.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '{' if chars.peek() == Some(&'{') => {
                chars.next();
                out.push('{');
            }
            '}' if chars.peek() == Some(&'}') => {
                chars.next();
                out.push('}');
            }
            '{' => {
                let mut name = String::new();
                loop {
                    match chars.next() {
                        Some('}') => break,
                        Some(c) => name.push(c),
                        None => return Err("unterminated '{' placeholder".into()),
                    }
                }
                let labels = elements.labels_for(&name);
                if labels.is_empty() {
                    return Err(format!(
                        "placeholder '{{{name}}}' does not match any dimension bound to this action"
                    ));
                }
                out.push_str(&labels.join(", "));
            }
            c => out.push(c),
        }
    }
    Ok(PartPayload::Text(out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{Dimension, Element};

    fn space() -> DesignSpace {
        DesignSpace::new("s")
            .dimension(
                Dimension::new("headline", "Headline")
                    .element(Element::new("issue", "Stating an issue"))
                    .element(Element::new("question", "Asking a question")),
            )
            .dimension(
                Dimension::new("pattern", "Pattern")
                    .multi_select(2)
                    .element(Element::new("contrast", "Contrast"))
                    .element(Element::new("concretize", "Concretize"))
                    .element(Element::new("repetition", "Repetition")),
            )
    }

    fn solution() -> DesignSolution {
        DesignSolution::new()
            .select("headline", &["issue"])
            .select("pattern", &["contrast", "concretize"])
    }

    fn plan(template: &str) -> ActionPlan {
        ActionPlan {
            composer: Composer::Concat,
            actions: vec![PlannedAction {
                action: "template_render".into(),
                dimensions: vec!["headline".into(), "pattern".into()],
                parameters: BTreeMap::from([("template".into(), template.into())]),
            }],
        }
    }

    #[test]
    fn gathering_retains_dimension_provenance() {
        let sets = gather_elements(&plan("x"), &space(), &solution()).unwrap();
        assert_eq!(sets.len(), 1);
        let elements = &sets[0].elements;
        assert_eq!(elements.len(), 3);
        assert_eq!(elements[0].dimension_id, "headline");
        assert_eq!(elements[1].element_id, "contrast");
        assert_eq!(elements[2].element_id, "concretize");
    }

    #[test]
    fn partitioned_actions_split_the_elements() {
        let plan = ActionPlan {
            composer: Composer::Concat,
            actions: vec![
                PlannedAction {
                    action: "template_render".into(),
                    dimensions: vec!["headline".into()],
                    parameters: BTreeMap::from([("template".into(), "H: {headline}".into())]),
                },
                PlannedAction {
                    action: "template_render".into(),
                    dimensions: vec!["pattern".into()],
                    parameters: BTreeMap::from([("template".into(), "P: {pattern}".into())]),
                },
            ],
        };
        let sets = gather_elements(&plan, &space(), &solution()).unwrap();
        assert_eq!(sets[0].elements.len(), 1);
        assert_eq!(sets[1].elements.len(), 2);

        let outcome = execute_plan(&plan, &space(), &solution(), &ActionRegistry::builtin()).unwrap();
        assert_eq!(
            outcome.composed,
            Some(PartPayload::Text(
                "H: Stating an issue\n\nP: Contrast, Concretize".into()
            ))
        );
    }

    #[test]
    fn empty_dimension_binding_yields_empty_set() {
        let plan = ActionPlan {
            composer: Composer::Concat,
            actions: vec![PlannedAction {
                action: "template_render".into(),
                dimensions: vec![],
                parameters: BTreeMap::from([("template".into(), "static".into())]),
            }],
        };
        let sets = gather_elements(&plan, &space(), &solution()).unwrap();
        assert!(sets[0].elements.is_empty());
    }

    #[test]
    fn unknown_dimension_is_a_config_error() {
        let mut bad = plan("x");
        bad.actions[0].dimensions.push("nope".into());
        let err = gather_elements(&bad, &space(), &solution()).unwrap_err();
        assert!(err.to_string().contains("nope"));
    }

    #[test]
    fn template_renders_selected_labels_deterministically() {
        let plan = plan("Headline style: {headline}; patterns: {pattern}");
        let registry = ActionRegistry::builtin();
        let a = execute_plan(&plan, &space(), &solution(), &registry).unwrap();
        let b = execute_plan(&plan, &space(), &solution(), &registry).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            a.composed,
            Some(PartPayload::Text(
                "Headline style: Stating an issue; patterns: Contrast, Concretize".into()
            ))
        );
        assert_eq!(a.status, OutcomeStatus::Completed);
    }

    #[test]
    fn brace_escapes_render_literally() {
        let plan = plan("{{headline}} is {headline}");
        let outcome = execute_plan(&plan, &space(), &solution(), &ActionRegistry::builtin()).unwrap();
        assert_eq!(
            outcome.composed,
            Some(PartPayload::Text("{headline} is Stating an issue".into()))
        );
    }

    #[test]
    fn failed_action_marks_outcome_and_skips_rest() {
        let mut failing = plan("{unbound_dimension}");
        failing.actions.push(failing.actions[0].clone());
        let outcome =
            execute_plan(&failing, &space(), &solution(), &ActionRegistry::builtin()).unwrap();
        assert!(outcome.parts.is_empty());
        assert!(outcome.composed.is_none());
        match outcome.status {
            OutcomeStatus::Failed { ref action, .. } => assert_eq!(action, "template_render"),
            ref other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn empty_plan_completes_empty() {
        let plan = ActionPlan { composer: Composer::Concat, actions: vec![] };
        let outcome = execute_plan(&plan, &space(), &solution(), &ActionRegistry::builtin()).unwrap();
        assert!(outcome.parts.is_empty());
        assert_eq!(outcome.composed, None);
        assert_eq!(outcome.status, OutcomeStatus::Completed);
    }

    #[test]
    fn merge_keyed_composer_lets_later_parts_win() {
        let mut registry = ActionRegistry::builtin();
        registry.register("emit_a", |_: &ElementSet, _: &BTreeMap<String, String>| {
            Ok(PartPayload::Structured(BTreeMap::from([
                ("color".to_string(), serde_json::json!("red")),
                ("size".to_string(), serde_json::json!(1)),
            ])))
        });
        registry.register("emit_b", |_: &ElementSet, _: &BTreeMap<String, String>| {
            Ok(PartPayload::Structured(BTreeMap::from([(
                "color".to_string(),
                serde_json::json!("blue"),
            )])))
        });
        let plan = ActionPlan {
            composer: Composer::MergeKeyed,
            actions: vec![
                PlannedAction { action: "emit_a".into(), dimensions: vec![], parameters: BTreeMap::new() },
                PlannedAction { action: "emit_b".into(), dimensions: vec![], parameters: BTreeMap::new() },
            ],
        };
        let outcome = execute_plan(&plan, &space(), &solution(), &registry).unwrap();
        match outcome.composed {
            Some(PartPayload::Structured(map)) => {
                assert_eq!(map["color"], serde_json::json!("blue"));
                assert_eq!(map["size"], serde_json::json!(1));
            }
            other => panic!("expected structured composition, got {other:?}"),
        }
    }

    #[test]
    fn plan_validation_reports_coverage_gaps() {
        let registry = ActionRegistry::builtin();
        let partial = ActionPlan {
            composer: Composer::Concat,
            actions: vec![PlannedAction {
                action: "template_render".into(),
                dimensions: vec!["headline".into()],
                parameters: BTreeMap::new(),
            }],
        };
        let violations = validate_plan(&partial, &space(), &registry);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("pattern"));

        let unknown = ActionPlan {
            composer: Composer::Concat,
            actions: vec![PlannedAction {
                action: "missing_action".into(),
                dimensions: vec!["headline".into(), "pattern".into()],
                parameters: BTreeMap::new(),
            }],
        };
        let violations = validate_plan(&unknown, &space(), &registry);
        assert_eq!(violations.len(), 1);
        assert!(violations[0].contains("missing_action"));
    }
}
