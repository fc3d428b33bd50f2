//! Behavior of the bundled narrative-composition space: the worked
//! solution, prompt rendering counts, and plan execution over it.

use std::collections::BTreeMap;

use designspace::actions::{
    execute_plan, gather_elements, ActionPlan, ActionRegistry, Composer, PartPayload,
    PlannedAction,
};
use designspace::provider::{assemble_prompt, render_space, DomainPack};
use designspace::space::{DesignSolution, DesignSpace};

fn narrative_space() -> DesignSpace {
    DesignSpace::from_json(include_str!("data/narrative_space.json")).unwrap()
}

/// The five-dimension selection walked through in the narrative example:
/// issue headline, informing intent, inverted pyramid, contrast plus
/// concretize, third person.
fn worked_solution() -> DesignSolution {
    DesignSolution::new()
        .select("headline", &["stating_an_issue"])
        .select("narrative_intent", &["inform"])
        .select("narrative_structure", &["inverted_pyramid"])
        .select("narrative_pattern", &["contrast", "concretize"])
        .select("narrative_perspective", &["third_person"])
}

#[test]
fn narrative_space_is_well_formed() {
    let space = narrative_space();
    assert!(space.validate().is_empty());
    assert_eq!(space.dimensions.len(), 5);
    let elements: usize = space.dimensions.iter().map(|d| d.elements.len()).sum();
    assert_eq!(elements, 35);
}

#[test]
fn worked_solution_validates_cleanly() {
    let space = narrative_space();
    assert!(space.validate_solution(&worked_solution()).is_empty());
}

#[test]
fn two_intents_violate_single_select() {
    let space = narrative_space();
    let mut solution = worked_solution();
    solution = solution.select("narrative_intent", &["inform", "explain"]);
    let violations = space.validate_solution(&solution);
    assert_eq!(violations.len(), 1);
    assert!(violations[0].contains("narrative_intent"));
}

#[test]
fn missing_headline_is_reported() {
    let space = narrative_space();
    let mut solution = worked_solution();
    solution.selections.remove("headline");
    let violations = space.validate_solution(&solution);
    assert_eq!(violations.len(), 1);
    assert!(violations[0].contains("'headline'"));
}

#[test]
fn prompt_rendering_lists_all_dimensions_and_elements() {
    let space = narrative_space();
    let pack = DomainPack {
        role_specification: "You are a data-storytelling editor.".into(),
        generation_rules: "One rule per line.".into(),
        examples: "soft_positive_constraint(x, 1) :- narrative_intent(x, inform).".into(),
    };
    let bundle = assemble_prompt(
        "a travel guide with storm-safety advice",
        "historical storm records",
        &space,
        &pack,
    )
    .unwrap();
    assert_eq!(bundle.space_rendering.matches("Dimension ").count(), 5);
    assert_eq!(bundle.space_rendering.matches("  - ").count(), 35);
    assert_eq!(render_space(&space), bundle.space_rendering);
}

#[test]
fn single_action_over_all_dimensions_gathers_six_elements() {
    let space = narrative_space();
    let plan = ActionPlan {
        composer: Composer::Concat,
        actions: vec![PlannedAction {
            action: "template_render".into(),
            dimensions: space.dimensions.iter().map(|d| d.dimension_id.clone()).collect(),
            parameters: BTreeMap::from([(
                "template".into(),
                "Write a {narrative_intent} article from the {narrative_perspective} \
                 perspective, structured as {narrative_structure}, headlined by \
                 {headline}, using: {narrative_pattern}."
                    .into(),
            )]),
        }],
    };
    let sets = gather_elements(&plan, &space, &worked_solution()).unwrap();
    assert_eq!(sets.len(), 1);
    assert_eq!(sets[0].elements.len(), 6); // 1+1+1+2+1 selections

    let outcome =
        execute_plan(&plan, &space, &worked_solution(), &ActionRegistry::builtin()).unwrap();
    assert_eq!(
        outcome.composed,
        Some(PartPayload::Text(
            "Write a Inform article from the Third-person perspective, structured as \
             Inverted pyramid, headlined by Stating an issue, using: Contrast, Concretize."
                .into()
        ))
    );
}
