//! The reward that scores a design solution against a constraint set.
//!
//! Two parts compose the score. The constraint-aware part weighs the
//! per-kind satisfaction ratios:
//!
//! ```text
//! r_c = -alpha * hard_ratio + beta * soft_positive_ratio - gamma * soft_negative_ratio
//! ```
//!
//! and the quantity penalty sums, over multi-select dimensions with a
//! recommended element count, the absolute deviation between the selected
//! and recommended counts:
//!
//! ```text
//! r_q = sum_k | selected_k - recommended_k |
//! ```
//!
//! The total is `r_c - delta * r_q` by default, which makes `beta` a hard
//! upper bound: the total equals `beta` exactly when no hard rule fires, no
//! soft-negative rule fires, every soft-positive rule fires, and the
//! quantity penalty is zero. A kind with zero rules contributes nothing to
//! its term, so sparse constraint sets degrade gracefully.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraints::{ConstraintSet, KindTotals, SatisfactionCounts};
use crate::space::{DesignSolution, DesignSpace};

/// How the quantity penalty enters the total.
///
/// `Subtract` keeps `beta` a true maximum and is the default. `Add` applies
/// the penalty with a positive sign instead, kept selectable so the effect
/// of the sign convention on search behavior can be audited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltySign {
    #[default]
    Subtract,
    Add,
}

/// Weights of the reward terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    /// Hard-rule weight.
    pub alpha: f64,
    /// Soft-positive weight; also the attainable reward ceiling.
    pub beta: f64,
    /// Soft-negative weight.
    pub gamma: f64,
    /// Quantity-penalty weight.
    pub delta: f64,
    #[serde(default)]
    pub penalty_sign: PenaltySign,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            alpha: 20.0,
            beta: 10.0,
            gamma: 1.0,
            delta: 0.5,
            penalty_sign: PenaltySign::Subtract,
        }
    }
}

impl RewardWeights {
    /// All weights must be non-negative and `beta` strictly positive, so
    /// the ceiling `beta` is a meaningful target.
    pub fn validate(&self) -> Result<(), String> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("delta", self.delta),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(format!("{name} must be a non-negative finite number, got {v}"));
            }
        }
        if self.beta <= 0.0 {
            return Err(format!("beta must be strictly positive, got {}", self.beta));
        }
        Ok(())
    }

    /// The reward ceiling: no solution can score above this.
    pub fn max_reward(&self) -> f64 {
        self.beta
    }
}

/// A scored solution, with the intermediate terms retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub constraint_reward: f64,
    pub quantity_penalty: f64,
    pub total: f64,
    pub counts: SatisfactionCounts,
}

/// The constraint-aware term: weighted satisfaction ratios per kind, with
/// empty kinds contributing zero.
pub fn constraint_reward(
    counts: &SatisfactionCounts,
    totals: &KindTotals,
    weights: &RewardWeights,
) -> f64 {
    fn ratio(count: usize, total: usize) -> f64 {
        if total == 0 {
            0.0
        } else {
            count as f64 / total as f64
        }
    }
    -weights.alpha * ratio(counts.hard, totals.hard)
        + weights.beta * ratio(counts.soft_positive, totals.soft_positive)
        - weights.gamma * ratio(counts.soft_negative, totals.soft_negative)
}

/// Total absolute deviation between selected and recommended element counts
/// over the dimensions present in `recommended`. Dimensions without a
/// recommendation contribute nothing.
pub fn quantity_penalty(
    solution: &DesignSolution,
    recommended: &BTreeMap<String, usize>,
) -> f64 {
    recommended
        .iter()
        .map(|(dimension_id, &rec)| {
            let selected = solution.selected_count(dimension_id);
            (selected as f64 - rec as f64).abs()
        })
        .sum()
}

/// Score a complete solution: evaluate the rules, derive recommended
/// counts, and combine both terms under the configured penalty sign.
pub fn total_reward(
    space: &DesignSpace,
    constraints: &ConstraintSet,
    solution: &DesignSolution,
    weights: &RewardWeights,
) -> RewardBreakdown {
    let counts = constraints.evaluate(solution);
    let recommended = constraints.recommended_counts(space);
    combine(
        constraint_reward(&counts, &constraints.totals(), weights),
        quantity_penalty(solution, &recommended),
        counts,
        weights,
    )
}

pub(crate) fn combine(
    constraint_reward: f64,
    quantity_penalty: f64,
    counts: SatisfactionCounts,
    weights: &RewardWeights,
) -> RewardBreakdown {
    let signed = match weights.penalty_sign {
        PenaltySign::Subtract => -weights.delta * quantity_penalty,
        PenaltySign::Add => weights.delta * quantity_penalty,
    };
    RewardBreakdown {
        constraint_reward,
        quantity_penalty,
        total: constraint_reward + signed,
        counts,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::ConstraintSet;
    use crate::space::{Dimension, Element};

    fn counts(hard: usize, soft_positive: usize, soft_negative: usize) -> SatisfactionCounts {
        SatisfactionCounts { hard, soft_positive, soft_negative }
    }

    fn totals(hard: usize, soft_positive: usize, soft_negative: usize) -> KindTotals {
        KindTotals { hard, soft_positive, soft_negative }
    }

    #[test]
    fn full_soft_positive_satisfaction_hits_the_ceiling() {
        let w = RewardWeights::default();
        let r = constraint_reward(&counts(0, 4, 0), &totals(2, 4, 3), &w);
        assert_eq!(r, 10.0);
    }

    #[test]
    fn no_satisfied_rules_scores_zero() {
        let w = RewardWeights::default();
        assert_eq!(constraint_reward(&counts(0, 0, 0), &totals(3, 3, 3), &w), 0.0);
    }

    #[test]
    fn worked_mixed_satisfaction_value() {
        let w = RewardWeights::default();
        let r = constraint_reward(&counts(1, 1, 1), &totals(2, 4, 1), &w);
        assert!((r - (-8.5)).abs() < 1e-12);
    }

    #[test]
    fn zero_denominator_terms_contribute_nothing() {
        let w = RewardWeights::default();
        assert_eq!(constraint_reward(&counts(0, 0, 0), &totals(0, 0, 0), &w), 0.0);
        // only the soft-positive kind populated
        assert_eq!(constraint_reward(&counts(0, 2, 0), &totals(0, 2, 0), &w), 10.0);
    }

    #[test]
    fn hard_rule_dominates_soft_budget_under_defaults() {
        let w = RewardWeights::default();
        let clean = constraint_reward(&counts(0, 4, 0), &totals(2, 4, 0), &w);
        let tainted = constraint_reward(&counts(1, 4, 0), &totals(2, 4, 0), &w);
        assert!(clean - tainted >= 10.0);
    }

    #[test]
    fn quantity_penalty_sums_absolute_deviation() {
        let solution = DesignSolution::new().select("subspace", &["f1", "f2", "f3", "f4", "f5"]);
        let rec = BTreeMap::from([("subspace".to_string(), 3usize)]);
        assert_eq!(quantity_penalty(&solution, &rec), 2.0);

        let on_target = DesignSolution::new().select("subspace", &["f1", "f2", "f3"]);
        assert_eq!(quantity_penalty(&on_target, &rec), 0.0);

        assert_eq!(quantity_penalty(&solution, &BTreeMap::new()), 0.0);
    }

    #[test]
    fn total_composes_both_terms() {
        let w = RewardWeights::default();
        let breakdown = combine(10.0, 2.0, counts(0, 1, 0), &w);
        assert_eq!(breakdown.total, 9.0);

        let added = combine(
            10.0,
            2.0,
            counts(0, 1, 0),
            &RewardWeights { penalty_sign: PenaltySign::Add, ..w },
        );
        assert_eq!(added.total, 11.0);
    }

    #[test]
    fn empty_constraint_set_scores_zero() {
        let space = DesignSpace::new("s").dimension(
            Dimension::new("d", "D").element(Element::new("e", "E")),
        );
        let solution = DesignSolution::new().select("d", &["e"]);
        let breakdown = total_reward(&space, &ConstraintSet::empty(), &solution, &RewardWeights::default());
        assert_eq!(breakdown.total, 0.0);
        assert_eq!(breakdown.quantity_penalty, 0.0);
    }

    #[test]
    fn invalid_weights_are_rejected() {
        let mut w = RewardWeights::default();
        w.beta = 0.0;
        assert!(w.validate().is_err());
        w = RewardWeights { alpha: -1.0, ..RewardWeights::default() };
        assert!(w.validate().is_err());
        assert!(RewardWeights::default().validate().is_ok());
    }
}
