//! Structured design spaces and constraint-guided search.
//!
//! This crate models a design problem as an ordered set of orthogonal
//! dimensions with discrete elements, scores candidate solutions against a
//! small rule language (hard, soft-positive, and soft-negative rules over
//! dimension-element atoms), and searches the space for high-reward
//! solutions with a constraint-guided tree search plus genetic, annealing,
//! and beam baselines. Around that core it provides:
//!
//! - [`instantiate`]: build a data-fact space from a CSV dataset;
//! - [`provider`]: fetch constraint sets from files or a chat-completion
//!   endpoint;
//! - [`actions`]: execute a dimension-to-action plan over a solved
//!   solution;
//! - [`bench`]: a seeded benchmark harness with verified optima and
//!   CSV/JSONL reporting.
//!
//! The long-form guide lives in the `book/` directory of the repository;
//! its chapters compile as doctests through the [`guide`] module.
//!
//! ```
//! use designspace::constraints::ConstraintSet;
//! use designspace::reward::{total_reward, RewardWeights};
//! use designspace::search::{run_search, Algorithm, SearchConfig};
//! use designspace::space::{DesignSpace, Dimension, Element};
//!
//! let space = DesignSpace::new("demo")
//!     .dimension(
//!         Dimension::new("tone", "Tone")
//!             .element(Element::new("neutral", "Neutral"))
//!             .element(Element::new("urgent", "Urgent")),
//!     )
//!     .dimension(
//!         Dimension::new("voice", "Voice")
//!             .element(Element::new("first", "First person"))
//!             .element(Element::new("third", "Third person")),
//!     );
//! let rules = "soft_positive_constraint(x, 1) :- tone(x, urgent).\n\
//!              hard_constraint(x, 1) :- tone(x, neutral), voice(x, first).\n";
//! let constraints = ConstraintSet::parse(rules, &space).unwrap();
//!
//! let outcome = run_search(
//!     Algorithm::Mcts,
//!     &space,
//!     &constraints,
//!     &SearchConfig::default().with_seed(7),
//! )
//! .unwrap();
//! assert_eq!(outcome.best_reward, 10.0);
//! assert!(outcome.best_solution.selects("tone", "urgent"));
//! let check = total_reward(&space, &constraints, &outcome.best_solution, &RewardWeights::default());
//! assert_eq!(check.total, outcome.best_reward);
//! ```

pub mod actions;
pub mod bench;
pub mod constraints;
pub mod guide;
pub mod instantiate;
pub mod provider;
pub mod reward;
pub mod search;
pub mod space;

pub use constraints::{Atom, ConstraintSet, Literal, Rule, RuleKind, SatisfactionCounts};
pub use reward::{RewardBreakdown, RewardWeights};
pub use search::{run_search, Algorithm, SearchConfig, SearchOutcome};
pub use space::{DesignSolution, DesignSpace, Dimension, Element};
