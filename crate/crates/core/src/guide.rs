//! The book chapters, compiled as doctests.
//!
//! The guide under `book/` is the narrative documentation for this crate.
//! Including each chapter here means `cargo test --doc` compiles and runs
//! every Rust snippet in the book, so the prose can never drift from the
//! API it describes.

macro_rules! chapter {
    ($name:ident, $path:literal) => {
        #[doc = include_str!($path)]
        pub mod $name {}
    };
}

chapter!(introduction, "../../../book/src/introduction.md");
chapter!(design_spaces, "../../../book/src/design-spaces.md");
chapter!(constraint_rules, "../../../book/src/constraint-rules.md");
chapter!(rewards, "../../../book/src/rewards.md");
chapter!(searchers, "../../../book/src/searchers.md");
chapter!(data_facts, "../../../book/src/data-facts.md");
chapter!(action_plans, "../../../book/src/action-plans.md");
chapter!(providers, "../../../book/src/providers.md");
chapter!(benchmarking, "../../../book/src/benchmarking.md");
chapter!(cli, "../../../book/src/cli.md");
