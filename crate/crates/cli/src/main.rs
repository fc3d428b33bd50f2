//! `dsx`: validate design spaces, instantiate them from datasets, fetch
//! constraint sets, search for solutions, and benchmark the searchers.
//!
//! Pipeline stages communicate through files (space JSON, constraint text,
//! solution JSON), so each stage is independently scriptable. With
//! `--json`, exactly one JSON document goes to stdout and all diagnostics
//! go to stderr.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use designspace::actions::{execute_plan, validate_plan, ActionPlan, ActionRegistry};
use designspace::bench::{run_bench, write_raw_jsonl, write_report_csv, BenchSpec};
use designspace::constraints::ConstraintSet;
use designspace::instantiate::{build_fact_space, profile_dataset, DEFAULT_VALUE_CAP};
use designspace::provider::{
    assemble_prompt, fetch_constraints, DomainPack, FetchOptions, ProviderConfig,
};
use designspace::reward::RewardWeights;
use designspace::search::{run_search, Algorithm, SearchConfig};
use designspace::space::{DesignSolution, DesignSpace};

#[derive(Parser)]
#[command(name = "dsx", version, about = "Design-space search pipeline")]
struct Cli {
    /// Emit exactly one JSON document on stdout; diagnostics go to stderr.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a design space (and optionally a solution) for violations.
    Validate(ValidateArgs),
    /// Build a data-fact design space from a CSV dataset.
    Instantiate(InstantiateArgs),
    /// Fetch a constraint set from a file or chat-completion provider.
    GenConstraints(GenConstraintsArgs),
    /// Search a space for the best solution, optionally executing a plan.
    Solve(SolveArgs),
    /// Run a benchmark spec and write report.csv plus raw.jsonl.
    Bench(BenchArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Design-space config (JSON).
    #[arg(long)]
    space: PathBuf,
    /// Solution document (JSON) to check against the space.
    #[arg(long)]
    solution: Option<PathBuf>,
}

#[derive(Args)]
struct InstantiateArgs {
    /// Input dataset: comma-delimited, UTF-8, first row headers.
    #[arg(long)]
    data: PathBuf,
    /// Where to write the design-space config.
    #[arg(long)]
    out: PathBuf,
    /// Bound on distinct values enumerated per column.
    #[arg(long, default_value_t = DEFAULT_VALUE_CAP)]
    value_cap: usize,
    /// Identifier of the produced space.
    #[arg(long, default_value = "data_facts")]
    space_id: String,
}

#[derive(Args)]
struct GenConstraintsArgs {
    #[arg(long)]
    space: PathBuf,
    /// Requirement text, or @path to read it from a file.
    #[arg(long)]
    requirement: String,
    /// Context document handed to the provider.
    #[arg(long)]
    context: Option<PathBuf>,
    /// Provider config (JSON).
    #[arg(long)]
    provider: PathBuf,
    /// Domain pack (JSON) overriding the built-in generic pack.
    #[arg(long)]
    domain_pack: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Cache provider responses in this directory, keyed by request hash.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Treat dropped-line warnings as errors.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    space: PathBuf,
    /// Constraint rules file.
    #[arg(long)]
    constraints: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(Algorithm))]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Convergence window length.
    #[arg(long)]
    window: Option<usize>,
    /// Convergence reward range.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Exploration coefficient of the tree policy.
    #[arg(long = "c")]
    c: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Write the search outcome document here.
    #[arg(long)]
    solution_out: Option<PathBuf>,
    /// Action plan to execute over the best solution.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Write the executed outcome document here (requires --plan).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory for report.csv and raw.jsonl.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

fn main() {
    let cli = Cli::parse();
    let json = cli.json;
    let code = match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if json {
                println!("{}", serde_json::json!({ "error": format!("{err:#}") }));
            }
            1
        }
    };
    std::process::exit(code);
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Validate(args) => cmd_validate(args, cli.json),
        Command::Instantiate(args) => cmd_instantiate(args, cli.json),
        Command::GenConstraints(args) => cmd_gen_constraints(args, cli.json),
        Command::Solve(args) => cmd_solve(args, cli.json),
        Command::Bench(args) => cmd_bench(args, cli.json),
    }
}

fn load_space(path: &PathBuf) -> Result<DesignSpace> {
    let space = DesignSpace::from_path(path).context("space")?;
    let violations = space.validate();
    if !violations.is_empty() {
        bail!("space: {} is invalid: {}", path.display(), violations.join("; "));
    }
    Ok(space)
}

fn cmd_validate(args: ValidateArgs, json: bool) -> Result<i32> {
    let space = DesignSpace::from_path(&args.space).context("space")?;
    let mut violations = space.validate();
    if let Some(solution_path) = &args.solution {
        let text = std::fs::read_to_string(solution_path)
            .with_context(|| format!("space: failed to read {}", solution_path.display()))?;
        let solution: DesignSolution = serde_json::from_str(&text).context("space")?;
        violations.extend(space.validate_solution(&solution));
    }
    if json {
        println!("{}", serde_json::json!({ "violations": violations }));
    } else if violations.is_empty() {
        println!("0 violations");
    } else {
        for violation in &violations {
            println!("violation: {violation}");
        }
        println!("{} violations", violations.len());
    }
    Ok(if violations.is_empty() { 0 } else { 1 })
}

fn cmd_instantiate(args: InstantiateArgs, json: bool) -> Result<i32> {
    let profile = profile_dataset(&args.data).context("instantiate")?;
    let space = build_fact_space(&profile, args.value_cap, &args.space_id).context("instantiate")?;
    write_text(&args.out, &(space.to_json() + "\n"))?;
    let elements: usize = space.dimensions.iter().map(|d| d.elements.len()).sum();
    if json {
        println!(
            "{}",
            serde_json::json!({
                "space_id": space.space_id,
                "dimensions": space.dimensions.len(),
                "elements": elements,
                "rows": profile.row_count,
                "out": args.out,
            })
        );
    } else {
        println!(
            "wrote {} ({} dimensions, {} elements from {} rows)",
            args.out.display(),
            space.dimensions.len(),
            elements,
            profile.row_count
        );
    }
    Ok(0)
}

/// Generic pack used when no domain pack file is given.
fn builtin_domain_pack() -> DomainPack {
    DomainPack {
        role_specification: "You are an experienced design consultant. Translate the \
                             requirement into constraints over the design space below."
            .into(),
        generation_rules: "Write one rule per line inside a single fenced code block. \
                           Use each (type, index) pair once. Reference only listed \
                           dimension and element identifiers. Prefer soft constraints; \
                           reserve hard constraints for combinations that must never occur."
            .into(),
        examples: "```\nsoft_positive_constraint(x, 1) :- tone(x, urgent).\nhard_constraint(x, 1) :- tone(x, urgent), voice(x, first).\n```".into(),
    }
}

fn cmd_gen_constraints(args: GenConstraintsArgs, json: bool) -> Result<i32> {
    let space = load_space(&args.space)?;
    let requirement = if let Some(path) = args.requirement.strip_prefix('@') {
        std::fs::read_to_string(path).with_context(|| format!("provider: failed to read {path}"))?
    } else {
        args.requirement.clone()
    };
    let context = match &args.context {
        Some(path) => std::fs::read_to_string(path)
            .with_context(|| format!("provider: failed to read {}", path.display()))?,
        None => String::new(),
    };
    let provider = ProviderConfig::from_path(&args.provider).context("provider")?;
    let pack = match &args.domain_pack {
        Some(path) => DomainPack::from_path(path).context("provider")?,
        None => builtin_domain_pack(),
    };
    let bundle = assemble_prompt(&requirement, &context, &space, &pack).context("provider")?;
    let options = FetchOptions { strict: args.strict, cache_dir: args.cache.clone() };
    let outcome = fetch_constraints(&provider, Some(&bundle), &space, &options).context("provider")?;
    for warning in &outcome.warnings {
        eprintln!("warning: {warning}");
    }
    write_text(&args.out, &outcome.constraints.to_text())?;
    if json {
        println!(
            "{}",
            serde_json::json!({
                "rules": outcome.constraints.len(),
                "warnings": outcome.warnings,
                "out": args.out,
            })
        );
    } else {
        println!(
            "wrote {} ({} rules, {} warnings)",
            args.out.display(),
            outcome.constraints.len(),
            outcome.warnings.len()
        );
    }
    Ok(0)
}

fn cmd_solve(args: SolveArgs, json: bool) -> Result<i32> {
    let space = load_space(&args.space)?;
    let text = std::fs::read_to_string(&args.constraints)
        .with_context(|| format!("constraints: failed to read {}", args.constraints.display()))?;
    let constraints = ConstraintSet::parse(&text, &space).context("constraints")?;

    let defaults = RewardWeights::default();
    let weights = RewardWeights {
        alpha: args.alpha.unwrap_or(defaults.alpha),
        beta: args.beta.unwrap_or(defaults.beta),
        gamma: args.gamma.unwrap_or(defaults.gamma),
        delta: args.delta.unwrap_or(defaults.delta),
        penalty_sign: defaults.penalty_sign,
    };
    let base = SearchConfig::default();
    let config = SearchConfig {
        exploration: args.c.unwrap_or(base.exploration),
        window: args.window.unwrap_or(base.window),
        epsilon: args.epsilon.unwrap_or(base.epsilon),
        max_iterations: args.max_iters.unwrap_or(base.max_iterations),
        seed: args.seed,
        weights,
        ..base
    };

    let outcome = run_search(args.algo, &space, &constraints, &config).context("search")?;
    let search_doc = serde_json::to_value(&outcome).expect("outcome serializes");
    if let Some(path) = &args.solution_out {
        write_text(path, &(serde_json::to_string_pretty(&search_doc).unwrap() + "\n"))?;
    }

    let mut outcome_doc = None;
    if let Some(plan_path) = &args.plan {
        let plan = ActionPlan::from_path(plan_path).context("actions")?;
        let registry = ActionRegistry::builtin();
        for violation in validate_plan(&plan, &space, &registry) {
            eprintln!("warning: plan: {violation}");
        }
        let executed =
            execute_plan(&plan, &space, &outcome.best_solution, &registry).context("actions")?;
        let doc = serde_json::to_value(&executed).expect("outcome serializes");
        if let Some(path) = &args.out {
            write_text(path, &(serde_json::to_string_pretty(&doc).unwrap() + "\n"))?;
        }
        outcome_doc = Some(doc);
    } else if args.out.is_some() {
        bail!("actions: --out requires --plan");
    }

    if json {
        println!(
            "{}",
            serde_json::json!({ "search": search_doc, "outcome": outcome_doc })
        );
    } else {
        println!(
            "{}: best reward {:.3} at iteration {} ({} iterations, {}, validity {})",
            args.algo,
            outcome.best_reward,
            outcome.best_iteration,
            outcome.iterations_run,
            if outcome.hit_rmax {
                "hit the reward ceiling".to_string()
            } else if outcome.converged {
                "converged".to_string()
            } else {
                "stopped at the iteration cap".to_string()
            },
            outcome
                .validity_ratio()
                .map_or("n/a".to_string(), |v| format!("{v:.3}")),
        );
        let selections: BTreeMap<&String, Vec<&String>> = outcome
            .best_solution
            .selections
            .iter()
            .map(|(dim, set)| (dim, set.iter().collect()))
            .collect();
        for (dim, elems) in selections {
            println!(
                "  {dim}: {}",
                elems.iter().map(|s| s.as_str()).collect::<Vec<_>>().join(", ")
            );
        }
    }
    Ok(0)
}

fn cmd_bench(args: BenchArgs, json: bool) -> Result<i32> {
    let spec = BenchSpec::from_path(&args.spec).context("bench")?;
    let report = run_bench(&spec).context("bench")?;
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("bench: failed to create {}", args.out_dir.display()))?;
    let csv_path = args.out_dir.join("report.csv");
    let raw_path = args.out_dir.join("raw.jsonl");
    write_report_csv(&report, &csv_path).context("bench")?;
    write_raw_jsonl(&report, &raw_path).context("bench")?;

    if json {
        println!(
            "{}",
            serde_json::json!({
                "report_csv": csv_path,
                "raw_jsonl": raw_path,
                "summaries": report.algorithm_summaries(),
            })
        );
    } else {
        let fmt = |v: Option<f64>| v.map_or("--".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:<6} {:>11} {:>12} {:>12} {:>13} {:>15}",
            "Algo", "Best Reward", "Best Time(s)", "Conv. Reward", "Conv. Time(s)", "Validity Ratio"
        );
        for s in report.algorithm_summaries() {
            println!(
                "{:<6} {:>11} {:>12} {:>12} {:>13} {:>15}",
                s.algorithm.to_string(),
                fmt(Some(s.mean_best_reward)),
                fmt(Some(s.mean_best_time_seconds)),
                fmt(s.mean_convergence_reward),
                fmt(s.mean_convergence_time_seconds),
                fmt(s.mean_validity_ratio),
            );
        }
        println!("wrote {} and {}", csv_path.display(), raw_path.display());
    }
    Ok(0)
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("failed to create {}", parent.display()))?;
        }
    }
    std::fs::write(path, text).with_context(|| format!("failed to write {}", path.display()))
}
