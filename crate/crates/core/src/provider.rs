//! Sources of constraint sets: a static rule file for deterministic runs,
//! or a chat-completion endpoint that writes rules from a requirement, a
//! context document, and a rendering of the design space.
//!
//! The endpoint provider speaks the common chat-completion JSON shape
//! (`POST {endpoint}` with `model`, `messages`, `temperature`), retries
//! transport failures with exponential backoff, and extracts rule lines
//! leniently from the response: a fenced code block when present, any
//! grammar-shaped line otherwise. Unparseable or unbindable lines are
//! dropped with a warning each, upgradeable to errors in strict mode.
//! Credentials are read from the environment at request time and never
//! stored or serialized.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::constraints::{ConstraintError, ConstraintSet, Rule};
use crate::space::DesignSpace;

/// Where constraints come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderConfig {
    File { path: PathBuf },
    Llm(LlmConfig),
}

impl ProviderConfig {
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        serde_json::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ProviderError::Config(format!("failed to read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }
}

/// Endpoint provider settings. `credential_env` names the environment
/// variable holding the API key; the key itself is never part of the
/// configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlmConfig {
    pub endpoint: String,
    pub model: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub credential_env: Option<String>,
    #[serde(default = "default_timeout_seconds")]
    pub timeout_seconds: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
}

fn default_timeout_seconds() -> u64 {
    30
}

fn default_retries() -> u32 {
    2
}

fn default_temperature() -> f64 {
    0.2
}

/// Domain-specific prompt material: expert role text, extra generation
/// rules, and formatted example rules. Kept as data so new domains need no
/// code changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainPack {
    pub role_specification: String,
    pub generation_rules: String,
    pub examples: String,
}

impl DomainPack {
    pub fn from_json(text: &str) -> Result<Self, ProviderError> {
        serde_json::from_str(text).map_err(|e| ProviderError::Config(e.to_string()))
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| {
            ProviderError::Config(format!("failed to read {}: {e}", path.display()))
        })?;
        Self::from_json(&text)
    }
}

/// The assembled prompt, component by component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub role_specification: String,
    pub requirement: String,
    pub context: String,
    pub space_rendering: String,
    pub constraint_semantics: String,
    pub generation_rules: String,
    pub examples: String,
}

pub const NO_CONTEXT_MARKER: &str = "(no context provided)";

/// The fixed rule-language description injected into every prompt,
/// including the three rule-form templates.
pub const CONSTRAINT_SEMANTICS: &str = "\
Constraints are written one per line as logical rules over the design space:

    hard_constraint(x, k) :- D1(x, e11).
    soft_positive_constraint(x, k) :- D1(x, e13), D2(x, e21).
    soft_negative_constraint(x, k) :- D3(x, e31).

Each rule head names the constraint type and an integer index k, unique per
type. The body is a comma-separated conjunction of atoms `Dim(x, element)`,
each optionally negated with `not`. An atom is true when the element is
selected in that dimension. A hard constraint invalidates any solution
whose body holds; a soft positive constraint rewards solutions matching
its body; a soft negative constraint penalizes them without forbidding.
Use only dimension and element identifiers listed in the design space.";

impl PromptBundle {
    /// The full prompt text sent as a single user message.
    pub fn render(&self) -> String {
        format!(
            "{role}\n\n## Requirement\n{req}\n\n## Context\n{ctx}\n\n## Design space\n{space}\n\n\
             ## Constraint language\n{sem}\n\n## Generation rules\n{rules}\n\n## Examples\n{ex}\n",
            role = self.role_specification,
            req = self.requirement,
            ctx = self.context,
            space = self.space_rendering,
            sem = self.constraint_semantics,
            rules = self.generation_rules,
            ex = self.examples,
        )
    }
}

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("provider configuration error: {0}")]
    Config(String),
    #[error("constraint file error: {0}")]
    File(#[from] ConstraintError),
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("environment variable '{0}' is not set")]
    MissingCredential(String),
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("response contained no parseable rules (the model returned prose); {warnings} line(s) were rejected")]
    NoRules { warnings: usize },
    #[error("strict mode: {0}")]
    Strict(String),
}

/// Assemble the prompt from the requirement, context document, space, and
/// domain pack. Every component must be non-empty except the context,
/// which falls back to an explicit marker.
pub fn assemble_prompt(
    requirement: &str,
    context: &str,
    space: &DesignSpace,
    pack: &DomainPack,
) -> Result<PromptBundle, ProviderError> {
    if requirement.trim().is_empty() {
        return Err(ProviderError::Config("requirement must not be empty".into()));
    }
    for (name, value) in [
        ("role_specification", &pack.role_specification),
        ("generation_rules", &pack.generation_rules),
        ("examples", &pack.examples),
    ] {
        if value.trim().is_empty() {
            return Err(ProviderError::Config(format!(
                "domain pack field '{name}' must not be empty"
            )));
        }
    }
    let context = if context.trim().is_empty() {
        NO_CONTEXT_MARKER.to_string()
    } else {
        context.to_string()
    };
    Ok(PromptBundle {
        role_specification: pack.role_specification.clone(),
        requirement: requirement.to_string(),
        context,
        space_rendering: render_space(space),
        constraint_semantics: CONSTRAINT_SEMANTICS.to_string(),
        generation_rules: pack.generation_rules.clone(),
        examples: pack.examples.clone(),
    })
}

/// One line per dimension header, one `  - ` line per element.
pub fn render_space(space: &DesignSpace) -> String {
    let mut out = String::new();
    for dim in &space.dimensions {
        if dim.multi_select {
            out.push_str(&format!(
                "Dimension {} ({}) [multi-select, 1..{} elements]:\n",
                dim.dimension_id,
                dim.label,
                dim.effective_max_count()
            ));
        } else {
            out.push_str(&format!(
                "Dimension {} ({}) [select exactly 1]:\n",
                dim.dimension_id, dim.label
            ));
        }
        for elem in &dim.elements {
            out.push_str(&format!("  - {} ({})\n", elem.element_id, elem.label));
        }
    }
    out
}

/// A fetched constraint set plus per-line warnings from lenient parsing.
#[derive(Debug, Clone, PartialEq)]
pub struct FetchOutcome {
    pub constraints: ConstraintSet,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct FetchOptions {
    /// Upgrade dropped-line warnings to errors.
    pub strict: bool,
    /// Cache raw responses on disk, keyed by request hash.
    pub cache_dir: Option<PathBuf>,
}

/// Fetch constraints from a provider. The file provider parses strictly;
/// the endpoint provider sends the rendered bundle and extracts rules
/// leniently from the response.
pub fn fetch_constraints(
    config: &ProviderConfig,
    bundle: Option<&PromptBundle>,
    space: &DesignSpace,
    options: &FetchOptions,
) -> Result<FetchOutcome, ProviderError> {
    match config {
        ProviderConfig::File { path } => {
            let text = std::fs::read_to_string(path).map_err(|source| ProviderError::Io {
                path: path.display().to_string(),
                source,
            })?;
            let constraints = ConstraintSet::parse(&text, space)?;
            Ok(FetchOutcome { constraints, warnings: Vec::new() })
        }
        ProviderConfig::Llm(llm) => {
            let bundle = bundle.ok_or_else(|| {
                ProviderError::Config("the llm provider requires an assembled prompt".into())
            })?;
            let content = request_completion(llm, bundle, options)?;
            extract_rules(&content, space, options)
        }
    }
}

/// Parse rule lines out of a model response: lines inside fenced code
/// blocks when any fence exists, every line otherwise.
pub fn extract_rules(
    content: &str,
    space: &DesignSpace,
    options: &FetchOptions,
) -> Result<FetchOutcome, ProviderError> {
    let candidates = candidate_lines(content);
    let mut rules: Vec<Rule> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut warnings = Vec::new();
    for line in candidates {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        // cheap shape filter so prose lines are skipped silently
        if !trimmed.contains(":-") {
            continue;
        }
        match ConstraintSet::parse(trimmed, space) {
            Ok(parsed) => {
                for rule in parsed.rules {
                    if seen.insert((rule.kind, rule.index)) {
                        rules.push(rule);
                    } else {
                        warnings.push(format!(
                            "dropped duplicate rule {}(x, {})",
                            rule.kind.head_predicate(),
                            rule.index
                        ));
                    }
                }
            }
            Err(err) => warnings.push(format!("dropped line '{trimmed}': {err}")),
        }
    }
    if options.strict && !warnings.is_empty() {
        return Err(ProviderError::Strict(warnings.join("; ")));
    }
    if rules.is_empty() {
        return Err(ProviderError::NoRules { warnings: warnings.len() });
    }
    Ok(FetchOutcome { constraints: ConstraintSet::from_rules(rules), warnings })
}

fn candidate_lines(content: &str) -> Vec<&str> {
    let mut fenced = Vec::new();
    let mut in_fence = false;
    for line in content.lines() {
        if line.trim_start().starts_with("```") {
            in_fence = !in_fence;
            continue;
        }
        if in_fence {
            fenced.push(line);
        }
    }
    if fenced.is_empty() {
        content.lines().collect()
    } else {
        fenced
    }
}

fn request_completion(
    llm: &LlmConfig,
    bundle: &PromptBundle,
    options: &FetchOptions,
) -> Result<String, ProviderError> {
    let prompt = bundle.render();
    let body = serde_json::json!({
        "model": llm.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": llm.temperature,
    });

    let cache_key = options.cache_dir.as_ref().map(|dir| {
        let mut hasher = Sha256::new();
        hasher.update(llm.endpoint.as_bytes());
        hasher.update(llm.model.as_bytes());
        hasher.update(llm.temperature.to_le_bytes());
        hasher.update(prompt.as_bytes());
        dir.join(format!("{:x}.json", hasher.finalize()))
    });
    if let Some(path) = &cache_key {
        if let Ok(cached) = std::fs::read_to_string(path) {
            return parse_completion(&cached);
        }
    }

    let credential = match &llm.credential_env {
        Some(var) => Some(
            std::env::var(var).map_err(|_| ProviderError::MissingCredential(var.clone()))?,
        ),
        None => None,
    };

    let client = reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(llm.timeout_seconds.max(1)))
        .build()
        .map_err(|e| ProviderError::Config(e.to_string()))?;

    let attempts = llm.retries + 1;
    let mut last_error = String::new();
    for attempt in 0..attempts {
        if attempt > 0 {
            std::thread::sleep(backoff_delay(attempt));
        }
        let mut request = client.post(&llm.endpoint).json(&body);
        if let Some(key) = &credential {
            request = request.bearer_auth(key);
        }
        match request.send() {
            Ok(response) => {
                let status = response.status();
                let text = response.text().unwrap_or_default();
                if status.is_success() {
                    if let Some(path) = &cache_key {
                        if let Some(parent) = path.parent() {
                            let _ = std::fs::create_dir_all(parent);
                        }
                        let _ = std::fs::write(path, &text);
                    }
                    return parse_completion(&text);
                }
                last_error = format!("HTTP {status}");
                // client errors other than rate limiting will not improve on retry
                if status.is_client_error() && status.as_u16() != 429 {
                    break;
                }
            }
            Err(e) => last_error = e.to_string(),
        }
    }
    Err(ProviderError::Transport { attempts, message: last_error })
}

/// Exponential backoff with jitter: 250ms doubling per attempt, plus up to
/// half the base on top.
fn backoff_delay(attempt: u32) -> Duration {
    let base = 250u64.saturating_mul(1 << (attempt - 1).min(6));
    let jitter = (rand::random::<f64>() * base as f64 / 2.0) as u64;
    Duration::from_millis(base + jitter)
}

fn parse_completion(text: &str) -> Result<String, ProviderError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| {
        ProviderError::Transport { attempts: 1, message: format!("malformed response JSON: {e}") }
    })?;
    value["choices"][0]["message"]["content"]
        .as_str()
        .map(|s| s.to_string())
        .ok_or_else(|| ProviderError::Transport {
            attempts: 1,
            message: "response lacks choices[0].message.content".into(),
        })
}
