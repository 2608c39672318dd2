//! Keyword-driven schema pruning and the shared token-count proxy.

use std::path::Path;

use regex::Regex;
use serde::Deserialize;

use crate::store::{canonical_schema, TableSchema};

/// Context budget in tokens used when none is given.
pub const DEFAULT_BUDGET: usize = 512;

const DEFAULT_RULES: &str = include_str!("../data/keywords.toml");

#[derive(Debug, thiserror::Error)]
pub enum PruneError {
    #[error("invalid keyword rules: {0}")]
    InvalidRules(String),
    #[error("budget of {budget} tokens cannot hold the question plus required tables ({needed} tokens)")]
    BudgetTooSmall { budget: usize, needed: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RulesFile {
    rule: Vec<RuleSpec>,
    metrics: MetricVocabSpec,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleSpec {
    table: String,
    patterns: Vec<String>,
    #[serde(default)]
    required: bool,
    #[serde(default)]
    priority: u32,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetricVocabSpec {
    idle: Vec<String>,
    latency: Vec<String>,
    minimum: Vec<String>,
    maximum: Vec<String>,
    storage: Vec<String>,
    cpu: Vec<String>,
}

/// One compiled rule: any pattern match pulls in `table`.
#[derive(Debug, Clone)]
pub struct KeywordRule {
    pub table: String,
    pub pattern: Regex,
    pub required: bool,
    pub priority: u32,
}

/// Compiled metric vocabulary, one alternation per concept.
#[derive(Debug, Clone)]
pub struct MetricVocab {
    pub idle: Regex,
    pub latency: Regex,
    pub minimum: Regex,
    pub maximum: Regex,
    pub storage: Regex,
    pub cpu: Regex,
}

#[derive(Debug, Clone)]
pub struct KeywordMap {
    pub rules: Vec<KeywordRule>,
    pub metrics: MetricVocab,
}

fn word_regex(patterns: &[String]) -> Result<Regex, PruneError> {
    if patterns.is_empty() {
        return Err(PruneError::InvalidRules("empty pattern list".into()));
    }
    let alt = patterns
        .iter()
        .map(|p| format!("(?:{p})"))
        .collect::<Vec<_>>()
        .join("|");
    Regex::new(&format!(r"(?i)\b(?:{alt})\b")).map_err(|e| PruneError::InvalidRules(e.to_string()))
}

impl KeywordMap {
    pub fn from_toml_str(text: &str) -> Result<Self, PruneError> {
        let spec: RulesFile = toml::from_str(text).map_err(|e| PruneError::InvalidRules(e.to_string()))?;
        let schema = canonical_schema();
        let mut rules = Vec::with_capacity(spec.rule.len());
        for r in spec.rule {
            if !schema.iter().any(|t| t.name == r.table) {
                return Err(PruneError::InvalidRules(format!("unknown table {:?}", r.table)));
            }
            rules.push(KeywordRule {
                pattern: word_regex(&r.patterns)?,
                table: r.table,
                required: r.required,
                priority: r.priority,
            });
        }
        let m = spec.metrics;
        Ok(KeywordMap {
            rules,
            metrics: MetricVocab {
                idle: word_regex(&m.idle)?,
                latency: word_regex(&m.latency)?,
                minimum: word_regex(&m.minimum)?,
                maximum: word_regex(&m.maximum)?,
                storage: word_regex(&m.storage)?,
                cpu: word_regex(&m.cpu)?,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, PruneError> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }
}

impl Default for KeywordMap {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_RULES).expect("bundled keyword rules are valid")
    }
}

/// Word-level token proxy: whitespace-separated chunks, with each of
/// `( ) , * = < >` split out as its own token. Other punctuation stays attached.
pub fn count_tokens(text: &str) -> usize {
    const SPLIT: &[char] = &['(', ')', ',', '*', '=', '<', '>'];
    text.split_whitespace()
        .map(|chunk| {
            let seps = chunk.chars().filter(|c| SPLIT.contains(c)).count();
            let words = chunk.split(SPLIT).filter(|w| !w.is_empty()).count();
            seps + words
        })
        .sum()
}

/// Tables chosen for a question, in canonical schema order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pruned {
    pub tables: Vec<String>,
    pub ddl: String,
    /// Tokens in question plus DDL.
    pub tokens: usize,
    /// True when no keyword matched and the full schema was offered.
    pub fallback: bool,
}

#[derive(Debug, Clone)]
pub struct Pruner {
    keywords: KeywordMap,
    schema: Vec<TableSchema>,
}

impl Default for Pruner {
    fn default() -> Self {
        Self::new(KeywordMap::default())
    }
}

impl Pruner {
    pub fn new(keywords: KeywordMap) -> Self {
        Pruner {
            keywords,
            schema: canonical_schema(),
        }
    }

    pub fn keywords(&self) -> &KeywordMap {
        &self.keywords
    }

    pub fn prune(&self, question: &str, budget: usize) -> Result<Pruned, PruneError> {
        // (schema index, required, priority)
        let mut picked: Vec<(usize, bool, u32)> = Vec::new();
        for rule in &self.keywords.rules {
            if !rule.pattern.is_match(question) {
                continue;
            }
            let idx = self.schema.iter().position(|t| t.name == rule.table).expect("validated on load");
            match picked.iter_mut().find(|p| p.0 == idx) {
                Some(p) => {
                    p.1 |= rule.required;
                    p.2 = p.2.max(rule.priority);
                }
                None => picked.push((idx, rule.required, rule.priority)),
            }
        }
        let fallback = picked.is_empty();
        if fallback {
            picked = (0..self.schema.len())
                .map(|i| {
                    let prio = self
                        .keywords
                        .rules
                        .iter()
                        .filter(|r| r.table == self.schema[i].name)
                        .map(|r| r.priority)
                        .max()
                        .unwrap_or(0);
                    (i, false, prio)
                })
                .collect();
        }
        picked.sort_by_key(|p| p.0);

        let ddl_tokens: Vec<usize> = picked.iter().map(|p| count_tokens(&self.schema[p.0].ddl())).collect();
        let q_tokens = count_tokens(question);
        let mut keep = vec![true; picked.len()];
        let mut total = q_tokens + ddl_tokens.iter().sum::<usize>();

        // Drop optional tables, lowest priority then latest in schema order, until the budget fits.
        let mut order: Vec<usize> = (0..picked.len()).filter(|&i| !picked[i].1).collect();
        order.sort_by_key(|&i| (picked[i].2, std::cmp::Reverse(picked[i].0)));
        for i in order {
            if total <= budget {
                break;
            }
            keep[i] = false;
            total -= ddl_tokens[i];
        }
        if total > budget || keep.iter().all(|k| !k) {
            let needed = if keep.iter().any(|k| *k) {
                total
            } else {
                q_tokens + ddl_tokens.iter().min().copied().unwrap_or(0)
            };
            return Err(PruneError::BudgetTooSmall { budget, needed });
        }

        let chosen: Vec<&TableSchema> = picked
            .iter()
            .zip(&keep)
            .filter(|(_, k)| **k)
            .map(|(p, _)| &self.schema[p.0])
            .collect();
        Ok(Pruned {
            tables: chosen.iter().map(|t| t.name.clone()).collect(),
            ddl: chosen.iter().map(|t| t.ddl()).collect::<Vec<_>>().join("\n\n"),
            tokens: total,
            fallback,
        })
    }
}
