//! Keyword baseline translating taxonomy questions to SQL. It inverts the
//! template bank by reading keywords, so reworded questions still translate,
//! and it refuses rather than guesses outside the taxonomy.

use regex::Regex;

use crate::dataset::{sql_for, DatasetError, MetricKind};
use crate::domain::{parse_sfc_type, SfcType};
use crate::prune::KeywordMap;
use crate::sql::{self, SqlError, SqlStatement};
use crate::store::RelationalStore;

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("cannot translate: {0}")]
    CannotTranslate(String),
    #[error("ambiguous question: {0}")]
    Ambiguous(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Sql(#[from] SqlError),
}

/// What the translator read out of a question.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reading {
    pub metrics: Vec<MetricKind>,
    pub sfc_type: Option<SfcType>,
    pub dc_id: Option<u32>,
}

#[derive(Debug, Clone)]
pub struct Translator {
    keywords: KeywordMap,
    sfc: Regex,
    dc: Regex,
}

impl Default for Translator {
    fn default() -> Self {
        Self::new(KeywordMap::default())
    }
}

impl Translator {
    pub fn new(keywords: KeywordMap) -> Self {
        Translator {
            keywords,
            // Two-letter names only in capitals so "vs" or "ar" in prose do not count.
            sfc: Regex::new(r"\b(?:CG|AR|VS|(?i:voip|miot|ind\s?4\.0))\b").expect("static regex"),
            dc: Regex::new(r"(?i)\b(?:data\s*cent(?:er|re)s?|dc)\s*#?\s*(\d+)\b").expect("static regex"),
        }
    }

    pub fn read(&self, question: &str) -> Result<Reading, TranslateError> {
        let v = &self.keywords.metrics;
        let mut metrics = Vec::new();
        if v.idle.is_match(question) {
            metrics.push(MetricKind::IdleVnfCount);
        }
        if v.latency.is_match(question) {
            let (lo, hi) = (v.minimum.is_match(question), v.maximum.is_match(question));
            if !lo && !hi {
                return Err(TranslateError::CannotTranslate(
                    "latency question does not say minimum or maximum".into(),
                ));
            }
            if lo {
                metrics.push(MetricKind::MinE2eLatency);
            }
            if hi {
                metrics.push(MetricKind::MaxE2eLatency);
            }
        }
        if v.storage.is_match(question) {
            metrics.push(MetricKind::AvailableStorage);
        }
        if v.cpu.is_match(question) {
            metrics.push(MetricKind::AvailableCpu);
        }
        if metrics.is_empty() {
            return Err(TranslateError::CannotTranslate("no known network-state metric mentioned".into()));
        }
        if metrics.len() > 3 {
            return Err(TranslateError::CannotTranslate("more than three metrics in one question".into()));
        }

        let latency = metrics.iter().any(|m| m.is_latency());
        let mut sfcs: Vec<SfcType> = self
            .sfc
            .find_iter(question)
            .map(|m| parse_sfc_type(m.as_str()).expect("regex admits only catalog names"))
            .collect();
        sfcs.sort();
        sfcs.dedup();
        let sfc_type = match (latency, sfcs.as_slice()) {
            (false, _) => None,
            (true, []) => return Err(TranslateError::CannotTranslate("latency question names no SFC type".into())),
            (true, [s]) => Some(*s),
            (true, many) => {
                let names: Vec<&str> = many.iter().map(|s| s.as_str()).collect();
                return Err(TranslateError::Ambiguous(format!("several SFC types: {}", names.join(", "))));
            }
        };

        let mut dcs: Vec<u32> = Vec::new();
        for cap in self.dc.captures_iter(question) {
            let id: u32 = cap[1]
                .parse()
                .map_err(|_| TranslateError::CannotTranslate(format!("data center id {} out of range", &cap[1])))?;
            if !dcs.contains(&id) {
                dcs.push(id);
            }
        }
        if dcs.len() > 1 {
            return Err(TranslateError::Ambiguous(format!("several data centers: {dcs:?}")));
        }
        Ok(Reading {
            metrics,
            sfc_type,
            dc_id: dcs.first().copied(),
        })
    }

    pub fn translate(&self, question: &str) -> Result<SqlStatement, TranslateError> {
        let r = self.read(question)?;
        Ok(sql_for(&r.metrics, r.sfc_type, r.dc_id)?)
    }

    /// Translates, runs against `store`, and renders the answer text.
    pub fn answer(&self, question: &str, store: &RelationalStore) -> Result<(SqlStatement, String), TranslateError> {
        let stmt = self.translate(question)?;
        let answer = sql::execute(&stmt, store)?.render_answer();
        Ok((stmt, answer))
    }
}
