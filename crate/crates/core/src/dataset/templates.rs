use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use super::{DatasetError, MetricKind};
use crate::domain::SfcType;

const DEFAULT_BANK: &str = include_str!("../../data/templates.toml");

/// Fewest paraphrases accepted for any metric combination and filter shape.
pub const MIN_PARAPHRASES: usize = 4;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct PhraseSet {
    dc: Vec<String>,
    all: Vec<String>,
}

impl PhraseSet {
    fn get(&self, with_dc: bool) -> &[String] {
        if with_dc {
            &self.dc
        } else {
            &self.all
        }
    }
}

/// Question templates. See the bundled `templates.toml` for the format.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateBank {
    openers: Vec<String>,
    single: BTreeMap<MetricKind, PhraseSet>,
    fragments: BTreeMap<MetricKind, Vec<String>>,
    pair: PhraseSet,
    triple: PhraseSet,
}

impl Default for TemplateBank {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_BANK).expect("bundled template bank is valid")
    }
}

fn invalid(msg: impl Into<String>) -> DatasetError {
    DatasetError::InvalidTemplates(msg.into())
}

fn check_placeholders(t: &str, with_dc: bool, sfc: bool, slots: &[&str]) -> Result<(), DatasetError> {
    let want = |ph: &str, on: bool| -> Result<(), DatasetError> {
        if t.contains(ph) != on {
            let verb = if on { "needs" } else { "must not contain" };
            return Err(invalid(format!("template {t:?} {verb} {ph}")));
        }
        Ok(())
    };
    want("{dc}", with_dc)?;
    want("{sfc}", sfc)?;
    for s in ["{a}", "{b}", "{c}"] {
        want(s, slots.contains(&s))?;
    }
    Ok(())
}

impl TemplateBank {
    pub fn from_toml_str(text: &str) -> Result<Self, DatasetError> {
        let bank: TemplateBank = toml::from_str(text).map_err(|e| invalid(e.to_string()))?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let text = std::fs::read_to_string(path).map_err(|e| DatasetError::Io(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<(), DatasetError> {
        if self.openers.first().map(String::as_str) != Some("") {
            return Err(invalid("the first opener must be empty"));
        }
        let variants = self.fragments.values().next().map_or(0, Vec::len);
        for m in MetricKind::ALL {
            let set = self.single.get(&m).ok_or_else(|| invalid(format!("no single templates for {m}")))?;
            for with_dc in [true, false] {
                for t in set.get(with_dc) {
                    check_placeholders(t, with_dc, m.is_latency(), &[])?;
                }
            }
            let frags = self.fragments.get(&m).ok_or_else(|| invalid(format!("no fragments for {m}")))?;
            if frags.len() != variants || variants == 0 {
                return Err(invalid("every metric needs the same non-zero number of fragments"));
            }
            for f in frags {
                check_placeholders(f, false, m.is_latency(), &[])?;
            }
        }
        for (set, slots) in [(&self.pair, &["{a}", "{b}"][..]), (&self.triple, &["{a}", "{b}", "{c}"][..])] {
            for with_dc in [true, false] {
                for t in set.get(with_dc) {
                    check_placeholders(t, with_dc, false, slots)?;
                }
            }
        }
        for combo in super::all_combinations() {
            for with_dc in [true, false] {
                if self.body_count(&combo, with_dc) < MIN_PARAPHRASES {
                    return Err(invalid(format!("fewer than {MIN_PARAPHRASES} paraphrases for {combo:?}")));
                }
            }
        }
        Ok(())
    }

    fn body_count(&self, metrics: &[MetricKind], with_dc: bool) -> usize {
        match metrics.len() {
            1 => self.single[&metrics[0]].get(with_dc).len(),
            2 => self.pair.get(with_dc).len() * self.fragment_variants(),
            _ => self.triple.get(with_dc).len() * self.fragment_variants(),
        }
    }

    fn fragment_variants(&self) -> usize {
        self.fragments.values().next().map_or(0, Vec::len)
    }

    /// Number of distinct paraphrase indices for a combination.
    pub fn paraphrase_count(&self, metrics: &[MetricKind], with_dc: bool) -> usize {
        self.openers.len() * self.body_count(metrics, with_dc)
    }

    /// Renders the question for `metrics` (canonical order, 1 to 3 entries).
    pub fn phrase(
        &self,
        metrics: &[MetricKind],
        sfc_type: Option<SfcType>,
        dc_id: Option<u32>,
        index: usize,
    ) -> Result<String, DatasetError> {
        super::check_combination(metrics)?;
        let with_dc = dc_id.is_some();
        let count = self.paraphrase_count(metrics, with_dc);
        if index >= count {
            return Err(DatasetError::ParaphraseOutOfRange { index, count });
        }
        if metrics.iter().any(|m| m.is_latency()) && sfc_type.is_none() {
            return Err(DatasetError::MissingSfcType);
        }
        let bodies = self.body_count(metrics, with_dc);
        let opener = &self.openers[index / bodies];
        let b = index % bodies;
        let body = match metrics.len() {
            1 => self.single[&metrics[0]].get(with_dc)[b].clone(),
            n => {
                let frames = if n == 2 { self.pair.get(with_dc) } else { self.triple.get(with_dc) };
                let (frame, variant) = (b % frames.len(), b / frames.len());
                let mut t = frames[frame].clone();
                for (slot, m) in ["{a}", "{b}", "{c}"].iter().zip(metrics) {
                    t = t.replace(slot, &self.fragments[m][variant]);
                }
                t
            }
        };
        let mut body = body.replace("{dc}", &dc_id.map(|d| d.to_string()).unwrap_or_default());
        if let Some(s) = sfc_type {
            body = body.replace("{sfc}", s.as_str());
        }
        Ok(format!("{opener}{}", if opener.is_empty() { body } else { lower_first(&body) }))
    }
}

/// Lowercases the first letter unless the first word is an acronym.
fn lower_first(s: &str) -> String {
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(a), Some(b)) if !b.is_uppercase() => {
            let mut out: String = a.to_lowercase().collect();
            out.push_str(&s[a.len_utf8()..]);
            out
        }
        _ => s.to_string(),
    }
}
