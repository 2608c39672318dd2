//! Scoring: identifier penalties, the combined loss, exact and execution
//! match, perplexity, and whole-file reports.

mod recover;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use recover::recover_sql;

use crate::dataset::{DatasetError, QueryRecord, Split};
use crate::num::Num;
use crate::sim::NetworkState;
use crate::sql::{self, CmpOp, Literal, Select, SqlStatement};
use crate::store::{self, RelationalStore, StoreError};

/// Tolerance on the weight-sum check.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("predictions do not line up with the corpus: {0}")]
    Misaligned(String),
    #[error("predictions line {line}: {message}")]
    Prediction { line: usize, message: String },
    #[error("no snapshot for time step {0}")]
    MissingStep(u64),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

/// Expected and predicted identifiers for one example. Identifiers are read
/// from normalized SQL, see [`IdentifierPair::from_sql`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdentifierPair {
    pub expected_sfc: Option<String>,
    pub predicted_sfc: Option<String>,
    pub expected_vnf: Option<String>,
    pub predicted_vnf: Option<String>,
}

fn selects(stmt: &SqlStatement) -> Vec<&Select> {
    let mut out = vec![&stmt.0];
    out.extend(stmt.0.subqueries());
    out
}

fn join_unique(items: Vec<String>) -> Option<String> {
    let mut seen: Vec<String> = Vec::new();
    for i in items {
        if !seen.contains(&i) {
            seen.push(i);
        }
    }
    (!seen.is_empty()).then(|| seen.join(","))
}

/// SFC identifier: the literal(s) of `sfc_type = '...'` predicates.
pub fn sfc_identifier(stmt: &SqlStatement) -> Option<String> {
    let found = selects(stmt)
        .into_iter()
        .flat_map(|s| &s.predicates)
        .filter(|p| p.column == "sfc_type" && p.op == CmpOp::Eq)
        .filter_map(|p| match &p.literal {
            Literal::Text(t) => Some(t.clone()),
            Literal::Number(_) => None,
        })
        .collect();
    join_unique(found)
}

/// Idle-VNF identifier: `vnf_instances|idle`, plus `|dc=N` when the same
/// select filters on a DC, for each select reading idle instances.
pub fn vnf_identifier(stmt: &SqlStatement) -> Option<String> {
    let mut found = Vec::new();
    for s in selects(stmt) {
        if s.from.as_deref() != Some(store::VNF_INSTANCES) {
            continue;
        }
        let idle = s
            .predicates
            .iter()
            .any(|p| p.column == "status" && p.op == CmpOp::Eq && p.literal == Literal::Text("idle".into()));
        if !idle {
            continue;
        }
        let mut sig = format!("{}|idle", store::VNF_INSTANCES);
        if let Some(p) = s.predicates.iter().find(|p| p.column == "dc_id" && p.op == CmpOp::Eq) {
            let _ = write!(sig, "|dc={}", p.literal);
        }
        found.push(sig);
    }
    join_unique(found)
}

impl IdentifierPair {
    /// Reads identifiers from gold and predicted SQL. Text that does not parse
    /// contributes no identifiers.
    pub fn from_sql(gold: &str, predicted: &str) -> Self {
        let g = sql::parse(gold).ok();
        let p = sql::parse(predicted).ok();
        IdentifierPair {
            expected_sfc: g.as_ref().and_then(sfc_identifier),
            predicted_sfc: p.as_ref().and_then(sfc_identifier),
            expected_vnf: g.as_ref().and_then(vnf_identifier),
            predicted_vnf: p.as_ref().and_then(vnf_identifier),
        }
    }
}

/// 1 when the identifiers differ. Two absent identifiers match; absent against
/// present is a mismatch.
fn mismatch(expected: &Option<String>, predicted: &Option<String>) -> u8 {
    u8::from(expected != predicted)
}

pub fn penalty_sfc(pair: &IdentifierPair) -> u8 {
    mismatch(&pair.expected_sfc, &pair.predicted_sfc)
}

pub fn penalty_vnf(pair: &IdentifierPair) -> u8 {
    mismatch(&pair.expected_vnf, &pair.predicted_vnf)
}

/// Mean SFC and VNF penalties over a batch.
pub fn batch_penalties(pairs: &[IdentifierPair]) -> Result<(Num, Num), EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    let n = Num::from_int(pairs.len() as i64);
    let s: i64 = pairs.iter().map(|p| i64::from(penalty_sfc(p))).sum();
    let v: i64 = pairs.iter().map(|p| i64::from(penalty_vnf(p))).sum();
    Ok((Num::from_int(s) / n, Num::from_int(v) / n))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LossWeights {
    pub lambda_ce: Num,
    pub lambda_s: Num,
    pub lambda_v: Num,
}

impl Default for LossWeights {
    /// 0.1 / 0.6 / 0.3.
    fn default() -> Self {
        LossWeights {
            lambda_ce: Num::new(1, 10),
            lambda_s: Num::new(6, 10),
            lambda_v: Num::new(3, 10),
        }
    }
}

impl LossWeights {
    pub fn new(lambda_ce: Num, lambda_s: Num, lambda_v: Num) -> Result<Self, EvalError> {
        let w = LossWeights {
            lambda_ce,
            lambda_s,
            lambda_v,
        };
        w.validate()?;
        Ok(w)
    }

    /// Each weight in [0, 1] and the three summing to 1.
    pub fn validate(&self) -> Result<(), EvalError> {
        let one = Num::from_int(1);
        for (name, w) in [("lambda_ce", self.lambda_ce), ("lambda_s", self.lambda_s), ("lambda_v", self.lambda_v)] {
            if w.is_negative() || w > one {
                return Err(EvalError::InvalidWeights(format!("{name} = {w} is outside [0, 1]")));
            }
        }
        let sum = self.lambda_ce + self.lambda_s + self.lambda_v;
        if (sum.to_f64() - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(EvalError::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(())
    }
}

/// `lambda_ce * l_ce + lambda_s * p_s + lambda_v * p_v`.
pub fn combined_loss(l_ce: Num, p_s: Num, p_v: Num, w: &LossWeights) -> Result<Num, EvalError> {
    w.validate()?;
    if l_ce.is_negative() {
        return Err(EvalError::InvalidInput(format!("cross-entropy {l_ce} is negative")));
    }
    let one = Num::from_int(1);
    for (name, p) in [("P_S", p_s), ("P_V", p_v)] {
        if p.is_negative() || p > one {
            return Err(EvalError::InvalidInput(format!("{name} = {p} is outside [0, 1]")));
        }
    }
    Ok(w.lambda_ce * l_ce + w.lambda_s * p_s + w.lambda_v * p_v)
}

/// Word-for-word match after normalization. Unparseable text never matches.
pub fn exact_match(pred: &str, gold: &str) -> bool {
    match (sql::normalize(pred), sql::normalize(gold)) {
        (Ok(p), Ok(g)) => p == g,
        _ => false,
    }
}

/// Both statements run and return the same bag of rows. Column labels are
/// not compared.
pub fn execution_match(pred: &str, gold: &str, store: &RelationalStore) -> bool {
    let run = |text: &str| {
        sql::parse(text)
            .ok()
            .and_then(|s| sql::execute(&s, store).ok())
            .map(|r| r.sorted_rows())
    };
    match (run(pred), run(gold)) {
        (Some(p), Some(g)) => p == g,
        _ => false,
    }
}

/// `exp` of the mean per-token negative log-likelihood.
pub fn perplexity(nll_per_token: &[f64]) -> Result<f64, EvalError> {
    if nll_per_token.is_empty() {
        return Err(EvalError::EmptyBatch);
    }
    if let Some(bad) = nll_per_token.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(EvalError::InvalidInput(format!("negative log-likelihood {bad} is not a finite non-negative number")));
    }
    let mean = nll_per_token.iter().sum::<f64>() / nll_per_token.len() as f64;
    Ok(mean.exp())
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    /// Zero-based line index of the record in the corpus.
    pub id: usize,
    pub raw_output: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_nll: Option<Vec<f64>>,
}

pub fn read_predictions<R: BufRead>(input: R) -> Result<Vec<Prediction>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| EvalError::Prediction {
            line: i + 1,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| EvalError::Prediction {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

/// Where execution match gets its data.
#[derive(Debug, Clone)]
pub enum StoreSource {
    /// Skip execution match.
    None,
    /// One store for every record.
    Single(RelationalStore),
    /// Each record runs on the snapshot of its own step.
    Trajectory(Vec<NetworkState>),
}

#[derive(Debug, Clone)]
pub struct ScoreOptions {
    /// Records scored; `None` scores the whole corpus.
    pub split: Option<Split>,
    /// Run [`recover_sql`] on raw outputs first.
    pub recover: bool,
    /// Externally supplied cross-entropy, needed for the combined loss.
    pub ce_loss: Option<Num>,
    pub weights: LossWeights,
}

impl Default for ScoreOptions {
    fn default() -> Self {
        ScoreOptions {
            split: Some(Split::Test),
            recover: false,
            ce_loss: None,
            weights: LossWeights::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub split: Option<Split>,
    pub recovered: bool,
    pub total: usize,
    pub correct: usize,
    pub accuracy: Num,
    pub exec_correct: Option<usize>,
    pub exec_match: Option<Num>,
    pub p_s: Num,
    pub p_v: Num,
    pub combined_loss: Option<Num>,
    pub perplexity: Option<f64>,
    /// Predictions with no parseable SQL after optional recovery.
    pub unparseable: usize,
}

fn percent(n: Num) -> String {
    format!("{:.2}", n.to_f64() * 100.0)
}

impl EvalReport {
    /// Tab-separated table, one metric per row.
    pub fn to_tsv(&self) -> String {
        let mut rows: Vec<(&str, String)> = vec![
            ("Accuracy (%)", percent(self.accuracy)),
            ("Correct / Total", format!("{} / {}", self.correct, self.total)),
        ];
        if let (Some(m), Some(c)) = (self.exec_match, self.exec_correct) {
            rows.push(("Execution match (%)", percent(m)));
            rows.push(("Execution correct / Total", format!("{c} / {}", self.total)));
        }
        rows.push(("P_S", self.p_s.to_string()));
        rows.push(("P_V", self.p_v.to_string()));
        if let Some(l) = self.combined_loss {
            rows.push(("Combined loss", l.to_string()));
        }
        if let Some(p) = self.perplexity {
            rows.push(("Perplexity", format!("{p:.4}")));
        }
        rows.push(("Unparseable", self.unparseable.to_string()));
        let mut s = String::from("metric\tvalue\n");
        for (k, v) in rows {
            let _ = writeln!(s, "{k}\t{v}");
        }
        s
    }
}

struct Scored {
    exact: bool,
    exec: Option<bool>,
    parseable: bool,
    pair: IdentifierPair,
}

/// Scores predictions against the corpus records of the chosen split. Every
/// record of the split needs exactly one prediction, and every prediction id
/// must name such a record.
pub fn score(
    predictions: &[Prediction],
    corpus: &[QueryRecord],
    stores: &StoreSource,
    opts: &ScoreOptions,
) -> Result<EvalReport, EvalError> {
    if predictions.is_empty() {
        return Err(EvalError::Misaligned("predictions file is empty".into()));
    }
    let wanted: Vec<usize> = (0..corpus.len())
        .filter(|&i| opts.split.is_none_or(|s| corpus[i].split == s))
        .collect();
    let mut by_id: BTreeMap<usize, &Prediction> = BTreeMap::new();
    for p in predictions {
        if p.id >= corpus.len() {
            return Err(EvalError::Misaligned(format!("id {} is not a corpus record", p.id)));
        }
        if let Some(s) = opts.split {
            if corpus[p.id].split != s {
                return Err(EvalError::Misaligned(format!("id {} belongs to the {} split, not {s}", p.id, corpus[p.id].split)));
            }
        }
        if by_id.insert(p.id, p).is_some() {
            return Err(EvalError::Misaligned(format!("id {} predicted twice", p.id)));
        }
    }
    let missing: Vec<usize> = wanted.iter().copied().filter(|i| !by_id.contains_key(i)).collect();
    if let Some(first) = missing.first() {
        return Err(EvalError::Misaligned(format!("{} records lack a prediction, first id {first}", missing.len())));
    }

    let step_stores: BTreeMap<u64, RelationalStore> = match stores {
        StoreSource::Trajectory(traj) => {
            let mut steps: Vec<u64> = wanted.iter().map(|&i| corpus[i].step).collect();
            steps.sort_unstable();
            steps.dedup();
            steps
                .par_iter()
                .map(|step| {
                    let state = traj.iter().find(|s| s.time_step == *step).ok_or(EvalError::MissingStep(*step))?;
                    Ok((*step, store::ingest(state)?))
                })
                .collect::<Result<_, EvalError>>()?
        }
        _ => BTreeMap::new(),
    };

    let scored: Vec<Scored> = wanted
        .par_iter()
        .map(|&i| {
            let rec = &corpus[i];
            let raw = &by_id[&i].raw_output;
            let pred = if opts.recover { recover_sql(raw).unwrap_or_default() } else { raw.clone() };
            let store = match stores {
                StoreSource::None => None,
                StoreSource::Single(s) => Some(s),
                StoreSource::Trajectory(_) => step_stores.get(&rec.step),
            };
            Scored {
                exact: exact_match(&pred, &rec.sql),
                exec: store.map(|s| execution_match(&pred, &rec.sql, s)),
                parseable: sql::parse(&pred).is_ok(),
                pair: IdentifierPair::from_sql(&rec.sql, &pred),
            }
        })
        .collect();

    let total = scored.len();
    let correct = scored.iter().filter(|s| s.exact).count();
    let ratio = |k: usize| Num::from_int(k as i64) / Num::from_int(total as i64);
    let exec_correct = (!matches!(stores, StoreSource::None)).then(|| scored.iter().filter(|s| s.exec == Some(true)).count());
    let pairs: Vec<IdentifierPair> = scored.iter().map(|s| s.pair.clone()).collect();
    let (p_s, p_v) = batch_penalties(&pairs)?;
    let combined = opts
        .ce_loss
        .map(|l| combined_loss(l, p_s, p_v, &opts.weights))
        .transpose()?;
    let nll: Vec<f64> = wanted
        .iter()
        .filter_map(|i| by_id[i].token_nll.as_deref())
        .flatten()
        .copied()
        .collect();
    let perplexity = if nll.is_empty() { None } else { Some(perplexity(&nll)?) };

    Ok(EvalReport {
        split: opts.split,
        recovered: opts.recover,
        total,
        correct,
        accuracy: ratio(correct),
        exec_correct,
        exec_match: exec_correct.map(ratio),
        p_s,
        p_v,
        combined_loss: combined,
        perplexity,
        unparseable: scored.iter().filter(|s| !s.parseable).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(es: Option<&str>, ps: Option<&str>, ev: Option<&str>, pv: Option<&str>) -> IdentifierPair {
        let o = |x: Option<&str>| x.map(String::from);
        IdentifierPair {
            expected_sfc: o(es),
            predicted_sfc: o(ps),
            expected_vnf: o(ev),
            predicted_vnf: o(pv),
        }
    }

    #[test]
    fn penalty_examples() {
        assert_eq!(penalty_sfc(&pair(Some("CG"), Some("CG"), None, None)), 0);
        assert_eq!(penalty_sfc(&pair(Some("CG"), Some("AR"), None, None)), 1);
        assert_eq!(penalty_sfc(&pair(None, None, None, None)), 0);
        assert_eq!(penalty_vnf(&pair(None, None, Some("NAT"), Some("NAT"))), 0);
        assert_eq!(penalty_vnf(&pair(None, None, Some("NAT"), Some("FW"))), 1);
        assert_eq!(penalty_vnf(&pair(None, None, Some("FW"), None)), 1);
    }

    #[test]
    fn batch_examples() {
        let ok = pair(Some("CG"), Some("CG"), Some("x"), Some("x"));
        let bad_sfc = pair(Some("CG"), Some("AR"), Some("x"), Some("x"));
        let (s, v) = batch_penalties(&[ok.clone(), ok.clone(), bad_sfc, ok.clone()]).unwrap();
        assert_eq!((s, v), (Num::new(1, 4), Num::ZERO));
        assert_eq!(batch_penalties(std::slice::from_ref(&ok)).unwrap(), (Num::ZERO, Num::ZERO));
        let wrong = pair(Some("CG"), None, None, Some("y"));
        assert_eq!(batch_penalties(&[wrong.clone(), wrong]).unwrap(), (Num::from_int(1), Num::from_int(1)));
        assert!(matches!(batch_penalties(&[]), Err(EvalError::EmptyBatch)));
    }

    #[test]
    fn loss_examples() {
        let w = LossWeights::default();
        let l = combined_loss(Num::new(1, 2), Num::new(1, 4), Num::ZERO, &w).unwrap();
        assert_eq!(l, Num::new(2, 10));
        let l_ce: Num = "0.37".parse().unwrap();
        assert_eq!(combined_loss(l_ce, Num::ZERO, Num::ZERO, &w).unwrap(), w.lambda_ce * l_ce);
        let half = Num::new(1, 2);
        assert!(matches!(LossWeights::new(half, half, half), Err(EvalError::InvalidWeights(_))));
        let bad = LossWeights { lambda_ce: half, lambda_s: half, lambda_v: half };
        assert!(matches!(combined_loss(l_ce, Num::ZERO, Num::ZERO, &bad), Err(EvalError::InvalidWeights(_))));
        assert!(LossWeights::new(Num::from_int(2), Num::from_int(-1), Num::ZERO).is_err());
    }

    #[test]
    fn identifiers_from_sql() {
        let gold = "SELECT (SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle' AND dc_id = 2), \
                    (SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 2);";
        let p = IdentifierPair::from_sql(gold, "garbage");
        assert_eq!(p.expected_sfc.as_deref(), Some("CG"));
        assert_eq!(p.expected_vnf.as_deref(), Some("vnf_instances|idle|dc=2"));
        assert_eq!((p.predicted_sfc, p.predicted_vnf), (None, None));
        let q = IdentifierPair::from_sql("SELECT SUM(available_cpu_units) FROM data_centers;", "SELECT SUM(available_cpu_units) FROM data_centers WHERE dc_id = 1;");
        assert_eq!((penalty_sfc(&q), penalty_vnf(&q)), (0, 0));
    }

    #[test]
    fn exact_match_examples() {
        let gold = "SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle' AND dc_id = 3;";
        assert!(exact_match("select count(*)   FROM vnf_instances where status = 'idle' and dc_id = 3", gold));
        assert!(!exact_match("SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle' AND dc_id = 4;", gold));
        assert!(!exact_match("garbage text", gold));
    }

    fn latency_store() -> RelationalStore {
        use crate::store::Value;
        let mut s = RelationalStore::empty_canonical();
        for (id, dc, lat) in [(1, 1, "10.5"), (2, 1, "30"), (3, 2, "20")] {
            s.insert_row(
                store::SFC_REQUESTS,
                vec![
                    Value::Int(id),
                    Value::Text("CG".into()),
                    Value::Int(dc),
                    Value::Num(lat.parse().unwrap()),
                    Value::Num(Num::from_int(4)),
                    Value::Text("accepted".into()),
                ],
            )
            .unwrap();
        }
        s
    }

    #[test]
    fn execution_match_examples() {
        let s = latency_store();
        let gold = "SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 1;";
        assert!(execution_match("SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE dc_id = 1 AND sfc_type = 'CG';", gold, &s));
        assert!(!execution_match("SELECT MAX(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 1;", gold, &s));
        assert!(!execution_match("garbage text", gold, &s));
        // Wrong DC, same value: counts under execution match only.
        let wrong_dc = "SELECT COUNT(*) FROM sfc_requests WHERE dc_id = 2;";
        let gold_count = "SELECT COUNT(*) FROM sfc_requests WHERE dc_id = 3;";
        assert!(!execution_match(wrong_dc, gold_count, &s));
        assert!(execution_match("SELECT MAX(e2e_latency_ms) FROM sfc_requests WHERE dc_id = 2;", "SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE dc_id = 2;", &s));
    }

    #[test]
    fn perplexity_examples() {
        assert_eq!(perplexity(&[0.0, 0.0, 0.0]).unwrap(), 1.0);
        let small = perplexity(&[0.0016; 10]).unwrap();
        assert!((small - 0.0016f64.exp()).abs() < 1e-6);
        assert_eq!(format!("{small:.4}"), "1.0016");
        assert!((perplexity(&[0.0, 2.0f64.ln() * 2.0]).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(perplexity(&[]), Err(EvalError::EmptyBatch)));
        assert!(perplexity(&[-1.0]).is_err());
    }

    proptest! {
        #[test]
        fn loss_is_bounded_and_monotone(
            ce in 0u32..10_000, s in 0u32..=100, v in 0u32..=100, ds in 0u32..=100, dv in 0u32..=100,
        ) {
            let w = LossWeights::default();
            let ce = Num::new(ce.into(), 1000);
            let p = |k: u32| Num::new(k.min(100).into(), 100);
            let base = combined_loss(ce, p(s), p(v), &w).unwrap();
            let ce_part = w.lambda_ce * ce;
            prop_assert!(base >= ce_part);
            prop_assert!(base <= ce_part + w.lambda_s + w.lambda_v);
            prop_assert!(combined_loss(ce, p(s + ds), p(v), &w).unwrap() >= base);
            prop_assert!(combined_loss(ce, p(s), p(v + dv), &w).unwrap() >= base);
        }

        #[test]
        fn perplexity_at_least_one(nll in prop::collection::vec(0.0f64..5.0, 1..50)) {
            let p = perplexity(&nll).unwrap();
            prop_assert!(p >= 1.0);
            prop_assert_eq!(p == 1.0, nll.iter().all(|x| *x == 0.0));
        }
    }
}
