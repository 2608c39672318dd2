//! NL question / SQL / answer corpus generation over simulated snapshots.

mod templates;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use templates::{TemplateBank, MIN_PARAPHRASES};

use crate::domain::SfcType;
use crate::num::Num;
use crate::prune::{PruneError, Pruner, DEFAULT_BUDGET};
use crate::sim::NetworkState;
use crate::sql::{self, AggArg, AggFunc, CmpOp, Literal, Predicate, Projection, Select, SqlError, SqlStatement};
use crate::store::{self, RelationalStore, StoreError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    IdleVnfCount,
    MinE2eLatency,
    MaxE2eLatency,
    AvailableStorage,
    AvailableCpu,
}

impl MetricKind {
    /// Canonical order.
    pub const ALL: [MetricKind; 5] = [
        MetricKind::IdleVnfCount,
        MetricKind::MinE2eLatency,
        MetricKind::MaxE2eLatency,
        MetricKind::AvailableStorage,
        MetricKind::AvailableCpu,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::IdleVnfCount => "idle_vnf_count",
            MetricKind::MinE2eLatency => "min_e2e_latency",
            MetricKind::MaxE2eLatency => "max_e2e_latency",
            MetricKind::AvailableStorage => "available_storage",
            MetricKind::AvailableCpu => "available_cpu",
        }
    }

    pub fn is_latency(self) -> bool {
        matches!(self, MetricKind::MinE2eLatency | MetricKind::MaxE2eLatency)
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Split::ALL
            .into_iter()
            .find(|x| x.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| DatasetError::UnknownSplit(s.to_string()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("latency metrics need an SFC type")]
    MissingSfcType,
    #[error("metric set must hold 1 to 3 distinct metrics in canonical order, got {0:?}")]
    InvalidCombination(Vec<MetricKind>),
    #[error("paraphrase index {index} out of range (bank has {count})")]
    ParaphraseOutOfRange { index: usize, count: usize },
    #[error("invalid template bank: {0}")]
    InvalidTemplates(String),
    #[error("target size {0} must be a positive multiple of 8")]
    InvalidSize(usize),
    #[error("target size {requested} exceeds the {available} distinct questions the bank can phrase for this trajectory")]
    InsufficientVariety { requested: usize, available: usize },
    #[error("infeasible coverage: {0}")]
    InfeasibleCoverage(String),
    #[error("trajectory is empty")]
    EmptyTrajectory,
    #[error("duplicate question in corpus: {0:?}")]
    Duplicate(String),
    #[error("unknown split {0:?}")]
    UnknownSplit(String),
    #[error("corpus line {line}: {message}")]
    Corpus { line: usize, message: String },
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Prune(#[from] PruneError),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Sql(#[from] SqlError),
}

/// One corpus row. Field names are the JSONL contract.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub question: String,
    pub schema_context: String,
    pub sql: String,
    pub answer: String,
    pub metrics: Vec<MetricKind>,
    pub sfc_type: Option<SfcType>,
    pub dc_id: Option<u32>,
    pub split: Split,
    /// Time step of the snapshot the answer was computed on.
    pub step: u64,
}

/// Train, validation and test sizes for a corpus of `target` records.
pub fn split_sizes(target: usize) -> Result<(usize, usize, usize), DatasetError> {
    if target == 0 || !target.is_multiple_of(8) {
        return Err(DatasetError::InvalidSize(target));
    }
    Ok((target / 8 * 6, target / 8, target / 8))
}

/// The 25 metric sets: singles, then pairs, then triples, each in canonical order.
pub fn all_combinations() -> Vec<Vec<MetricKind>> {
    let m = MetricKind::ALL;
    let mut out: Vec<Vec<MetricKind>> = m.iter().map(|a| vec![*a]).collect();
    for i in 0..5 {
        for j in i + 1..5 {
            out.push(vec![m[i], m[j]]);
        }
    }
    for i in 0..5 {
        for j in i + 1..5 {
            for k in j + 1..5 {
                out.push(vec![m[i], m[j], m[k]]);
            }
        }
    }
    out
}

fn check_combination(metrics: &[MetricKind]) -> Result<(), DatasetError> {
    if metrics.is_empty() || metrics.len() > 3 || metrics.windows(2).any(|w| w[0] >= w[1]) {
        return Err(DatasetError::InvalidCombination(metrics.to_vec()));
    }
    Ok(())
}

fn eq(column: &str, literal: Literal) -> Predicate {
    Predicate {
        column: column.into(),
        op: CmpOp::Eq,
        literal,
    }
}

fn metric_select(m: MetricKind, sfc_type: Option<SfcType>, dc_id: Option<u32>) -> Select {
    let (func, arg, table, mut predicates) = match m {
        MetricKind::IdleVnfCount => (
            AggFunc::Count,
            AggArg::Star,
            store::VNF_INSTANCES,
            vec![eq("status", Literal::Text("idle".into()))],
        ),
        MetricKind::MinE2eLatency | MetricKind::MaxE2eLatency => (
            if m == MetricKind::MinE2eLatency { AggFunc::Min } else { AggFunc::Max },
            AggArg::Column("e2e_latency_ms".into()),
            store::SFC_REQUESTS,
            vec![eq("sfc_type", Literal::Text(sfc_type.expect("checked by caller").as_str().into()))],
        ),
        MetricKind::AvailableStorage => (
            AggFunc::Sum,
            AggArg::Column("available_storage_gb".into()),
            store::DATA_CENTERS,
            vec![],
        ),
        MetricKind::AvailableCpu => (
            AggFunc::Sum,
            AggArg::Column("available_cpu_units".into()),
            store::DATA_CENTERS,
            vec![],
        ),
    };
    if let Some(dc) = dc_id {
        predicates.push(eq("dc_id", Literal::Number(Num::from_int(dc.into()))));
    }
    Select {
        projections: vec![Projection::Aggregate { func, arg }],
        from: Some(table.into()),
        predicates,
    }
}

/// Ground-truth SQL for a metric set. A single metric gives one aggregate
/// select; two or three give one select of scalar subqueries in canonical
/// order. Storage and CPU are summed, so the network-wide form totals all DCs.
/// `sfc_type` is ignored when no latency metric is asked for.
pub fn sql_for(
    metrics: &[MetricKind],
    sfc_type: Option<SfcType>,
    dc_id: Option<u32>,
) -> Result<SqlStatement, DatasetError> {
    check_combination(metrics)?;
    if metrics.iter().any(|m| m.is_latency()) && sfc_type.is_none() {
        return Err(DatasetError::MissingSfcType);
    }
    if let [m] = metrics {
        return Ok(SqlStatement(metric_select(*m, sfc_type, dc_id)));
    }
    Ok(SqlStatement(Select {
        projections: metrics
            .iter()
            .map(|m| Projection::Subquery(Box::new(metric_select(*m, sfc_type, dc_id))))
            .collect(),
        from: None,
        predicates: vec![],
    }))
}

#[derive(Debug, Clone, Copy)]
struct Variant {
    combo: usize,
    paraphrase: usize,
    sfc: Option<SfcType>,
    dc: Option<u32>,
}

struct Planned {
    variant: Variant,
    split: Split,
    traj_index: usize,
}

/// Corpus generator: template bank, pruner and context budget.
#[derive(Debug, Clone)]
pub struct Generator {
    pub bank: TemplateBank,
    pub pruner: Pruner,
    pub budget: usize,
}

impl Default for Generator {
    fn default() -> Self {
        Generator {
            bank: TemplateBank::default(),
            pruner: Pruner::default(),
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Even split of `total` across buckets capped by `caps`; leftover units go to
/// the lowest-index buckets with room.
fn water_fill(caps: &[usize], total: usize) -> Option<Vec<usize>> {
    if caps.iter().sum::<usize>() < total {
        return None;
    }
    let filled = |level: usize| caps.iter().map(|c| (*c).min(level)).sum::<usize>();
    let (mut lo, mut hi) = (0, total);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if filled(mid) <= total {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    let mut q: Vec<usize> = caps.iter().map(|c| (*c).min(lo)).collect();
    let mut left = total - filled(lo);
    for (qi, c) in q.iter_mut().zip(caps) {
        if left == 0 {
            break;
        }
        if *qi < *c {
            *qi += 1;
            left -= 1;
        }
    }
    Some(q)
}

/// Apportions `total` over buckets in proportion to `weights`, at least one
/// each, by largest remainder.
fn apportion(weights: &[usize], total: usize) -> Option<Vec<usize>> {
    let sum: usize = weights.iter().sum();
    if total < weights.len() || sum == 0 {
        return None;
    }
    let mut out: Vec<usize> = weights.iter().map(|w| (w * total / sum).max(1)).collect();
    let mut by_remainder: Vec<usize> = (0..weights.len()).collect();
    by_remainder.sort_by_key(|&i| (std::cmp::Reverse(weights[i] * total % sum), i));
    let mut assigned: usize = out.iter().sum();
    let mut k = 0;
    while assigned < total {
        out[by_remainder[k % weights.len()]] += 1;
        assigned += 1;
        k += 1;
    }
    while assigned > total {
        let i = (0..out.len()).filter(|&i| out[i] > 1).max_by_key(|&i| (out[i], std::cmp::Reverse(i)))?;
        out[i] -= 1;
        assigned -= 1;
    }
    Some(out)
}

impl Generator {
    pub fn phrase(
        &self,
        metrics: &[MetricKind],
        sfc_type: Option<SfcType>,
        dc_id: Option<u32>,
        index: usize,
    ) -> Result<String, DatasetError> {
        self.bank.phrase(metrics, sfc_type, dc_id, index)
    }

    /// Every distinct question shape for one combination.
    fn variants(&self, combo: usize, metrics: &[MetricKind], dcs: &[u32]) -> Vec<Variant> {
        let latency = metrics.iter().any(|m| m.is_latency());
        let sfcs: Vec<Option<SfcType>> = if latency { SfcType::ALL.map(Some).to_vec() } else { vec![None] };
        let mut out = Vec::new();
        for dc in std::iter::once(None).chain(dcs.iter().copied().map(Some)) {
            for &sfc in &sfcs {
                for paraphrase in 0..self.bank.paraphrase_count(metrics, dc.is_some()) {
                    out.push(Variant { combo, paraphrase, sfc, dc });
                }
            }
        }
        out
    }

    /// Builds a corpus of exactly `target_size` records with stratified
    /// 75/12.5/12.5 splits. Every metric combination, and every SFC type, lands
    /// in every split. Output is sorted by (combination, paraphrase, SFC, DC,
    /// step) and is identical for identical inputs.
    pub fn generate(
        &self,
        trajectory: &[NetworkState],
        target_size: usize,
        seed: u64,
    ) -> Result<Vec<QueryRecord>, DatasetError> {
        let (_, n_val, n_test) = split_sizes(target_size)?;
        let first = trajectory.first().ok_or(DatasetError::EmptyTrajectory)?;
        let mut dcs: Vec<u32> = first.data_centers.iter().map(|d| d.dc_id()).collect();
        dcs.sort_unstable();

        let combos = all_combinations();
        let pools: Vec<Vec<Variant>> = combos.iter().enumerate().map(|(i, m)| self.variants(i, m, &dcs)).collect();
        let caps: Vec<usize> = pools.iter().map(Vec::len).collect();
        let quotas = water_fill(&caps, target_size).ok_or(DatasetError::InsufficientVariety {
            requested: target_size,
            available: caps.iter().sum(),
        })?;
        let infeasible = || {
            DatasetError::InfeasibleCoverage(format!(
                "{target_size} records cannot give each of the {} metric combinations a record in every split",
                combos.len()
            ))
        };
        if quotas.iter().any(|q| *q < 3) {
            return Err(infeasible());
        }
        let val = apportion(&quotas, n_val).ok_or_else(infeasible)?;
        let test = apportion(&quotas, n_test).ok_or_else(infeasible)?;
        if quotas.iter().zip(&val).zip(&test).any(|((q, v), t)| v + t >= *q) {
            return Err(infeasible());
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut plan: Vec<Planned> = Vec::with_capacity(target_size);
        let mut latency_ordinal = 0;
        for (ci, pool) in pools.iter().enumerate() {
            // Group by SFC type, shuffle inside groups, then deal round-robin
            // starting from a per-combination offset so SFC types spread over splits.
            let mut groups: BTreeMap<Option<SfcType>, Vec<Variant>> = BTreeMap::new();
            for v in pool {
                groups.entry(v.sfc).or_default().push(*v);
            }
            let mut groups: Vec<Vec<Variant>> = groups.into_values().collect();
            for g in &mut groups {
                g.shuffle(&mut rng);
            }
            let offset = if groups.len() > 1 {
                latency_ordinal += 1;
                latency_ordinal - 1
            } else {
                0
            };
            let longest = groups.iter().map(Vec::len).max().unwrap_or(0);
            let mut dealt = Vec::with_capacity(quotas[ci]);
            'deal: for r in 0..longest {
                for g in 0..groups.len() {
                    if let Some(v) = groups[(offset + g) % groups.len()].get(r) {
                        dealt.push(*v);
                        if dealt.len() == quotas[ci] {
                            break 'deal;
                        }
                    }
                }
            }
            for (k, variant) in dealt.into_iter().enumerate() {
                let split = if k < val[ci] {
                    Split::Validation
                } else if k < val[ci] + test[ci] {
                    Split::Test
                } else {
                    Split::Train
                };
                plan.push(Planned {
                    variant,
                    split,
                    traj_index: rng.gen_range(0..trajectory.len()),
                });
            }
        }

        let mut used: Vec<usize> = plan.iter().map(|p| p.traj_index).collect();
        used.sort_unstable();
        used.dedup();
        let stores: BTreeMap<usize, RelationalStore> = used
            .par_iter()
            .map(|&i| store::ingest(&trajectory[i]).map(|s| (i, s)))
            .collect::<Result<_, _>>()?;

        plan.sort_by_key(|p| {
            let v = p.variant;
            (v.combo, v.paraphrase, v.sfc.map(SfcType::index), v.dc, trajectory[p.traj_index].time_step)
        });
        let records: Vec<QueryRecord> = plan
            .par_iter()
            .map(|p| {
                let v = p.variant;
                let metrics = &combos[v.combo];
                let question = self.bank.phrase(metrics, v.sfc, v.dc, v.paraphrase)?;
                let sql = sql_for(metrics, v.sfc, v.dc)?.to_string();
                let schema_context = self.pruner.prune(&question, self.budget)?.ddl;
                let answer = sql::execute(&sql::parse(&sql)?, &stores[&p.traj_index])?.render_answer();
                Ok(QueryRecord {
                    question,
                    schema_context,
                    sql,
                    answer,
                    metrics: metrics.clone(),
                    sfc_type: v.sfc,
                    dc_id: v.dc,
                    split: p.split,
                    step: trajectory[p.traj_index].time_step,
                })
            })
            .collect::<Result<_, DatasetError>>()?;

        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if !seen.insert((&r.question, &r.schema_context)) {
                return Err(DatasetError::Duplicate(r.question.clone()));
            }
        }
        check_coverage(&records)?;
        Ok(records)
    }
}

/// Generates with the bundled template bank and keyword rules.
pub fn generate(trajectory: &[NetworkState], target_size: usize, seed: u64) -> Result<Vec<QueryRecord>, DatasetError> {
    Generator::default().generate(trajectory, target_size, seed)
}

/// Checks that every split holds every metric combination and every SFC type.
pub fn check_coverage(records: &[QueryRecord]) -> Result<(), DatasetError> {
    let combos = all_combinations();
    for split in Split::ALL {
        let in_split: Vec<&QueryRecord> = records.iter().filter(|r| r.split == split).collect();
        for c in &combos {
            if !in_split.iter().any(|r| &r.metrics == c) {
                return Err(DatasetError::InfeasibleCoverage(format!("{split} split lacks metric set {c:?}")));
            }
        }
        for s in SfcType::ALL {
            if !in_split.iter().any(|r| r.sfc_type == Some(s)) {
                return Err(DatasetError::InfeasibleCoverage(format!("{split} split lacks SFC type {s}")));
            }
        }
    }
    Ok(())
}

pub fn write_corpus<W: Write>(mut out: W, records: &[QueryRecord]) -> Result<(), DatasetError> {
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| DatasetError::Io(e.to_string()))?;
        writeln!(out, "{line}").map_err(|e| DatasetError::Io(e.to_string()))?;
    }
    out.flush().map_err(|e| DatasetError::Io(e.to_string()))
}

/// Reads a corpus; a record's id is its zero-based line index among non-blank lines.
pub fn read_corpus<R: BufRead>(input: R) -> Result<Vec<QueryRecord>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| DatasetError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| DatasetError::Corpus {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DataCenterSpec;
    use crate::sim::{run, ScenarioConfig, SfcRequestRecord, VnfInstance};
    use crate::store::Value;

    fn three_dc_config() -> ScenarioConfig {
        ScenarioConfig::with_data_centers(
            (1..=3)
                .map(|i| DataCenterSpec {
                    dc_id: i,
                    total_storage_gb: Num::from_int(200),
                    total_cpu_units: Num::from_int(64),
                })
                .collect(),
        )
    }

    #[test]
    fn sql_templates() {
        use MetricKind::*;
        assert_eq!(
            sql_for(&[IdleVnfCount], None, Some(3)).unwrap().to_string(),
            "SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle' AND dc_id = 3;"
        );
        assert_eq!(
            sql_for(&[MinE2eLatency], Some(SfcType::Cg), Some(2)).unwrap().to_string(),
            "SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 2;"
        );
        let triple = sql_for(&[IdleVnfCount, MinE2eLatency, MaxE2eLatency], Some(SfcType::Ar), None).unwrap();
        assert_eq!(
            triple.to_string(),
            "SELECT (SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle'), \
             (SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'AR'), \
             (SELECT MAX(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'AR');"
        );
        assert!(matches!(sql_for(&[MaxE2eLatency], None, None), Err(DatasetError::MissingSfcType)));
        assert!(matches!(
            sql_for(&[MaxE2eLatency, IdleVnfCount], Some(SfcType::Cg), None),
            Err(DatasetError::InvalidCombination(_))
        ));
    }

    #[test]
    fn templates_execute_on_hand_built_store() {
        let mut state = NetworkState::initial(&three_dc_config().data_centers);
        let mk = |id, dc, status| VnfInstance {
            vnf_id: id,
            vnf_type: crate::domain::VnfType::Nat,
            dc_id: dc,
            status,
            cpu_req: Num::from_int(2),
            storage_req: Num::from_int(5),
        };
        use crate::sim::{RequestStatus, VnfStatus};
        state.vnf_instances = vec![mk(1, 3, VnfStatus::Idle), mk(2, 3, VnfStatus::Idle), mk(3, 2, VnfStatus::Idle)];
        for (id, lat) in [(1u64, "80.1"), (2, "79.2"), (3, "95.0")] {
            state.sfc_requests.push(SfcRequestRecord {
                sfc_id: id,
                sfc_type: SfcType::Cg,
                dc_id: 2,
                e2e_latency_ms: lat.parse().unwrap(),
                bandwidth_mbps: Num::from_int(4),
                status: RequestStatus::Completed,
            });
        }
        let store = store::ingest(&state).unwrap();
        let run = |m: &[MetricKind], sfc, dc| {
            sql::execute(&sql_for(m, sfc, dc).unwrap(), &store).unwrap().rows[0].clone()
        };
        assert_eq!(run(&[MetricKind::IdleVnfCount], None, Some(3)), vec![Value::Int(2)]);
        assert_eq!(run(&[MetricKind::IdleVnfCount], None, None), vec![Value::Int(3)]);
        assert_eq!(
            run(&[MetricKind::MinE2eLatency], Some(SfcType::Cg), Some(2)),
            vec![Value::Num("79.2".parse().unwrap())]
        );
        assert_eq!(run(&[MetricKind::MaxE2eLatency], Some(SfcType::Cg), Some(1)), vec![Value::Null]);
        assert_eq!(
            run(&[MetricKind::AvailableStorage], None, None),
            vec![Value::Num(Num::from_int(600))]
        );
    }

    #[test]
    fn phrase_examples() {
        let bank = TemplateBank::default();
        assert_eq!(
            bank.phrase(&[MetricKind::IdleVnfCount], None, Some(3), 0).unwrap(),
            "How many idle VNFs are currently available at data center 3?"
        );
        assert_eq!(
            bank.phrase(&[MetricKind::AvailableStorage], None, Some(1), 1).unwrap(),
            "What is the available storage at DC 1?"
        );
        let a = bank.phrase(&[MetricKind::MinE2eLatency, MetricKind::AvailableCpu], Some(SfcType::Voip), Some(2), 17);
        assert_eq!(a.unwrap(), bank.phrase(&[MetricKind::MinE2eLatency, MetricKind::AvailableCpu], Some(SfcType::Voip), Some(2), 17).unwrap());
        let n = bank.paraphrase_count(&[MetricKind::IdleVnfCount], true);
        assert!(matches!(
            bank.phrase(&[MetricKind::IdleVnfCount], None, Some(3), n),
            Err(DatasetError::ParaphraseOutOfRange { .. })
        ));
    }

    #[test]
    fn every_combination_has_enough_distinct_paraphrases() {
        let bank = TemplateBank::default();
        for combo in all_combinations() {
            let sfc = combo.iter().any(|m| m.is_latency()).then_some(SfcType::Miot);
            for dc in [None, Some(4)] {
                let n = bank.paraphrase_count(&combo, dc.is_some());
                assert!(n >= MIN_PARAPHRASES);
                let texts: HashSet<String> = (0..n).map(|i| bank.phrase(&combo, sfc, dc, i).unwrap()).collect();
                assert_eq!(texts.len(), n, "{combo:?}");
            }
        }
    }

    #[test]
    fn bank_validation_catches_bad_placeholders() {
        let text = include_str!("../../data/templates.toml").replacen("at data center {dc}?", "at data center?", 1);
        assert!(matches!(TemplateBank::from_toml_str(&text), Err(DatasetError::InvalidTemplates(_))));
    }

    #[test]
    fn split_arithmetic() {
        assert_eq!(split_sizes(16568).unwrap(), (12426, 2071, 2071));
        assert_eq!(split_sizes(8).unwrap(), (6, 1, 1));
        assert!(split_sizes(12).is_err());
        assert!(split_sizes(0).is_err());
    }

    #[test]
    fn combinations_are_25_in_canonical_order() {
        let c = all_combinations();
        assert_eq!(c.len(), 25);
        assert_eq!(c.iter().filter(|x| x.len() == 2).count(), 10);
        assert!(c.iter().all(|x| x.windows(2).all(|w| w[0] < w[1])));
    }

    #[test]
    fn water_fill_and_apportion() {
        assert_eq!(water_fill(&[2, 10, 10], 12), Some(vec![2, 5, 5]));
        assert_eq!(water_fill(&[2, 10, 10], 13), Some(vec![2, 6, 5]));
        assert_eq!(water_fill(&[1, 1], 3), None);
        assert_eq!(apportion(&[10, 10, 20], 4), Some(vec![1, 1, 2]));
        assert_eq!(apportion(&[1, 1, 100], 3), Some(vec![1, 1, 1]));
        assert_eq!(apportion(&[1, 1], 1), None);
    }

    #[test]
    fn small_corpus_is_complete_and_faithful() {
        let traj = run(&three_dc_config(), 40, 7).unwrap();
        let recs = generate(&traj, 400, 11).unwrap();
        assert_eq!(recs.len(), 400);
        let count = |s| recs.iter().filter(|r| r.split == s).count();
        assert_eq!((count(Split::Train), count(Split::Validation), count(Split::Test)), (300, 50, 50));
        for r in &recs {
            let state = traj.iter().find(|s| s.time_step == r.step).unwrap();
            let store = store::ingest(state).unwrap();
            assert_eq!(sql::execute(&sql::parse(&r.sql).unwrap(), &store).unwrap().render_answer(), r.answer);
            assert_eq!(sql::normalize(&r.sql).unwrap(), r.sql);
        }
        assert_eq!(recs, generate(&traj, 400, 11).unwrap());
        assert_ne!(recs, generate(&traj, 400, 12).unwrap());
    }

    #[test]
    fn tiny_targets_are_rejected() {
        let traj = run(&three_dc_config(), 5, 1).unwrap();
        assert!(matches!(generate(&traj, 8, 0), Err(DatasetError::InfeasibleCoverage(_))));
        assert!(matches!(generate(&traj, 100, 0), Err(DatasetError::InvalidSize(100))));
        assert!(matches!(generate(&[], 200, 0), Err(DatasetError::EmptyTrajectory)));
        assert!(generate(&traj, 200, 0).is_ok());
    }

    #[test]
    fn corpus_jsonl_round_trip() {
        let traj = run(&three_dc_config(), 10, 3).unwrap();
        let recs = generate(&traj, 200, 3).unwrap();
        let mut buf = Vec::new();
        write_corpus(&mut buf, &recs).unwrap();
        let first: serde_json::Value = serde_json::from_slice(buf.split(|b| *b == b'\n').next().unwrap()).unwrap();
        let keys: Vec<&str> = first.as_object().unwrap().keys().map(String::as_str).collect();
        for k in ["question", "schema_context", "sql", "answer", "metrics", "sfc_type", "dc_id", "split", "step"] {
            assert!(keys.contains(&k), "{k}");
        }
        assert_eq!(keys.len(), 9);
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), recs);
    }
}
