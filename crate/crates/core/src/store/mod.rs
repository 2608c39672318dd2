//! In-memory relational store holding one network-state snapshot.
//!
//! Four tables: `data_centers`, `vnf_instances`, `sfc_requests` and the
//! static `sfc_catalog`. Column names here are the contract used by the SQL
//! generator, the schema pruner and the CSV exports.

mod csv_io;
mod value;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::{Arc, RwLock, RwLockReadGuard};

pub use csv_io::{load_dir, read_table_csv, save_dir, write_table_csv};
pub use value::{ColumnType, Incomparable, Value};

use crate::domain::{catalog, parse_sfc_type, DataCenterSpec, SfcType, VnfType};
use crate::num::Num;
use crate::sim::{
    DcState, NetworkState, RequestStatus, SfcRequestRecord, StateError, VnfInstance, VnfStatus,
};

pub const DATA_CENTERS: &str = "data_centers";
pub const VNF_INSTANCES: &str = "vnf_instances";
pub const SFC_REQUESTS: &str = "sfc_requests";
pub const SFC_CATALOG: &str = "sfc_catalog";

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("table {table:?} has no column {column:?}")]
    UnknownColumn { table: String, column: String },
    #[error("table {table:?} has no row with key {key}")]
    MissingKey { table: String, key: Value },
    #[error("duplicate primary key {key} in table {table:?}")]
    DuplicateKey { table: String, key: Value },
    #[error("{table}.{column} expects {expected}, got {value}")]
    TypeMismatch {
        table: String,
        column: String,
        expected: ColumnType,
        value: Value,
    },
    #[error("primary key {table}.{column} cannot be reassigned")]
    PrimaryKeyUpdate { table: String, column: String },
    #[error("row for {table:?} has {got} cells, schema has {expected} columns")]
    Arity {
        table: String,
        expected: usize,
        got: usize,
    },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("state rejected: {0}")]
    InvalidState(#[from] StateError),
    #[error("table {table:?}: {message}")]
    Decode { table: String, message: String },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub name: String,
    pub columns: Vec<(String, ColumnType)>,
    pub primary_key: String,
}

impl TableSchema {
    pub fn new(name: &str, columns: &[(&str, ColumnType)], primary_key: &str) -> Result<Self, StoreError> {
        let mut seen = HashSet::new();
        for (c, _) in columns {
            if !seen.insert(*c) {
                return Err(StoreError::InvalidSchema(format!("{name}: duplicate column {c}")));
            }
        }
        if !seen.contains(primary_key) {
            return Err(StoreError::InvalidSchema(format!(
                "{name}: primary key {primary_key} is not a column"
            )));
        }
        Ok(TableSchema {
            name: name.to_string(),
            columns: columns.iter().map(|(c, t)| (c.to_string(), *t)).collect(),
            primary_key: primary_key.to_string(),
        })
    }

    pub fn column_index(&self, column: &str) -> Option<usize> {
        self.columns
            .iter()
            .position(|(c, _)| c.eq_ignore_ascii_case(column))
    }

    pub fn key_index(&self) -> usize {
        self.column_index(&self.primary_key).expect("validated schema")
    }

    /// `CREATE TABLE` text used as language-model context.
    pub fn ddl(&self) -> String {
        let mut s = format!("CREATE TABLE {} (\n", self.name);
        for (i, (c, t)) in self.columns.iter().enumerate() {
            let pk = if *c == self.primary_key { " PRIMARY KEY" } else { "" };
            let comma = if i + 1 < self.columns.len() { "," } else { "" };
            let _ = writeln!(s, "  {c} {}{pk}{comma}", t.sql_name());
        }
        s.push_str(");");
        s
    }
}

/// The four-table network-state schema.
pub fn canonical_schema() -> Vec<TableSchema> {
    use ColumnType::*;
    let t = |name, cols: &[(&str, ColumnType)], pk| TableSchema::new(name, cols, pk).expect("static schema");
    vec![
        t(
            DATA_CENTERS,
            &[
                ("dc_id", Integer),
                ("total_storage_gb", Rational),
                ("available_storage_gb", Rational),
                ("total_cpu_units", Rational),
                ("available_cpu_units", Rational),
            ],
            "dc_id",
        ),
        t(
            VNF_INSTANCES,
            &[
                ("vnf_id", Integer),
                ("vnf_type", Text),
                ("dc_id", Integer),
                ("status", Text),
                ("cpu_req", Rational),
                ("storage_req", Rational),
            ],
            "vnf_id",
        ),
        t(
            SFC_REQUESTS,
            &[
                ("sfc_id", Integer),
                ("sfc_type", Text),
                ("dc_id", Integer),
                ("e2e_latency_ms", Rational),
                ("bandwidth_mbps", Rational),
                ("status", Text),
            ],
            "sfc_id",
        ),
        t(
            SFC_CATALOG,
            &[
                ("sfc_type", Text),
                ("vnf_sequence", Text),
                ("bandwidth_mbps", Text),
                ("max_e2e_ms", Rational),
                ("bundle_min", Integer),
                ("bundle_max", Integer),
            ],
            "sfc_type",
        ),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub schema: TableSchema,
    rows: Vec<Vec<Value>>,
    /// Primary-key cell, already coerced to the key column's type, to row index.
    keys: HashMap<Value, usize>,
}

impl Table {
    pub fn new(schema: TableSchema) -> Self {
        Table {
            schema,
            rows: Vec::new(),
            keys: HashMap::new(),
        }
    }

    pub fn rows(&self) -> &[Vec<Value>] {
        &self.rows
    }

    fn check_cell(&self, col: usize, value: Value) -> Result<Value, StoreError> {
        let (name, ty) = &self.schema.columns[col];
        let is_key = *name == self.schema.primary_key;
        match ty.coerce(value, !is_key) {
            Ok(v) => Ok(v),
            Err(value) => Err(StoreError::TypeMismatch {
                table: self.schema.name.clone(),
                column: name.clone(),
                expected: *ty,
                value,
            }),
        }
    }

    pub fn find_key(&self, key: &Value) -> Option<usize> {
        let ty = self.schema.columns[self.schema.key_index()].1;
        let key = ty.coerce(key.clone(), false).ok()?;
        self.keys.get(&key).copied()
    }

    pub fn insert(&mut self, row: Vec<Value>) -> Result<(), StoreError> {
        if row.len() != self.schema.columns.len() {
            return Err(StoreError::Arity {
                table: self.schema.name.clone(),
                expected: self.schema.columns.len(),
                got: row.len(),
            });
        }
        let row = row
            .into_iter()
            .enumerate()
            .map(|(i, v)| self.check_cell(i, v))
            .collect::<Result<Vec<_>, _>>()?;
        let key = &row[self.schema.key_index()];
        if self.find_key(key).is_some() {
            return Err(StoreError::DuplicateKey {
                table: self.schema.name.clone(),
                key: key.clone(),
            });
        }
        self.keys.insert(key.clone(), self.rows.len());
        self.rows.push(row);
        Ok(())
    }

    /// Values of one column, in row order.
    pub fn column(&self, name: &str) -> Option<impl Iterator<Item = &Value>> {
        let i = self.schema.column_index(name)?;
        Some(self.rows.iter().map(move |r| &r[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RelationalStore {
    tables: BTreeMap<String, Table>,
}

impl RelationalStore {
    /// Empty tables for every schema given.
    pub fn with_schema(schemas: Vec<TableSchema>) -> Self {
        RelationalStore {
            tables: schemas
                .into_iter()
                .map(|s| (s.name.clone(), Table::new(s)))
                .collect(),
        }
    }

    pub fn empty_canonical() -> Self {
        Self::with_schema(canonical_schema())
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables
            .get(name)
            .or_else(|| self.tables.values().find(|t| t.schema.name.eq_ignore_ascii_case(name)))
    }

    fn table_mut(&mut self, name: &str) -> Result<&mut Table, StoreError> {
        let key = self
            .tables
            .keys()
            .find(|k| k.eq_ignore_ascii_case(name))
            .cloned()
            .ok_or_else(|| StoreError::UnknownTable(name.to_string()))?;
        Ok(self.tables.get_mut(&key).expect("key just found"))
    }

    pub fn tables(&self) -> impl Iterator<Item = &Table> {
        self.tables.values()
    }

    pub fn insert_row(&mut self, table: &str, row: Vec<Value>) -> Result<(), StoreError> {
        self.table_mut(table)?.insert(row)
    }

    /// Replaces the full row set of a table, checking every row.
    pub fn replace_rows(&mut self, table: &str, rows: Vec<Vec<Value>>) -> Result<(), StoreError> {
        let t = self.table_mut(table)?;
        let mut fresh = Table::new(t.schema.clone());
        for r in rows {
            fresh.insert(r)?;
        }
        *t = fresh;
        Ok(())
    }

    /// Updates the row whose primary key equals `key`. Only that row changes.
    pub fn update_row(
        &mut self,
        table: &str,
        key: &Value,
        assignments: &[(&str, Value)],
    ) -> Result<(), StoreError> {
        let t = self.table_mut(table)?;
        let row_idx = t.find_key(key).ok_or_else(|| StoreError::MissingKey {
            table: t.schema.name.clone(),
            key: key.clone(),
        })?;
        let mut staged = Vec::with_capacity(assignments.len());
        for (column, value) in assignments {
            let col = t
                .schema
                .column_index(column)
                .ok_or_else(|| StoreError::UnknownColumn {
                    table: t.schema.name.clone(),
                    column: column.to_string(),
                })?;
            if col == t.schema.key_index() {
                return Err(StoreError::PrimaryKeyUpdate {
                    table: t.schema.name.clone(),
                    column: t.schema.primary_key.clone(),
                });
            }
            staged.push((col, t.check_cell(col, value.clone())?));
        }
        for (col, value) in staged {
            t.rows[row_idx][col] = value;
        }
        Ok(())
    }
}

fn int(v: impl Into<i64>) -> Value {
    Value::Int(v.into())
}

fn text(s: impl Into<String>) -> Value {
    Value::Text(s.into())
}

/// Materializes a snapshot into the canonical tables after validating it.
pub fn ingest(state: &NetworkState) -> Result<RelationalStore, StoreError> {
    state.validate()?;
    let mut store = RelationalStore::empty_canonical();
    for dc in &state.data_centers {
        store.insert_row(
            DATA_CENTERS,
            vec![
                int(dc.spec.dc_id),
                Value::Num(dc.spec.total_storage_gb),
                Value::Num(dc.available_storage_gb),
                Value::Num(dc.spec.total_cpu_units),
                Value::Num(dc.available_cpu_units),
            ],
        )?;
    }
    for v in &state.vnf_instances {
        store.insert_row(
            VNF_INSTANCES,
            vec![
                int(v.vnf_id as i64),
                text(v.vnf_type.as_str()),
                int(v.dc_id),
                text(v.status.as_str()),
                Value::Num(v.cpu_req),
                Value::Num(v.storage_req),
            ],
        )?;
    }
    for r in &state.sfc_requests {
        store.insert_row(
            SFC_REQUESTS,
            vec![
                int(r.sfc_id as i64),
                text(r.sfc_type.as_str()),
                int(r.dc_id),
                Value::Num(r.e2e_latency_ms),
                Value::Num(r.bandwidth_mbps),
                text(r.status.as_str()),
            ],
        )?;
    }
    for e in catalog() {
        store.insert_row(
            SFC_CATALOG,
            vec![
                text(e.sfc_type.as_str()),
                text(e.sequence_string()),
                text(e.bandwidth_mbps.to_string()),
                Value::Num(e.max_e2e_ms),
                int(e.bundle_range.min),
                int(e.bundle_range.max),
            ],
        )?;
    }
    Ok(store)
}

struct RowReader<'a> {
    table: &'a Table,
    row: &'a [Value],
}

impl RowReader<'_> {
    fn err(&self, message: String) -> StoreError {
        StoreError::Decode {
            table: self.table.schema.name.clone(),
            message,
        }
    }

    fn cell(&self, col: &str) -> Result<&Value, StoreError> {
        let i = self
            .table
            .schema
            .column_index(col)
            .ok_or_else(|| self.err(format!("missing column {col}")))?;
        Ok(&self.row[i])
    }

    fn int(&self, col: &str) -> Result<i64, StoreError> {
        match self.cell(col)? {
            Value::Int(v) => Ok(*v),
            other => Err(self.err(format!("{col}: expected integer, got {other}"))),
        }
    }

    fn num(&self, col: &str) -> Result<Num, StoreError> {
        match self.cell(col)? {
            Value::Num(v) => Ok(*v),
            Value::Int(v) => Ok(Num::from_int(*v)),
            other => Err(self.err(format!("{col}: expected number, got {other}"))),
        }
    }

    fn text(&self, col: &str) -> Result<&str, StoreError> {
        match self.cell(col)? {
            Value::Text(v) => Ok(v),
            other => Err(self.err(format!("{col}: expected text, got {other}"))),
        }
    }

    fn id<T: TryFrom<i64>>(&self, col: &str) -> Result<T, StoreError> {
        let v = self.int(col)?;
        T::try_from(v).map_err(|_| self.err(format!("{col}: id {v} out of range")))
    }
}

fn rows<'a>(store: &'a RelationalStore, name: &str) -> Result<impl Iterator<Item = RowReader<'a>>, StoreError> {
    let table = store
        .table(name)
        .ok_or_else(|| StoreError::UnknownTable(name.to_string()))?;
    Ok(table.rows().iter().map(move |row| RowReader { table, row }))
}

/// Reads a snapshot back out of the store. Simulator bindings are not
/// materialized, so the returned state has none.
pub fn export(store: &RelationalStore, time_step: u64) -> Result<NetworkState, StoreError> {
    let mut data_centers = Vec::new();
    for r in rows(store, DATA_CENTERS)? {
        data_centers.push(DcState {
            spec: DataCenterSpec {
                dc_id: r.id("dc_id")?,
                total_storage_gb: r.num("total_storage_gb")?,
                total_cpu_units: r.num("total_cpu_units")?,
            },
            available_storage_gb: r.num("available_storage_gb")?,
            available_cpu_units: r.num("available_cpu_units")?,
        });
    }
    let mut vnf_instances = Vec::new();
    for r in rows(store, VNF_INSTANCES)? {
        let vnf_type: VnfType = r.text("vnf_type")?.parse().map_err(|e| r.err(format!("{e}")))?;
        let status = match r.text("status")? {
            "idle" => VnfStatus::Idle,
            "active" => VnfStatus::Active,
            other => return Err(r.err(format!("unknown vnf status {other:?}"))),
        };
        vnf_instances.push(VnfInstance {
            vnf_id: r.id("vnf_id")?,
            vnf_type,
            dc_id: r.id("dc_id")?,
            status,
            cpu_req: r.num("cpu_req")?,
            storage_req: r.num("storage_req")?,
        });
    }
    let mut sfc_requests = Vec::new();
    for r in rows(store, SFC_REQUESTS)? {
        let sfc_type: SfcType = parse_sfc_type(r.text("sfc_type")?).map_err(|e| r.err(format!("{e}")))?;
        let status = match r.text("status")? {
            "accepted" => RequestStatus::Accepted,
            "rejected" => RequestStatus::Rejected,
            "completed" => RequestStatus::Completed,
            other => return Err(r.err(format!("unknown request status {other:?}"))),
        };
        sfc_requests.push(SfcRequestRecord {
            sfc_id: r.id("sfc_id")?,
            sfc_type,
            dc_id: r.id("dc_id")?,
            e2e_latency_ms: r.num("e2e_latency_ms")?,
            bandwidth_mbps: r.num("bandwidth_mbps")?,
            status,
        });
    }
    Ok(NetworkState {
        time_step,
        data_centers,
        vnf_instances,
        sfc_requests,
        bindings: Vec::new(),
    })
}

/// Single-writer, multi-reader handle. Readers hold a consistent snapshot for
/// as long as they keep the guard; writes are serialized.
#[derive(Debug, Clone, Default)]
pub struct SharedStore {
    inner: Arc<RwLock<RelationalStore>>,
}

impl SharedStore {
    pub fn new(store: RelationalStore) -> Self {
        SharedStore {
            inner: Arc::new(RwLock::new(store)),
        }
    }

    pub fn read(&self) -> RwLockReadGuard<'_, RelationalStore> {
        self.inner.read().unwrap_or_else(|e| e.into_inner())
    }

    pub fn update_row(&self, table: &str, key: &Value, assignments: &[(&str, Value)]) -> Result<(), StoreError> {
        let mut w = self.inner.write().unwrap_or_else(|e| e.into_inner());
        w.update_row(table, key, assignments)
    }

    /// Swaps in a new snapshot (replace semantics).
    pub fn replace(&self, store: RelationalStore) {
        *self.inner.write().unwrap_or_else(|e| e.into_inner()) = store;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run, ScenarioConfig};

    fn dc(id: u32) -> DataCenterSpec {
        DataCenterSpec {
            dc_id: id,
            total_storage_gb: Num::from_int(500),
            total_cpu_units: Num::from_int(200),
        }
    }

    fn idle_count(store: &RelationalStore) -> usize {
        store
            .table(VNF_INSTANCES)
            .unwrap()
            .column("status")
            .unwrap()
            .filter(|v| **v == Value::Text("idle".into()))
            .count()
    }

    fn state_with(idle: usize, active: usize) -> NetworkState {
        let mut s = NetworkState::initial(&[dc(1)]);
        for i in 0..idle + active {
            let status = if i < idle { VnfStatus::Idle } else { VnfStatus::Active };
            s.vnf_instances.push(VnfInstance {
                vnf_id: i as u64 + 1,
                vnf_type: VnfType::Fw,
                dc_id: 1,
                status,
                cpu_req: Num::from_int(2),
                storage_req: Num::from_int(5),
            });
        }
        s.data_centers[0].available_cpu_units = Num::from_int(200 - 2 * active as i64);
        s.data_centers[0].available_storage_gb = Num::from_int(500 - 5 * active as i64);
        s
    }

    #[test]
    fn canonical_schema_layout() {
        let s = canonical_schema();
        assert_eq!(s.len(), 4);
        assert_eq!(s[0].name, DATA_CENTERS);
        assert_eq!(s[0].primary_key, "dc_id");
        assert_eq!(s[1].primary_key, "vnf_id");
        assert_eq!(s[2].primary_key, "sfc_id");
        assert_eq!(s[3].primary_key, "sfc_type");
        assert!(TableSchema::new("t", &[("a", ColumnType::Text)], "b").is_err());
        assert!(TableSchema::new("t", &[("a", ColumnType::Text), ("a", ColumnType::Text)], "a").is_err());
    }

    #[test]
    fn ddl_rendering() {
        assert_eq!(
            canonical_schema()[0].ddl(),
            "CREATE TABLE data_centers (\n  dc_id INTEGER PRIMARY KEY,\n  total_storage_gb NUMERIC,\n  \
             available_storage_gb NUMERIC,\n  total_cpu_units NUMERIC,\n  available_cpu_units NUMERIC\n);"
        );
    }

    #[test]
    fn catalog_table_holds_bundle_ranges() {
        let store = ingest(&NetworkState::initial(&[dc(1)])).unwrap();
        let cat = store.table(SFC_CATALOG).unwrap();
        let voip = cat.find_key(&Value::Text("VoIP".into())).unwrap();
        let row = &cat.rows[voip];
        assert_eq!(row[4], Value::Int(100));
        assert_eq!(row[5], Value::Int(200));
        let miot = cat.find_key(&Value::Text("MIoT".into())).unwrap();
        assert_eq!(cat.rows[miot][2], Value::Text("1-50".into()));
    }

    #[test]
    fn ingest_cardinalities_and_idempotence() {
        let s = NetworkState::initial(&[dc(1), dc(2), dc(3)]);
        let store = ingest(&s).unwrap();
        assert_eq!(store.table(DATA_CENTERS).unwrap().rows.len(), 3);
        assert!(store.table(VNF_INSTANCES).unwrap().rows.is_empty());
        assert_eq!(ingest(&s).unwrap(), store);

        let store = ingest(&state_with(5, 2)).unwrap();
        assert_eq!(idle_count(&store), 5);
    }

    #[test]
    fn ingest_rejects_broken_state() {
        let mut s = state_with(0, 2);
        s.data_centers[0].available_cpu_units = Num::from_int(200);
        assert!(matches!(
            ingest(&s),
            Err(StoreError::InvalidState(StateError::Conservation { .. }))
        ));
    }

    #[test]
    fn update_row_semantics() {
        let mut store = ingest(&state_with(5, 2)).unwrap();
        let before = store.clone();
        store
            .update_row(DATA_CENTERS, &Value::Int(1), &[("available_storage_gb", Value::Int(10))])
            .unwrap();
        let dcs = store.table(DATA_CENTERS).unwrap();
        assert_eq!(dcs.rows[0][2], Value::Num(Num::from_int(10)));
        assert_eq!(dcs.rows[0][0..2], before.table(DATA_CENTERS).unwrap().rows[0][0..2]);
        assert_eq!(store.table(VNF_INSTANCES), before.table(VNF_INSTANCES));

        assert!(matches!(
            store.update_row(DATA_CENTERS, &Value::Int(99), &[("available_storage_gb", Value::Int(1))]),
            Err(StoreError::MissingKey { .. })
        ));
        assert!(matches!(
            store.update_row("nope", &Value::Int(1), &[]),
            Err(StoreError::UnknownTable(_))
        ));
        assert!(matches!(
            store.update_row(DATA_CENTERS, &Value::Int(1), &[("dc_id", Value::Int(2))]),
            Err(StoreError::PrimaryKeyUpdate { .. })
        ));
        assert!(matches!(
            store.update_row(DATA_CENTERS, &Value::Int(1), &[("total_cpu_units", Value::Text("x".into()))]),
            Err(StoreError::TypeMismatch { .. })
        ));

        let idle_before = idle_count(&store);
        store
            .update_row(VNF_INSTANCES, &Value::Int(1), &[("status", Value::Text("active".into()))])
            .unwrap();
        assert_eq!(idle_count(&store), idle_before - 1);
    }

    #[test]
    fn export_inverts_ingest() {
        let config = ScenarioConfig::with_data_centers(vec![dc(1), dc(2), dc(3)]);
        for s in run(&config, 25, 11).unwrap() {
            let store = ingest(&s).unwrap();
            let back = export(&store, s.time_step).unwrap();
            assert_eq!(back, NetworkState { bindings: Vec::new(), ..s });
        }
    }

    #[test]
    fn shared_store_serializes_writes() {
        let shared = SharedStore::new(ingest(&state_with(3, 0)).unwrap());
        let snapshot = shared.read().clone();
        shared
            .update_row(VNF_INSTANCES, &Value::Int(2), &[("status", Value::Text("active".into()))])
            .unwrap();
        assert_eq!(idle_count(&snapshot), 3);
        assert_eq!(idle_count(&shared.read()), 2);
    }
}
