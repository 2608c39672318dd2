//! CSV import/export: header row of column names, UTF-8, comma separated,
//! `.` decimal point, the bare token `NULL` for missing values.

use std::io::{Read, Write};
use std::path::Path;

use super::{canonical_schema, ColumnType, RelationalStore, StoreError, Table, TableSchema, Value};

pub fn write_table_csv<W: Write>(table: &Table, out: W) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.schema.columns.iter().map(|(c, _)| c.as_str()))?;
    for row in &table.rows {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn parse_cell(schema: &TableSchema, col: usize, raw: &str) -> Result<Value, StoreError> {
    let (name, ty) = &schema.columns[col];
    if raw == "NULL" {
        return Ok(Value::Null);
    }
    let bad = || StoreError::Decode {
        table: schema.name.clone(),
        message: format!("column {name}: cannot read {raw:?} as {ty}"),
    };
    match ty {
        ColumnType::Integer => raw.trim().parse().map(Value::Int).map_err(|_| bad()),
        ColumnType::Rational => raw.parse().map(Value::Num).map_err(|_| bad()),
        ColumnType::Text => Ok(Value::Text(raw.to_string())),
    }
}

/// Reads rows for `schema`; the header must name exactly the schema's columns, in order.
pub fn read_table_csv<R: Read>(schema: &TableSchema, input: R) -> Result<Table, StoreError> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let expected: Vec<&str> = schema.columns.iter().map(|(c, _)| c.as_str()).collect();
    if header != expected {
        return Err(StoreError::Decode {
            table: schema.name.clone(),
            message: format!("header {header:?} does not match columns {expected:?}"),
        });
    }
    let mut table = Table::new(schema.clone());
    for record in r.records() {
        let record = record?;
        let row = record
            .iter()
            .enumerate()
            .map(|(i, raw)| parse_cell(schema, i, raw))
            .collect::<Result<Vec<_>, _>>()?;
        table.insert(row)?;
    }
    Ok(table)
}

/// Writes `<dir>/<table>.csv` for every table.
pub fn save_dir(store: &RelationalStore, dir: &Path) -> Result<(), StoreError> {
    std::fs::create_dir_all(dir)?;
    for table in store.tables() {
        let f = std::fs::File::create(dir.join(format!("{}.csv", table.schema.name)))?;
        write_table_csv(table, std::io::BufWriter::new(f))?;
    }
    Ok(())
}

/// Loads the canonical tables from `<dir>/<table>.csv`.
pub fn load_dir(dir: &Path) -> Result<RelationalStore, StoreError> {
    let mut store = RelationalStore::empty_canonical();
    for schema in canonical_schema() {
        let f = std::fs::File::open(dir.join(format!("{}.csv", schema.name)))?;
        let table = read_table_csv(&schema, std::io::BufReader::new(f))?;
        store.replace_rows(&schema.name, table.rows)?;
    }
    Ok(store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DataCenterSpec;
    use crate::num::Num;
    use crate::sim::{run, ScenarioConfig};
    use crate::store::{ingest, DATA_CENTERS, SFC_REQUESTS};

    #[test]
    fn csv_roundtrip_directory() {
        let config = ScenarioConfig::with_data_centers(vec![DataCenterSpec {
            dc_id: 1,
            total_storage_gb: Num::from_int(400),
            total_cpu_units: Num::new(3001, 10),
        }]);
        let states = run(&config, 15, 2).unwrap();
        let store = ingest(states.last().unwrap()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_dir(&store, dir.path()).unwrap();
        let text = std::fs::read_to_string(dir.path().join("data_centers.csv")).unwrap();
        assert!(text.starts_with("dc_id,total_storage_gb,available_storage_gb,total_cpu_units,available_cpu_units\n1,400,"));
        assert_eq!(load_dir(dir.path()).unwrap(), store);
    }

    #[test]
    fn null_cells_and_bad_headers() {
        let schema = canonical_schema().remove(2);
        let csv = "sfc_id,sfc_type,dc_id,e2e_latency_ms,bandwidth_mbps,status\n1,CG,2,NULL,4,accepted\n";
        let t = read_table_csv(&schema, csv.as_bytes()).unwrap();
        assert_eq!(t.rows[0][3], Value::Null);
        assert_eq!(t.schema.name, SFC_REQUESTS);

        let bad = "sfc_id,kind\n1,CG\n";
        assert!(matches!(read_table_csv(&schema, bad.as_bytes()), Err(StoreError::Decode { .. })));
        let bad_cell = "sfc_id,sfc_type,dc_id,e2e_latency_ms,bandwidth_mbps,status\nx,CG,2,1,4,accepted\n";
        assert!(read_table_csv(&schema, bad_cell.as_bytes()).is_err());
        let dc_schema = canonical_schema().remove(0);
        assert_eq!(dc_schema.name, DATA_CENTERS);
        let null_key = "dc_id,total_storage_gb,available_storage_gb,total_cpu_units,available_cpu_units\nNULL,1,1,1,1\n";
        assert!(matches!(
            read_table_csv(&dc_schema, null_key.as_bytes()),
            Err(StoreError::TypeMismatch { .. })
        ));
    }
}
