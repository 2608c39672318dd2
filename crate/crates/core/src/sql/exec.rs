use std::cmp::Ordering;

use super::ast::{AggArg, AggFunc, CmpOp, Literal, Predicate, Projection, Select};
use super::{QueryResult, SqlError};
use crate::num::Num;
use crate::store::{ColumnType, RelationalStore, Table, Value};

/// Runs a select against the store. Bag semantics over a single table;
/// scalar subqueries run independently and form one output row.
pub fn execute_select(select: &Select, store: &RelationalStore) -> Result<QueryResult, SqlError> {
    let Some(from) = &select.from else {
        let mut columns = Vec::with_capacity(select.projections.len());
        let mut row = Vec::with_capacity(select.projections.len());
        for p in &select.projections {
            let Projection::Subquery(sub) = p else {
                unreachable!("parser guarantees FROM-less selects hold only subqueries")
            };
            let r = execute_select(sub, store)?;
            columns.push(p.label());
            row.push(r.rows.into_iter().next().and_then(|r| r.into_iter().next()).unwrap_or(Value::Null));
        }
        return Ok(QueryResult {
            columns,
            rows: vec![row],
        });
    };

    let table = store
        .table(from)
        .ok_or_else(|| SqlError::UnknownTable(from.clone()))?;
    let filters = select
        .predicates
        .iter()
        .map(|p| compile_predicate(table, p))
        .collect::<Result<Vec<_>, _>>()?;
    let matching: Vec<&Vec<Value>> = table
        .rows()
        .iter()
        .filter(|row| filters.iter().all(|f| f.matches(row)))
        .collect();

    if select.is_aggregate() {
        let mut columns = Vec::new();
        let mut row = Vec::new();
        for p in &select.projections {
            let Projection::Aggregate { func, arg } = p else {
                unreachable!("aggregate select")
            };
            columns.push(p.label());
            row.push(aggregate(table, *func, arg, &matching)?);
        }
        return Ok(QueryResult {
            columns,
            rows: vec![row],
        });
    }

    let mut indices = Vec::new();
    let mut columns = Vec::new();
    for p in &select.projections {
        match p {
            Projection::Star => {
                for (i, (c, _)) in table.schema.columns.iter().enumerate() {
                    indices.push(i);
                    columns.push(c.clone());
                }
            }
            Projection::Column(c) => {
                indices.push(column_index(table, c)?);
                columns.push(c.clone());
            }
            _ => unreachable!("parser rejects mixed projections"),
        }
    }
    let rows = matching
        .into_iter()
        .map(|r| indices.iter().map(|i| r[*i].clone()).collect())
        .collect();
    Ok(QueryResult { columns, rows })
}

fn column_index(table: &Table, column: &str) -> Result<usize, SqlError> {
    table
        .schema
        .column_index(column)
        .ok_or_else(|| SqlError::UnknownColumn {
            table: table.schema.name.clone(),
            column: column.to_string(),
        })
}

struct Filter {
    col: usize,
    op: CmpOp,
    value: Value,
}

impl Filter {
    fn matches(&self, row: &[Value]) -> bool {
        let Ok(Some(ord)) = row[self.col].sql_cmp(&self.value) else {
            return false;
        };
        match self.op {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

fn compile_predicate(table: &Table, p: &Predicate) -> Result<Filter, SqlError> {
    let col = column_index(table, &p.column)?;
    let ty = table.schema.columns[col].1;
    let ok = matches!(
        (ty, &p.literal),
        (ColumnType::Text, Literal::Text(_))
            | (ColumnType::Integer | ColumnType::Rational, Literal::Number(_))
    );
    if !ok {
        return Err(SqlError::TypeMismatch {
            column: p.column.clone(),
            column_type: ty,
            literal: p.literal.to_string(),
        });
    }
    Ok(Filter {
        col,
        op: p.op,
        value: p.literal.to_value(),
    })
}

fn aggregate(
    table: &Table,
    func: AggFunc,
    arg: &AggArg,
    rows: &[&Vec<Value>],
) -> Result<Value, SqlError> {
    let col = match arg {
        AggArg::Star => return Ok(Value::Int(rows.len() as i64)),
        AggArg::Column(c) => column_index(table, c)?,
    };
    let ty = table.schema.columns[col].1;
    if matches!(func, AggFunc::Sum | AggFunc::Avg) && ty == ColumnType::Text {
        return Err(SqlError::NonNumericAggregate {
            func: func.keyword(),
            column: table.schema.columns[col].0.clone(),
        });
    }
    let values = rows.iter().map(|r| &r[col]).filter(|v| !v.is_null());
    let out = match func {
        AggFunc::Count => Value::Int(values.count() as i64),
        AggFunc::Min | AggFunc::Max => {
            let want = if func == AggFunc::Min {
                Ordering::Less
            } else {
                Ordering::Greater
            };
            let mut best: Option<&Value> = None;
            for v in values {
                match best {
                    None => best = Some(v),
                    Some(b) if v.sql_cmp(b) == Ok(Some(want)) => best = Some(v),
                    _ => {}
                }
            }
            best.cloned().unwrap_or(Value::Null)
        }
        AggFunc::Sum | AggFunc::Avg => {
            let mut sum = Num::ZERO;
            let mut n = 0i64;
            for v in values {
                let x = v.as_num().expect("numeric column");
                sum = sum.checked_add(x).ok_or(SqlError::Overflow)?;
                n += 1;
            }
            match (func, n) {
                (_, 0) => Value::Null,
                (AggFunc::Avg, _) => Value::Num(sum / Num::from_int(n)),
                _ if ty == ColumnType::Integer => {
                    Value::Int(sum.to_i64().ok_or(SqlError::Overflow)?)
                }
                _ => Value::Num(sum),
            }
        }
    };
    Ok(out)
}
