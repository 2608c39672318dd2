//! Lexer, parser, renderer and executor for the single-table SQL subset used
//! by the corpus and by model predictions.

mod ast;
mod exec;
mod lexer;
mod parser;

use std::fmt::Write as _;

pub use ast::{AggArg, AggFunc, CmpOp, Literal, Predicate, Projection, Select, SqlStatement};
pub use lexer::{tokenize, tokenize_prefix, Token, TokenKind};
pub use parser::{Parser, MAX_SUBQUERIES};

use crate::store::{ColumnType, RelationalStore, Value};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SqlError {
    #[error("lexical error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("syntax error at byte {offset}: expected one of {expected:?}, found {found}")]
    Syntax {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("unsupported construct at byte {offset}: {construct}")]
    Unsupported { offset: usize, construct: String },
    #[error("unknown table {0:?}")]
    UnknownTable(String),
    #[error("table {table:?} has no column {column:?}")]
    UnknownColumn { table: String, column: String },
    #[error("cannot compare {column_type} column {column:?} with {literal}")]
    TypeMismatch {
        column: String,
        column_type: ColumnType,
        literal: String,
    },
    #[error("{func} needs a numeric column, {column:?} is text")]
    NonNumericAggregate { func: &'static str, column: String },
    #[error("numeric overflow")]
    Overflow,
}

pub fn parse(sql: &str) -> Result<SqlStatement, SqlError> {
    let tokens = tokenize(sql)?;
    Parser::new(&tokens, sql.len()).parse_statement()
}

/// Canonical text: uppercase keywords, lowercase identifiers, single spaces,
/// single-quoted literals with their case kept, trailing semicolon.
pub fn normalize(sql: &str) -> Result<String, SqlError> {
    Ok(parse(sql)?.to_string())
}

pub fn execute(stmt: &SqlStatement, store: &RelationalStore) -> Result<QueryResult, SqlError> {
    exec::execute_select(&stmt.0, store)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryResult {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

impl QueryResult {
    /// Header line plus one line per row; NULL cells render as `NULL`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(|v| v.to_string())).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    /// Answer text: the bare value for a single cell, `label = value` pairs for
    /// a single multi-column row, CSV otherwise.
    pub fn render_answer(&self) -> String {
        match (self.rows.as_slice(), self.columns.len()) {
            ([row], 1) => row[0].to_string(),
            ([row], _) => {
                let mut s = String::new();
                for (i, (c, v)) in self.columns.iter().zip(row).enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    let _ = write!(s, "{c} = {v}");
                }
                s
            }
            _ => self.to_csv().trim_end().to_string(),
        }
    }

    /// Rows as an order-insensitive bag, for execution-match comparison. Integer
    /// and rational cells holding the same number compare equal.
    pub fn sorted_rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                r.iter()
                    .map(|v| match v {
                        Value::Null => "NULL".to_string(),
                        Value::Text(t) => format!("'{t}"),
                        number => format!("#{number}"),
                    })
                    .collect()
            })
            .collect();
        rows.sort();
        rows
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::Num;
    use crate::store::{ColumnType, TableSchema};
    use proptest::prelude::*;

    fn latency_store(values: &[&str]) -> RelationalStore {
        let mut store = RelationalStore::empty_canonical();
        for (i, v) in values.iter().enumerate() {
            store
                .insert_row(
                    "sfc_requests",
                    vec![
                        Value::Int(i as i64 + 1),
                        Value::Text(if i % 2 == 0 { "CG" } else { "AR" }.into()),
                        Value::Int(1 + i as i64 % 2),
                        Value::Num(v.parse().unwrap()),
                        Value::Num(Num::from_int(4)),
                        Value::Text("accepted".into()),
                    ],
                )
                .unwrap();
        }
        store
    }

    fn run(sql: &str, store: &RelationalStore) -> QueryResult {
        execute(&parse(sql).unwrap(), store).unwrap()
    }

    #[test]
    fn parses_count_star_with_predicate() {
        let s = parse("SELECT COUNT(*) FROM vnf_instances WHERE status = 'idle';").unwrap();
        assert_eq!(
            s.0.projections,
            vec![Projection::Aggregate {
                func: AggFunc::Count,
                arg: AggArg::Star
            }]
        );
        assert_eq!(s.0.from.as_deref(), Some("vnf_instances"));
        assert_eq!(s.0.predicates.len(), 1);
    }

    #[test]
    fn parses_two_predicate_conjunction() {
        let s = parse("SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 2;").unwrap();
        assert_eq!(
            s.0.predicates,
            vec![
                Predicate {
                    column: "sfc_type".into(),
                    op: CmpOp::Eq,
                    literal: Literal::Text("CG".into())
                },
                Predicate {
                    column: "dc_id".into(),
                    op: CmpOp::Eq,
                    literal: Literal::Number(Num::from_int(2))
                },
            ]
        );
    }

    #[test]
    fn unsupported_constructs_are_named() {
        let cases = [
            ("SELECT * FROM a ORDER BY b", "ORDER BY"),
            ("SELECT * FROM a JOIN b ON a.x = b.x", "JOIN"),
            ("SELECT * FROM a, b", "JOIN"),
            ("SELECT dc_id FROM a GROUP BY dc_id", "GROUP BY"),
            ("SELECT * FROM a WHERE x = 1 OR y = 2", "OR"),
            ("DELETE FROM a", "DELETE"),
            ("SELECT COUNT(DISTINCT x) FROM a", "DISTINCT"),
            ("SELECT * FROM a LIMIT 3", "LIMIT"),
            ("SELECT * FROM a WHERE x <> 3", "<> comparison"),
        ];
        for (sql, construct) in cases {
            match parse(sql) {
                Err(SqlError::Unsupported { construct: c, .. }) => assert_eq!(c, construct, "{sql}"),
                other => panic!("{sql}: {other:?}"),
            }
        }
    }

    #[test]
    fn syntax_errors_carry_offset_and_expected() {
        match parse("SELECT COUNT(*) vnf_instances") {
            Err(SqlError::Syntax { offset, expected, found }) => {
                assert_eq!(offset, 16);
                assert!(expected.contains(&"FROM".to_string()));
                assert_eq!(found, "vnf_instances");
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("SELECT MIN(*) FROM t"), Err(SqlError::Syntax { .. })));
        assert!(matches!(parse(""), Err(SqlError::Syntax { offset: 0, .. })));
        assert!(matches!(parse("SELECT x FROM t WHERE"), Err(SqlError::Syntax { offset: 21, .. })));
        assert!(matches!(parse("garbage text"), Err(SqlError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn subquery_limits() {
        let sub = "(SELECT COUNT(*) FROM t)";
        assert!(parse(&format!("SELECT {sub}, {sub}, {sub};")).is_ok());
        assert!(matches!(
            parse(&format!("SELECT {sub}, {sub}, {sub}, {sub};")),
            Err(SqlError::Unsupported { .. })
        ));
        assert!(matches!(
            parse("SELECT (SELECT x FROM t);"),
            Err(SqlError::Unsupported { .. })
        ));
        assert!(matches!(
            parse(&format!("SELECT {sub}, x FROM t;")),
            Err(SqlError::Unsupported { .. })
        ));
        assert!(matches!(
            parse("SELECT COUNT(*), dc_id FROM t;"),
            Err(SqlError::Unsupported { .. })
        ));
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(
            normalize("select   count(*) from vnf_instances;").unwrap(),
            "SELECT COUNT(*) FROM vnf_instances;"
        );
        assert_eq!(
            normalize("SELECT min(E2E_LATENCY_MS) FROM SFC_requests where sfc_type=\"CG\" and dc_id=2").unwrap(),
            "SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG' AND dc_id = 2;"
        );
        assert_eq!(
            normalize("SELECT (select count(*) from a),(SELECT max(x) FROM b WHERE y>=1.50)").unwrap(),
            "SELECT (SELECT COUNT(*) FROM a), (SELECT MAX(x) FROM b WHERE y >= 1.5);"
        );
        assert_eq!(normalize("SELECT * FROM t WHERE s = 'it''s'").unwrap(), "SELECT * FROM t WHERE s = 'it''s';");
    }

    #[test]
    fn execute_empty_and_scan_cases() {
        let empty = RelationalStore::empty_canonical();
        assert_eq!(run("SELECT COUNT(*) FROM vnf_instances;", &empty).rows, vec![vec![Value::Int(0)]]);
        assert_eq!(run("SELECT MIN(cpu_req) FROM vnf_instances;", &empty).rows, vec![vec![Value::Null]]);
        assert_eq!(run("SELECT SUM(cpu_req) FROM vnf_instances;", &empty).rows, vec![vec![Value::Null]]);

        // brute-force: min of {80.1, 79.2, 95.0} is 79.2
        let store = latency_store(&["80.1", "79.2", "95.0"]);
        let oracle = ["80.1", "79.2", "95.0"]
            .iter()
            .map(|s| s.parse::<Num>().unwrap())
            .min()
            .unwrap();
        let r = run("SELECT MIN(e2e_latency_ms) FROM sfc_requests;", &store);
        assert_eq!(r.rows, vec![vec![Value::Num(oracle)]]);
        assert_eq!(r.render_answer(), "79.2");
        assert_eq!(r.columns, vec!["MIN(e2e_latency_ms)"]);

        let r = run("SELECT AVG(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG';", &store);
        assert_eq!(r.rows, vec![vec![Value::Num(Num::new(8755, 100))]]);
        let r = run("SELECT sfc_id, dc_id FROM sfc_requests WHERE e2e_latency_ms > 80;", &store);
        assert_eq!(r.rows, vec![vec![Value::Int(1), Value::Int(1)], vec![Value::Int(3), Value::Int(1)]]);
    }

    #[test]
    fn combined_query_equals_independent_runs() {
        let store = latency_store(&["80.1", "79.2", "95.0", "12.5"]);
        let parts = [
            "SELECT MIN(e2e_latency_ms) FROM sfc_requests WHERE sfc_type = 'CG'",
            "SELECT MAX(e2e_latency_ms) FROM sfc_requests WHERE dc_id = 2",
            "SELECT COUNT(*) FROM sfc_requests WHERE e2e_latency_ms < 90",
        ];
        let combined = format!("SELECT ({}), ({}), ({});", parts[0], parts[1], parts[2]);
        let r = run(&combined, &store);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.columns.len(), 3);
        for (i, p) in parts.iter().enumerate() {
            let single = run(p, &store);
            assert_eq!(r.rows[0][i], single.rows[0][0]);
            assert_eq!(r.columns[i], single.columns[0]);
        }
        assert_eq!(
            r.render_answer(),
            "MIN(e2e_latency_ms) = 80.1, MAX(e2e_latency_ms) = 79.2, COUNT(*) = 3"
        );
    }

    #[test]
    fn execution_errors() {
        let store = RelationalStore::empty_canonical();
        let err = |sql: &str| execute(&parse(sql).unwrap(), &store).unwrap_err();
        assert_eq!(err("SELECT COUNT(*) FROM nope"), SqlError::UnknownTable("nope".into()));
        assert!(matches!(err("SELECT MIN(nope) FROM sfc_requests"), SqlError::UnknownColumn { .. }));
        assert!(matches!(err("SELECT * FROM sfc_requests WHERE nope = 1"), SqlError::UnknownColumn { .. }));
        assert!(matches!(err("SELECT * FROM sfc_requests WHERE dc_id = 'x'"), SqlError::TypeMismatch { .. }));
        assert!(matches!(err("SELECT * FROM sfc_requests WHERE status = 3"), SqlError::TypeMismatch { .. }));
        assert!(matches!(err("SELECT SUM(status) FROM sfc_requests"), SqlError::NonNumericAggregate { .. }));
    }

    #[test]
    fn execute_does_not_touch_store() {
        let store = latency_store(&["1", "2"]);
        let before = store.clone();
        run("SELECT MAX(e2e_latency_ms) FROM sfc_requests WHERE dc_id >= 1;", &store);
        assert_eq!(store, before);
    }

    #[test]
    fn null_cells_never_match_predicates() {
        let schema = TableSchema::new("t", &[("k", ColumnType::Integer), ("x", ColumnType::Rational)], "k").unwrap();
        let mut store = RelationalStore::with_schema(vec![schema]);
        store.insert_row("t", vec![Value::Int(1), Value::Null]).unwrap();
        store.insert_row("t", vec![Value::Int(2), Value::Int(5)]).unwrap();
        assert_eq!(run("SELECT COUNT(*) FROM t WHERE x <= 10", &store).rows[0][0], Value::Int(1));
        assert_eq!(run("SELECT COUNT(x) FROM t", &store).rows[0][0], Value::Int(1));
        assert_eq!(run("SELECT MIN(x) FROM t", &store).rows[0][0], Value::Num(Num::from_int(5)));
    }

    fn arb_select() -> impl Strategy<Value = Select> {
        let ident = prop::sample::select(vec!["dc_id", "status", "vnf_type", "e2e_latency_ms"]).prop_map(String::from);
        let table = prop::sample::select(vec!["vnf_instances", "sfc_requests", "data_centers"]).prop_map(String::from);
        let literal = prop_oneof![
            (-500i64..500, 0u32..3).prop_map(|(n, e)| Literal::Number(Num::new(n, 10i64.pow(e)))),
            "[a-zA-Z0-9 '.]{0,8}".prop_map(Literal::Text),
        ];
        let op = prop::sample::select(vec![CmpOp::Eq, CmpOp::Lt, CmpOp::Gt, CmpOp::Le, CmpOp::Ge]);
        let pred = (ident.clone(), op, literal).prop_map(|(column, op, literal)| Predicate { column, op, literal });
        let agg = prop_oneof![
            Just(Projection::Aggregate { func: AggFunc::Count, arg: AggArg::Star }),
            (prop::sample::select(vec![AggFunc::Min, AggFunc::Max, AggFunc::Sum, AggFunc::Avg, AggFunc::Count]), ident.clone())
                .prop_map(|(func, c)| Projection::Aggregate { func, arg: AggArg::Column(c) }),
        ];
        let simple = (prop::collection::vec(agg, 1..3), table.clone(), prop::collection::vec(pred.clone(), 0..3))
            .prop_map(|(projections, t, predicates)| Select { projections, from: Some(t), predicates });
        let single = (prop::sample::select(vec![AggFunc::Min, AggFunc::Max, AggFunc::Count]), ident.clone(), table, prop::collection::vec(pred, 0..3))
            .prop_map(|(func, c, t, predicates)| Select {
                projections: vec![Projection::Aggregate { func, arg: AggArg::Column(c) }],
                from: Some(t),
                predicates,
            });
        prop_oneof![
            simple,
            prop::collection::vec(single, 1..=3).prop_map(|subs| Select {
                projections: subs.into_iter().map(|s| Projection::Subquery(Box::new(s))).collect(),
                from: None,
                predicates: vec![],
            }),
        ]
    }

    proptest! {
        #[test]
        fn parse_render_roundtrip(select in arb_select()) {
            let stmt = SqlStatement(select);
            let text = stmt.to_string();
            prop_assert_eq!(parse(&text).unwrap(), stmt.clone());
            prop_assert_eq!(normalize(&text).unwrap(), text);
        }

        #[test]
        fn normalize_is_idempotent(select in arb_select(), upper in any::<bool>()) {
            let text = SqlStatement(select).to_string();
            let messy = if upper { text.replace(' ', "   ").replace("SELECT", "select") } else { text.replace(", ", ",") };
            let once = normalize(&messy).unwrap();
            prop_assert_eq!(normalize(&once).unwrap(), once);
        }
    }
}
