use std::cmp::Ordering;
use std::fmt;

use crate::num::Num;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Integer,
    Rational,
    Text,
}

impl ColumnType {
    pub fn sql_name(self) -> &'static str {
        match self {
            ColumnType::Integer => "INTEGER",
            ColumnType::Rational => "NUMERIC",
            ColumnType::Text => "TEXT",
        }
    }

    /// Canonicalizes a cell for this column, or hands the value back if it
    /// does not fit. Integers are widened into rational columns; NULL is
    /// accepted only when `nullable`.
    pub fn coerce(self, value: Value, nullable: bool) -> Result<Value, Value> {
        match (self, value) {
            (_, Value::Null) if nullable => Ok(Value::Null),
            (ColumnType::Integer, v @ Value::Int(_)) => Ok(v),
            (ColumnType::Integer, Value::Num(n)) if n.is_integer() => match n.to_i64() {
                Some(i) => Ok(Value::Int(i)),
                None => Err(Value::Num(n)),
            },
            (ColumnType::Rational, Value::Int(i)) => Ok(Value::Num(Num::from_int(i))),
            (ColumnType::Rational, v @ Value::Num(_)) => Ok(v),
            (ColumnType::Text, v @ Value::Text(_)) => Ok(v),
            (_, v) => Err(v),
        }
    }
}

impl fmt::Display for ColumnType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColumnType::Integer => "integer",
            ColumnType::Rational => "rational",
            ColumnType::Text => "text",
        })
    }
}

/// A number was compared with text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Incomparable;

/// One cell value.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Value {
    Null,
    Int(i64),
    Num(Num),
    Text(String),
}

impl Value {
    pub fn is_null(&self) -> bool {
        matches!(self, Value::Null)
    }

    pub fn as_num(&self) -> Option<Num> {
        match self {
            Value::Int(i) => Some(Num::from_int(*i)),
            Value::Num(n) => Some(*n),
            _ => None,
        }
    }

    /// SQL comparison: numbers compare exactly across integer/rational, text
    /// lexicographically. `None` for NULL operands; `Err` for number-vs-text.
    pub fn sql_cmp(&self, other: &Value) -> Result<Option<Ordering>, Incomparable> {
        match (self, other) {
            (Value::Null, _) | (_, Value::Null) => Ok(None),
            (Value::Text(a), Value::Text(b)) => Ok(Some(a.cmp(b))),
            (Value::Text(_), _) | (_, Value::Text(_)) => Err(Incomparable),
            (a, b) => Ok(Some(a.as_num().unwrap().cmp(&b.as_num().unwrap()))),
        }
    }

    /// Equality used for key lookup: numeric values compare by value.
    pub fn same_value(&self, other: &Value) -> bool {
        matches!(self.sql_cmp(other), Ok(Some(Ordering::Equal)))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Null => f.write_str("NULL"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Num(n) => write!(f, "{n}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}
