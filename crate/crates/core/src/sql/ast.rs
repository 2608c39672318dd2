use std::fmt;

use crate::num::Num;
use crate::store::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Min,
    Max,
    Count,
    Sum,
    Avg,
}

impl AggFunc {
    pub fn keyword(self) -> &'static str {
        match self {
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
        }
    }

    pub fn from_keyword(word: &str) -> Option<Self> {
        [AggFunc::Min, AggFunc::Max, AggFunc::Count, AggFunc::Sum, AggFunc::Avg]
            .into_iter()
            .find(|f| f.keyword().eq_ignore_ascii_case(word))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum AggArg {
    Star,
    Column(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Projection {
    /// `*`
    Star,
    Column(String),
    Aggregate { func: AggFunc, arg: AggArg },
    /// Parenthesized single-aggregate `SELECT` yielding one value.
    Subquery(Box<Select>),
}

impl Projection {
    /// Output column label.
    pub fn label(&self) -> String {
        match self {
            Projection::Star => "*".into(),
            Projection::Column(c) => c.clone(),
            Projection::Aggregate { .. } => self.to_string(),
            Projection::Subquery(s) => s.projections[0].label(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Eq,
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Literal {
    Number(Num),
    Text(String),
}

impl Literal {
    pub fn to_value(&self) -> Value {
        match self {
            Literal::Number(n) => match n.to_i64() {
                Some(i) => Value::Int(i),
                None => Value::Num(*n),
            },
            Literal::Text(s) => Value::Text(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Predicate {
    pub column: String,
    pub op: CmpOp,
    pub literal: Literal,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Select {
    pub projections: Vec<Projection>,
    /// Absent only for a select made entirely of scalar subqueries.
    pub from: Option<String>,
    /// Conjunction.
    pub predicates: Vec<Predicate>,
}

impl Select {
    pub fn is_aggregate(&self) -> bool {
        self.projections
            .iter()
            .all(|p| matches!(p, Projection::Aggregate { .. } | Projection::Subquery(_)))
    }

    pub fn subqueries(&self) -> impl Iterator<Item = &Select> {
        self.projections.iter().filter_map(|p| match p {
            Projection::Subquery(s) => Some(s.as_ref()),
            _ => None,
        })
    }

    /// Every (table, predicate) pair in the statement, subqueries included.
    pub fn all_predicates(&self) -> Vec<(Option<&str>, &Predicate)> {
        let mut out: Vec<_> = self
            .predicates
            .iter()
            .map(|p| (self.from.as_deref(), p))
            .collect();
        for s in self.subqueries() {
            out.extend(s.all_predicates());
        }
        out
    }

    /// Tables read by the statement, subqueries included, in first-use order.
    pub fn tables(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut push = |t: &str| {
            if !out.iter().any(|o| o == t) {
                out.push(t.to_string());
            }
        };
        if let Some(t) = &self.from {
            push(t);
        }
        for s in self.subqueries() {
            for t in s.tables() {
                push(&t);
            }
        }
        out
    }
}

/// A complete statement; renders with a trailing semicolon.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SqlStatement(pub Select);

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        }
    }
}

impl fmt::Display for Projection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Projection::Star => f.write_str("*"),
            Projection::Column(c) => f.write_str(c),
            Projection::Aggregate { func, arg } => match arg {
                AggArg::Star => write!(f, "{}(*)", func.keyword()),
                AggArg::Column(c) => write!(f, "{}({c})", func.keyword()),
            },
            Projection::Subquery(s) => write!(f, "({s})"),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.column, self.op.symbol(), self.literal)
    }
}

impl fmt::Display for Select {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        for (i, p) in self.projections.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{p}")?;
        }
        if let Some(t) = &self.from {
            write!(f, " FROM {t}")?;
        }
        for (i, p) in self.predicates.iter().enumerate() {
            f.write_str(if i == 0 { " WHERE " } else { " AND " })?;
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl fmt::Display for SqlStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.0)
    }
}
