//! Recursive-descent parser for the supported subset:
//!
//! ```text
//! statement  := select [";"]
//! select     := SELECT proj {"," proj} [FROM ident] [WHERE pred {AND pred}]
//! proj       := "*" | ident | agg "(" ("*" | ident) ")" | "(" select ")"
//! pred       := ident ("=" | "<" | ">" | "<=" | ">=") literal
//! ```
//!
//! Keywords are case-insensitive and identifiers are folded to lowercase.
//! Recognized SQL that falls outside the subset (joins, ordering, grouping,
//! DML, OR, ...) is reported as [`SqlError::Unsupported`].

use super::ast::{AggArg, AggFunc, CmpOp, Literal, Predicate, Projection, Select, SqlStatement};
use super::lexer::{Token, TokenKind};
use super::SqlError;

/// Upper bound on scalar subqueries in one select.
pub const MAX_SUBQUERIES: usize = 3;

const RESERVED: &[&str] = &["SELECT", "FROM", "WHERE", "AND"];

/// Recognized constructs outside the subset, matched on their leading keyword.
const UNSUPPORTED: &[(&str, &str)] = &[
    ("JOIN", "JOIN"),
    ("INNER", "JOIN"),
    ("LEFT", "JOIN"),
    ("RIGHT", "JOIN"),
    ("FULL", "JOIN"),
    ("CROSS", "JOIN"),
    ("NATURAL", "JOIN"),
    ("ON", "JOIN"),
    ("USING", "JOIN"),
    ("ORDER", "ORDER BY"),
    ("GROUP", "GROUP BY"),
    ("HAVING", "HAVING"),
    ("LIMIT", "LIMIT"),
    ("OFFSET", "OFFSET"),
    ("UNION", "UNION"),
    ("INTERSECT", "INTERSECT"),
    ("EXCEPT", "EXCEPT"),
    ("OR", "OR"),
    ("NOT", "NOT"),
    ("DISTINCT", "DISTINCT"),
    ("AS", "AS alias"),
    ("LIKE", "LIKE"),
    ("IN", "IN"),
    ("BETWEEN", "BETWEEN"),
    ("IS", "IS NULL"),
    ("NULL", "NULL literal"),
    ("INSERT", "INSERT"),
    ("UPDATE", "UPDATE"),
    ("DELETE", "DELETE"),
    ("CREATE", "CREATE"),
    ("DROP", "DROP"),
    ("ALTER", "ALTER"),
    ("WITH", "WITH"),
    ("CASE", "CASE"),
];

fn unsupported_keyword(word: &str) -> Option<&'static str> {
    UNSUPPORTED
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(word))
        .map(|(_, c)| *c)
}

pub struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    /// Byte offset reported for errors at end of input.
    end_offset: usize,
}

impl<'a> Parser<'a> {
    pub fn new(tokens: &'a [Token], end_offset: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            end_offset,
        }
    }

    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|t| t.offset).unwrap_or(self.end_offset)
    }

    fn syntax(&self, expected: &[&str]) -> SqlError {
        SqlError::Syntax {
            offset: self.offset(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self
                .peek()
                .map(|t| t.kind.describe())
                .unwrap_or_else(|| "end of input".into()),
        }
    }

    fn unsupported(&self, construct: &str) -> SqlError {
        SqlError::Unsupported {
            offset: self.offset(),
            construct: construct.to_string(),
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Token { kind: TokenKind::Word(w), .. }) if w.eq_ignore_ascii_case(kw))
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek().is_some_and(|t| &t.kind == kind)
    }

    /// Fails with Unsupported when the next token starts a known out-of-subset construct.
    fn reject_unsupported(&self) -> Result<(), SqlError> {
        if let Some(Token {
            kind: TokenKind::Word(w),
            ..
        }) = self.peek()
        {
            if let Some(c) = unsupported_keyword(w) {
                return Err(self.unsupported(c));
            }
        }
        Ok(())
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            self.reject_unsupported()?;
            Err(self.syntax(&[kw]))
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &[&str]) -> Result<(), SqlError> {
        if self.at(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            self.reject_unsupported()?;
            Err(self.syntax(expected))
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek() {
            Some(Token {
                kind: TokenKind::Word(w),
                ..
            }) if !RESERVED.iter().any(|r| r.eq_ignore_ascii_case(w))
                && AggFunc::from_keyword(w).is_none() =>
            {
                if let Some(c) = unsupported_keyword(w) {
                    return Err(self.unsupported(c));
                }
                self.pos += 1;
                if self.at(&TokenKind::Dot) {
                    return Err(self.unsupported("qualified name"));
                }
                Ok(w.to_ascii_lowercase())
            }
            _ => {
                self.reject_unsupported()?;
                Err(self.syntax(&[what]))
            }
        }
    }

    pub fn parse_statement(mut self) -> Result<SqlStatement, SqlError> {
        if self.peek().is_none() {
            return Err(self.syntax(&["SELECT"]));
        }
        let select = self.parse_select(false)?;
        if self.at(&TokenKind::Semicolon) {
            self.pos += 1;
        }
        if self.peek().is_some() {
            self.reject_unsupported()?;
            let expected: &[&str] = if select.predicates.is_empty() && select.from.is_some() {
                &["WHERE", ";", "end of input"]
            } else if !select.predicates.is_empty() {
                &["AND", ";", "end of input"]
            } else {
                &[",", "FROM", ";", "end of input"]
            };
            return Err(self.syntax(expected));
        }
        Ok(SqlStatement(select))
    }

    fn parse_select(&mut self, nested: bool) -> Result<Select, SqlError> {
        let start = self.offset();
        self.expect_keyword("SELECT")?;
        if self.at_keyword("DISTINCT") {
            return Err(self.unsupported("DISTINCT"));
        }
        let mut projections = vec![self.parse_projection(nested)?];
        while self.at(&TokenKind::Comma) {
            self.pos += 1;
            projections.push(self.parse_projection(nested)?);
        }

        let subqueries = projections
            .iter()
            .filter(|p| matches!(p, Projection::Subquery(_)))
            .count();
        let aggregates = projections
            .iter()
            .filter(|p| matches!(p, Projection::Aggregate { .. }))
            .count();
        if subqueries > MAX_SUBQUERIES {
            return Err(SqlError::Unsupported {
                offset: start,
                construct: format!("more than {MAX_SUBQUERIES} scalar subqueries"),
            });
        }
        if subqueries > 0 && subqueries < projections.len() {
            return Err(SqlError::Unsupported {
                offset: start,
                construct: "scalar subqueries mixed with table projections".into(),
            });
        }
        if aggregates > 0 && aggregates < projections.len() {
            return Err(SqlError::Unsupported {
                offset: start,
                construct: "aggregates mixed with plain columns (GROUP BY semantics)".into(),
            });
        }

        let from = if subqueries > 0 {
            if self.at_keyword("FROM") {
                return Err(self.unsupported("FROM after scalar subqueries"));
            }
            None
        } else {
            if self.at(&TokenKind::Comma) {
                return Err(self.syntax(&["FROM"]));
            }
            self.expect_keyword("FROM")?;
            let table = self.identifier("table name")?;
            if self.at(&TokenKind::Comma) {
                return Err(self.unsupported("JOIN"));
            }
            Some(table)
        };

        let mut predicates = Vec::new();
        if from.is_some() && self.at_keyword("WHERE") {
            self.pos += 1;
            predicates.push(self.parse_predicate()?);
            while self.at_keyword("AND") {
                self.pos += 1;
                predicates.push(self.parse_predicate()?);
            }
        }
        if nested && subqueries == 0 && aggregates != 1 {
            return Err(SqlError::Unsupported {
                offset: start,
                construct: "scalar subquery must select exactly one aggregate".into(),
            });
        }
        Ok(Select {
            projections,
            from,
            predicates,
        })
    }

    fn parse_projection(&mut self, nested: bool) -> Result<Projection, SqlError> {
        const EXPECTED: &[&str] = &["*", "column", "aggregate", "("];
        let Some(tok) = self.peek() else {
            return Err(self.syntax(EXPECTED));
        };
        match &tok.kind {
            TokenKind::Star => {
                self.pos += 1;
                Ok(Projection::Star)
            }
            TokenKind::LParen => {
                if nested {
                    return Err(self.unsupported("nested scalar subquery"));
                }
                self.pos += 1;
                if !self.at_keyword("SELECT") {
                    self.reject_unsupported()?;
                    return Err(self.syntax(&["SELECT"]));
                }
                let inner = self.parse_select(true)?;
                self.expect(TokenKind::RParen, &[")"])?;
                Ok(Projection::Subquery(Box::new(inner)))
            }
            TokenKind::Word(w) => {
                if let Some(func) = AggFunc::from_keyword(w) {
                    self.pos += 1;
                    self.expect(TokenKind::LParen, &["("])?;
                    if self.at_keyword("DISTINCT") {
                        return Err(self.unsupported("DISTINCT"));
                    }
                    let arg = if self.at(&TokenKind::Star) {
                        if func != AggFunc::Count {
                            return Err(self.syntax(&["column"]));
                        }
                        self.pos += 1;
                        AggArg::Star
                    } else {
                        let expected = if func == AggFunc::Count { "* or column" } else { "column" };
                        AggArg::Column(self.identifier(expected)?)
                    };
                    self.expect(TokenKind::RParen, &[")"])?;
                    Ok(Projection::Aggregate { func, arg })
                } else {
                    let col = self.identifier("column")?;
                    if self.at(&TokenKind::LParen) {
                        return Err(SqlError::Unsupported {
                            offset: tok.offset,
                            construct: format!("function {}", col.to_ascii_uppercase()),
                        });
                    }
                    Ok(Projection::Column(col))
                }
            }
            _ => Err(self.syntax(EXPECTED)),
        }
    }

    fn parse_predicate(&mut self) -> Result<Predicate, SqlError> {
        let column = self.identifier("column")?;
        let op = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Eq) => CmpOp::Eq,
            Some(TokenKind::Lt) => CmpOp::Lt,
            Some(TokenKind::Gt) => CmpOp::Gt,
            Some(TokenKind::Le) => CmpOp::Le,
            Some(TokenKind::Ge) => CmpOp::Ge,
            Some(TokenKind::Ne) => return Err(self.unsupported("<> comparison")),
            _ => {
                self.reject_unsupported()?;
                return Err(self.syntax(&["=", "<", ">", "<=", ">="]));
            }
        };
        self.pos += 1;
        let literal = match self.peek().map(|t| &t.kind) {
            Some(TokenKind::Number(n)) => {
                let v = n.parse().map_err(|_| SqlError::Lex {
                    offset: self.offset(),
                    message: format!("invalid number {n:?}"),
                })?;
                Literal::Number(v)
            }
            Some(TokenKind::Str(s)) => Literal::Text(s.clone()),
            Some(TokenKind::Word(_)) => {
                self.reject_unsupported()?;
                return Err(self.unsupported("column-to-column comparison"));
            }
            Some(TokenKind::LParen) => return Err(self.unsupported("subquery in predicate")),
            _ => return Err(self.syntax(&["number", "text literal"])),
        };
        self.pos += 1;
        Ok(Predicate {
            column,
            op,
            literal,
        })
    }
}
