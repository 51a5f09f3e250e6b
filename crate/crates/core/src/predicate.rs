//! Row predicates used to derive filtered tables.
//!
//! Text syntax: comparisons `col <op> literal` with `== != < <= > >=`,
//! `col is [not] missing`, `and`/`or`/`not`, `true`/`false` and parentheses.
//! String literals use single quotes; column names may be double-quoted.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::lexer::{Token, Tokens};
use crate::table::Table;
use crate::value::{parse_timestamp, Datum, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, ord: Ordering) -> bool {
        match self {
            CmpOp::Eq => ord == Ordering::Equal,
            CmpOp::Ne => ord != Ordering::Equal,
            CmpOp::Lt => ord == Ordering::Less,
            CmpOp::Le => ord != Ordering::Greater,
            CmpOp::Gt => ord == Ordering::Greater,
            CmpOp::Ge => ord != Ordering::Less,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Predicate {
    True,
    False,
    Compare { column: String, op: CmpOp, value: Datum },
    IsMissing { column: String },
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn parse(src: &str) -> Result<Predicate> {
        let mut t = Tokens::new(src)?;
        let p = parse_or(&mut t)?;
        if !t.at_end() {
            return Err(t.error("trailing input"));
        }
        Ok(p)
    }

    /// `lo <= column < hi`, the shape produced by zooming into a chart range.
    pub fn range(column: &str, lo: Datum, hi: Datum) -> Predicate {
        Predicate::And(vec![
            Predicate::Compare {
                column: column.to_owned(),
                op: CmpOp::Ge,
                value: lo,
            },
            Predicate::Compare {
                column: column.to_owned(),
                op: CmpOp::Lt,
                value: hi,
            },
        ])
    }

    pub fn compile(&self, table: &Table) -> Result<CompiledPredicate> {
        Ok(CompiledPredicate {
            node: compile(self, table)?,
        })
    }
}

fn parse_or(t: &mut Tokens) -> Result<Predicate> {
    let mut parts = vec![parse_and(t)?];
    while t.eat(&Token::Or) {
        parts.push(parse_and(t)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Predicate::Or(parts)
    })
}

fn parse_and(t: &mut Tokens) -> Result<Predicate> {
    let mut parts = vec![parse_not(t)?];
    while t.eat(&Token::And) {
        parts.push(parse_not(t)?);
    }
    Ok(if parts.len() == 1 {
        parts.pop().expect("one part")
    } else {
        Predicate::And(parts)
    })
}

fn parse_not(t: &mut Tokens) -> Result<Predicate> {
    if t.eat(&Token::Not) {
        return Ok(Predicate::Not(Box::new(parse_not(t)?)));
    }
    match t.next() {
        Some(Token::True) => Ok(Predicate::True),
        Some(Token::False) => Ok(Predicate::False),
        Some(Token::LParen) => {
            let p = parse_or(t)?;
            t.expect(&Token::RParen, "`)`")?;
            Ok(p)
        }
        Some(Token::Ident(column)) => {
            if t.eat(&Token::Is) {
                let negated = t.eat(&Token::Not);
                t.expect(&Token::Missing, "`missing`")?;
                let p = Predicate::IsMissing { column };
                return Ok(if negated { Predicate::Not(Box::new(p)) } else { p });
            }
            let op = match t.next() {
                Some(Token::Eq) => CmpOp::Eq,
                Some(Token::Ne) => CmpOp::Ne,
                Some(Token::Lt) => CmpOp::Lt,
                Some(Token::Le) => CmpOp::Le,
                Some(Token::Gt) => CmpOp::Gt,
                Some(Token::Ge) => CmpOp::Ge,
                _ => return Err(t.error("expected a comparison operator")),
            };
            let negative = t.eat(&Token::Minus);
            let value = match t.next() {
                Some(Token::Number { value, integral }) => {
                    let v = if negative { -value } else { value };
                    if integral && v.abs() < 9.0e15 {
                        Datum::Int(v as i64)
                    } else {
                        Datum::Float(v)
                    }
                }
                Some(Token::Str(s)) if !negative => Datum::Str(s),
                _ => return Err(t.error("expected a literal")),
            };
            Ok(Predicate::Compare { column, op, value })
        }
        _ => Err(t.error("expected a predicate")),
    }
}

enum Node {
    Const(bool),
    Missing(Arc<Column>),
    Int(Arc<Column>, CmpOp, i64),
    Float(Arc<Column>, CmpOp, f64),
    /// String comparison resolved to a dictionary code interval: a row
    /// satisfies the predicate iff `lo <= code < hi` (xor `negate`).
    Codes {
        column: Arc<Column>,
        lo: u32,
        hi: u32,
        negate: bool,
    },
    Not(Box<Node>),
    And(Vec<Node>),
    Or(Vec<Node>),
}

fn compile(p: &Predicate, table: &Table) -> Result<Node> {
    Ok(match p {
        Predicate::True => Node::Const(true),
        Predicate::False => Node::Const(false),
        Predicate::IsMissing { column } => Node::Missing(Arc::clone(table.column(column)?)),
        Predicate::Not(inner) => Node::Not(Box::new(compile(inner, table)?)),
        Predicate::And(ps) => Node::And(ps.iter().map(|p| compile(p, table)).collect::<Result<_>>()?),
        Predicate::Or(ps) => Node::Or(ps.iter().map(|p| compile(p, table)).collect::<Result<_>>()?),
        Predicate::Compare { column, op, value } => {
            let col = Arc::clone(table.column(column)?);
            let kind = col.kind();
            match (kind, value) {
                (ValueKind::Int, Datum::Int(v)) => Node::Int(col, *op, *v),
                (ValueKind::Int | ValueKind::Float, Datum::Int(_) | Datum::Float(_)) => {
                    Node::Float(col, *op, value.as_f64().expect("numeric literal"))
                }
                (ValueKind::Timestamp, Datum::Timestamp(v) | Datum::Int(v)) => Node::Int(col, *op, *v),
                (ValueKind::Timestamp, Datum::Str(s)) => match parse_timestamp(s) {
                    Some(ms) => Node::Int(col, *op, ms),
                    None => {
                        return Err(CoreError::invalid(format!("`{s}` is not a timestamp")));
                    }
                },
                (ValueKind::Str, Datum::Str(s)) => string_codes(col, *op, s),
                _ => return Err(CoreError::kind_mismatch(column, &format!("{value:?}"), kind)),
            }
        }
    })
}

fn string_codes(column: Arc<Column>, op: CmpOp, s: &str) -> Node {
    let dict = column.dictionary().expect("string column");
    let below = dict.partition_point(|d| d.as_str() < s) as u32;
    let upto = dict.partition_point(|d| d.as_str() <= s) as u32;
    let n = dict.len() as u32;
    let (lo, hi, negate) = match op {
        CmpOp::Eq => (below, upto, false),
        CmpOp::Ne => (below, upto, true),
        CmpOp::Lt => (0, below, false),
        CmpOp::Le => (0, upto, false),
        CmpOp::Gt => (upto, n, false),
        CmpOp::Ge => (below, n, false),
    };
    Node::Codes {
        column,
        lo,
        hi,
        negate,
    }
}

/// A predicate resolved against one table's columns.
pub struct CompiledPredicate {
    node: Node,
}

impl CompiledPredicate {
    /// Comparisons against missing cells are false.
    pub fn eval(&self, row: usize) -> bool {
        eval(&self.node, row)
    }
}

fn eval(n: &Node, row: usize) -> bool {
    match n {
        Node::Const(b) => *b,
        Node::Missing(c) => c.is_missing(row),
        Node::Int(c, op, v) => match c.value(row) {
            crate::value::Value::Int(x) | crate::value::Value::Timestamp(x) => op.holds(x.cmp(v)),
            _ => false,
        },
        Node::Float(c, op, v) => c.numeric(row).is_some_and(|x| op.holds(x.total_cmp(v))),
        Node::Codes {
            column,
            lo,
            hi,
            negate,
        } => column
            .code(row)
            .is_some_and(|code| (*lo <= code && code < *hi) != *negate),
        Node::Not(inner) => !eval(inner, row),
        Node::And(ns) => ns.iter().all(|n| eval(n, row)),
        Node::Or(ns) => ns.iter().any(|n| eval(n, row)),
    }
}
