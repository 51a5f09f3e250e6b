//! Closed arithmetic expression language for derived columns:
//! numbers, column references, unary minus, `+ - * /` and parentheses.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::column::Column;
use crate::error::{CoreError, Result};
use crate::lexer::{Token, Tokens};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Expr {
    Number(f64),
    Column(String),
    Neg(Box<Expr>),
    Binary {
        op: ArithOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut toks = Tokens::new(src)?;
        let e = parse_sum(&mut toks)?;
        if !toks.at_end() {
            return Err(toks.error("trailing input"));
        }
        Ok(e)
    }

    pub fn columns(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_columns(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_columns<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            Expr::Number(_) => {}
            Expr::Column(c) => out.push(c),
            Expr::Neg(e) => e.collect_columns(out),
            Expr::Binary { left, right, .. } => {
                left.collect_columns(out);
                right.collect_columns(out);
            }
        }
    }

    /// Resolves column references against `table`; every referenced column
    /// must be numeric or a timestamp.
    pub fn compile(&self, table: &Table) -> Result<CompiledExpr> {
        Ok(CompiledExpr {
            node: compile_node(self, table)?,
        })
    }
}

fn parse_sum(t: &mut Tokens) -> Result<Expr> {
    let mut left = parse_product(t)?;
    loop {
        let op = match t.peek() {
            Some(Token::Plus) => ArithOp::Add,
            Some(Token::Minus) => ArithOp::Sub,
            _ => return Ok(left),
        };
        t.next();
        let right = parse_product(t)?;
        left = Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        };
    }
}

fn parse_product(t: &mut Tokens) -> Result<Expr> {
    let mut left = parse_unary(t)?;
    loop {
        let op = match t.peek() {
            Some(Token::Star) => ArithOp::Mul,
            Some(Token::Slash) => ArithOp::Div,
            _ => return Ok(left),
        };
        t.next();
        let right = parse_unary(t)?;
        left = Expr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        };
    }
}

fn parse_unary(t: &mut Tokens) -> Result<Expr> {
    if t.eat(&Token::Minus) {
        return Ok(Expr::Neg(Box::new(parse_unary(t)?)));
    }
    if t.eat(&Token::Plus) {
        return parse_unary(t);
    }
    parse_atom(t)
}

fn parse_atom(t: &mut Tokens) -> Result<Expr> {
    match t.next() {
        Some(Token::Number { value, .. }) => Ok(Expr::Number(value)),
        Some(Token::Ident(name)) => Ok(Expr::Column(name)),
        Some(Token::LParen) => {
            let e = parse_sum(t)?;
            t.expect(&Token::RParen, "`)`")?;
            Ok(e)
        }
        _ => Err(t.error("expected a number, column or `(`")),
    }
}

enum Node {
    Const(f64),
    Col(Arc<Column>),
    Neg(Box<Node>),
    Bin(ArithOp, Box<Node>, Box<Node>),
}

fn compile_node(e: &Expr, table: &Table) -> Result<Node> {
    Ok(match e {
        Expr::Number(v) => Node::Const(*v),
        Expr::Column(name) => {
            let col = table.column(name)?;
            if !col.kind().is_numeric() {
                return Err(CoreError::kind_mismatch(name, "numeric", col.kind()));
            }
            Node::Col(Arc::clone(col))
        }
        Expr::Neg(inner) => Node::Neg(Box::new(compile_node(inner, table)?)),
        Expr::Binary { op, left, right } => Node::Bin(
            *op,
            Box::new(compile_node(left, table)?),
            Box::new(compile_node(right, table)?),
        ),
    })
}

pub struct CompiledExpr {
    node: Node,
}

impl CompiledExpr {
    /// Missing operands, division by zero and non-finite results yield `None`.
    pub fn eval(&self, row: usize) -> Option<f64> {
        eval_node(&self.node, row).filter(|v| v.is_finite())
    }
}

fn eval_node(n: &Node, row: usize) -> Option<f64> {
    match n {
        Node::Const(v) => Some(*v),
        Node::Col(c) => c.numeric(row),
        Node::Neg(inner) => eval_node(inner, row).map(|v| -v),
        Node::Bin(op, l, r) => {
            let a = eval_node(l, row)?;
            let b = eval_node(r, row)?;
            match op {
                ArithOp::Add => Some(a + b),
                ArithOp::Sub => Some(a - b),
                ArithOp::Mul => Some(a * b),
                ArithOp::Div if b == 0.0 => None,
                ArithOp::Div => Some(a / b),
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Column(c) => write!(f, "\"{}\"", c.replace('"', "\"\"")),
            Expr::Neg(e) => write!(f, "-({e})"),
            Expr::Binary { op, left, right } => {
                let sym = match op {
                    ArithOp::Add => '+',
                    ArithOp::Sub => '-',
                    ArithOp::Mul => '*',
                    ArithOp::Div => '/',
                };
                write!(f, "({left} {sym} {right})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::ColumnData;

    fn table() -> Table {
        Table::new(vec![
            Column::new("a", ColumnData::Int(vec![1, 4, 0]), None),
            Column::new("b", ColumnData::Float(vec![2.0, 0.0, 3.0]), None),
            Column::new(
                "s",
                ColumnData::Str {
                    codes: vec![0, 0, 0],
                    dictionary: vec!["x".into()],
                },
                None,
            ),
        ])
        .unwrap()
    }

    #[test]
    fn division() {
        let e = Expr::parse("a/b").unwrap().compile(&table()).unwrap();
        assert_eq!(e.eval(0), Some(0.5));
        assert_eq!(e.eval(1), None);
    }

    #[test]
    fn precedence_and_unary_minus() {
        let e = Expr::parse("-a + b * 2 - (a - 1) / 1").unwrap();
        let c = e.compile(&table()).unwrap();
        assert_eq!(c.eval(1), Some(-4.0 + 0.0 - 3.0));
        let printed = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(printed, e);
    }

    #[test]
    fn rejects_unknown_and_string_columns() {
        assert!(matches!(
            Expr::parse("a + zz").unwrap().compile(&table()),
            Err(CoreError::UnknownColumn(_))
        ));
        assert!(matches!(
            Expr::parse("s * 2").unwrap().compile(&table()),
            Err(CoreError::KindMismatch { .. })
        ));
        assert!(Expr::parse("a +").is_err());
        assert!(Expr::parse("(a").is_err());
    }
}
