use std::ops::Range;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::column::{Column, ColumnBuilder};
use crate::error::{CoreError, Result};
use crate::expr::Expr;
use crate::membership::MembershipSet;
use crate::predicate::Predicate;
use crate::value::{Datum, ValueKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnDesc {
    pub name: String,
    pub kind: ValueKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schema(pub Vec<ColumnDesc>);

impl Schema {
    pub fn find(&self, name: &str) -> Option<&ColumnDesc> {
        self.0.iter().find(|c| c.name == name)
    }

    pub fn kind_of(&self, name: &str) -> Result<ValueKind> {
        self.find(name)
            .map(|c| c.kind)
            .ok_or_else(|| CoreError::UnknownColumn(name.to_owned()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(|c| c.name.as_str())
    }
}

/// Shared immutable columns plus the membership set of visible rows.
///
/// Derived tables (filters, added columns, row windows) share the parent's
/// column storage; only the membership set or the column list changes.
#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<Arc<Column>>,
    members: MembershipSet,
    rows: usize,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        Self::from_shared(columns.into_iter().map(Arc::new).collect())
    }

    /// A table over `columns` with every row a member.
    pub fn from_shared(columns: Vec<Arc<Column>>) -> Result<Self> {
        let rows = columns.first().map_or(0, |c| c.len());
        Self::with_rows(columns, rows)
    }

    /// Like `from_shared`, but keeps an explicit row count when there are no columns.
    pub fn with_rows(columns: Vec<Arc<Column>>, rows: usize) -> Result<Self> {
        for (i, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(CoreError::invalid(format!(
                    "column `{}` has {} rows, expected {rows}",
                    c.name(),
                    c.len()
                )));
            }
            if columns[..i].iter().any(|p| p.name() == c.name()) {
                return Err(CoreError::DuplicateColumn(c.name().to_owned()));
            }
        }
        Ok(Table {
            columns,
            members: MembershipSet::full(rows),
            rows,
        })
    }

    pub fn schema(&self) -> Schema {
        Schema(
            self.columns
                .iter()
                .map(|c| ColumnDesc {
                    name: c.name().to_owned(),
                    kind: c.kind(),
                })
                .collect(),
        )
    }

    /// Physical row count of the shared column store.
    pub fn physical_rows(&self) -> usize {
        self.rows
    }

    pub fn members(&self) -> &MembershipSet {
        &self.members
    }

    pub fn member_count(&self) -> usize {
        self.members.size()
    }

    pub fn columns(&self) -> &[Arc<Column>] {
        &self.columns
    }

    pub fn column(&self, name: &str) -> Result<&Arc<Column>> {
        self.columns
            .iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| CoreError::UnknownColumn(name.to_owned()))
    }

    pub fn has_column(&self, name: &str) -> bool {
        self.columns.iter().any(|c| c.name() == name)
    }

    /// Same columns, different membership. `members` must range over the same store.
    pub fn with_members(&self, members: MembershipSet) -> Table {
        assert_eq!(members.universe(), self.rows, "membership universe mismatch");
        Table {
            columns: self.columns.clone(),
            members,
            rows: self.rows,
        }
    }

    /// The members within a physical row window; this is how micropartitions are cut.
    pub fn restrict(&self, rows: Range<usize>) -> Table {
        self.with_members(self.members.restrict(rows))
    }

    /// Keeps only the named columns (shared, not copied).
    pub fn project(&self, names: &[&str]) -> Result<Table> {
        let columns = names
            .iter()
            .map(|n| self.column(n).cloned())
            .collect::<Result<Vec<_>>>()?;
        Ok(Table {
            columns,
            members: self.members.clone(),
            rows: self.rows,
        })
    }

    pub fn add_column(&self, column: Arc<Column>) -> Result<Table> {
        if self.has_column(column.name()) {
            return Err(CoreError::DuplicateColumn(column.name().to_owned()));
        }
        if column.len() != self.rows {
            return Err(CoreError::invalid("added column has the wrong length"));
        }
        let mut columns = self.columns.clone();
        columns.push(column);
        Ok(Table {
            columns,
            members: self.members.clone(),
            rows: self.rows,
        })
    }

    pub fn filter(&self, predicate: &Predicate) -> Result<Table> {
        let compiled = predicate.compile(self)?;
        Ok(self.with_members(self.members.filter(|row| compiled.eval(row))))
    }

    /// Computes `expr` over the member rows into a new float column. Rows
    /// outside the membership set are missing.
    pub fn compute_column(&self, expr: &Expr, name: &str) -> Result<Column> {
        if self.has_column(name) {
            return Err(CoreError::DuplicateColumn(name.to_owned()));
        }
        let compiled = expr.compile(self)?;
        let mut builder = ColumnBuilder::new(name, ValueKind::Float);
        let mut next = 0usize;
        for row in self.members.iter() {
            while next < row {
                builder.push_missing();
                next += 1;
            }
            match compiled.eval(row) {
                Some(v) => builder.push_float(v),
                None => builder.push_missing(),
            }
            next += 1;
        }
        while next < self.rows {
            builder.push_missing();
            next += 1;
        }
        Ok(builder.finish())
    }

    pub fn map_column(&self, expr: &Expr, name: &str) -> Result<Table> {
        let column = self.compute_column(expr, name)?;
        self.add_column(Arc::new(column))
    }

    /// Member rows as owned values, in row order. Intended for tests and small tables.
    pub fn rows_as_data(&self) -> Vec<Vec<Datum>> {
        self.members
            .iter()
            .map(|r| self.columns.iter().map(|c| c.datum(r)).collect())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::column::ColumnData;

    fn numbers(n: i64) -> Table {
        Table::new(vec![
            Column::new("v", ColumnData::Int((0..n).collect()), None),
            Column::new("w", ColumnData::Float((0..n).map(|i| i as f64 * 0.5).collect()), None),
        ])
        .unwrap()
    }

    #[test]
    fn filter_shares_columns() {
        let t = numbers(100);
        let f = t.filter(&Predicate::parse("v < 10").unwrap()).unwrap();
        assert_eq!(f.member_count(), 10);
        assert!(Arc::ptr_eq(t.column("v").unwrap(), f.column("v").unwrap()));
    }

    #[test]
    fn identity_and_empty_filters() {
        let t = numbers(50);
        assert_eq!(t.filter(&Predicate::True).unwrap().members(), t.members());
        assert_eq!(t.filter(&Predicate::False).unwrap().member_count(), 0);
    }

    #[test]
    fn filter_matches_exhaustive_scan() {
        let t = numbers(1000);
        let f = t.filter(&Predicate::parse("v < 10").unwrap()).unwrap();
        let brute: Vec<usize> = (0..1000).filter(|&r| r < 10).collect();
        assert_eq!(f.members().iter().collect::<Vec<_>>(), brute);
    }

    #[test]
    fn map_column_on_filtered_table_leaves_non_members_missing() {
        let t = numbers(20);
        let f = t.filter(&Predicate::parse("v >= 15").unwrap()).unwrap();
        let m = f.map_column(&Expr::parse("v + w").unwrap(), "s").unwrap();
        let s = m.column("s").unwrap();
        assert_eq!(s.numeric(3), None);
        assert_eq!(s.numeric(16), Some(16.0 + 8.0));
        assert!(m.map_column(&Expr::parse("v").unwrap(), "s").is_err());
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let err = Table::new(vec![
            Column::new("a", ColumnData::Int(vec![1, 2]), None),
            Column::new("b", ColumnData::Int(vec![1]), None),
        ]);
        assert!(err.is_err());
    }
}
