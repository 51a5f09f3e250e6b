//! Columnar tables and mergeable visualization sketches.

pub mod bitmap;
pub mod column;
pub mod exact_sum;
pub mod error;
pub mod expr;
pub mod hash;
pub mod io;
mod lexer;
pub mod membership;
pub mod predicate;
pub mod sample;
pub mod sketch;
pub mod table;
pub mod value;

pub use column::{Column, ColumnBuilder, ColumnData};
pub use error::{CoreError, Result};
pub use expr::Expr;
pub use membership::MembershipSet;
pub use predicate::Predicate;
pub use table::{ColumnDesc, Schema, Table};
pub use value::{Datum, Value, ValueKind};
pub use sample::SampleSpec;
pub use sketch::{identity, merge_all, summarize, SketchKind, SketchRequest, Summary};
