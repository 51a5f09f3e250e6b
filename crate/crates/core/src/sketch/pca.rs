//! Correlation sums for principal component analysis.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::request::SketchRequest;
use super::summary::CorrelationSums;
use super::Rows;
use crate::error::{CoreError, Result};
use crate::exact_sum::ExactSum;
use crate::table::Table;

pub(crate) fn identity(req: &SketchRequest) -> CorrelationSums {
    let m = req.columns.len();
    CorrelationSums {
        columns: req.columns.clone(),
        count: 0,
        sums: vec![ExactSum::new(); m],
        products: vec![ExactSum::new(); m * (m + 1) / 2],
    }
}

/// Rows with a missing value in any of the columns are skipped.
pub(crate) fn summarize(table: &Table, req: &SketchRequest, rows: Rows) -> Result<CorrelationSums> {
    let cols = req
        .columns
        .iter()
        .map(|c| {
            let col = table.column(c)?;
            if col.kind().is_numeric() {
                Ok(col.as_ref())
            } else {
                Err(CoreError::kind_mismatch(c, "numeric", col.kind()))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = identity(req);
    let mut values = vec![0.0; cols.len()];
    'rows: for row in rows {
        for (v, c) in values.iter_mut().zip(&cols) {
            match c.numeric(row) {
                Some(x) => *v = x,
                None => continue 'rows,
            }
        }
        out.count += 1;
        let mut p = 0;
        for i in 0..values.len() {
            out.sums[i].add(values[i]);
            for j in i..values.len() {
                out.products[p].add(values[i] * values[j]);
                p += 1;
            }
        }
    }
    Ok(out)
}

pub(crate) fn merge(a: &CorrelationSums, b: &CorrelationSums) -> Result<CorrelationSums> {
    if a.columns != b.columns {
        return Err(CoreError::invalid("correlation sums differ in columns"));
    }
    let add = |x: &[ExactSum], y: &[ExactSum]| -> Vec<ExactSum> {
        x.iter()
            .zip(y)
            .map(|(p, q)| {
                let mut s = p.clone();
                s.merge(q);
                s
            })
            .collect()
    };
    Ok(CorrelationSums {
        columns: a.columns.clone(),
        count: a.count + b.count,
        sums: add(&a.sums, &b.sums),
        products: add(&a.products, &b.products),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    pub columns: Vec<String>,
    pub correlation: Vec<Vec<f64>>,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[i]` belongs to `eigenvalues[i]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Pearson correlation matrix from the sums.
pub fn correlation(s: &CorrelationSums) -> Vec<Vec<f64>> {
    let m = s.columns.len();
    let n = s.count as f64;
    let mut idx = vec![vec![0usize; m]; m];
    let mut p = 0;
    for (i, row) in idx.iter_mut().enumerate() {
        for cell in row.iter_mut().skip(i) {
            *cell = p;
            p += 1;
        }
    }
    let product = |i: usize, j: usize| s.products[idx[i.min(j)][i.max(j)]].value();
    let centered = |i: usize, j: usize| n * product(i, j) - s.sums[i].value() * s.sums[j].value();
    (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let denom = (centered(i, i) * centered(j, j)).sqrt();
                    if i == j {
                        1.0
                    } else if denom > 0.0 {
                        (centered(i, j) / denom).clamp(-1.0, 1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Correlation matrix and its top `k` eigenpairs.
pub fn pca(s: &CorrelationSums, k: usize) -> PcaResult {
    let corr = correlation(s);
    let m = corr.len();
    let matrix = DMatrix::from_fn(m, m, |i, j| corr[i][j]);
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    order.truncate(k.min(m));
    PcaResult {
        columns: s.columns.clone(),
        correlation: corr,
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
            .collect(),
    }
}
