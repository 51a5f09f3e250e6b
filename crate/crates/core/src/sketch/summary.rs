use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::exact_sum::ExactSum;
use crate::value::Datum;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketCounts {
    pub counts: Vec<u64>,
    /// Non-missing values that were sampled, in range or not.
    pub sampled_n: u64,
    /// Member rows of the summarized partitions, before sampling.
    pub population: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CdfCounts {
    /// Sampled values per horizontal pixel interval.
    pub counts: Vec<u64>,
    pub sampled_n: u64,
    pub population: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackedCounts {
    pub coarse: Vec<u64>,
    /// Row-major `coarse.len() × by` matrix.
    pub fine: Vec<u64>,
    pub by: u32,
    pub sampled_n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapCounts {
    pub bx: u32,
    pub by: u32,
    /// Row-major `bx × by` matrix: cell `(i, j)` is at `i * by + j`.
    pub cells: Vec<u64>,
    pub sampled_n: u64,
}

impl HeatmapCounts {
    pub fn cell(&self, i: usize, j: usize) -> u64 {
        self.cells[i * self.by as usize + j]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum TrellisInner {
    Histogram(BucketCounts),
    Heatmap(HeatmapCounts),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrellisCounts {
    pub groups: Vec<TrellisInner>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSnapshot {
    pub values: Vec<Datum>,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopKRows {
    /// Projected column names: the sort columns first, then the rest.
    pub columns: Vec<String>,
    /// Direction per projected column.
    pub ascending: Vec<bool>,
    pub k: u32,
    pub rows: Vec<RowSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledRows {
    pub columns: Vec<String>,
    pub ascending: Vec<bool>,
    /// `(priority, values)` sorted by priority; at most `capacity` entries.
    pub items: Vec<(u64, Vec<Datum>)>,
    pub capacity: u64,
    pub sampled_n: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavyHitters {
    /// Sorted by value.
    pub entries: Vec<(Datum, u64)>,
    pub n_processed: u64,
    pub k: u32,
    pub sampled: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentsSummary {
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub count: u64,
    pub missing: u64,
    /// `sums[i]` is the sum of `x^(i + 1)`.
    pub sums: Vec<ExactSum>,
}

impl MomentsSummary {
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sums.first().map_or(f64::NAN, |s| s.value() / self.count as f64))
    }

    /// Member rows seen, missing or not.
    pub fn rows(&self) -> u64 {
        self.count + self.missing
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistinctRegisters {
    pub precision: u8,
    pub registers: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StringQuantiles {
    /// `(hash, string)` for the `k` distinct strings with smallest hash, sorted by hash.
    pub sample: Vec<(u64, String)>,
    pub k: u32,
    pub min: Option<String>,
    pub max: Option<String>,
    pub rows: u64,
    pub missing: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSums {
    pub columns: Vec<String>,
    pub count: u64,
    pub sums: Vec<ExactSum>,
    /// Upper triangle of `Σ x_i x_j`, row-major including the diagonal.
    pub products: Vec<ExactSum>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WriteReport {
    pub rows_written: u64,
    /// Sorted.
    pub errors: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Summary {
    Buckets(BucketCounts),
    Cdf(CdfCounts),
    Stacked(StackedCounts),
    Heatmap(HeatmapCounts),
    Trellis(TrellisCounts),
    TopK(TopKRows),
    SampledRows(SampledRows),
    HeavyHitters(HeavyHitters),
    Moments(MomentsSummary),
    Distinct(DistinctRegisters),
    StringQuantiles(StringQuantiles),
    Correlation(CorrelationSums),
    Write(WriteReport),
}

impl Summary {
    pub fn variant_name(&self) -> &'static str {
        match self {
            Summary::Buckets(_) => "buckets",
            Summary::Cdf(_) => "cdf",
            Summary::Stacked(_) => "stacked",
            Summary::Heatmap(_) => "heatmap",
            Summary::Trellis(_) => "trellis",
            Summary::TopK(_) => "top_k",
            Summary::SampledRows(_) => "sampled_rows",
            Summary::HeavyHitters(_) => "heavy_hitters",
            Summary::Moments(_) => "moments",
            Summary::Distinct(_) => "distinct",
            Summary::StringQuantiles(_) => "string_quantiles",
            Summary::Correlation(_) => "correlation",
            Summary::Write(_) => "write",
        }
    }

    /// Element-wise additive counts, for progress checks. `None` for
    /// summaries that are not plain counters.
    pub fn additive_counts(&self) -> Option<Vec<u64>> {
        match self {
            Summary::Buckets(b) => Some(b.counts.clone()),
            Summary::Cdf(c) => Some(c.counts.clone()),
            Summary::Stacked(s) => Some(s.coarse.iter().chain(&s.fine).copied().collect()),
            Summary::Heatmap(h) => Some(h.cells.clone()),
            Summary::Trellis(t) => Some(
                t.groups
                    .iter()
                    .flat_map(|g| match g {
                        TrellisInner::Histogram(b) => b.counts.clone(),
                        TrellisInner::Heatmap(h) => h.cells.clone(),
                    })
                    .collect(),
            ),
            _ => None,
        }
    }
}

pub(crate) fn mismatch(a: &Summary, b: &Summary) -> CoreError {
    CoreError::SummaryMismatch(a.variant_name(), b.variant_name())
}

pub(crate) fn add_vectors(a: &[u64], b: &[u64]) -> Result<Vec<u64>> {
    if a.len() != b.len() {
        return Err(CoreError::invalid(format!(
            "cannot merge count vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter().zip(b).map(|(x, y)| x + y).collect())
}
