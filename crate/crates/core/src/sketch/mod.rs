//! Mergeable summaries ("vizketches").
//!
//! Each kind is a `summarize` over one partition plus an associative,
//! commutative `merge` with `identity` as neutral element. Sampled kinds
//! sample every partition at the same global rate with a per-partition seed,
//! so a fixed master seed and partition layout give identical results in
//! any merge order.

pub mod codec;
mod counts;
pub mod distinct;
pub mod heavy;
mod moments;
pub mod pca;
pub mod request;
pub mod rows;
pub mod save;
pub mod sizing;
pub mod summary;

pub use request::{BucketSpec, OutputSpec, Pixels, Search, SearchMode, SketchKind, SketchRequest, SortKey};
pub use summary::*;

use crate::error::Result;
use crate::sample::{sample_members, SampleIter, SampleSpec};
use crate::table::Table;

pub(crate) type Rows<'a> = SampleIter<'a>;

/// The sampling parameters one partition uses, or `None` for a full scan.
pub fn partition_sample(table: &Table, req: &SketchRequest, partition_key: u64) -> Option<SampleSpec> {
    let target_n = sizing::target_sample_size(req)?;
    let population = req.population.unwrap_or(table.member_count() as u64);
    let spec = SampleSpec {
        seed: req.seed,
        target_n,
        population,
    };
    (!spec.is_full_scan()).then(|| spec.for_partition(partition_key))
}

fn rows<'a>(table: &'a Table, sample: Option<&SampleSpec>) -> Rows<'a> {
    let full = SampleSpec {
        seed: 0,
        target_n: 1,
        population: 0,
    };
    sample_members(table.members(), sample.unwrap_or(&full))
}

/// Summarizes one partition. `partition_key` identifies the partition
/// stably across runs; it seeds sampling and names output shards.
pub fn summarize(table: &Table, req: &SketchRequest, partition_key: u64) -> Result<Summary> {
    req.validate(&table.schema())?;
    let sample = partition_sample(table, req, partition_key);
    let it = || rows(table, sample.as_ref());
    Ok(match req.kind {
        SketchKind::Moments => Summary::Moments(moments::summarize(table, req)?),
        SketchKind::Histogram | SketchKind::HistogramExact => {
            Summary::Buckets(counts::histogram(table, req, it())?)
        }
        SketchKind::Cdf => Summary::Cdf(counts::cdf(table, req, it())?),
        SketchKind::Stacked | SketchKind::NormalizedStacked => {
            Summary::Stacked(counts::stacked(table, req, it())?)
        }
        SketchKind::Heatmap => Summary::Heatmap(counts::heatmap(table, req, it())?),
        SketchKind::Trellis => Summary::Trellis(counts::trellis(table, req, it())?),
        SketchKind::NextItems => Summary::TopK(rows::next_items(table, req, None)?),
        SketchKind::FindText => Summary::TopK(rows::next_items(table, req, req.search.as_ref())?),
        SketchKind::Quantile => {
            let seed = sample.map_or(crate::hash::combine(req.seed, partition_key), |s| s.seed);
            Summary::SampledRows(rows::sampled_rows(table, req, it(), seed, quantile_capacity(req))?)
        }
        SketchKind::HeavyHittersMg => Summary::HeavyHitters(heavy::misra_gries(table, req)?),
        SketchKind::HeavyHittersSampled => Summary::HeavyHitters(heavy::sampled(table, req, it())?),
        SketchKind::DistinctCount => Summary::Distinct(distinct::hll(table, req)?),
        SketchKind::StringQuantiles => Summary::StringQuantiles(distinct::string_quantiles(table, req)?),
        SketchKind::Pca => Summary::Correlation(pca::summarize(table, req, it())?),
        SketchKind::SaveTable => Summary::Write(save::summarize(table, req, partition_key)?),
    })
}

fn quantile_capacity(req: &SketchRequest) -> u64 {
    let n = req
        .sample_size
        .unwrap_or_else(|| sizing::quantile_n(req.pixels.height, req.delta));
    n.saturating_mul(4)
}

/// The summary of an empty partition.
pub fn identity(req: &SketchRequest) -> Result<Summary> {
    Ok(match req.kind {
        SketchKind::Moments => Summary::Moments(moments::identity(req)),
        SketchKind::Histogram
        | SketchKind::HistogramExact
        | SketchKind::Cdf
        | SketchKind::Stacked
        | SketchKind::NormalizedStacked
        | SketchKind::Heatmap
        | SketchKind::Trellis => counts::identity(req)?,
        SketchKind::NextItems | SketchKind::FindText => Summary::TopK(rows::top_k_identity(req)),
        SketchKind::Quantile => Summary::SampledRows(rows::sampled_rows_identity(req, quantile_capacity(req))),
        SketchKind::HeavyHittersMg => Summary::HeavyHitters(heavy::identity(req, false)),
        SketchKind::HeavyHittersSampled => Summary::HeavyHitters(heavy::identity(req, true)),
        SketchKind::DistinctCount => Summary::Distinct(distinct::hll_identity(req)),
        SketchKind::StringQuantiles => Summary::StringQuantiles(distinct::string_quantiles_identity(req)),
        SketchKind::Pca => Summary::Correlation(pca::identity(req)),
        SketchKind::SaveTable => Summary::Write(WriteReport::default()),
    })
}

impl Summary {
    pub fn merge(&self, other: &Summary) -> Result<Summary> {
        use Summary::*;
        Ok(match (self, other) {
            (Buckets(a), Buckets(b)) => Buckets(counts::merge_buckets(a, b)?),
            (Cdf(a), Cdf(b)) => Cdf(counts::merge_cdf(a, b)?),
            (Stacked(a), Stacked(b)) => Stacked(counts::merge_stacked(a, b)?),
            (Heatmap(a), Heatmap(b)) => Heatmap(counts::merge_heatmap(a, b)?),
            (Trellis(a), Trellis(b)) => Trellis(counts::merge_trellis(a, b)?),
            (TopK(a), TopK(b)) => TopK(rows::merge_top_k(a, b)?),
            (SampledRows(a), SampledRows(b)) => SampledRows(rows::merge_sampled(a, b)?),
            (HeavyHitters(a), HeavyHitters(b)) => HeavyHitters(heavy::merge(a, b)?),
            (Moments(a), Moments(b)) => Moments(moments::merge(a, b)?),
            (Distinct(a), Distinct(b)) => Distinct(distinct::merge_hll(a, b)?),
            (StringQuantiles(a), StringQuantiles(b)) => {
                StringQuantiles(distinct::merge_string_quantiles(a, b)?)
            }
            (Correlation(a), Correlation(b)) => Correlation(pca::merge(a, b)?),
            (Write(a), Write(b)) => Write(save::merge(a, b)),
            (a, b) => return Err(summary::mismatch(a, b)),
        })
    }
}

/// Left fold of `merge` starting from `identity(req)`.
pub fn merge_all<'a>(req: &SketchRequest, parts: impl IntoIterator<Item = &'a Summary>) -> Result<Summary> {
    let mut acc = identity(req)?;
    for p in parts {
        acc = acc.merge(p)?;
    }
    Ok(acc)
}
