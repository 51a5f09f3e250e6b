use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::io::FileFormat;
use crate::table::Schema;
use crate::value::{Datum, ValueKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SketchKind {
    Moments,
    Cdf,
    Histogram,
    HistogramExact,
    Stacked,
    NormalizedStacked,
    Heatmap,
    Trellis,
    NextItems,
    Quantile,
    FindText,
    HeavyHittersMg,
    HeavyHittersSampled,
    DistinctCount,
    StringQuantiles,
    Pca,
    SaveTable,
}

impl SketchKind {
    pub const ALL: [SketchKind; 17] = [
        SketchKind::Moments,
        SketchKind::Cdf,
        SketchKind::Histogram,
        SketchKind::HistogramExact,
        SketchKind::Stacked,
        SketchKind::NormalizedStacked,
        SketchKind::Heatmap,
        SketchKind::Trellis,
        SketchKind::NextItems,
        SketchKind::Quantile,
        SketchKind::FindText,
        SketchKind::HeavyHittersMg,
        SketchKind::HeavyHittersSampled,
        SketchKind::DistinctCount,
        SketchKind::StringQuantiles,
        SketchKind::Pca,
        SketchKind::SaveTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Moments => "moments",
            SketchKind::Cdf => "cdf",
            SketchKind::Histogram => "histogram",
            SketchKind::HistogramExact => "histogram_exact",
            SketchKind::Stacked => "stacked",
            SketchKind::NormalizedStacked => "normalized_stacked",
            SketchKind::Heatmap => "heatmap",
            SketchKind::Trellis => "trellis",
            SketchKind::NextItems => "next_items",
            SketchKind::Quantile => "quantile",
            SketchKind::FindText => "find_text",
            SketchKind::HeavyHittersMg => "heavy_hitters_mg",
            SketchKind::HeavyHittersSampled => "heavy_hitters_sampled",
            SketchKind::DistinctCount => "distinct_count",
            SketchKind::StringQuantiles => "string_quantiles",
            SketchKind::Pca => "pca",
            SketchKind::SaveTable => "save_table",
        }
    }

    /// Kinds whose summary depends on the sampling seed.
    pub fn may_sample(self) -> bool {
        matches!(
            self,
            SketchKind::Cdf
                | SketchKind::Histogram
                | SketchKind::Stacked
                | SketchKind::Heatmap
                | SketchKind::Trellis
                | SketchKind::Quantile
                | SketchKind::HeavyHittersSampled
                | SketchKind::Pca
        )
    }

    /// Kinds that need the data range or population from a preparation round.
    pub fn needs_preparation(self) -> bool {
        matches!(
            self,
            SketchKind::Cdf
                | SketchKind::Histogram
                | SketchKind::HistogramExact
                | SketchKind::Stacked
                | SketchKind::NormalizedStacked
                | SketchKind::Heatmap
                | SketchKind::Trellis
                | SketchKind::Quantile
                | SketchKind::HeavyHittersSampled
        )
    }
}

impl std::fmt::Display for SketchKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SketchKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        SketchKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CoreError::invalid(format!("unknown sketch kind `{s}`")))
    }
}

/// Screen area a chart occupies: `width` is H, `height` is V.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pixels {
    pub width: u32,
    pub height: u32,
}

impl Default for Pixels {
    fn default() -> Self {
        Pixels {
            width: 200,
            height: 100,
        }
    }
}

/// Bucket boundaries along one axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BucketSpec {
    /// `count` equal-width buckets over `[min, max)`; a value equal to `max`
    /// lands in the last bucket.
    Numeric { min: f64, max: f64, count: u32 },
    /// Bucket `i` holds strings in `[boundaries[i], boundaries[i + 1])`;
    /// the last bucket is open above.
    Strings { boundaries: Vec<String> },
}

impl BucketSpec {
    pub fn count(&self) -> usize {
        match self {
            BucketSpec::Numeric { count, .. } => *count as usize,
            BucketSpec::Strings { boundaries } => boundaries.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BucketSpec::Numeric { min, max, count } => {
                if !(min.is_finite() && max.is_finite()) || min > max {
                    return Err(CoreError::invalid(format!("invalid range [{min}, {max})")));
                }
                if *count == 0 {
                    return Err(CoreError::invalid("bucket count must be at least 1"));
                }
            }
            BucketSpec::Strings { boundaries } => {
                if boundaries.is_empty() {
                    return Err(CoreError::invalid("string buckets need at least one boundary"));
                }
                if boundaries.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(CoreError::invalid("string bucket boundaries must increase"));
                }
            }
        }
        Ok(())
    }

    /// Bucket index of a numeric value.
    #[inline]
    pub fn index_f64(&self, v: f64) -> Option<usize> {
        match self {
            BucketSpec::Numeric { min, max, count } => {
                if v < *min || v > *max {
                    return None;
                }
                let n = *count as usize;
                if max == min {
                    return Some(0);
                }
                let i = ((v - min) / (max - min) * n as f64) as usize;
                Some(i.min(n - 1))
            }
            BucketSpec::Strings { .. } => None,
        }
    }

    #[inline]
    pub fn index_str(&self, s: &str) -> Option<usize> {
        match self {
            BucketSpec::Strings { boundaries } => {
                let i = boundaries.partition_point(|b| b.as_str() <= s);
                i.checked_sub(1)
            }
            BucketSpec::Numeric { .. } => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, BucketSpec::Numeric { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SortKey {
    pub column: String,
    pub ascending: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMode {
    Exact,
    Substring,
    Regex,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Search {
    pub text: String,
    pub mode: SearchMode,
    pub case_sensitive: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: String,
    pub format: FileFormat,
}

/// Everything a leaf needs to summarize one partition.
///
/// Fields not used by a kind are ignored by it. `x` and `y` carry the
/// bucket layout filled in by the preparation round; `population` is the
/// member-row count of the whole dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SketchRequest {
    pub kind: SketchKind,
    pub columns: Vec<String>,
    pub x: Option<BucketSpec>,
    pub y: Option<BucketSpec>,
    pub pixels: Pixels,
    pub buckets: Option<u32>,
    pub buckets_y: Option<u32>,
    pub colors: u32,
    /// Trellis group values, one inner chart per value.
    pub groups: Vec<Datum>,
    pub delta: f64,
    pub top_k: u32,
    pub moments: u32,
    pub sort_order: Vec<SortKey>,
    pub search: Option<Search>,
    pub start_row: Option<Vec<Datum>>,
    pub scroll_position: u32,
    pub seed: u64,
    pub population: Option<u64>,
    pub log_scale: bool,
    pub full_scan: bool,
    pub sample_size: Option<u64>,
    pub output: Option<OutputSpec>,
    pub precision: u8,
}

impl Default for SketchRequest {
    fn default() -> Self {
        SketchRequest {
            kind: SketchKind::Moments,
            columns: Vec::new(),
            x: None,
            y: None,
            pixels: Pixels::default(),
            buckets: None,
            buckets_y: None,
            colors: 20,
            groups: Vec::new(),
            delta: 0.05,
            top_k: 10,
            moments: 2,
            sort_order: Vec::new(),
            search: None,
            start_row: None,
            scroll_position: 0,
            seed: 0,
            population: None,
            log_scale: false,
            full_scan: false,
            sample_size: None,
            output: None,
            precision: 14,
        }
    }
}

/// Heat map cells are this many pixels on a side.
pub const HEATMAP_CELL_PIXELS: u32 = 3;
/// Most buckets a string histogram shows.
pub const MAX_STRING_BUCKETS: usize = 50;
/// Most subdivisions a stacked histogram colors.
pub const MAX_STACK_COLORS: u32 = 20;

impl SketchRequest {
    pub fn new(kind: SketchKind, columns: &[&str]) -> Self {
        SketchRequest {
            kind,
            columns: columns.iter().map(|c| (*c).to_owned()).collect(),
            ..SketchRequest::default()
        }
    }

    pub fn column(&self, i: usize) -> Result<&str> {
        self.columns
            .get(i)
            .map(String::as_str)
            .ok_or_else(|| CoreError::invalid(format!("{} needs at least {} column(s)", self.kind, i + 1)))
    }

    pub fn x_spec(&self) -> Result<&BucketSpec> {
        self.x
            .as_ref()
            .ok_or_else(|| CoreError::invalid(format!("{} needs an x range", self.kind)))
    }

    pub fn y_spec(&self) -> Result<&BucketSpec> {
        self.y
            .as_ref()
            .ok_or_else(|| CoreError::invalid(format!("{} needs a y range", self.kind)))
    }

    /// Heat map grid size: explicit buckets, or one cell per 3×3 pixels.
    pub fn heatmap_dims(&self) -> (u32, u32) {
        let bx = self
            .buckets
            .unwrap_or((self.pixels.width / HEATMAP_CELL_PIXELS).max(1));
        let by = self
            .buckets_y
            .unwrap_or((self.pixels.height / HEATMAP_CELL_PIXELS).max(1));
        (bx, by)
    }

    /// Checks parameters and column names against `schema`.
    pub fn validate(&self, schema: &Schema) -> Result<()> {
        if self.pixels.width == 0 || self.pixels.height == 0 {
            return Err(CoreError::invalid("pixel dimensions must be at least 1"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(CoreError::invalid("delta must lie in (0, 1)"));
        }
        for c in &self.columns {
            schema.kind_of(c)?;
        }
        for k in &self.sort_order {
            schema.kind_of(&k.column)?;
        }
        if let Some(x) = &self.x {
            x.validate()?;
        }
        if let Some(y) = &self.y {
            y.validate()?;
        }
        let numeric = |i: usize| -> Result<()> {
            let name = self.column(i)?;
            let kind = schema.kind_of(name)?;
            if kind.is_numeric() {
                Ok(())
            } else {
                Err(CoreError::kind_mismatch(name, "numeric", kind))
            }
        };
        match self.kind {
            SketchKind::Moments | SketchKind::Cdf => numeric(0)?,
            SketchKind::Pca => {
                if self.columns.len() < 2 {
                    return Err(CoreError::invalid("pca needs at least two columns"));
                }
                for i in 0..self.columns.len() {
                    numeric(i)?;
                }
            }
            SketchKind::Stacked | SketchKind::NormalizedStacked => {
                self.column(1)?;
                if let Some(BucketSpec::Strings { boundaries }) = &self.y {
                    if boundaries.len() > MAX_STACK_COLORS as usize {
                        return Err(CoreError::invalid(format!(
                            "stacked histograms show at most {MAX_STACK_COLORS} subdivisions"
                        )));
                    }
                }
                if let Some(BucketSpec::Numeric { count, .. }) = &self.y {
                    if *count > MAX_STACK_COLORS {
                        return Err(CoreError::invalid(format!(
                            "stacked histograms show at most {MAX_STACK_COLORS} subdivisions"
                        )));
                    }
                }
            }
            SketchKind::Heatmap => {
                self.column(1)?;
            }
            SketchKind::Trellis => {
                self.column(1)?;
                if self.groups.is_empty() {
                    return Err(CoreError::invalid("trellis needs at least one group value"));
                }
            }
            SketchKind::StringQuantiles => {
                let name = self.column(0)?;
                let kind = schema.kind_of(name)?;
                if kind != ValueKind::Str {
                    return Err(CoreError::kind_mismatch(name, "str", kind));
                }
            }
            SketchKind::NextItems | SketchKind::Quantile | SketchKind::FindText => {
                if self.sort_order.is_empty() && self.columns.is_empty() {
                    return Err(CoreError::invalid("tabular views need a sort order or columns"));
                }
                if self.kind == SketchKind::FindText && self.search.is_none() {
                    return Err(CoreError::invalid("find_text needs search criteria"));
                }
            }
            SketchKind::HeavyHittersMg | SketchKind::HeavyHittersSampled => {
                self.column(0)?;
                if self.top_k == 0 {
                    return Err(CoreError::invalid("K must be at least 1"));
                }
            }
            SketchKind::DistinctCount => {
                self.column(0)?;
                if !(4..=18).contains(&self.precision) {
                    return Err(CoreError::invalid("precision must be between 4 and 18"));
                }
            }
            SketchKind::Histogram | SketchKind::HistogramExact => {
                self.column(0)?;
            }
            SketchKind::SaveTable => {
                if self.output.is_none() {
                    return Err(CoreError::invalid("save_table needs an output path"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_buckets_close_the_last_one() {
        let b = BucketSpec::Numeric { min: 0.0, max: 10.0, count: 2 };
        assert_eq!(b.index_f64(0.0), Some(0));
        assert_eq!(b.index_f64(4.999), Some(0));
        assert_eq!(b.index_f64(5.0), Some(1));
        assert_eq!(b.index_f64(10.0), Some(1));
        assert_eq!(b.index_f64(10.5), None);
        assert_eq!(b.index_f64(-0.1), None);
    }

    #[test]
    fn string_buckets_are_half_open() {
        let b = BucketSpec::Strings { boundaries: vec!["b".into(), "d".into()] };
        assert_eq!(b.index_str("a"), None);
        assert_eq!(b.index_str("b"), Some(0));
        assert_eq!(b.index_str("cz"), Some(0));
        assert_eq!(b.index_str("d"), Some(1));
        assert_eq!(b.index_str("zzz"), Some(1));
    }

    #[test]
    fn kind_names_round_trip() {
        for k in SketchKind::ALL {
            assert_eq!(k.name().parse::<SketchKind>().unwrap(), k);
            let json = serde_json::to_string(&k).unwrap();
            assert_eq!(json, format!("\"{}\"", k.name()));
        }
    }

    #[test]
    fn request_defaults_fill_missing_fields() {
        let r: SketchRequest = serde_json::from_str(r#"{"kind":"histogram","columns":["a"]}"#).unwrap();
        assert_eq!(r.kind, SketchKind::Histogram);
        assert_eq!(r.delta, 0.05);
        assert_eq!(r.pixels, Pixels::default());
    }
}
