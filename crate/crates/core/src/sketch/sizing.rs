//! Target sample sizes derived from display resolution and error probability.
//!
//! The bounds hide constant factors; the per-kind constants below were
//! calibrated empirically (see `vizketch-verify`'s calibration routine) and
//! are frozen here.

use super::request::{SketchKind, SketchRequest};

/// Histogram bars: `n = C·V²·B²·ln(1/δ)`.
pub const C_HISTOGRAM: f64 = 0.0075;
/// CDF pixels: `n = C·V²·ln(1/δ)`.
pub const C_CDF: f64 = 16.0;
/// Scroll-bar quantiles: `n = C·(2V)²·ln(1/δ)`.
pub const C_QUANTILE: f64 = 0.25;
/// Heat maps and stacked histograms share the histogram constant.
pub const C_HEATMAP: f64 = C_HISTOGRAM;
/// Bottom-k size for string bucket boundaries: `k = C·50²`.
pub const C_STRING_BUCKETS: f64 = 1.0;

fn ceil(v: f64) -> u64 {
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.ceil() as u64
    }
}

pub fn histogram_n(v: u32, b: u32, delta: f64) -> u64 {
    let (v, b) = (v as f64, b as f64);
    ceil(C_HISTOGRAM * v * v * b * b * (1.0 / delta).ln())
}

pub fn cdf_n(v: u32, delta: f64) -> u64 {
    let v = v as f64;
    ceil(C_CDF * v * v * (1.0 / delta).ln())
}

pub fn stacked_n(v: u32, bx: u32, delta: f64) -> u64 {
    let (v, bx) = (v as f64, bx as f64);
    ceil(C_HEATMAP * v * v * bx * bx * (1.0 / delta).ln())
}

pub fn heatmap_n(colors: u32, bx: u32, by: u32, delta: f64) -> u64 {
    let (c, bx, by) = (colors as f64, bx as f64, by as f64);
    ceil(C_HEATMAP * c * c * bx * bx * by * by * (1.0 / delta).ln())
}

pub fn quantile_n(v: u32, delta: f64) -> u64 {
    let two_v = 2.0 * v as f64;
    ceil(C_QUANTILE * two_v * two_v * (1.0 / delta).ln())
}

/// Sample size for frequency threshold `3n/4K`; no hidden constant.
pub fn heavy_hitters_n(k: u32, delta: f64) -> u64 {
    let k = k as f64;
    ceil(k * k * (k / delta).ln())
}

pub fn string_bucket_k() -> u32 {
    (C_STRING_BUCKETS * 50.0 * 50.0).ceil() as u32
}

/// The global target sample size for `req`, or `None` when the kind always
/// scans every row (or the request asks for a full scan).
pub fn target_sample_size(req: &SketchRequest) -> Option<u64> {
    if req.full_scan || !req.kind.may_sample() {
        return None;
    }
    if let Some(n) = req.sample_size {
        return Some(n);
    }
    let v = req.pixels.height;
    let b = req.x.as_ref().map_or(req.buckets.unwrap_or(1), |x| x.count() as u32);
    let n = match req.kind {
        SketchKind::Histogram => histogram_n(v, b, req.delta),
        SketchKind::Cdf => cdf_n(v, req.delta),
        SketchKind::Stacked => stacked_n(v, b, req.delta),
        SketchKind::Heatmap => {
            if req.log_scale {
                return None;
            }
            let bx = req.x.as_ref().map_or(req.heatmap_dims().0, |x| x.count() as u32);
            let by = req.y.as_ref().map_or(req.heatmap_dims().1, |y| y.count() as u32);
            heatmap_n(req.colors, bx, by, req.delta)
        }
        SketchKind::Trellis => {
            if req.log_scale {
                return None;
            }
            let k = req.groups.len().max(1) as u64;
            let per_group = match &req.y {
                Some(y) => heatmap_n(req.colors, b, y.count() as u32, req.delta),
                None => histogram_n(v, b, req.delta),
            };
            per_group.saturating_mul(k)
        }
        SketchKind::Quantile => quantile_n(v, req.delta),
        SketchKind::HeavyHittersSampled => heavy_hitters_n(req.top_k, req.delta),
        // Correlation is exact unless a sample size is given explicitly.
        SketchKind::Pca => return None,
        _ => return None,
    };
    Some(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn heavy_hitter_sizes() {
        assert_eq!(heavy_hitters_n(10, 0.01), 691);
        assert_eq!(heavy_hitters_n(10, 0.05), 530);
    }

    #[test]
    fn histogram_formula_collapses_to_the_constant() {
        let delta = (-1.0f64).exp();
        assert_eq!(histogram_n(1, 1, delta), C_HISTOGRAM.ceil() as u64);
    }

    #[test]
    fn quantile_formula() {
        let expected = (C_QUANTILE * 40_000.0 * 20f64.ln()).ceil() as u64;
        assert_eq!(quantile_n(100, 0.05), expected);
    }
}
