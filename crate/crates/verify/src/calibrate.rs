//! Empirical calibration of the hidden constants in the sample-size bounds.
//!
//! For each candidate constant the sample size is overridden with
//! `ceil(C · bound)` and the accuracy suite is run; the smallest constant
//! whose success rate clears the target is the one to freeze. The seeds
//! used here are disjoint from the acceptance seeds.

use vizketch_core::hash::combine;

use crate::stats;

pub const CALIBRATION_SEED: u64 = 0xca11_b7a7e;

#[derive(Clone, Debug)]
pub struct Point {
    pub constant: f64,
    pub sample_size: u64,
    pub rate: f64,
}

/// Runs `grid` in ascending order and stops at the first constant that
/// reaches `target`.
fn sweep(grid: &[f64], target: f64, mut rate_at: impl FnMut(f64) -> (u64, f64)) -> Vec<Point> {
    let mut out = Vec::new();
    for &constant in grid {
        let (sample_size, rate) = rate_at(constant);
        out.push(Point { constant, sample_size, rate });
        if rate >= target {
            break;
        }
    }
    out
}

pub fn histogram(grid: &[f64], trials: usize) -> Vec<Point> {
    let col = stats::mixture_column(combine(CALIBRATION_SEED, 1), stats::HISTOGRAM_ROWS);
    sweep(grid, 0.97, |c| {
        let n = stats::histogram_n(c);
        let ok = stats::histogram_successes(&col, trials, CALIBRATION_SEED, Some(n));
        (n, ok as f64 / trials as f64)
    })
}

pub fn cdf(grid: &[f64], trials: usize) -> Vec<Point> {
    let col = stats::mixture_column(combine(CALIBRATION_SEED, 2), stats::HISTOGRAM_ROWS);
    sweep(grid, 0.95, |c| {
        let n = stats::cdf_n(c);
        let ok = stats::cdf_successes(&col, trials, CALIBRATION_SEED, Some(n));
        (n, ok as f64 / trials as f64)
    })
}

/// The rate is the worst over the scroll positions.
pub fn quantile(grid: &[f64], trials: usize) -> Vec<Point> {
    let parts = stats::rank_partitions(combine(CALIBRATION_SEED, 3));
    sweep(grid, 0.95, |c| {
        let n = stats::quantile_n(c);
        let ok = stats::quantile_successes(&parts, trials, CALIBRATION_SEED, Some(n));
        (n, *ok.iter().min().unwrap() as f64 / trials as f64)
    })
}
