pub mod calibrate;
pub mod data;
pub mod oracle;
pub mod outcome;
pub mod stats;
pub mod system;

pub use outcome::Outcome;

/// Seed for the acceptance run; calibration uses its own.
pub const ACCEPTANCE_SEED: u64 = 0x5eed_0fac_ce97;

/// One acceptance criterion. `trials` is the repetition count for the
/// statistical suites; others ignore it.
pub struct Criterion {
    pub name: &'static str,
    /// Short name used to select the criterion.
    pub suite: &'static str,
    pub trials: Option<usize>,
    pub check: fn(u64, usize) -> Outcome,
}

const fn criterion(name: &'static str, suite: &'static str, trials: Option<usize>, check: fn(u64, usize) -> Outcome) -> Criterion {
    Criterion { name, suite, trials, check }
}

/// Every acceptance criterion, in the order they are reported.
pub fn criteria() -> Vec<Criterion> {
    vec![
        criterion("merge laws", "merge", Some(50), |s, n| stats::merge_laws(n, s)),
        criterion("histogram accuracy", "histogram", Some(200), |s, n| {
            let o = stats::histogram_accuracy(n, s);
            if o.elapsed > std::time::Duration::from_secs(300) {
                return Outcome { passed: false, detail: format!("{}, over the 300s limit", o.detail), ..o };
            }
            o
        }),
        criterion("cdf accuracy", "cdf", Some(100), |s, n| stats::cdf_accuracy(n, s)),
        criterion("quantile", "quantile", Some(100), |s, n| stats::quantile_accuracy(n, s)),
        criterion("heavy hitters sampled", "heavy", Some(100), |s, n| stats::heavy_hitters_sampled(n, s)),
        criterion("misra-gries bounds", "misra-gries", Some(100), |s, n| stats::misra_gries(n, s)),
        criterion("distinct count", "distinct", None, |s, _| stats::distinct_count(s)),
        criterion("progressive", "progressive", None, |s, _| system::progressive(s)),
        criterion("fault tolerance", "fault", None, |s, _| system::fault_tolerance(s)),
        criterion("cancellation", "cancel", None, |s, _| system::cancellation(s)),
        criterion("thread scaling", "scaling", None, |s, _| system::thread_scaling(s)),
        criterion("desk latency", "desk", None, |s, _| system::desk_latency(s)),
    ]
}

/// Runs the criteria selected by `suite` (all when `None`), printing one
/// line each as it finishes.
pub fn run(seed: u64, suite: Option<&str>, trials: Option<usize>, print: impl Fn(&Outcome)) -> Vec<Outcome> {
    criteria()
        .into_iter()
        .filter(|c| suite.is_none_or(|s| c.suite == s))
        .map(|c| {
            let o = (c.check)(seed, trials.or(c.trials).unwrap_or(1));
            print(&o);
            o
        })
        .collect()
}
