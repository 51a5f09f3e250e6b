use std::fmt;
use std::time::Duration;

use serde::Serialize;

/// The verdict on one acceptance criterion.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub criterion: &'static str,
    pub passed: bool,
    /// What was measured, in a form a person can check against the threshold.
    pub detail: String,
    #[serde(rename = "seconds", serialize_with = "seconds")]
    pub elapsed: Duration,
}

fn seconds<S: serde::Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(d.as_secs_f64())
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<22} {} ({:.1}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}
