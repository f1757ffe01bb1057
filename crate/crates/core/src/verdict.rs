use serde::Serialize;

/// Outcome of a Monte Carlo or deterministic check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// The hypothesis needed for the check did not hold on the sample.
    Inconclusive,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    /// Pass only if every part passes; any failure wins over inconclusive.
    pub fn all(parts: impl IntoIterator<Item = Verdict>) -> Self {
        let mut out = Verdict::Pass;
        for v in parts {
            match v {
                Verdict::Fail => return Verdict::Fail,
                Verdict::Inconclusive => out = Verdict::Inconclusive,
                Verdict::Pass => {}
            }
        }
        out
    }
}

/// Slack multiplier on standard errors for Monte Carlo inequalities.
pub const SE_SLACK: f64 = 3.0;
