use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Per-function outcome signature derived from wins and the gap spread.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureLabel {
    MachinePrecision,
    NearComplete,
    Partial,
    TightNearMiss,
    DeterministicNearMiss,
    HighVarianceBasinSearch,
}

impl FailureLabel {
    pub const ALL: [Self; 6] = [
        Self::MachinePrecision,
        Self::NearComplete,
        Self::Partial,
        Self::TightNearMiss,
        Self::DeterministicNearMiss,
        Self::HighVarianceBasinSearch,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::MachinePrecision => "machine_precision",
            Self::NearComplete => "near_complete",
            Self::Partial => "partial",
            Self::TightNearMiss => "tight_near_miss",
            Self::DeterministicNearMiss => "deterministic_near_miss",
            Self::HighVarianceBasinSearch => "high_variance_basin_search",
        }
    }
}

impl fmt::Display for FailureLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FailureLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown failure label {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierThresholds {
    /// A winless function whose gap std is below this is deterministic.
    pub deterministic_std: f64,
    /// A winless function whose coefficient of variation is below this is a
    /// tight near-miss.
    pub tight_cv: f64,
}

impl Default for ClassifierThresholds {
    fn default() -> Self {
        Self {
            deterministic_std: 1e-9,
            tight_cv: 0.1,
        }
    }
}

/// Labels a function from its win count over `runs` and its gap mean and
/// standard deviation. All wins is machine precision, one miss is near
/// complete, any win is partial; winless functions split on the spread.
pub fn classify_failure(wins: usize, runs: usize, mean_gap: f64, std_gap: f64, t: &ClassifierThresholds) -> FailureLabel {
    if wins >= runs {
        FailureLabel::MachinePrecision
    } else if wins + 1 >= runs {
        FailureLabel::NearComplete
    } else if wins >= 1 {
        FailureLabel::Partial
    } else if std_gap < t.deterministic_std {
        FailureLabel::DeterministicNearMiss
    } else if std_gap / mean_gap < t.tight_cv {
        FailureLabel::TightNearMiss
    } else {
        FailureLabel::HighVarianceBasinSearch
    }
}

pub fn aggregate_wins(wins: impl IntoIterator<Item = usize>) -> usize {
    wins.into_iter().sum()
}
