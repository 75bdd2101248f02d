use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Classifier decision at threshold 0.5; exactly 0.5 counts as off-sync.
pub fn sync_label(score: f64) -> bool {
    score > 0.5
}

/// Class accuracies in percent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyncAccuracy {
    #[serde(rename = "In-sync pair")]
    pub in_sync: f64,
    #[serde(rename = "Off-sync pair")]
    pub off_sync: f64,
    /// Unweighted mean of the two class accuracies.
    #[serde(rename = "Combined")]
    pub combined: f64,
}

impl SyncAccuracy {
    pub fn from_class_accuracies(in_sync: f64, off_sync: f64) -> Self {
        Self { in_sync, off_sync, combined: (in_sync + off_sync) / 2.0 }
    }

    /// Scores of in-sync and off-sync test pairs.
    pub fn from_scores(in_sync: &[f64], off_sync: &[f64]) -> Result<Self> {
        if in_sync.is_empty() || off_sync.is_empty() {
            return Err(Error::Contract("sync accuracy needs in-sync and off-sync test pairs".into()));
        }
        let pct = |hits: usize, n: usize| 100.0 * hits as f64 / n as f64;
        let hits_in = in_sync.iter().filter(|&&s| sync_label(s)).count();
        let hits_off = off_sync.iter().filter(|&&s| !sync_label(s)).count();
        Ok(Self::from_class_accuracies(pct(hits_in, in_sync.len()), pct(hits_off, off_sync.len())))
    }
}
