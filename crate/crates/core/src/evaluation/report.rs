use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SyncAccuracy;
use crate::error::{Error, Result};

pub const METHOD_DIRECT_REGRESSION: &str = "Conv. network direct regression";
pub const METHOD_OURS: &str = "Adv. loss on audio+3D pose (ours)";
pub const METHOD_RANDOM: &str = "Random";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject: String,
    /// Method name to lip error in millimeters.
    pub lip_error_mm: BTreeMap<String, f64>,
    /// Window length label such as "64 frames" to classifier accuracy.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub sync: BTreeMap<String, SyncAccuracy>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub subjects: Vec<SubjectReport>,
    /// Mean lip error per method over the subjects that report it.
    pub aggregate: BTreeMap<String, f64>,
}

impl EvaluationReport {
    pub fn new(subjects: Vec<SubjectReport>) -> Self {
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for s in &subjects {
            for (m, v) in &s.lip_error_mm {
                let e = sums.entry(m.clone()).or_default();
                e.0 += v;
                e.1 += 1;
            }
        }
        let aggregate = sums.into_iter().map(|(m, (s, n))| (m, s / n as f64)).collect();
        Self { subjects, aggregate }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut text = self.to_json()?;
        text.push('\n');
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}
