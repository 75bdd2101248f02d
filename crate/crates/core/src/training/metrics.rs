use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const METRICS_HEADER: &str = "iteration,l_face,l_body,l_hand,l_reg,d_loss,g_loss,wall_ms";

/// Loss terms of one training iteration. Adversarial terms are absent when
/// the adversarial objective is disabled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepMetrics {
    pub iteration: u64,
    pub l_face: f64,
    pub l_body: f64,
    pub l_hand: f64,
    pub l_reg: f64,
    pub d_loss: Option<f64>,
    pub g_loss: Option<f64>,
    pub wall_ms: u64,
}

impl StepMetrics {
    pub fn is_finite(&self) -> bool {
        [self.l_face, self.l_body, self.l_hand, self.l_reg].iter().all(|v| v.is_finite())
            && self.d_loss.is_none_or(f64::is_finite)
            && self.g_loss.is_none_or(f64::is_finite)
    }

    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{}",
            self.iteration,
            self.l_face,
            self.l_body,
            self.l_hand,
            self.l_reg,
            opt(self.d_loss),
            opt(self.g_loss),
            self.wall_ms
        )
    }
}

pub fn write_metrics_csv(path: impl AsRef<Path>, rows: &[StepMetrics]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
