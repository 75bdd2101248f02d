//! Lip keypoint error, the random-pairing baseline and sync accuracy
//! reporting.

mod lips;
mod report;
mod sync;

pub use lips::{lip_error, lip_vertices, random_baseline, LipBlendshapeBasis, DEFAULT_LIP_VERTICES};
pub use report::{EvaluationReport, SubjectReport, METHOD_DIRECT_REGRESSION, METHOD_OURS, METHOD_RANDOM};
pub use sync::{sync_label, SyncAccuracy};
