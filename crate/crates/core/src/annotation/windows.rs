use super::{GestureSequence, Stream};
use crate::audio::{AudioFeatureSequence, FEATURE_DIMS};
use crate::error::{Error, Result};

pub const WINDOW_LEN: usize = 64;
pub const DEFAULT_OVERLAP: usize = 4;

/// Aligned audio features and gesture streams, all frame-major.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainingWindow {
    pub features: Vec<f64>,
    pub face: Vec<f64>,
    pub body: Vec<f64>,
    pub hand: Vec<f64>,
    pub subject_id: String,
    len: usize,
}

impl TrainingWindow {
    /// Cuts `[start, start + len)` out of an aligned pair. Fails if any stream
    /// has a missing frame in range.
    pub fn extract(
        features: &AudioFeatureSequence,
        gestures: &GestureSequence,
        start: usize,
        len: usize,
        subject_id: &str,
    ) -> Result<Self> {
        if features.len() != gestures.len() {
            return Err(Error::Alignment(format!(
                "{} feature frames vs {} gesture frames",
                features.len(),
                gestures.len()
            )));
        }
        if len == 0 || start + len > gestures.len() {
            return Err(Error::Alignment(format!("window {start}+{len} exceeds {} frames", gestures.len())));
        }
        let range = start..start + len;
        if gestures.missing()[range.clone()].iter().any(|m| m.any()) {
            return Err(Error::InvalidInput(format!("window at {start} has missing frames")));
        }
        let stream = |s: Stream| range.clone().flat_map(|t| gestures.row(s, t).iter().copied()).collect();
        Ok(Self {
            features: features.frames()[range.clone()].iter().flat_map(|f| f.to_array()).collect(),
            face: stream(Stream::Face),
            body: stream(Stream::Body),
            hand: stream(Stream::Hand),
            subject_id: subject_id.to_string(),
            len,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stream(&self, s: Stream) -> &[f64] {
        match s {
            Stream::Face => &self.face,
            Stream::Body => &self.body,
            Stream::Hand => &self.hand,
        }
    }

    pub fn feature_dims(&self) -> usize {
        FEATURE_DIMS
    }
}

/// Sliding 64-frame windows advancing by `64 - overlap`; windows touching a
/// missing frame are skipped.
pub fn make_training_windows(
    features: &AudioFeatureSequence,
    gestures: &GestureSequence,
    overlap: usize,
    subject_id: &str,
) -> Result<Vec<TrainingWindow>> {
    windows_of_length(features, gestures, WINDOW_LEN, overlap, subject_id)
}

pub(crate) fn windows_of_length(
    features: &AudioFeatureSequence,
    gestures: &GestureSequence,
    len: usize,
    overlap: usize,
    subject_id: &str,
) -> Result<Vec<TrainingWindow>> {
    if features.len() != gestures.len() {
        return Err(Error::Alignment(format!(
            "{} feature frames vs {} gesture frames",
            features.len(),
            gestures.len()
        )));
    }
    if !(1..=5).contains(&overlap) || overlap >= len {
        return Err(Error::InvalidParameter(format!("overlap {overlap} outside 1..=5")));
    }
    let step = len - overlap;
    let mut out = Vec::new();
    let mut start = 0;
    while start + len <= gestures.len() {
        if !gestures.missing()[start..start + len].iter().any(|m| m.any()) {
            out.push(TrainingWindow::extract(features, gestures, start, len, subject_id)?);
        }
        start += step;
    }
    Ok(out)
}
