use std::ops::Range;

use super::GestureSequence;
use crate::error::{Error, Result};

pub const DEFAULT_CONFIDENCE_WINDOW: usize = 15;
pub const MIN_SEGMENT_FRAMES: usize = 64;

/// Frame ranges whose every `window`-long span has mean confidence of at least
/// `threshold`. Ranges are ordered, disjoint and at least `min_len` long.
pub fn confidence_segments(
    confidence: &[f64],
    threshold: f64,
    window: usize,
    min_len: usize,
) -> Result<Vec<Range<usize>>> {
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::InvalidParameter(format!("threshold {threshold} outside [0, 1]")));
    }
    if window == 0 {
        return Err(Error::InvalidParameter("confidence window must be at least 1 frame".into()));
    }
    let t = confidence.len();
    let w = window.min(t);
    if w == 0 {
        return Ok(Vec::new());
    }
    let good = |s: usize| confidence[s..s + w].iter().sum::<f64>() / w as f64 >= threshold;

    let mut out: Vec<Range<usize>> = Vec::new();
    let mut s = 0;
    while s + w <= t {
        if !good(s) {
            s += 1;
            continue;
        }
        let first = s;
        while s + 1 + w <= t && good(s + 1) {
            s += 1;
        }
        let start = out.last().map_or(first, |r| first.max(r.end));
        let end = s + w;
        if end - start >= min_len.max(w) {
            out.push(start..end);
        }
        s += 1;
    }
    Ok(out)
}

/// Splits `seq` into the segments kept by [`confidence_segments`] with the
/// 64-frame minimum length.
pub fn confidence_filter(seq: &GestureSequence, threshold: f64, window: usize) -> Result<Vec<GestureSequence>> {
    confidence_segments(seq.confidence(), threshold, window, MIN_SEGMENT_FRAMES)?
        .into_iter()
        .map(|r| seq.slice(r.start, r.len()))
        .collect()
}
