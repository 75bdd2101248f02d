//! Gesture annotation streams: loading, cleaning, smoothing, windowing and
//! a synthetic corpus generator for desk-scale runs.

mod filter;
mod gaps;
mod manifest;
mod smooth;
mod synthetic;
mod types;
mod windows;

pub use filter::{confidence_filter, confidence_segments, DEFAULT_CONFIDENCE_WINDOW, MIN_SEGMENT_FRAMES};
pub use gaps::{fill_gaps_cubic, NaturalSpline, DEFAULT_MAX_GAP, SPLINE_SUPPORT};
pub use manifest::{load_sequences, write_corpus, LabeledSequence, Manifest, ManifestEntry};
pub use smooth::{gaussian_kernel, gaussian_smooth, smooth_body_and_hand, DEFAULT_SIGMA};
pub use synthetic::{generate_synthetic_corpus, SyntheticMapping, SYNTHETIC_DRIVERS};
pub use types::{BodyParams, FaceParams, GestureSequence, HandParams, MissingMask, Stream};
pub use windows::{make_training_windows, TrainingWindow, DEFAULT_OVERLAP, WINDOW_LEN};

pub const FACE_DIMS: usize = 64;
pub const BODY_DIMS: usize = 42;
pub const HAND_DIMS: usize = 126;
pub const BODY_KEYPOINT_DIMS: usize = 39;

/// Frame-major `[frames][dims]` to channel-major `[dims][frames]`.
pub fn to_channel_major(rows: &[f64], frames: usize, dims: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows.len()];
    for t in 0..frames {
        for c in 0..dims {
            out[c * frames + t] = rows[t * dims + c];
        }
    }
    out
}

/// Inverse of [`to_channel_major`].
pub fn to_frame_major(channels: &[f64], frames: usize, dims: usize) -> Vec<f64> {
    let mut out = vec![0.0; channels.len()];
    for c in 0..dims {
        for t in 0..frames {
            out[t * dims + c] = channels[c * frames + t];
        }
    }
    out
}
