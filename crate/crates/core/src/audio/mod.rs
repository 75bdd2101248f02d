//! Raw audio to 28-dimensional per-video-frame speech features.
//!
//! Each feature frame holds 13 cepstral coefficients and the log mean
//! energy of a 25 ms Hamming-windowed slice centred on a 15 Hz video frame,
//! followed by the backward differences of those 14 values.

mod features;
mod mfcc;
mod signal;
mod wav;

pub use features::{compute_deltas, extract_features, AudioFeatureSequence, FeatureFrame};
pub use mfcc::{compute_mfcc_frame, hz_to_mel, mel_to_hz, MfccConfig, MfccExtractor};
pub use signal::{normalize_signal, AudioSignal, TARGET_RMS};
pub use wav::{read_wav, write_wav};

/// Video frame rate the whole pipeline runs at.
pub const FRAME_RATE: f64 = 15.0;
pub const NUM_CEPSTRA: usize = 13;
/// Cepstra plus log energy.
pub const BASE_DIMS: usize = NUM_CEPSTRA + 1;
pub const FEATURE_DIMS: usize = 2 * BASE_DIMS;
