use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::AudioSignal;
use crate::error::{Error, Result};

/// Reads integer PCM or 32-bit float WAV; multi-channel input is averaged to mono.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioSignal> {
    let path = path.as_ref();
    let reader = WavReader::open(path).map_err(|e| match e {
        hound::Error::IoError(io) => Error::io(path, io),
        other => Error::format(path, other.to_string()),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    let interleaved: Vec<f64> = match spec.sample_format {
        SampleFormat::Float => {
            reader.into_samples::<f32>().map(|s| s.map(|v| v as f64)).collect::<std::result::Result<_, _>>()?
        }
        SampleFormat::Int => {
            let scale = (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader.into_samples::<i32>().map(|s| s.map(|v| v as f64 / scale)).collect::<std::result::Result<_, _>>()?
        }
    };
    if channels == 0 || interleaved.is_empty() {
        return Err(Error::format(path, "no audio samples"));
    }
    let mono = interleaved.chunks(channels).map(|frame| frame.iter().sum::<f64>() / channels as f64).collect();
    AudioSignal::new(mono, spec.sample_rate)
}

/// Writes mono 16-bit PCM.
pub fn write_wav(path: impl AsRef<Path>, signal: &AudioSignal) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate: signal.sample_rate(),
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut w = WavWriter::create(path.as_ref(), spec)?;
    for s in signal.samples() {
        w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16)?;
    }
    w.finalize()?;
    Ok(())
}
