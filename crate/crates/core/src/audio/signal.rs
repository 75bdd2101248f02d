use crate::error::{Error, Result};

pub const TARGET_RMS: f64 = 0.1;

#[derive(Clone, Debug, PartialEq)]
pub struct AudioSignal {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioSignal {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::InvalidInput("sample rate must be positive".into()));
        }
        if samples.is_empty() {
            return Err(Error::InvalidInput("audio signal has no samples".into()));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidInput(format!("sample {i} is not finite")));
        }
        Ok(Self { samples, sample_rate })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    pub fn rms(&self) -> f64 {
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }
}

/// Scales to an RMS of 0.1, clipping to `[-1, 1]`. Silent input is returned as is.
pub fn normalize_signal(signal: &AudioSignal) -> Result<AudioSignal> {
    if signal.samples.iter().any(|s| !s.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let rms = signal.rms();
    if rms == 0.0 {
        return Ok(signal.clone());
    }
    let gain = TARGET_RMS / rms;
    let samples = signal.samples.iter().map(|s| (s * gain).clamp(-1.0, 1.0)).collect();
    AudioSignal::new(samples, signal.sample_rate)
}
