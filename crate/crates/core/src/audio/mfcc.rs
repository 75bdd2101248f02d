use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::NUM_CEPSTRA;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub window_ms: f64,
    pub n_mels: usize,
    pub f_min: f64,
    /// Upper edge of the filterbank; `None` means Nyquist.
    pub f_max: Option<f64>,
    pub pre_emphasis: f64,
    pub energy_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        Self {
            sample_rate: 16_000,
            window_ms: 25.0,
            n_mels: 40,
            f_min: 0.0,
            f_max: None,
            pre_emphasis: 0.97,
            energy_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_len(&self) -> usize {
        (self.sample_rate as f64 * self.window_ms / 1000.0).round() as usize
    }

    pub fn n_fft(&self) -> usize {
        self.window_len().next_power_of_two()
    }

    pub fn f_max(&self) -> f64 {
        self.f_max.unwrap_or(self.sample_rate as f64 / 2.0)
    }

    fn validate(&self) -> Result<()> {
        if self.sample_rate == 0 || self.window_len() < 2 {
            return Err(Error::Config("analysis window must span at least 2 samples".into()));
        }
        if self.n_mels < NUM_CEPSTRA {
            return Err(Error::Config(format!("need at least {NUM_CEPSTRA} mel filters")));
        }
        if !(self.f_min >= 0.0 && self.f_min < self.f_max() && self.f_max() <= self.sample_rate as f64 / 2.0) {
            return Err(Error::Config("filterbank edges must satisfy 0 <= f_min < f_max <= Nyquist".into()));
        }
        if self.energy_floor <= 0.0 {
            return Err(Error::Config("energy floor must be positive".into()));
        }
        Ok(())
    }
}

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Precomputed window, filterbank and FFT plan for one configuration.
#[derive(Clone)]
pub struct MfccExtractor {
    config: MfccConfig,
    hamming: Vec<f64>,
    /// Per filter: first FFT bin and its weights.
    filters: Vec<(usize, Vec<f64>)>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for MfccExtractor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MfccExtractor").field("config", &self.config).finish()
    }
}

impl MfccExtractor {
    pub fn new(config: MfccConfig) -> Result<Self> {
        config.validate()?;
        let n = config.window_len();
        let hamming = (0..n).map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos()).collect();
        let n_fft = config.n_fft();
        let bin_hz = config.sample_rate as f64 / n_fft as f64;
        let (mel_lo, mel_hi) = (hz_to_mel(config.f_min), hz_to_mel(config.f_max()));
        let edges: Vec<f64> = (0..config.n_mels + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (config.n_mels + 1) as f64))
            .collect();
        let filters = (0..config.n_mels)
            .map(|m| {
                let (lo, mid, hi) = (edges[m], edges[m + 1], edges[m + 2]);
                let weights: Vec<(usize, f64)> = (0..=n_fft / 2)
                    .filter_map(|k| {
                        let f = k as f64 * bin_hz;
                        let w = if f >= lo && f <= mid {
                            (f - lo) / (mid - lo)
                        } else if f > mid && f <= hi {
                            (hi - f) / (hi - mid)
                        } else {
                            0.0
                        };
                        (w > 0.0).then_some((k, w))
                    })
                    .collect();
                let first = weights.first().map_or(0, |(k, _)| *k);
                let last = weights.last().map_or(0, |(k, _)| *k);
                let mut dense = vec![0.0; if weights.is_empty() { 0 } else { last - first + 1 }];
                for (k, w) in weights {
                    dense[k - first] = w;
                }
                (first, dense)
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(n_fft);
        Ok(Self { config, hamming, filters, fft })
    }

    pub fn config(&self) -> &MfccConfig {
        &self.config
    }

    /// Cepstra 0..12 of one analysis window, plus `ln(mean(x^2) + floor)`.
    pub fn compute_frame(&self, window: &[f64]) -> Result<([f64; NUM_CEPSTRA], f64)> {
        let n = self.config.window_len();
        if window.len() != n {
            return Err(Error::Config(format!(
                "analysis window has {} samples, configuration expects {n}",
                window.len()
            )));
        }
        let floor = self.config.energy_floor;
        let log_energy = (window.iter().map(|x| x * x).sum::<f64>() / n as f64 + floor).ln();

        let mut buf = vec![Complex::new(0.0, 0.0); self.config.n_fft()];
        let a = self.config.pre_emphasis;
        for i in 0..n {
            let emphasized = if i == 0 { window[0] } else { window[i] - a * window[i - 1] };
            buf[i].re = emphasized * self.hamming[i];
        }
        self.fft.process(&mut buf);
        let power: Vec<f64> = buf[..=self.config.n_fft() / 2].iter().map(|c| c.norm_sqr()).collect();

        let log_mel: Vec<f64> = self
            .filters
            .iter()
            .map(|(first, w)| {
                let e: f64 = w.iter().zip(&power[*first..]).map(|(w, p)| w * p).sum();
                e.max(floor).ln()
            })
            .collect();

        let m = log_mel.len() as f64;
        let mut cepstra = [0.0; NUM_CEPSTRA];
        for (k, c) in cepstra.iter_mut().enumerate() {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            *c = scale
                * log_mel
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v * (PI * k as f64 * (j as f64 + 0.5) / m).cos())
                    .sum::<f64>();
        }
        Ok((cepstra, log_energy))
    }
}

/// One-shot form of [`MfccExtractor::compute_frame`]; `sample_rate` must match the config.
pub fn compute_mfcc_frame(window: &[f64], sample_rate: u32, config: &MfccConfig) -> Result<([f64; NUM_CEPSTRA], f64)> {
    if sample_rate != config.sample_rate {
        return Err(Error::Config(format!(
            "sample rate {sample_rate} does not match configured {}",
            config.sample_rate
        )));
    }
    MfccExtractor::new(config.clone())?.compute_frame(window)
}
