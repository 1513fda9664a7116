//! Signal-level measurements: pitch pulses, perturbation, HNR, excitation
//! measures (GNE, VFER), intensity, LPC formants and the bark scale.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub mod excitation;
pub mod intensity;
pub mod lpc;
pub mod perturbation;
pub mod pitch;

pub use excitation::{gne, gne_from_excitation, lpc_residual, vfer, vfer_from_residual};
pub use intensity::{intensity_stats, IntensityStats};
pub use lpc::{formant_stats, lpc_formants, FormantStats, FormantTrack};
pub use perturbation::{jitter_local, shimmer_local};
pub use pitch::{estimate_pitch_track, hnr_db, hnr_from_r, pitch_frames, PitchFrame, PulseSequence};

pub const MIN_SAMPLE_RATE: u32 = 16_000;

/// Mono samples in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioBuffer {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<AudioBuffer> {
        if sample_rate < MIN_SAMPLE_RATE {
            return Err(Error::Input(format!(
                "sample rate {sample_rate} Hz below the supported minimum {MIN_SAMPLE_RATE} Hz"
            )));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::Input(format!("non-finite sample at index {i}")));
        }
        Ok(AudioBuffer {
            samples,
            sample_rate,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn rate(&self) -> f64 {
        self.sample_rate as f64
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.rate()
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    /// Copy of the samples in `[start, end)` seconds, clipped to the buffer.
    pub fn slice(&self, start: f64, end: f64) -> AudioBuffer {
        let n = self.samples.len();
        let a = (libm::round(start * self.rate()).max(0.0) as usize).min(n);
        let b = (libm::round(end * self.rate()).max(0.0) as usize).clamp(a, n);
        AudioBuffer {
            samples: self.samples[a..b].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}

/// Every tunable constant of the acoustic measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DspConfig {
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    pub pitch_window_s: f64,
    pub pitch_hop_s: f64,
    /// Normalized autocorrelation needed to call a frame voiced.
    pub voicing_threshold: f64,
    /// A shorter-lag candidate wins over the global maximum when its
    /// correlation is at least this fraction of it (octave-error guard).
    pub octave_ratio: f64,
    /// Frames quieter than this RMS (dBFS) are unvoiced.
    pub silence_db: f64,
    pub preemphasis: f64,
    pub formant_window_s: f64,
    pub formant_hop_s: f64,
    /// `None` means `2 + rate/1000`.
    pub lpc_order: Option<usize>,
    pub max_formant_bandwidth_hz: f64,
    pub min_formant_hz: f64,
    pub nyquist_margin_hz: f64,
    pub residual_lpc_order: usize,
    pub gne_bandwidth_hz: f64,
    pub gne_step_hz: f64,
    pub gne_first_center_hz: f64,
    pub gne_top_margin_hz: f64,
    pub gne_min_separation_hz: f64,
    pub gne_max_lag_s: f64,
    pub gne_min_duration_s: f64,
    pub vfer_split_hz: f64,
    pub vfer_floor: f64,
    pub intensity_window_s: f64,
    pub intensity_hop_s: f64,
    pub intensity_floor_db: f64,
}

impl Default for DspConfig {
    fn default() -> Self {
        DspConfig {
            f0_min_hz: 60.0,
            f0_max_hz: 400.0,
            pitch_window_s: 0.040,
            pitch_hop_s: 0.010,
            voicing_threshold: 0.3,
            octave_ratio: 0.85,
            silence_db: -70.0,
            preemphasis: 0.97,
            formant_window_s: 0.025,
            formant_hop_s: 0.010,
            lpc_order: None,
            max_formant_bandwidth_hz: 400.0,
            min_formant_hz: 90.0,
            nyquist_margin_hz: 50.0,
            residual_lpc_order: 13,
            gne_bandwidth_hz: 1000.0,
            gne_step_hz: 500.0,
            gne_first_center_hz: 500.0,
            gne_top_margin_hz: 1000.0,
            gne_min_separation_hz: 500.0,
            gne_max_lag_s: 0.0003,
            gne_min_duration_s: 0.030,
            vfer_split_hz: 2500.0,
            vfer_floor: 1e-12,
            intensity_window_s: 0.032,
            intensity_hop_s: 0.010,
            intensity_floor_db: -120.0,
        }
    }
}

impl DspConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f0_min_hz", self.f0_min_hz),
            ("pitch_window_s", self.pitch_window_s),
            ("pitch_hop_s", self.pitch_hop_s),
            ("formant_window_s", self.formant_window_s),
            ("formant_hop_s", self.formant_hop_s),
            ("gne_bandwidth_hz", self.gne_bandwidth_hz),
            ("gne_step_hz", self.gne_step_hz),
            ("vfer_split_hz", self.vfer_split_hz),
            ("intensity_window_s", self.intensity_window_s),
            ("intensity_hop_s", self.intensity_hop_s),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("dsp.{name} must be positive")));
            }
        }
        if self.f0_max_hz <= self.f0_min_hz {
            return Err(Error::Config("dsp.f0_max_hz must exceed f0_min_hz".into()));
        }
        if !(0.0..1.0).contains(&self.voicing_threshold) {
            return Err(Error::Config("dsp.voicing_threshold must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.octave_ratio) {
            return Err(Error::Config("dsp.octave_ratio must lie in [0, 1]".into()));
        }
        if !(0.0..1.0).contains(&self.preemphasis) {
            return Err(Error::Config("dsp.preemphasis must lie in [0, 1)".into()));
        }
        if self.residual_lpc_order == 0 || self.lpc_order == Some(0) {
            return Err(Error::Config("LPC orders must be positive".into()));
        }
        Ok(())
    }

    pub fn formant_lpc_order(&self, rate: f64) -> usize {
        self.lpc_order
            .unwrap_or(2 + libm::floor(rate / 1000.0) as usize)
    }
}

/// Bark value of a frequency: `13·atan(0.00076 f) + 3.5·atan((f/7500)²)`.
pub fn hz_to_bark(f: f64) -> Result<f64> {
    if !(f >= 0.0) {
        return Err(Error::Range {
            what: "frequency (Hz)",
            value: f,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let r = f / 7500.0;
    Ok(13.0 * libm::atan(0.00076 * f) + 3.5 * libm::atan(r * r))
}

/// Non-overlapping-or-hopped frame start indices with full windows only.
pub fn frame_starts(len: usize, win: usize, hop: usize) -> impl Iterator<Item = usize> {
    let count = if len >= win && hop > 0 {
        (len - win) / hop + 1
    } else {
        0
    };
    (0..count).map(move |i| i * hop)
}

pub fn rms_db(frame: &[f64], floor_db: f64) -> f64 {
    if frame.is_empty() {
        return floor_db;
    }
    let ms = frame.iter().map(|v| v * v).sum::<f64>() / frame.len() as f64;
    if ms <= 0.0 {
        return floor_db;
    }
    (10.0 * libm::log10(ms)).max(floor_db)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub(crate) fn std_dev(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    // shifted by the first value so constant input gives exactly zero
    let x0 = xs[0];
    let d: Vec<f64> = xs.iter().map(|v| v - x0).collect();
    let m = mean(&d);
    libm::sqrt(d.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / d.len() as f64)
}
