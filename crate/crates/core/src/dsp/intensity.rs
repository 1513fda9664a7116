//! Frame RMS intensity in dB relative to full scale.

use alloc::vec::Vec;

use super::{frame_starts, mean, rms_db, std_dev, AudioBuffer};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityStats {
    pub mean_db: f64,
    pub std_db: f64,
}

/// Mean and standard deviation of per-frame RMS level (floored at
/// `floor_db`). A segment shorter than one window is one frame.
pub fn intensity_stats(segment: &AudioBuffer, win_s: f64, hop_s: f64, floor_db: f64) -> IntensityStats {
    let rate = segment.rate();
    let x = segment.samples();
    let win = (libm::round(win_s * rate) as usize).max(1);
    let hop = (libm::round(hop_s * rate) as usize).max(1);
    let mut levels: Vec<f64> = frame_starts(x.len(), win, hop)
        .map(|s| rms_db(&x[s..s + win], floor_db))
        .collect();
    if levels.is_empty() {
        levels.push(rms_db(x, floor_db));
    }
    IntensityStats {
        mean_db: mean(&levels),
        std_db: std_dev(&levels),
    }
}
