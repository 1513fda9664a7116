//! Autocorrelation pitch tracking, glottal cycle extraction and HNR.

use alloc::vec;
use alloc::vec::Vec;

use super::{frame_starts, mean, rms_db, AudioBuffer, DspConfig};
use crate::fft::{self, Complex64};
use crate::{Error, Result};

/// Per-cycle periods (seconds) and peak amplitudes of a voiced stretch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PulseSequence {
    pub periods: Vec<f64>,
    pub peak_amplitudes: Vec<f64>,
}

impl PulseSequence {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn mean_f0(&self) -> Option<f64> {
        if self.periods.is_empty() {
            None
        } else {
            Some(1.0 / mean(&self.periods))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchFrame {
    /// Frame centre, seconds from the segment start.
    pub time: f64,
    pub f0: Option<f64>,
    /// Maximum normalized autocorrelation in the f0 lag range.
    pub strength: f64,
}

struct LagRange {
    min: usize,
    max: usize,
}

fn lag_range(rate: f64, cfg: &DspConfig, win: usize) -> LagRange {
    let min = (libm::floor(rate / cfg.f0_max_hz) as usize).max(2);
    let max = (libm::ceil(rate / cfg.f0_min_hz) as usize).min(win.saturating_sub(2));
    LagRange { min, max }
}

/// Normalized autocorrelation `r(τ) = Σ x[n]x[n+τ] / √(Σx[n]² Σx[n+τ]²)`
/// over the overlapping part, for τ in `0..=max_lag`.
fn normalized_autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let nfft = fft::next_pow2(2 * n);
    let mut spec = fft::rfft_padded(x, nfft);
    for c in spec.iter_mut() {
        *c = Complex64::new(c.norm_sqr(), 0.0);
    }
    fft::ifft(&mut spec);
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + x[i] * x[i];
    }
    (0..=max_lag.min(n - 1))
        .map(|lag| {
            let head = prefix[n - lag];
            let tail = prefix[n] - prefix[lag];
            let denom = libm::sqrt(head * tail);
            if denom > 0.0 {
                spec[lag].re / denom
            } else {
                0.0
            }
        })
        .collect()
}

/// Vertex of the parabola through `(−1, a), (0, b), (1, c)`: (offset, height).
pub(crate) fn parabolic_peak(a: f64, b: f64, c: f64) -> (f64, f64) {
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 || !denom.is_finite() {
        return (0.0, b);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    (delta, b - 0.25 * (a - c) * delta)
}

/// Frame-wise f0 and voicing strength.
pub fn pitch_frames(audio: &AudioBuffer, cfg: &DspConfig) -> Vec<PitchFrame> {
    let rate = audio.rate();
    let x = audio.samples();
    let win = libm::round(cfg.pitch_window_s * rate) as usize;
    let hop = (libm::round(cfg.pitch_hop_s * rate) as usize).max(1);
    let lags = lag_range(rate, cfg, win);
    let mut out = Vec::new();
    let mut frame_peaks: Vec<Vec<(f64, f64)>> = Vec::new();
    if lags.max <= lags.min + 1 {
        return out;
    }
    for start in frame_starts(x.len(), win, hop) {
        let time = (start as f64 + win as f64 / 2.0) / rate;
        let raw = &x[start..start + win];
        if rms_db(raw, -400.0) < cfg.silence_db {
            out.push(PitchFrame {
                time,
                f0: None,
                strength: 0.0,
            });
            continue;
        }
        let m = mean(raw);
        let frame: Vec<f64> = raw.iter().map(|v| v - m).collect();
        let r = normalized_autocorrelation(&frame, lags.max + 1);
        // interior local maxima within the lag range
        let mut peaks: Vec<(f64, f64)> = Vec::new();
        for lag in lags.min.max(1)..=lags.max.min(r.len() - 2) {
            if r[lag] > r[lag - 1] && r[lag] >= r[lag + 1] {
                let (d, h) = parabolic_peak(r[lag - 1], r[lag], r[lag + 1]);
                peaks.push((lag as f64 + d, h.min(1.0)));
            }
        }
        let best = peaks.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        if peaks.is_empty() || best < cfg.voicing_threshold {
            out.push(PitchFrame {
                time,
                f0: None,
                strength: best.max(0.0),
            });
            continue;
        }
        let top = *peaks
            .iter()
            .find(|p| p.1 == best)
            .expect("best is one of the peaks");
        // octave guard: prefer the global maximum's lag divided by k when
        // strong peaks sit at every multiple of the shorter lag
        let strong_near = |lag: f64| {
            peaks
                .iter()
                .filter(|p| (p.0 - lag).abs() <= 0.05 * lag + 1.0)
                .filter(|p| p.1 >= cfg.octave_ratio * best)
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .copied()
        };
        let mut chosen = top;
        for k in (2..=4).rev() {
            let base = top.0 / k as f64;
            let Some(c) = strong_near(base) else { continue };
            if (2..k).all(|m| strong_near(m as f64 * base).is_some()) {
                chosen = c;
                break;
            }
        }
        out.push(PitchFrame {
            time,
            f0: Some(rate / chosen.0),
            strength: best,
        });
        frame_peaks.push(peaks);
    }
    // continuity pass: frames whose pick strays far from the median period
    // take their strongest voiced peak near it, if any
    let mut voiced_lags: Vec<f64> = out.iter().filter_map(|f| f.f0).map(|f0| rate / f0).collect();
    if voiced_lags.len() >= 3 {
        voiced_lags.sort_by(f64::total_cmp);
        let median = voiced_lags[voiced_lags.len() / 2];
        let mut k = 0;
        for frame in out.iter_mut() {
            let Some(f0) = frame.f0 else { continue };
            let peaks = &frame_peaks[k];
            k += 1;
            let lag = rate / f0;
            if (lag / median - 1.0).abs() <= 0.25 {
                continue;
            }
            let near = peaks
                .iter()
                .filter(|p| p.1 >= cfg.voicing_threshold && (p.0 / median - 1.0).abs() <= 0.25)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some(p) = near {
                frame.f0 = Some(rate / p.0);
            }
        }
    }
    out
}

fn polarity(x: &[f64]) -> f64 {
    let (mut hi, mut lo) = (0.0f64, 0.0f64);
    for &v in x {
        hi = hi.max(v);
        lo = lo.min(v);
    }
    if hi >= -lo {
        1.0
    } else {
        -1.0
    }
}

fn window_correlation(a: &[f64], b: &[f64]) -> f64 {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    let d = libm::sqrt(aa * bb);
    if d > 0.0 {
        ab / d
    } else {
        0.0
    }
}

/// Extracts consecutive glottal cycles from the voiced stretches.
///
/// Frame f0 gives the expected period; each actual period is the lag that
/// best aligns the waveform of one cycle with the next (normalized
/// cross-correlation with parabolic refinement). Each cycle's amplitude is
/// its waveform peak in the dominant polarity.
pub fn estimate_pitch_track(audio: &AudioBuffer, cfg: &DspConfig) -> Result<PulseSequence> {
    let rate = audio.rate();
    if audio.duration() < 3.0 / cfg.f0_min_hz {
        return Err(Error::InsufficientData(alloc::format!(
            "segment of {:.4} s shorter than 3 periods at {} Hz",
            audio.duration(),
            cfg.f0_min_hz
        )));
    }
    let frames = pitch_frames(audio, cfg);
    if frames.iter().all(|f| f.f0.is_none()) {
        return Err(Error::Unvoiced);
    }
    let x = audio.samples();
    let sign = polarity(x);
    let win = libm::round(cfg.pitch_window_s * rate) as usize;
    let hop = (libm::round(cfg.pitch_hop_s * rate) as usize).max(1);
    let min_period = rate / cfg.f0_max_hz;
    let max_period = rate / cfg.f0_min_hz;

    let mut out = PulseSequence::default();
    let mut i = 0;
    while i < frames.len() {
        if frames[i].f0.is_none() {
            i += 1;
            continue;
        }
        let first = i;
        while i < frames.len() && frames[i].f0.is_some() {
            i += 1;
        }
        let run = &frames[first..i];
        let region_start = first * hop;
        let region_end = ((i - 1) * hop + win).min(x.len());
        let mut run_lags: Vec<f64> = run.iter().filter_map(|f| f.f0).map(|f0| rate / f0).collect();
        run_lags.sort_by(f64::total_cmp);
        let median = run_lags[run_lags.len() / 2];
        let period_at = |pos: f64| -> f64 {
            let t = pos / rate;
            // frames that disagree wildly with the run are not trusted
            let lag = |f: &PitchFrame| {
                let l = rate / f.f0.unwrap_or(1.0);
                if (l / median - 1.0).abs() > 0.25 {
                    median
                } else {
                    l
                }
            };
            if t <= run[0].time {
                return lag(&run[0]);
            }
            for w in run.windows(2) {
                if t <= w[1].time {
                    let u = (t - w[0].time) / (w[1].time - w[0].time);
                    return lag(&w[0]) * (1.0 - u) + lag(&w[1]) * u;
                }
            }
            lag(run.last().unwrap())
        };
        extract_cycles(
            x,
            sign,
            region_start,
            region_end,
            cfg,
            &period_at,
            (min_period, max_period),
            &mut out,
        );
    }
    if out.is_empty() {
        return Err(Error::Unvoiced);
    }
    for p in out.periods.iter_mut() {
        *p /= rate;
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn extract_cycles(
    x: &[f64],
    sign: f64,
    region_start: usize,
    region_end: usize,
    cfg: &DspConfig,
    period_at: &dyn Fn(f64) -> f64,
    (min_period, max_period): (f64, f64),
    out: &mut PulseSequence,
) {
    let t0 = period_at(region_start as f64);
    let first_len = (libm::ceil(t0) as usize).min(region_end.saturating_sub(region_start));
    if first_len < 3 {
        return;
    }
    // anchor half a period before the first peak so cycle windows are
    // centred on peaks
    let first_peak = (region_start..region_start + first_len)
        .max_by(|&a, &b| (sign * x[a]).total_cmp(&(sign * x[b])))
        .unwrap();
    let mut pos_f = first_peak.saturating_sub(libm::round(t0 / 2.0) as usize).max(region_start) as f64;
    loop {
        // fractional cycle position, so rounding does not accumulate
        let pos = libm::round(pos_f) as usize;
        let t = period_at(pos as f64 + t0 / 2.0);
        let lo = (libm::floor(0.75 * t) as usize).max(libm::floor(min_period) as usize).max(2);
        let hi = (libm::ceil(1.25 * t) as usize).min(libm::ceil(max_period) as usize);
        let len = (libm::round(0.8 * t) as usize).max(2);
        if hi <= lo + 1 || pos + hi + 1 + len > region_end {
            break;
        }
        let reference = &x[pos..pos + len];
        let corr: Vec<f64> = (lo - 1..=hi + 1)
            .map(|lag| window_correlation(reference, &x[pos + lag..pos + lag + len]))
            .collect();
        // corr[k] is lag lo - 1 + k; search interior lags lo..=hi
        let k = (1..corr.len() - 1)
            .max_by(|&a, &b| corr[a].total_cmp(&corr[b]))
            .unwrap();
        let (d, _) = parabolic_peak(corr[k - 1], corr[k], corr[k + 1]);
        let period = (lo - 1 + k) as f64 + d;
        let matched = corr[k] >= cfg.voicing_threshold
            && corr[k] >= corr[k - 1]
            && corr[k] >= corr[k + 1]
            && (min_period..=max_period).contains(&period);
        if !matched {
            // unmatched cycle (onset transient, glitch): step over it
            pos_f += t;
            continue;
        }
        let cycle_end = (libm::round(pos_f + period) as usize).min(x.len() - 1);
        let peak = (pos..cycle_end)
            .max_by(|&a, &b| (sign * x[a]).total_cmp(&(sign * x[b])))
            .unwrap();
        let amp = if peak > 0 && peak + 1 < x.len() {
            parabolic_peak(sign * x[peak - 1], sign * x[peak], sign * x[peak + 1]).1
        } else {
            sign * x[peak]
        };
        out.periods.push(period);
        out.peak_amplitudes.push(amp);
        pos_f += period;
    }
}

/// `10·log10(r / (1 − r))` with r clamped to `[1e-6, 1 − 1e-6]`.
pub fn hnr_from_r(r: f64) -> f64 {
    let r = r.clamp(1e-6, 1.0 - 1e-6);
    10.0 * libm::log10(r / (1.0 - r))
}

/// Mean per-frame harmonics-to-noise ratio over voiced frames, in dB.
pub fn hnr_db(segment: &AudioBuffer, cfg: &DspConfig) -> Result<f64> {
    let values: Vec<f64> = pitch_frames(segment, cfg)
        .iter()
        .filter(|f| f.f0.is_some())
        .map(|f| hnr_from_r(f.strength))
        .collect();
    if values.is_empty() {
        return Err(Error::Unvoiced);
    }
    Ok(mean(&values))
}
