//! Autocorrelation LPC and formant tracking from predictor polynomial roots.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use super::{frame_starts, mean, std_dev, AudioBuffer, DspConfig};
use crate::linalg::levinson_durbin;
use crate::{Error, Result};

/// Autocorrelation `r[0..=order]` of a (windowed) frame.
pub fn autocorrelation(x: &[f64], order: usize) -> Vec<f64> {
    (0..=order)
        .map(|lag| {
            if lag >= x.len() {
                0.0
            } else {
                x.iter().zip(&x[lag..]).map(|(a, b)| a * b).sum()
            }
        })
        .collect()
}

/// Predictor coefficients `a[1..=order]` of `A(z) = 1 + Σ a_k z^-k`.
pub fn lpc_coefficients(frame: &[f64], order: usize) -> Result<Vec<f64>> {
    let r = autocorrelation(frame, order);
    levinson_durbin(&r, order).map(|(a, _)| a)
}

pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return alloc::vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * libm::cos(2.0 * PI * i as f64 / (n - 1) as f64))
        .collect()
}

fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    // monic polynomial z^p + c1 z^(p-1) + ... + cp; returns (p(z), p'(z))
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of the monic polynomial `z^p + c[0] z^(p-1) + … + c[p-1]`
/// by Aberth–Ehrlich simultaneous iteration.
pub fn polynomial_roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let p = coeffs.len();
    if p == 0 {
        return Ok(Vec::new());
    }
    // Cauchy bound on root moduli
    let bound = 1.0 + coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    #[allow(clippy::manual_clamp)] // a NaN bound falls back to 2
    let radius = bound.min(2.0).max(0.5);
    let mut z: Vec<Complex64> = (0..p)
        .map(|k| {
            let ang = 2.0 * PI * k as f64 / p as f64 + 0.4;
            Complex64::from_polar(radius, ang)
        })
        .collect();
    for _ in 0..500 {
        let mut max_step: f64 = 0.0;
        for k in 0..p {
            let (pv, dpv) = horner(coeffs, z[k]);
            if pv.norm() == 0.0 {
                continue;
            }
            let ratio = pv / dpv;
            let mut s = Complex64::new(0.0, 0.0);
            for j in 0..p {
                if j != k {
                    s += (z[k] - z[j]).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            if step.is_finite() {
                z[k] -= step;
                max_step = max_step.max(step.norm() / z[k].norm().max(1e-12));
            }
        }
        if max_step < 1e-14 {
            break;
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::Numeric("polynomial root iteration diverged".into()));
    }
    Ok(z)
}

/// Per-frame (F1, F2, F3) in Hz; `None` for frames with fewer than three
/// admissible resonances.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormantTrack {
    pub frames: Vec<Option<[f64; 3]>>,
}

impl FormantTrack {
    pub fn valid(&self) -> impl Iterator<Item = &[f64; 3]> {
        self.frames.iter().flatten()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormantStats {
    pub mean: [f64; 3],
    pub std: [f64; 3],
    pub valid_frames: usize,
}

/// Candidate resonance frequencies of one frame from LPC roots.
pub fn frame_formants(frame: &[f64], rate: f64, order: usize, cfg: &DspConfig) -> Option<[f64; 3]> {
    let a = lpc_coefficients(frame, order).ok()?;
    let roots = polynomial_roots(&a).ok()?;
    let mut freqs: Vec<f64> = roots
        .iter()
        .filter(|r| r.im > 0.0)
        .filter_map(|r| {
            let f = r.arg() * rate / (2.0 * PI);
            let bw = -rate / PI * libm::log(r.norm());
            let admissible = bw < cfg.max_formant_bandwidth_hz
                && f > cfg.min_formant_hz
                && f < rate / 2.0 - cfg.nyquist_margin_hz;
            admissible.then_some(f)
        })
        .collect();
    if freqs.len() < 3 {
        return None;
    }
    freqs.sort_by(f64::total_cmp);
    Some([freqs[0], freqs[1], freqs[2]])
}

/// Frame-wise LPC formant track: pre-emphasis, Hamming frames and
/// `2 + rate/1000` order prediction unless configured otherwise.
pub fn lpc_formants(segment: &AudioBuffer, cfg: &DspConfig) -> Result<FormantTrack> {
    let rate = segment.rate();
    let x = segment.samples();
    if segment.duration() < 0.05 {
        return Err(Error::InsufficientData(alloc::format!(
            "formant analysis needs 50 ms, got {:.4} s",
            segment.duration()
        )));
    }
    let mut emph = Vec::with_capacity(x.len());
    emph.push(x[0]);
    for i in 1..x.len() {
        emph.push(x[i] - cfg.preemphasis * x[i - 1]);
    }
    let win = libm::round(cfg.formant_window_s * rate) as usize;
    let hop = (libm::round(cfg.formant_hop_s * rate) as usize).max(1);
    let window = hamming(win);
    let order = cfg.formant_lpc_order(rate);
    let frames = frame_starts(emph.len(), win, hop)
        .map(|s| {
            let frame: Vec<f64> = emph[s..s + win].iter().zip(&window).map(|(a, w)| a * w).collect();
            frame_formants(&frame, rate, order, cfg)
        })
        .collect();
    let track = FormantTrack { frames };
    if track.valid().next().is_none() {
        return Err(Error::FormantFailure);
    }
    Ok(track)
}

/// Mean and standard deviation of each formant over valid frames.
pub fn formant_stats(track: &FormantTrack) -> Result<FormantStats> {
    let valid: Vec<&[f64; 3]> = track.valid().collect();
    if valid.is_empty() {
        return Err(Error::FormantFailure);
    }
    let mut m = [0.0; 3];
    let mut s = [0.0; 3];
    for k in 0..3 {
        let series: Vec<f64> = valid.iter().map(|f| f[k]).collect();
        m[k] = mean(&series);
        s[k] = std_dev(&series);
    }
    Ok(FormantStats {
        mean: m,
        std: s,
        valid_frames: valid.len(),
    })
}
