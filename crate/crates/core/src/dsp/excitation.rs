//! Excitation-domain voice quality: glottal-to-noise excitation ratio
//! (cross-band Hilbert-envelope correlation) and vocal fold excitation
//! ratio (low/high band energy of the LPC residual).

use alloc::format;
use alloc::vec::Vec;

use super::lpc::{autocorrelation, hamming};
use super::{AudioBuffer, DspConfig};
use crate::fft::{self, Complex64};
use crate::linalg::levinson_durbin;
use crate::{Error, Result};

/// Inverse-filters the segment with its own order-`order` LPC fit
/// (Hamming-weighted autocorrelation over the whole segment).
pub fn lpc_residual(x: &[f64], order: usize) -> Result<Vec<f64>> {
    let w = hamming(x.len());
    let weighted: Vec<f64> = x.iter().zip(&w).map(|(a, b)| a * b).collect();
    let r = autocorrelation(&weighted, order);
    let (a, _) = levinson_durbin(&r, order)?;
    Ok((0..x.len())
        .map(|n| {
            let mut e = x[n];
            for (k, ak) in a.iter().enumerate() {
                if n > k {
                    e += ak * x[n - k - 1];
                }
            }
            e
        })
        .collect())
}

fn check_duration(len: usize, rate: f64, cfg: &DspConfig) -> Result<()> {
    let dur = len as f64 / rate;
    if dur < cfg.gne_min_duration_s {
        return Err(Error::InsufficientData(format!(
            "excitation analysis needs {} s, got {dur:.4} s",
            cfg.gne_min_duration_s
        )));
    }
    Ok(())
}

/// Band centres used by GNE for a sample rate.
pub fn gne_band_centers(rate: f64, cfg: &DspConfig) -> Vec<f64> {
    let top = rate / 2.0 - cfg.gne_top_margin_hz;
    let mut out = Vec::new();
    let mut c = cfg.gne_first_center_hz;
    while c <= top + 1e-9 {
        out.push(c);
        c += cfg.gne_step_hz;
    }
    out
}

/// Hilbert envelope of `spectrum` restricted to `[lo, hi)` Hz.
fn band_envelope(spectrum: &[Complex64], rate: f64, lo: f64, hi: f64, len: usize) -> Vec<f64> {
    let n = spectrum.len();
    let mut band = alloc::vec![Complex64::new(0.0, 0.0); n];
    for (k, slot) in band.iter_mut().enumerate().take(n / 2 + 1) {
        let f = k as f64 * rate / n as f64;
        if f >= lo && f < hi {
            // analytic signal: positive frequencies doubled
            *slot = spectrum[k] * 2.0;
        }
    }
    fft::ifft(&mut band);
    band[..len].iter().map(|c| c.norm()).collect()
}

fn max_lagged_correlation(a: &[f64], b: &[f64], max_lag: usize) -> f64 {
    let n = a.len();
    let mut best = f64::NEG_INFINITY;
    for lag in -(max_lag as isize)..=(max_lag as isize) {
        let (xa, xb) = if lag >= 0 {
            (&a[..n - lag as usize], &b[lag as usize..])
        } else {
            (&a[(-lag) as usize..], &b[..n - (-lag) as usize])
        };
        let ma = xa.iter().sum::<f64>() / xa.len() as f64;
        let mb = xb.iter().sum::<f64>() / xb.len() as f64;
        let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
        for (x, y) in xa.iter().zip(xb) {
            let (u, v) = (x - ma, y - mb);
            ab += u * v;
            aa += u * u;
            bb += v * v;
        }
        let d = libm::sqrt(aa * bb);
        if d > 0.0 {
            best = best.max(ab / d);
        }
    }
    best
}

/// GNE of an excitation signal: the maximum, over band pairs whose centres
/// are at least `gne_min_separation_hz` apart, of the normalized
/// cross-correlation of their Hilbert envelopes.
pub fn gne_from_excitation(excitation: &[f64], rate: f64, cfg: &DspConfig) -> Result<f64> {
    check_duration(excitation.len(), rate, cfg)?;
    let centers = gne_band_centers(rate, cfg);
    if centers.len() < 2 {
        return Err(Error::Config(format!(
            "GNE needs at least two bands; rate {rate} Hz with bandwidth {} Hz gives {}",
            cfg.gne_bandwidth_hz,
            centers.len()
        )));
    }
    let n = excitation.len();
    let nfft = fft::next_pow2(2 * n);
    let spectrum = fft::rfft_padded(excitation, nfft);
    let half = cfg.gne_bandwidth_hz / 2.0;
    let envelopes: Vec<Vec<f64>> = centers
        .iter()
        .map(|&c| band_envelope(&spectrum, rate, c - half, c + half, n))
        .collect();
    let max_lag = libm::round(cfg.gne_max_lag_s * rate) as usize;
    let mut best = f64::NEG_INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            if centers[j] - centers[i] + 1e-9 < cfg.gne_min_separation_hz {
                continue;
            }
            best = best.max(max_lagged_correlation(&envelopes[i], &envelopes[j], max_lag));
        }
    }
    if !best.is_finite() {
        return Err(Error::Numeric("GNE envelopes have zero variance".into()));
    }
    Ok(best.clamp(0.0, 1.0))
}

/// GNE of a voiced segment via its LPC residual.
pub fn gne(segment: &AudioBuffer, cfg: &DspConfig) -> Result<f64> {
    check_duration(segment.samples().len(), segment.rate(), cfg)?;
    let residual = lpc_residual(segment.samples(), cfg.residual_lpc_order)?;
    gne_from_excitation(&residual, segment.rate(), cfg)
}

/// `10·log10(E_low / E_high)` of a residual split at `vfer_split_hz`, with
/// `E_high` floored at `vfer_floor · E_total`.
pub fn vfer_from_residual(residual: &[f64], rate: f64, cfg: &DspConfig) -> Result<f64> {
    check_duration(residual.len(), rate, cfg)?;
    let nfft = fft::next_pow2(residual.len());
    let spectrum = fft::rfft_padded(residual, nfft);
    let (mut low, mut high) = (0.0, 0.0);
    for (k, c) in spectrum.iter().enumerate().take(nfft / 2 + 1) {
        let f = k as f64 * rate / nfft as f64;
        let p = c.norm_sqr();
        if f < cfg.vfer_split_hz {
            low += p;
        } else {
            high += p;
        }
    }
    let total = low + high;
    if !(total > 0.0) {
        return Err(Error::Numeric("zero-energy residual".into()));
    }
    let high = high.max(cfg.vfer_floor * total);
    let low = low.max(cfg.vfer_floor * total);
    Ok(10.0 * libm::log10(low / high))
}

pub fn vfer(segment: &AudioBuffer, cfg: &DspConfig) -> Result<f64> {
    check_duration(segment.samples().len(), segment.rate(), cfg)?;
    let residual = lpc_residual(segment.samples(), cfg.residual_lpc_order)?;
    vfer_from_residual(&residual, segment.rate(), cfg)
}
