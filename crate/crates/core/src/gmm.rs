//! Full-covariance Gaussian mixtures fitted by EM, and vowel-frame
//! detection by the log-likelihood ratio of a vowel and a non-vowel model.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dsp::lpc::hamming;
use crate::dsp::{frame_starts, rms_db, AudioBuffer};
use crate::fft::{next_pow2, rfft_padded};
use crate::linalg::{Cholesky, Matrix};
use crate::rng::seeded;
use crate::segment::{Interval, SegmentTier};
use crate::{Error, Result};

/// Frame feature definition: log frame energy followed by `mel_bands`
/// mel-band log energies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameFeatureConfig {
    pub frame_s: f64,
    pub hop_s: f64,
    pub mel_bands: usize,
}

impl Default for FrameFeatureConfig {
    fn default() -> Self {
        FrameFeatureConfig {
            frame_s: 0.025,
            hop_s: 0.010,
            mel_bands: 12,
        }
    }
}

impl FrameFeatureConfig {
    pub fn dim(&self) -> usize {
        1 + self.mel_bands
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmConfig {
    pub features: FrameFeatureConfig,
    pub components: usize,
    pub max_iter: usize,
    /// Stop when the mean per-frame log-likelihood gains less than this.
    pub tol: f64,
    /// Added to every covariance diagonal in each M-step.
    pub reg: f64,
    pub min_duration_s: f64,
    pub merge_gap_s: f64,
    /// Frames quieter than this (dBFS) are never vowel frames.
    pub energy_gate_db: f64,
    /// Training frames per model are subsampled to at most this many.
    pub max_train_frames: usize,
}

impl Default for GmmConfig {
    fn default() -> Self {
        GmmConfig {
            features: FrameFeatureConfig::default(),
            components: 70,
            max_iter: 60,
            tol: 1e-6,
            reg: 1e-6,
            min_duration_s: 0.030,
            merge_gap_s: 0.020,
            energy_gate_db: -60.0,
            max_train_frames: 20_000,
        }
    }
}

impl GmmConfig {
    pub fn validate(&self) -> Result<()> {
        let f = &self.features;
        if !(f.frame_s > 0.0 && f.hop_s > 0.0) || f.mel_bands == 0 {
            return Err(Error::Config("gmm.features needs positive frame, hop and band count".into()));
        }
        if self.components == 0 || self.max_iter == 0 {
            return Err(Error::Config("gmm.components and gmm.max_iter must be positive".into()));
        }
        if !(self.reg > 0.0 && self.tol >= 0.0 && self.min_duration_s >= 0.0 && self.merge_gap_s >= 0.0) {
            return Err(Error::Config("gmm.reg must be positive, tolerances non-negative".into()));
        }
        Ok(())
    }
}

fn hz_to_mel(f: f64) -> f64 {
    2595.0 * libm::log10(1.0 + f / 700.0)
}

fn mel_to_hz(m: f64) -> f64 {
    700.0 * (libm::pow(10.0, m / 2595.0) - 1.0)
}

/// Triangular filters spanning 0 Hz to Nyquist, `bands × (nfft/2 + 1)`.
fn mel_filterbank(bands: usize, nfft: usize, rate: f64) -> Matrix {
    let bins = nfft / 2 + 1;
    let top = hz_to_mel(rate / 2.0);
    let edges: Vec<f64> = (0..bands + 2)
        .map(|i| mel_to_hz(top * i as f64 / (bands + 1) as f64))
        .collect();
    Matrix::from_fn(bands, bins, |b, k| {
        let f = k as f64 * rate / nfft as f64;
        let (lo, mid, hi) = (edges[b], edges[b + 1], edges[b + 2]);
        if f > lo && f <= mid {
            (f - lo) / (mid - lo)
        } else if f > mid && f < hi {
            (hi - f) / (hi - mid)
        } else {
            0.0
        }
    })
}

const LOG_FLOOR: f64 = 1e-10;

/// Per-frame features (`frames × dim`) and each frame's RMS level (dBFS).
pub fn frame_features(audio: &AudioBuffer, cfg: &FrameFeatureConfig) -> (Matrix, Vec<f64>) {
    let rate = audio.rate();
    let win = (libm::round(cfg.frame_s * rate) as usize).max(2);
    let hop = (libm::round(cfg.hop_s * rate) as usize).max(1);
    let nfft = next_pow2(win);
    let w = hamming(win);
    let bank = mel_filterbank(cfg.mel_bands, nfft, rate);
    let x = audio.samples();
    let mut data = Vec::new();
    let mut levels = Vec::new();
    let mut buf = vec![0.0; win];
    let mut rows = 0;
    for s in frame_starts(x.len(), win, hop) {
        let frame = &x[s..s + win];
        levels.push(rms_db(frame, -200.0));
        let ms = frame.iter().map(|v| v * v).sum::<f64>() / win as f64;
        data.push(libm::log(ms + LOG_FLOOR));
        for (b, (v, wv)) in buf.iter_mut().zip(frame.iter().zip(&w)) {
            *b = v * wv;
        }
        let spec = rfft_padded(&buf, nfft);
        let power: Vec<f64> = spec[..nfft / 2 + 1].iter().map(|c| c.norm_sqr()).collect();
        for b in 0..cfg.mel_bands {
            let e: f64 = bank.row(b).iter().zip(&power).map(|(a, p)| a * p).sum();
            data.push(libm::log(e + LOG_FLOOR));
        }
        rows += 1;
    }
    (Matrix::from_vec(rows, cfg.dim(), data).expect("feature rows are complete"), levels)
}

/// Centre time (s) of frame `i`.
pub fn frame_center(i: usize, cfg: &FrameFeatureConfig) -> f64 {
    i as f64 * cfg.hop_s + cfg.frame_s / 2.0
}

/// Splits feature rows into those whose centre lies inside a labelled
/// interval of `tier` and the rest.
pub fn split_frames(features: &Matrix, tier: &SegmentTier, cfg: &FrameFeatureConfig) -> (Matrix, Matrix) {
    let labelled: Vec<&Interval> = tier.labelled().collect();
    let (mut inside, mut outside) = (Vec::new(), Vec::new());
    let (mut ni, mut no) = (0, 0);
    for i in 0..features.rows() {
        let t = frame_center(i, cfg);
        if labelled.iter().any(|iv| iv.start <= t && t < iv.end) {
            inside.extend_from_slice(features.row(i));
            ni += 1;
        } else {
            outside.extend_from_slice(features.row(i));
            no += 1;
        }
    }
    let d = features.cols();
    (
        Matrix::from_vec(ni, d, inside).expect("rows are complete"),
        Matrix::from_vec(no, d, outside).expect("rows are complete"),
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub covariances: Vec<Matrix>,
}

/// A mixture with factored covariances, ready for evaluation.
pub struct PreparedMixture<'a> {
    gmm: &'a GaussianMixture,
    factors: Vec<Cholesky>,
    log_norm: Vec<f64>,
}

fn factor_with_jitter(c: &Matrix) -> Result<Cholesky> {
    let mut jitter = 0.0;
    for _ in 0..8 {
        let mut m = c.clone();
        for i in 0..m.rows() {
            m[(i, i)] += jitter;
        }
        if let Ok(ch) = Cholesky::new(&m) {
            return Ok(ch);
        }
        jitter = if jitter == 0.0 { 1e-9 } else { jitter * 100.0 };
    }
    Err(Error::Numeric("covariance is not positive definite".into()))
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + libm::log(xs.iter().map(|v| libm::exp(v - m)).sum::<f64>())
}

impl GaussianMixture {
    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.components();
        let d = self.dim();
        if k == 0 || self.means.len() != k || self.covariances.len() != k {
            return Err(Error::Data("mixture component lists disagree in length".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || libm::fabs(self.weights.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(Error::Data("mixture weights must be non-negative and sum to 1".into()));
        }
        for (m, c) in self.means.iter().zip(&self.covariances) {
            if m.len() != d || c.shape() != (d, d) {
                return Err(Error::Data(format!("component shapes must all be {d}-dimensional")));
            }
        }
        Ok(())
    }

    pub fn prepare(&self) -> Result<PreparedMixture<'_>> {
        let d = self.dim() as f64;
        let mut factors = Vec::with_capacity(self.components());
        let mut log_norm = Vec::with_capacity(self.components());
        for (w, c) in self.weights.iter().zip(&self.covariances) {
            let ch = factor_with_jitter(c)?;
            log_norm.push(libm::log(*w) - 0.5 * (d * libm::log(2.0 * PI) + ch.log_det()));
            factors.push(ch);
        }
        Ok(PreparedMixture {
            gmm: self,
            factors,
            log_norm,
        })
    }
}

impl PreparedMixture<'_> {
    /// `log(w_k N(x; μ_k, Σ_k))` for every component.
    pub fn component_log_densities(&self, x: &[f64], out: &mut Vec<f64>, scratch: &mut Vec<f64>) {
        out.clear();
        for k in 0..self.factors.len() {
            let m = self.factors[k].mahalanobis_sq(x, &self.gmm.means[k], scratch);
            out.push(self.log_norm[k] - 0.5 * m);
        }
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        let (mut out, mut scratch) = (Vec::new(), Vec::new());
        self.component_log_densities(x, &mut out, &mut scratch);
        log_sum_exp(&out)
    }

    /// Posterior component probabilities of `x`.
    pub fn responsibilities(&self, x: &[f64]) -> Vec<f64> {
        let (mut out, mut scratch) = (Vec::new(), Vec::new());
        self.component_log_densities(x, &mut out, &mut scratch);
        let z = log_sum_exp(&out);
        out.iter().map(|l| libm::exp(l - z)).collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: the first centre uniformly, each further one with
/// probability proportional to the squared distance to the nearest centre.
fn kmeans_pp(x: &Matrix, k: usize, rng: &mut crate::rng::Rng) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut centers = vec![x.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(x.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if u < d {
                    idx = i;
                    break;
                }
                u -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        let c = x.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(x.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

/// Weighted mean and covariance (+ `reg·I`) of the rows of `x`.
fn weighted_moments(x: &Matrix, w: &[f64], reg: f64) -> (f64, Vec<f64>, Matrix) {
    let d = x.cols();
    let nk: f64 = w.iter().sum();
    let mut mean = vec![0.0; d];
    for (i, &wi) in w.iter().enumerate() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += wi * v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= nk);
    let mut cov = Matrix::zeros(d, d);
    let mut diff = vec![0.0; d];
    for (i, &wi) in w.iter().enumerate() {
        if wi == 0.0 {
            continue;
        }
        for ((t, v), m) in diff.iter_mut().zip(x.row(i)).zip(&mean) {
            *t = v - m;
        }
        for a in 0..d {
            let s = wi * diff[a];
            let row = cov.row_mut(a);
            for b in 0..=a {
                row[b] += s * diff[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..=a {
            let v = cov[(a, b)] / nk;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
        cov[(a, a)] += reg;
    }
    (nk, mean, cov)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub mixture: GaussianMixture,
    /// Mean per-frame log-likelihood before each M-step.
    pub loglik: Vec<f64>,
}

/// Fits a `k`-component full-covariance mixture to the rows of `x`.
pub fn gmm_fit(x: &Matrix, k: usize, max_iter: usize, tol: f64, reg: f64, seed: u64) -> Result<GmmFit> {
    let n = x.rows();
    let d = x.cols();
    if k == 0 || d == 0 {
        return Err(Error::Input("mixture needs at least one component and dimension".into()));
    }
    if n < 10 * k {
        return Err(Error::Data(format!(
            "{n} frames are too few for {k} components (need at least {})",
            10 * k
        )));
    }
    if !x.is_finite() {
        return Err(Error::Input("non-finite frame features".into()));
    }
    let mut rng = seeded(seed);
    let centers = kmeans_pp(x, k, &mut rng);
    let (_, _, global_cov) = weighted_moments(x, &vec![1.0; n], reg);

    // hard assignment to the nearest centre for the first M-step
    let mut resp = vec![0.0; n * k];
    for i in 0..n {
        let best = (0..k)
            .min_by(|&a, &b| sq_dist(x.row(i), &centers[a]).total_cmp(&sq_dist(x.row(i), &centers[b])))
            .unwrap_or(0);
        resp[i * k + best] = 1.0;
    }
    let mut gmm = GaussianMixture {
        weights: vec![1.0 / k as f64; k],
        means: centers,
        covariances: vec![global_cov.clone(); k],
    };
    m_step(x, &resp, k, reg, &global_cov, &mut gmm);

    let mut history = Vec::new();
    let mut dens = Vec::with_capacity(k);
    let mut scratch = Vec::with_capacity(d);
    let mut previous: Option<GaussianMixture> = None;
    for _ in 0..max_iter {
        let prep = gmm.prepare()?;
        let mut total = 0.0;
        for i in 0..n {
            prep.component_log_densities(x.row(i), &mut dens, &mut scratch);
            let z = log_sum_exp(&dens);
            total += z;
            for (r, l) in resp[i * k..(i + 1) * k].iter_mut().zip(&dens) {
                *r = libm::exp(l - z);
            }
        }
        let ll = total / n as f64;
        if !ll.is_finite() {
            return Err(Error::Numeric("mixture log-likelihood is not finite".into()));
        }
        // the covariance load makes the M-step inexact, so near convergence a
        // step can lose likelihood; such a step is rejected
        if let (Some(&prev), Some(p)) = (history.last(), previous.take()) {
            if ll < prev {
                gmm = p;
                break;
            }
        }
        let converged = history.last().is_some_and(|&prev: &f64| ll - prev < tol);
        history.push(ll);
        if converged {
            break;
        }
        previous = Some(gmm.clone());
        m_step(x, &resp, k, reg, &global_cov, &mut gmm);
    }
    Ok(GmmFit {
        mixture: gmm,
        loglik: history,
    })
}

fn m_step(x: &Matrix, resp: &[f64], k: usize, reg: f64, fallback: &Matrix, gmm: &mut GaussianMixture) {
    let n = x.rows();
    let mut w = vec![0.0; n];
    let mut nks = vec![0.0; k];
    for c in 0..k {
        for i in 0..n {
            w[i] = resp[i * k + c];
        }
        let nk: f64 = w.iter().sum();
        nks[c] = nk;
        // a component with (almost) no support keeps its previous parameters
        if nk < 1e-8 {
            continue;
        }
        let (_, mean, cov) = weighted_moments(x, &w, reg);
        gmm.means[c] = mean;
        gmm.covariances[c] = if cov.is_finite() { cov } else { fallback.clone() };
    }
    let total: f64 = nks.iter().sum();
    for (wt, nk) in gmm.weights.iter_mut().zip(&nks) {
        *wt = nk.max(1e-12) / total;
    }
    let s: f64 = gmm.weights.iter().sum();
    gmm.weights.iter_mut().for_each(|v| *v /= s);
}

/// Vowel and non-vowel mixtures over one frame feature definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VowelDetector {
    pub features: FrameFeatureConfig,
    pub vowel: GaussianMixture,
    pub other: GaussianMixture,
}

impl VowelDetector {
    pub fn validate(&self) -> Result<()> {
        self.vowel.validate()?;
        self.other.validate()?;
        if self.vowel.dim() != self.features.dim() || self.other.dim() != self.features.dim() {
            return Err(Error::Data(format!(
                "mixture dimensions ({}, {}) do not match the {}-dimensional frame features",
                self.vowel.dim(),
                self.other.dim(),
                self.features.dim()
            )));
        }
        Ok(())
    }
}

fn subsample(x: &Matrix, max: usize) -> Matrix {
    if x.rows() <= max {
        return x.clone();
    }
    let step = x.rows() as f64 / max as f64;
    let mut data = Vec::with_capacity(max * x.cols());
    for i in 0..max {
        data.extend_from_slice(x.row(libm::floor(i as f64 * step) as usize));
    }
    Matrix::from_vec(max, x.cols(), data).expect("rows are complete")
}

/// Trains both mixtures from recordings with vowel annotation tiers.
pub fn train_detector(recordings: &[(&AudioBuffer, &SegmentTier)], cfg: &GmmConfig, seed: u64) -> Result<VowelDetector> {
    cfg.validate()?;
    let d = cfg.features.dim();
    let (mut vowel, mut other) = (Vec::new(), Vec::new());
    for (audio, tier) in recordings {
        let (f, _) = frame_features(audio, &cfg.features);
        let (v, o) = split_frames(&f, tier, &cfg.features);
        vowel.extend_from_slice(v.as_slice());
        other.extend_from_slice(o.as_slice());
    }
    let vowel = Matrix::from_vec(vowel.len() / d, d, vowel)?;
    let other = Matrix::from_vec(other.len() / d, d, other)?;
    let fit = |x: &Matrix, s: u64| gmm_fit(&subsample(x, cfg.max_train_frames), cfg.components, cfg.max_iter, cfg.tol, cfg.reg, s);
    Ok(VowelDetector {
        features: cfg.features.clone(),
        vowel: fit(&vowel, seed)?.mixture,
        other: fit(&other, crate::rng::derive_seed(seed, 1))?.mixture,
    })
}

/// Per-frame log-likelihood ratio of vowel to non-vowel.
pub fn frame_llr(features: &Matrix, detector: &VowelDetector) -> Result<Vec<f64>> {
    detector.validate()?;
    let v = detector.vowel.prepare()?;
    let o = detector.other.prepare()?;
    Ok((0..features.rows())
        .map(|i| v.log_density(features.row(i)) - o.log_density(features.row(i)))
        .collect())
}

/// Vowel intervals of `audio`: frames with positive LLR above the energy
/// gate form runs; runs separated by less than `merge_gap_s` are merged,
/// then runs shorter than `min_duration_s` are dropped.
pub fn detect_vowel_intervals(audio: &AudioBuffer, detector: &VowelDetector, cfg: &GmmConfig) -> Result<SegmentTier> {
    let fc = &detector.features;
    let (features, levels) = frame_features(audio, fc);
    let llr = frame_llr(&features, detector)?;
    let voiced: Vec<bool> = llr
        .iter()
        .zip(&levels)
        .map(|(l, db)| *l > 0.0 && *db >= cfg.energy_gate_db)
        .collect();
    let mut runs: Vec<(f64, f64)> = Vec::new();
    let mut i = 0;
    while i < voiced.len() {
        if !voiced[i] {
            i += 1;
            continue;
        }
        let a = i;
        while i < voiced.len() && voiced[i] {
            i += 1;
        }
        let start = (frame_center(a, fc) - fc.hop_s / 2.0).max(0.0);
        let end = (frame_center(i - 1, fc) + fc.hop_s / 2.0).min(audio.duration());
        match runs.last_mut() {
            Some(last) if start - last.1 < cfg.merge_gap_s => last.1 = end,
            _ => runs.push((start, end)),
        }
    }
    let intervals = runs
        .into_iter()
        .filter(|(s, e)| e - s >= cfg.min_duration_s && e > s)
        .map(|(s, e)| Interval::new(s, e, "vowel"))
        .collect();
    SegmentTier::new("vowel", intervals)
}
