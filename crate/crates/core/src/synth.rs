//! Severity-controlled synthetic corpus: source-filter vowels, a parametric
//! mouth model for lip landmarks, and ground-truth FDA scores.
//!
//! Severity `s ∈ [0, 1]` drives every degradation linearly: period jitter,
//! amplitude shimmer, formant centralization toward the vowel centroid,
//! smaller and slower mouth opening, and lip tremor.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dsp::AudioBuffer;
use crate::lip::{LandmarkFrame, LandmarkSequence, LipIndexMap, Point};
use crate::model::{
    DatasetManifest, RecordingEntry, SubjectEntry, TargetKind, VowelClass, MAX_TOTAL_SCORE,
    MIN_TOTAL_SCORE,
};
use crate::rng::{derive_seed, label_of, seeded, Rng};
use crate::segment::{Interval, SegmentTier};
use crate::{Error, Result};

/// One value per cardinal vowel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VowelTable<T> {
    pub a: T,
    pub o: T,
    pub e: T,
    pub i: T,
    pub u: T,
    /// ü
    pub v: T,
}

impl<T: Copy> VowelTable<T> {
    pub fn get(&self, v: VowelClass) -> T {
        match v {
            VowelClass::A => self.a,
            VowelClass::O => self.o,
            VowelClass::E => self.e,
            VowelClass::I => self.i,
            VowelClass::U => self.u,
            VowelClass::V => self.v,
        }
    }

    pub fn from_fn(mut f: impl FnMut(VowelClass) -> T) -> VowelTable<T> {
        VowelTable {
            a: f(VowelClass::A),
            o: f(VowelClass::O),
            e: f(VowelClass::E),
            i: f(VowelClass::I),
            u: f(VowelClass::U),
            v: f(VowelClass::V),
        }
    }
}

/// Synthetic syllables per vowel; the first is the bare vowel.
pub fn syllables_for(v: VowelClass) -> [&'static str; 3] {
    match v {
        VowelClass::A => ["a", "ba", "ma"],
        VowelClass::O => ["o", "po", "mo"],
        VowelClass::E => ["e", "de", "ge"],
        VowelClass::I => ["yi", "bi", "di"],
        VowelClass::U => ["wu", "bu", "du"],
        VowelClass::V => ["yu", "ju", "qu"],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub sample_rate: u32,
    /// Canonical (F1, F2, F3) in Hz. Conventional textbook-style values,
    /// not measurements.
    pub formants: VowelTable<[f64; 3]>,
    pub bandwidths_hz: [f64; 3],
    pub f0_min_hz: f64,
    pub f0_max_hz: f64,
    /// Pole of the one-pole low-pass shaping the glottal impulses.
    pub glottal_tilt: f64,
    pub jitter_at_max: f64,
    pub shimmer_at_max: f64,
    pub centralization_at_max: f64,
    pub lip_slowdown_at_max: f64,
    pub repetitions: usize,
    pub vowel_duration_s: f64,
    /// Relative vowel lengthening at s = 1.
    pub duration_growth: f64,
    pub onset_s: f64,
    pub onset_level: f64,
    pub gap_s: f64,
    pub dither: f64,
    pub fps: f64,
    /// Peak inner-lip opening in pixels at s = 0.
    pub lip_open_px: VowelTable<f64>,
    /// Lip half-width change at full opening (positive spreads).
    pub lip_spread_px: VowelTable<f64>,
    pub mouth_half_width_px: f64,
    pub open_ramp_s: f64,
    /// Tremor standard deviation in pixels at lip severity 1.
    pub tremor_px: f64,
    /// Draw lip severity independently of acoustic severity.
    pub independent_lip_severity: bool,
    /// Share of the score driven by lip severity when independent.
    pub lip_score_weight: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            sample_rate: 16_000,
            formants: VowelTable {
                a: [800.0, 1250.0, 2800.0],
                o: [550.0, 900.0, 2600.0],
                e: [500.0, 1350.0, 2550.0],
                i: [300.0, 2300.0, 3000.0],
                u: [350.0, 750.0, 2500.0],
                v: [300.0, 1900.0, 2450.0],
            },
            bandwidths_hz: [80.0, 100.0, 120.0],
            f0_min_hz: 85.0,
            f0_max_hz: 105.0,
            glottal_tilt: 0.97,
            jitter_at_max: 0.03,
            shimmer_at_max: 0.06,
            centralization_at_max: 0.6,
            lip_slowdown_at_max: 0.5,
            repetitions: 4,
            vowel_duration_s: 0.35,
            duration_growth: 0.4,
            onset_s: 0.04,
            onset_level: 0.02,
            gap_s: 0.12,
            dither: 1e-4,
            fps: 30.0,
            lip_open_px: VowelTable {
                a: 24.0,
                o: 16.0,
                e: 13.0,
                i: 7.0,
                u: 9.0,
                v: 8.0,
            },
            lip_spread_px: VowelTable {
                a: 2.0,
                o: -5.0,
                e: 1.0,
                i: 5.0,
                u: -6.0,
                v: -5.0,
            },
            mouth_half_width_px: 26.0,
            open_ramp_s: 0.06,
            tremor_px: 0.8,
            independent_lip_severity: false,
            lip_score_weight: 0.5,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("synth.{m}")));
        if self.sample_rate < crate::dsp::MIN_SAMPLE_RATE {
            return bad("sample_rate must be at least 16000");
        }
        for v in VowelClass::ALL {
            let f = self.formants.get(v);
            if !(0.0 < f[0] && f[0] < f[1] && f[1] < f[2] && f[2] < self.sample_rate as f64 / 2.0) {
                return bad("formants must satisfy 0 < F1 < F2 < F3 < Nyquist");
            }
            if self.lip_open_px.get(v) < 0.0 {
                return bad("lip_open_px must be non-negative");
            }
            if self.mouth_half_width_px + self.lip_spread_px.get(v) <= 0.0 {
                return bad("mouth half width plus spread must stay positive");
            }
        }
        if self.bandwidths_hz.iter().any(|&b| !(b > 0.0)) {
            return bad("bandwidths_hz must be positive");
        }
        if !(self.f0_min_hz > 0.0 && self.f0_min_hz <= self.f0_max_hz) {
            return bad("f0 range invalid");
        }
        if !(0.0..1.0).contains(&self.glottal_tilt) {
            return bad("glottal_tilt must lie in [0, 1)");
        }
        let levels = [
            self.jitter_at_max,
            self.shimmer_at_max,
            self.centralization_at_max,
            self.tremor_px,
            self.dither,
            self.onset_level,
            self.duration_growth,
        ];
        if levels.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return bad("degradation levels must be finite and non-negative");
        }
        if self.centralization_at_max > 1.0 {
            return bad("centralization_at_max must not exceed 1");
        }
        if !(0.0..1.0).contains(&self.lip_slowdown_at_max) {
            return bad("lip_slowdown_at_max must lie in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.lip_score_weight) {
            return bad("lip_score_weight must lie in [0, 1]");
        }
        if self.repetitions == 0 {
            return bad("repetitions must be at least 1");
        }
        if self.vowel_duration_s < 0.1 || self.onset_s < 0.0 || self.gap_s <= 0.0 {
            return bad("durations invalid (vowel at least 0.1 s)");
        }
        if self.fps < 10.0 {
            return bad("fps must be at least 10");
        }
        if !(self.open_ramp_s > 0.0) {
            return bad("open_ramp_s must be positive");
        }
        Ok(())
    }

    /// Mean canonical formant vector over the six vowels.
    pub fn centroid(&self) -> [f64; 3] {
        let mut c = [0.0; 3];
        for v in VowelClass::ALL {
            let f = self.formants.get(v);
            for k in 0..3 {
                c[k] += f[k] / 6.0;
            }
        }
        c
    }
}

/// Degradation parameters of one synthetic speaker.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthProfile {
    pub severity: f64,
    pub lip_severity: f64,
    pub f0: f64,
    pub seed: u64,
    pub formants: VowelTable<[f64; 3]>,
    pub jitter_level: f64,
    pub shimmer_level: f64,
    pub centralization: f64,
    pub lip_slowdown: f64,
}

impl SynthProfile {
    pub fn new(severity: f64, f0: f64, seed: u64, cfg: &SynthConfig) -> Result<SynthProfile> {
        SynthProfile::with_lip_severity(severity, severity, f0, seed, cfg)
    }

    pub fn with_lip_severity(
        severity: f64,
        lip_severity: f64,
        f0: f64,
        seed: u64,
        cfg: &SynthConfig,
    ) -> Result<SynthProfile> {
        for (what, x) in [("severity", severity), ("lip_severity", lip_severity)] {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::Range {
                    what,
                    value: x,
                    min: 0.0,
                    max: 1.0,
                });
            }
        }
        if !(f0 > 0.0 && f0.is_finite()) {
            return Err(Error::Config(format!("f0 must be positive, got {f0}")));
        }
        let t = severity * cfg.centralization_at_max;
        let c = cfg.centroid();
        let formants = VowelTable::from_fn(|v| {
            let f = cfg.formants.get(v);
            core::array::from_fn(|k| f[k] + t * (c[k] - f[k]))
        });
        Ok(SynthProfile {
            severity,
            lip_severity,
            f0,
            seed,
            formants,
            jitter_level: severity * cfg.jitter_at_max,
            shimmer_level: severity * cfg.shimmer_at_max,
            centralization: t,
            lip_slowdown: lip_severity * cfg.lip_slowdown_at_max,
        })
    }

    /// Centralized resonator frequencies for vowel `v`.
    pub fn target_formants(&self, v: VowelClass) -> [f64; 3] {
        self.formants.get(v)
    }
}

/// Rendered vowel plus the injected glottal cycle sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct VowelRender {
    pub audio: AudioBuffer,
    /// Injected periods in seconds.
    pub periods: Vec<f64>,
    /// Injected relative pulse amplitudes.
    pub amplitudes: Vec<f64>,
}

fn normal(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Adds a band-limited unit impulse at fractional sample position `at`
/// (Hann-windowed sinc).
fn add_impulse(x: &mut [f64], at: f64, amp: f64) {
    const HALF: isize = 16;
    let c = libm::floor(at) as isize;
    for k in -HALF..=HALF + 1 {
        let i = c + k;
        if i < 0 || i as usize >= x.len() {
            continue;
        }
        let dt = i as f64 - at;
        if dt.abs() >= HALF as f64 + 1.0 {
            continue;
        }
        let sinc = if dt == 0.0 { 1.0 } else { libm::sin(PI * dt) / (PI * dt) };
        let win = 0.5 + 0.5 * libm::cos(PI * dt / (HALF as f64 + 1.0));
        x[i as usize] += amp * sinc * win;
    }
}

/// Second-order digital resonator, unity gain at DC.
fn resonate(x: &mut [f64], freq: f64, bw: f64, rate: f64) {
    let t = 1.0 / rate;
    let c = -libm::exp(-2.0 * PI * bw * t);
    let b = 2.0 * libm::exp(-PI * bw * t) * libm::cos(2.0 * PI * freq * t);
    let a = 1.0 - b - c;
    let (mut y1, mut y2) = (0.0, 0.0);
    for s in x.iter_mut() {
        let y = a * *s + b * y1 + c * y2;
        y2 = y1;
        y1 = y;
        *s = y;
    }
}

/// Renders one sustained vowel. `take` selects an independent noise stream
/// so repeated tokens of a vowel differ.
pub fn render_vowel(
    vowel: VowelClass,
    profile: &SynthProfile,
    duration_s: f64,
    take: u64,
    cfg: &SynthConfig,
) -> Result<VowelRender> {
    if !(duration_s >= 0.1) {
        return Err(Error::Range {
            what: "vowel duration (s)",
            value: duration_s,
            min: 0.1,
            max: f64::INFINITY,
        });
    }
    let rate = cfg.sample_rate as f64;
    let n = libm::round(duration_s * rate) as usize;
    let label = label_of(&format!("vowel/{}/{take}", vowel.letter()));
    let mut rng = seeded(derive_seed(profile.seed, label));
    let t0 = 1.0 / profile.f0;
    let mut onsets = Vec::new();
    let mut amplitudes = Vec::new();
    let mut periods = Vec::new();
    // random initial phase so tokens are not sample-aligned
    let mut t = rng.random::<f64>() * t0 * 0.5;
    while t < duration_s {
        onsets.push(t);
        let a = (1.0 + profile.shimmer_level * normal(&mut rng)).max(0.1);
        amplitudes.push(a);
        let p = t0 * (1.0 + profile.jitter_level * normal(&mut rng)).clamp(0.5, 1.5);
        periods.push(p);
        t += p;
    }
    // the last onset's period runs past the end
    periods.pop();

    let mut x = alloc::vec![0.0; n];
    for (&on, &amp) in onsets.iter().zip(&amplitudes) {
        add_impulse(&mut x, on * rate, amp);
    }
    // glottal spectral tilt
    let mut y1 = 0.0;
    for s in x.iter_mut() {
        y1 = *s + cfg.glottal_tilt * y1;
        *s = y1;
    }
    let f = profile.target_formants(vowel);
    for k in 0..3 {
        resonate(&mut x, f[k], cfg.bandwidths_hz[k], rate);
    }
    let peak = x.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        for s in &mut x {
            *s *= 0.5 / peak;
        }
    }
    let audio = AudioBuffer::new(x, cfg.sample_rate)?;
    Ok(VowelRender {
        audio,
        periods,
        amplitudes,
    })
}

pub fn synth_vowel(vowel: VowelClass, profile: &SynthProfile, duration_s: f64, cfg: &SynthConfig) -> Result<AudioBuffer> {
    render_vowel(vowel, profile, duration_s, 0, cfg).map(|r| r.audio)
}

pub const LANDMARK_POINTS: usize = 68;

/// Open-hold-close envelope in [0, 1] for a vowel of length `dur`.
fn envelope(tau: f64, dur: f64, ramp: f64) -> f64 {
    if tau <= 0.0 || tau >= dur {
        return 0.0;
    }
    let r = ramp.min(dur / 2.0);
    let rise = (tau / r).min(1.0);
    let fall = ((dur - tau) / r).min(1.0);
    rise.min(fall)
}

/// Points of the 68-point face layout for mouth opening `open` (px) and
/// half-width `hw` (px). Non-mouth points stay fixed.
fn face_points(open: f64, hw: f64) -> Vec<Point> {
    let (cx, cy) = (160.0, 200.0);
    let mut p: Vec<Point> = (0..LANDMARK_POINTS)
        .map(|i| {
            let ang = 2.0 * PI * i as f64 / 48.0;
            (cx + 70.0 * libm::cos(ang), cy - 80.0 + 90.0 * libm::sin(ang))
        })
        .collect();
    let up = open / 2.0 + 7.0;
    let down = open / 2.0 + 9.0;
    // outer lip, clockwise from the left corner
    p[48] = (cx - hw, cy);
    p[49] = (cx - 2.0 * hw / 3.0, cy - 0.8 * up);
    p[50] = (cx - hw / 3.0, cy - up);
    p[51] = (cx, cy - up);
    p[52] = (cx + hw / 3.0, cy - up);
    p[53] = (cx + 2.0 * hw / 3.0, cy - 0.8 * up);
    p[54] = (cx + hw, cy);
    p[55] = (cx + 2.0 * hw / 3.0, cy + 0.8 * down);
    p[56] = (cx + hw / 3.0, cy + down);
    p[57] = (cx, cy + down);
    p[58] = (cx - hw / 3.0, cy + down);
    p[59] = (cx - 2.0 * hw / 3.0, cy + 0.8 * down);
    // inner lip
    let h = open / 2.0;
    p[60] = (cx - 0.8 * hw, cy);
    p[61] = (cx - hw / 2.0, cy - 0.7 * h);
    p[62] = (cx, cy - h);
    p[63] = (cx + hw / 2.0, cy - 0.7 * h);
    p[64] = (cx + 0.8 * hw, cy);
    p[65] = (cx + hw / 2.0, cy + 0.7 * h);
    p[66] = (cx, cy + h);
    p[67] = (cx - hw / 2.0, cy + 0.7 * h);
    p
}

/// Which vowel (if any) is active at a time, with its onset and length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MouthEvent {
    pub vowel: VowelClass,
    pub start: f64,
    pub duration: f64,
}

/// Landmark track over `[0, total_s)` for a series of vowel events.
pub fn synth_mouth_track(
    events: &[MouthEvent],
    profile: &SynthProfile,
    total_s: f64,
    fps: f64,
    cfg: &SynthConfig,
) -> Result<LandmarkSequence> {
    if fps < 10.0 {
        return Err(Error::Range {
            what: "fps",
            value: fps,
            min: 10.0,
            max: f64::INFINITY,
        });
    }
    let mut rng = seeded(derive_seed(profile.seed, label_of("lips")));
    let ramp = cfg.open_ramp_s / (1.0 - profile.lip_slowdown);
    let amp_scale = 1.0 - 0.5 * profile.lip_severity;
    let tremor = cfg.tremor_px * profile.lip_severity;
    let n_frames = libm::floor(total_s * fps) as usize + 1;
    let mut frames = Vec::with_capacity(n_frames);
    for k in 0..n_frames {
        let t = k as f64 / fps;
        let mut open = 0.0;
        let mut hw = cfg.mouth_half_width_px;
        for ev in events {
            let e = envelope(t - ev.start, ev.duration, ramp);
            if e > 0.0 {
                open = cfg.lip_open_px.get(ev.vowel) * amp_scale * e;
                hw += cfg.lip_spread_px.get(ev.vowel) * amp_scale * e;
            }
        }
        let mut points = face_points(open, hw);
        if tremor > 0.0 {
            for p in &mut points[48..68] {
                p.0 += tremor * normal(&mut rng);
                p.1 += tremor * normal(&mut rng);
            }
        }
        frames.push(LandmarkFrame { t, points });
    }
    LandmarkSequence::new(fps, frames, LipIndexMap::default())
}

/// Landmarks for a single vowel spanning the whole `duration_s`.
pub fn synth_landmarks(
    vowel: VowelClass,
    profile: &SynthProfile,
    duration_s: f64,
    fps: f64,
    cfg: &SynthConfig,
) -> Result<LandmarkSequence> {
    let ev = MouthEvent {
        vowel,
        start: 0.0,
        duration: duration_s,
    };
    synth_mouth_track(&[ev], profile, duration_s, fps, cfg)
}

/// Total FDA score for severity `s`.
pub fn total_score(s: f64) -> f64 {
    libm::round(MAX_TOTAL_SCORE - (MAX_TOTAL_SCORE - MIN_TOTAL_SCORE) * s)
}

pub fn sub_item_score(kind: TargetKind, s: f64, u: f64) -> f64 {
    libm::round(kind.scale_max() * (1.0 - s * (0.6 + 0.3 * u)))
}

/// Per-subject draw of the corpus plan.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectPlan {
    pub subject_id: String,
    pub profile: SynthProfile,
    /// Severity that determines the scores.
    pub score_severity: f64,
    pub scores: BTreeMap<TargetKind, f64>,
}

/// Severities, pitches and scores for `n` subjects.
pub fn plan_corpus(n_subjects: usize, seed: u64, cfg: &SynthConfig) -> Result<Vec<SubjectPlan>> {
    cfg.validate()?;
    if n_subjects < 2 {
        return Err(Error::Config(format!("corpus needs at least 2 subjects, got {n_subjects}")));
    }
    let mut rng = seeded(derive_seed(seed, label_of("plan")));
    let u: BTreeMap<TargetKind, f64> = TargetKind::SUB_ITEMS.iter().map(|&k| (k, rng.random::<f64>())).collect();
    let mut plans = Vec::with_capacity(n_subjects);
    for i in 0..n_subjects {
        let s: f64 = rng.random();
        let lip_draw: f64 = rng.random();
        let f0 = cfg.f0_min_hz + (cfg.f0_max_hz - cfg.f0_min_hz) * rng.random::<f64>();
        let (lip_s, score_s) = if cfg.independent_lip_severity {
            let w = cfg.lip_score_weight;
            (lip_draw, (1.0 - w) * s + w * lip_draw)
        } else {
            (s, s)
        };
        let subject_id = format!("S{:03}", i + 1);
        let subject_seed = derive_seed(seed, label_of(&subject_id));
        let profile = SynthProfile::with_lip_severity(s, lip_s, f0, subject_seed, cfg)?;
        let mut scores = BTreeMap::new();
        scores.insert(TargetKind::Total, total_score(score_s));
        for &k in &TargetKind::SUB_ITEMS {
            scores.insert(k, sub_item_score(k, score_s, u[&k]));
        }
        plans.push(SubjectPlan {
            subject_id,
            profile,
            score_severity: score_s,
            scores,
        });
    }
    Ok(plans)
}

/// One subject's rendered recording.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthRecording {
    pub recording_id: String,
    pub audio: AudioBuffer,
    pub landmarks: LandmarkSequence,
    pub syllables: SegmentTier,
    pub vowels: SegmentTier,
}

/// Renders all vowels × repetitions of a subject into one recording with
/// noise onsets, silence gaps and matching lip movement.
pub fn render_subject(plan: &SubjectPlan, cfg: &SynthConfig) -> Result<SynthRecording> {
    let profile = &plan.profile;
    let rate = cfg.sample_rate as f64;
    let vowel_dur = cfg.vowel_duration_s * (1.0 + cfg.duration_growth * profile.severity);
    let mut rng = seeded(derive_seed(profile.seed, label_of("recording")));
    let mut samples: Vec<f64> = Vec::new();
    let mut syllables = Vec::new();
    let mut vowels = Vec::new();
    let mut events = Vec::new();
    let push_silence = |samples: &mut Vec<f64>, secs: f64| {
        let n = libm::round(secs * rate) as usize;
        samples.extend(core::iter::repeat_n(0.0, n));
    };
    push_silence(&mut samples, cfg.gap_s);
    for rep in 0..cfg.repetitions {
        for v in VowelClass::ALL {
            let syl_start = samples.len() as f64 / rate;
            let n_onset = libm::round(cfg.onset_s * rate) as usize;
            for _ in 0..n_onset {
                samples.push(cfg.onset_level * (2.0 * rng.random::<f64>() - 1.0));
            }
            let vowel_start = samples.len() as f64 / rate;
            let take = (rep * VowelClass::COUNT + v.index()) as u64;
            let r = render_vowel(v, profile, vowel_dur, take, cfg)?;
            samples.extend_from_slice(r.audio.samples());
            let vowel_end = samples.len() as f64 / rate;
            let text = syllables_for(v)[rep % 3];
            syllables.push(Interval::new(syl_start, vowel_end, text));
            vowels.push(Interval::new(vowel_start, vowel_end, v.letter().to_string_lossy()));
            events.push(MouthEvent {
                vowel: v,
                start: vowel_start,
                duration: vowel_end - vowel_start,
            });
            push_silence(&mut samples, cfg.gap_s);
        }
    }
    if cfg.dither > 0.0 {
        for s in &mut samples {
            *s += cfg.dither * normal(&mut rng);
        }
    }
    let total = samples.len() as f64 / rate;
    let audio = AudioBuffer::new(samples, cfg.sample_rate)?;
    let landmarks = synth_mouth_track(&events, profile, total, cfg.fps, cfg)?;
    Ok(SynthRecording {
        recording_id: format!("{}_R1", plan.subject_id),
        audio,
        landmarks,
        syllables: SegmentTier::new("syllable", syllables)?,
        vowels: SegmentTier::new("vowel", vowels)?,
    })
}

/// Manifest for a planned corpus using the std crate's file naming
/// (`<recording>.wav`, `.TextGrid`, `.landmarks.csv`).
pub fn corpus_manifest(plans: &[SubjectPlan], cfg: &SynthConfig) -> DatasetManifest {
    let mut manifest = DatasetManifest::default();
    for p in plans {
        manifest.subjects.push(SubjectEntry {
            subject_id: p.subject_id.clone(),
            fda_scores: p.scores.clone(),
        });
        let rid = format!("{}_R1", p.subject_id);
        manifest.recordings.push(RecordingEntry {
            recording_id: rid.clone(),
            subject_id: p.subject_id.clone(),
            audio_path: format!("audio/{rid}.wav"),
            segment_path: format!("segments/{rid}.TextGrid"),
            landmark_path: Some(format!("landmarks/{rid}.landmarks.csv")),
            fps: Some(cfg.fps),
        });
    }
    manifest
}

trait LetterString {
    fn to_string_lossy(self) -> String;
}

impl LetterString for char {
    fn to_string_lossy(self) -> String {
        let mut s = String::new();
        s.push(self);
        s
    }
}
