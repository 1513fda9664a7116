//! The 20-dimensional per-vowel speech feature vector (phonation,
//! articulation, prosody, intelligibility) and the vowel-space metrics
//! computed across a subject's vowels.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dsp::{self, AudioBuffer, DspConfig, FormantStats, IntensityStats};
use crate::model::{SyllableObservation, VowelClass};
use crate::{Error, Result};

pub const PAPI_DIM: usize = 20;

pub const PAPI_FEATURE_NAMES: [&str; PAPI_DIM] = [
    "jitter",
    "shimmer",
    "hnr_db",
    "gne",
    "vfer",
    "jaw_distance_hz",
    "tongue_distance_hz",
    "movement_degree",
    "vsa_hz2",
    "fcr",
    "vai",
    "f1_std_hz",
    "f2_std_hz",
    "f3_std_hz",
    "intensity_std_db",
    "mean_intensity_db",
    "syllable_duration_s",
    "vowel_duration_s",
    "gop_vowel",
    "gop_consonant",
];

/// Which parts of a vector are substitutes rather than measurements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PapiFlags {
    pub phonation_defaulted: bool,
    pub formants_defaulted: bool,
    pub articulation_defaulted: bool,
    pub gop_missing: bool,
}

impl PapiFlags {
    pub fn any(&self) -> bool {
        self.phonation_defaulted || self.formants_defaulted || self.articulation_defaulted || self.gop_missing
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PapiVector {
    pub jitter: f64,
    pub shimmer: f64,
    pub hnr_db: f64,
    pub gne: f64,
    pub vfer: f64,
    pub jaw_distance_hz: f64,
    pub tongue_distance_hz: f64,
    pub movement_degree: f64,
    pub vsa_hz2: f64,
    pub fcr: f64,
    pub vai: f64,
    pub f1_std_hz: f64,
    pub f2_std_hz: f64,
    pub f3_std_hz: f64,
    pub intensity_std_db: f64,
    pub mean_intensity_db: f64,
    pub syllable_duration_s: f64,
    pub vowel_duration_s: f64,
    pub gop_vowel: f64,
    pub gop_consonant: f64,
    #[serde(default)]
    pub flags: PapiFlags,
}

impl PapiVector {
    pub fn to_array(&self) -> [f64; PAPI_DIM] {
        [
            self.jitter,
            self.shimmer,
            self.hnr_db,
            self.gne,
            self.vfer,
            self.jaw_distance_hz,
            self.tongue_distance_hz,
            self.movement_degree,
            self.vsa_hz2,
            self.fcr,
            self.vai,
            self.f1_std_hz,
            self.f2_std_hz,
            self.f3_std_hz,
            self.intensity_std_db,
            self.mean_intensity_db,
            self.syllable_duration_s,
            self.vowel_duration_s,
            self.gop_vowel,
            self.gop_consonant,
        ]
    }

    pub fn from_array(a: [f64; PAPI_DIM], flags: PapiFlags) -> PapiVector {
        PapiVector {
            jitter: a[0],
            shimmer: a[1],
            hnr_db: a[2],
            gne: a[3],
            vfer: a[4],
            jaw_distance_hz: a[5],
            tongue_distance_hz: a[6],
            movement_degree: a[7],
            vsa_hz2: a[8],
            fcr: a[9],
            vai: a[10],
            f1_std_hz: a[11],
            f2_std_hz: a[12],
            f3_std_hz: a[13],
            intensity_std_db: a[14],
            mean_intensity_db: a[15],
            syllable_duration_s: a[16],
            vowel_duration_s: a[17],
            gop_vowel: a[18],
            gop_consonant: a[19],
            flags,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VsaMode {
    /// /a/-/i/-/u/ triangle.
    #[default]
    Triangle,
    /// Convex hull of every available vowel.
    Hull,
}

/// Substitution values for failed measurements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PapiDefaults {
    pub jitter: f64,
    pub shimmer: f64,
    pub hnr_db: f64,
    pub gne: f64,
    pub vfer: f64,
    pub formant_std_hz: f64,
    pub jaw_distance_hz: f64,
    pub tongue_distance_hz: f64,
    pub movement_degree: f64,
    pub vsa_hz2: f64,
    pub fcr: f64,
    pub gop: f64,
}

impl Default for PapiDefaults {
    fn default() -> Self {
        PapiDefaults {
            jitter: 0.0,
            shimmer: 0.0,
            hnr_db: 0.0,
            gne: 0.0,
            vfer: 0.0,
            formant_std_hz: 0.0,
            jaw_distance_hz: 0.0,
            tongue_distance_hz: 0.0,
            movement_degree: 1.0,
            vsa_hz2: 0.0,
            fcr: 1.0,
            gop: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PapiConfig {
    pub vsa_mode: VsaMode,
    pub defaults: PapiDefaults,
}

impl PapiConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.defaults;
        let all = [
            d.jitter,
            d.shimmer,
            d.hnr_db,
            d.gne,
            d.vfer,
            d.formant_std_hz,
            d.jaw_distance_hz,
            d.tongue_distance_hz,
            d.movement_degree,
            d.vsa_hz2,
            d.fcr,
            d.gop,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("papi.defaults must be finite".into()));
        }
        if d.fcr == 0.0 {
            return Err(Error::Config("papi.defaults.fcr must be non-zero".into()));
        }
        Ok(())
    }
}

/// Mean (F1, F2) per vowel class.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VowelFormantSet {
    entries: [Option<(f64, f64)>; VowelClass::COUNT],
}

impl VowelFormantSet {
    pub fn new() -> VowelFormantSet {
        VowelFormantSet::default()
    }

    /// Requires `0 < F1 < F2`.
    pub fn insert(&mut self, v: VowelClass, f1: f64, f2: f64) -> Result<()> {
        if !(f1 > 0.0 && f1 < f2 && f2.is_finite()) {
            return Err(Error::Degenerate(format!(
                "vowel {v}: need 0 < F1 < F2, got ({f1}, {f2})"
            )));
        }
        self.entries[v.index()] = Some((f1, f2));
        Ok(())
    }

    pub fn with(mut self, v: VowelClass, f1: f64, f2: f64) -> Result<VowelFormantSet> {
        self.insert(v, f1, f2)?;
        Ok(self)
    }

    pub fn get(&self, v: VowelClass) -> Option<(f64, f64)> {
        self.entries[v.index()]
    }

    fn require(&self, v: VowelClass) -> Result<(f64, f64)> {
        self.get(v).ok_or_else(|| Error::MissingVowel(format!("{v}")))
    }

    pub fn present(&self) -> impl Iterator<Item = (VowelClass, (f64, f64))> + '_ {
        VowelClass::ALL.iter().filter_map(move |&v| self.get(v).map(|f| (v, f)))
    }
}

fn triangle_area(p: (f64, f64), q: (f64, f64), r: (f64, f64)) -> f64 {
    0.5 * (p.0 * (q.1 - r.1) + q.0 * (r.1 - p.1) + r.0 * (p.1 - q.1)).abs()
}

/// Shoelace area of the /a/-/i/-/u/ triangle in the (F1, F2) plane, Hz².
pub fn vowel_space_area(s: &VowelFormantSet) -> Result<f64> {
    let a = s.require(VowelClass::A)?;
    let i = s.require(VowelClass::I)?;
    let u = s.require(VowelClass::U)?;
    Ok(triangle_area(a, i, u))
}

/// Area of the convex hull of every vowel present (at least three).
pub fn vowel_space_hull_area(s: &VowelFormantSet) -> Result<f64> {
    let mut pts: Vec<(f64, f64)> = s.present().map(|(_, f)| f).collect();
    if pts.len() < 3 {
        return Err(Error::MissingVowel(format!(
            "hull needs three vowels, {} present",
            pts.len()
        )));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let cross = |o: (f64, f64), a: (f64, f64), b: (f64, f64)| (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0);
    // monotone chain
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for pass in 0..2 {
        let start = hull.len();
        let iter: Vec<(f64, f64)> = if pass == 0 { pts.clone() } else { pts.iter().rev().copied().collect() };
        for p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    let n = hull.len();
    let twice: f64 = (0..n)
        .map(|k| {
            let (p, q) = (hull[k], hull[(k + 1) % n]);
            p.0 * q.1 - q.0 * p.1
        })
        .sum();
    Ok(0.5 * twice.abs())
}

/// Formant centralization ratio `(F2u + F2a + F1i + F1u) / (F2i + F1a)`.
pub fn fcr(s: &VowelFormantSet) -> Result<f64> {
    let a = s.require(VowelClass::A)?;
    let i = s.require(VowelClass::I)?;
    let u = s.require(VowelClass::U)?;
    let den = i.1 + a.0;
    if den == 0.0 {
        return Err(Error::Degenerate("F2i + F1a is zero".into()));
    }
    Ok((u.1 + a.1 + i.0 + u.0) / den)
}

/// Vowel articulation index, the reciprocal of [`fcr`].
pub fn vai(s: &VowelFormantSet) -> Result<f64> {
    let a = s.require(VowelClass::A)?;
    let i = s.require(VowelClass::I)?;
    let u = s.require(VowelClass::U)?;
    let den = u.1 + a.1 + i.0 + u.0;
    if den == 0.0 {
        return Err(Error::Degenerate("F2u + F2a + F1i + F1u is zero".into()));
    }
    Ok((i.1 + a.0) / den)
}

/// F2i / F2u.
pub fn movement_degree(s: &VowelFormantSet) -> Result<f64> {
    let i = s.require(VowelClass::I)?;
    let u = s.require(VowelClass::U)?;
    if u.1 == 0.0 {
        return Err(Error::Degenerate("F2u is zero".into()));
    }
    Ok(i.1 / u.1)
}

/// |F2i − F2u|: front-back tongue excursion.
pub fn tongue_distance(s: &VowelFormantSet) -> Result<f64> {
    let i = s.require(VowelClass::I)?;
    let u = s.require(VowelClass::U)?;
    Ok((i.1 - u.1).abs())
}

/// |F1a − F1i|: open-close jaw excursion.
pub fn jaw_distance(s: &VowelFormantSet) -> Result<f64> {
    let a = s.require(VowelClass::A)?;
    let i = s.require(VowelClass::I)?;
    Ok((a.0 - i.0).abs())
}

/// Vowel-space metrics shared by all of a subject's vowels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArticulationMetrics {
    pub jaw_distance_hz: f64,
    pub tongue_distance_hz: f64,
    pub movement_degree: f64,
    pub vsa_hz2: f64,
    pub fcr: f64,
    pub vai: f64,
    pub defaulted: bool,
}

impl ArticulationMetrics {
    /// Metrics of `s`, or the configured defaults (flagged) when a corner
    /// vowel is missing or degenerate.
    pub fn from_set(s: &VowelFormantSet, cfg: &PapiConfig) -> ArticulationMetrics {
        let measured = (|| -> Result<ArticulationMetrics> {
            let vsa = match cfg.vsa_mode {
                VsaMode::Triangle => vowel_space_area(s)?,
                VsaMode::Hull => vowel_space_hull_area(s)?,
            };
            Ok(ArticulationMetrics {
                jaw_distance_hz: jaw_distance(s)?,
                tongue_distance_hz: tongue_distance(s)?,
                movement_degree: movement_degree(s)?,
                vsa_hz2: vsa,
                fcr: fcr(s)?,
                vai: vai(s)?,
                defaulted: false,
            })
        })();
        measured.unwrap_or_else(|_| ArticulationMetrics::defaults(cfg))
    }

    pub fn defaults(cfg: &PapiConfig) -> ArticulationMetrics {
        let d = &cfg.defaults;
        ArticulationMetrics {
            jaw_distance_hz: d.jaw_distance_hz,
            tongue_distance_hz: d.tongue_distance_hz,
            movement_degree: d.movement_degree,
            vsa_hz2: d.vsa_hz2,
            fcr: d.fcr,
            vai: 1.0 / d.fcr,
            defaulted: true,
        }
    }
}

/// Raw acoustic measurements of one vowel interval. `None` marks a
/// measurement that failed for a non-numeric reason (unvoiced, too short,
/// no formants).
#[derive(Debug, Clone, PartialEq)]
pub struct VowelMeasurements {
    pub jitter: Option<f64>,
    pub shimmer: Option<f64>,
    pub hnr_db: Option<f64>,
    pub gne: Option<f64>,
    pub vfer: Option<f64>,
    pub formants: Option<FormantStats>,
    pub intensity: IntensityStats,
    pub duration_s: f64,
}

fn soft<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_numeric() => Err(e),
        Err(_) => Ok(None),
    }
}

/// Runs every estimator on a vowel segment.
pub fn measure_vowel(segment: &AudioBuffer, cfg: &DspConfig) -> Result<VowelMeasurements> {
    let pulses = soft(dsp::estimate_pitch_track(segment, cfg))?;
    let (jitter, shimmer) = match &pulses {
        Some(p) => (soft(dsp::jitter_local(p))?, soft(dsp::shimmer_local(p))?),
        None => (None, None),
    };
    let formants = match soft(dsp::lpc_formants(segment, cfg))? {
        Some(track) => soft(dsp::formant_stats(&track))?,
        None => None,
    };
    Ok(VowelMeasurements {
        jitter,
        shimmer,
        hnr_db: soft(dsp::hnr_db(segment, cfg))?,
        gne: soft(dsp::gne(segment, cfg))?,
        vfer: soft(dsp::vfer(segment, cfg))?,
        formants,
        intensity: dsp::intensity_stats(segment, cfg.intensity_window_s, cfg.intensity_hop_s, cfg.intensity_floor_db),
        duration_s: segment.duration(),
    })
}

/// Subject formant set from observations carrying a single vowel class:
/// per-vowel mean of their (F1, F2) means.
pub fn subject_formant_set<'a>(
    items: impl IntoIterator<Item = (&'a SyllableObservation, &'a VowelMeasurements)>,
) -> VowelFormantSet {
    let mut sums = [(0.0, 0.0, 0usize); VowelClass::COUNT];
    for (obs, m) in items {
        let (Some(v), Some(f)) = (obs.vowel_classes.single_class(), m.formants.as_ref()) else {
            continue;
        };
        let e = &mut sums[v.index()];
        e.0 += f.mean[0];
        e.1 += f.mean[1];
        e.2 += 1;
    }
    let mut set = VowelFormantSet::new();
    for v in VowelClass::ALL {
        let (f1, f2, n) = sums[v.index()];
        if n > 0 {
            // a degenerate mean simply leaves the vowel absent
            let _ = set.insert(v, f1 / n as f64, f2 / n as f64);
        }
    }
    set
}

/// Builds the feature vector of one observation from its vowel
/// measurements and the subject's articulation metrics.
pub fn assemble_from_measurements(
    obs: &SyllableObservation,
    vowel_interval: (f64, f64),
    m: &VowelMeasurements,
    articulation: &ArticulationMetrics,
    cfg: &PapiConfig,
) -> Result<PapiVector> {
    let (vs, ve) = vowel_interval;
    const EPS: f64 = 1e-9;
    if !(vs < ve && vs >= obs.start - EPS && ve <= obs.end + EPS) {
        return Err(Error::Input(format!(
            "vowel interval [{vs}, {ve}] not inside observation {} [{}, {}]",
            obs.obs_id, obs.start, obs.end
        )));
    }
    let d = &cfg.defaults;
    let mut flags = PapiFlags::default();
    let mut pick = |v: Option<f64>, default: f64| {
        v.unwrap_or_else(|| {
            flags.phonation_defaulted = true;
            default
        })
    };
    let jitter = pick(m.jitter, d.jitter);
    let shimmer = pick(m.shimmer, d.shimmer);
    let hnr_db = pick(m.hnr_db, d.hnr_db);
    let gne = pick(m.gne, d.gne);
    let vfer = pick(m.vfer, d.vfer);
    let fstd = match &m.formants {
        Some(f) => f.std,
        None => {
            flags.formants_defaulted = true;
            [d.formant_std_hz; 3]
        }
    };
    flags.articulation_defaulted = articulation.defaulted;
    let gop_vowel = obs.gop_vowel.unwrap_or(d.gop);
    let gop_consonant = obs.gop_consonant.unwrap_or(d.gop);
    flags.gop_missing = obs.gop_vowel.is_none() || obs.gop_consonant.is_none();
    let v = PapiVector {
        jitter,
        shimmer,
        hnr_db,
        gne,
        vfer,
        jaw_distance_hz: articulation.jaw_distance_hz,
        tongue_distance_hz: articulation.tongue_distance_hz,
        movement_degree: articulation.movement_degree,
        vsa_hz2: articulation.vsa_hz2,
        fcr: articulation.fcr,
        vai: articulation.vai,
        f1_std_hz: fstd[0],
        f2_std_hz: fstd[1],
        f3_std_hz: fstd[2],
        intensity_std_db: m.intensity.std_db,
        mean_intensity_db: m.intensity.mean_db,
        syllable_duration_s: obs.duration(),
        vowel_duration_s: ve - vs,
        gop_vowel,
        gop_consonant,
        flags,
    };
    if !v.is_finite() {
        return Err(Error::Numeric(format!("non-finite feature for observation {}", obs.obs_id)));
    }
    Ok(v)
}

/// Measures the vowel interval of `audio` (a whole recording, times in
/// seconds) and assembles the observation's feature vector.
pub fn assemble_papi(
    obs: &SyllableObservation,
    audio: &AudioBuffer,
    vowel_interval: (f64, f64),
    subject_set: &VowelFormantSet,
    cfg: &PapiConfig,
    dsp_cfg: &DspConfig,
) -> Result<PapiVector> {
    let segment = audio.slice(vowel_interval.0, vowel_interval.1);
    let m = measure_vowel(&segment, dsp_cfg)?;
    let art = ArticulationMetrics::from_set(subject_set, cfg);
    assemble_from_measurements(obs, vowel_interval, &m, &art, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn example_set() -> VowelFormantSet {
        VowelFormantSet::new()
            .with(VowelClass::A, 800.0, 1200.0)
            .unwrap()
            .with(VowelClass::I, 300.0, 2300.0)
            .unwrap()
            .with(VowelClass::U, 350.0, 800.0)
            .unwrap()
    }

    #[test]
    fn hand_examples() {
        let s = example_set();
        assert!((vowel_space_area(&s).unwrap() - 347_500.0).abs() < 1e-6);
        assert!((fcr(&s).unwrap() - 2650.0 / 3100.0).abs() < 1e-12);
        assert!((fcr(&s).unwrap() * vai(&s).unwrap() - 1.0).abs() < 1e-12);
        assert!((movement_degree(&s).unwrap() - 2.875).abs() < 1e-12);
        assert_eq!(tongue_distance(&s).unwrap(), 1500.0);
        assert_eq!(jaw_distance(&s).unwrap(), 500.0);
    }

    #[test]
    fn missing_and_degenerate() {
        let s = VowelFormantSet::new().with(VowelClass::A, 800.0, 1200.0).unwrap();
        assert!(matches!(vowel_space_area(&s), Err(Error::MissingVowel(_))));
        assert!(matches!(jaw_distance(&s), Err(Error::MissingVowel(_))));
        assert!(VowelFormantSet::new().with(VowelClass::A, 1200.0, 800.0).is_err());
        let same = VowelFormantSet::new()
            .with(VowelClass::I, 300.0, 1000.0)
            .unwrap()
            .with(VowelClass::U, 300.0, 1000.0)
            .unwrap();
        assert_eq!(movement_degree(&same).unwrap(), 1.0);
        assert_eq!(tongue_distance(&same).unwrap(), 0.0);
    }

    #[test]
    fn collinear_area_zero() {
        let s = VowelFormantSet::new()
            .with(VowelClass::A, 300.0, 1000.0)
            .unwrap()
            .with(VowelClass::I, 400.0, 1500.0)
            .unwrap()
            .with(VowelClass::U, 500.0, 2000.0)
            .unwrap();
        assert_eq!(vowel_space_area(&s).unwrap(), 0.0);
    }

    #[test]
    fn hull_of_triangle_equals_triangle() {
        let s = example_set();
        assert!((vowel_space_hull_area(&s).unwrap() - 347_500.0).abs() < 1e-6);
        // an interior vowel leaves the hull unchanged
        let inner = s.with(VowelClass::E, 480.0, 1400.0).unwrap();
        assert!((vowel_space_hull_area(&inner).unwrap() - 347_500.0).abs() < 1e-6);
        let outer = s.with(VowelClass::O, 900.0, 2000.0).unwrap();
        assert!(vowel_space_hull_area(&outer).unwrap() > 347_500.0);
    }

    fn formant() -> impl Strategy<Value = (f64, f64)> {
        (100.0f64..1000.0, 10.0f64..2500.0).prop_map(|(f1, gap)| (f1, f1 + gap))
    }

    proptest! {
        #[test]
        fn vsa_translation_and_scaling(a in formant(), i in formant(), u in formant(),
                                       dx in 0.0f64..200.0, extra in 0.0f64..200.0, c in 0.2f64..5.0) {
            let dy = dx + extra;
            let set = |f: &dyn Fn((f64, f64)) -> (f64, f64)| {
                VowelFormantSet::new()
                    .with(VowelClass::A, f(a).0, f(a).1).unwrap()
                    .with(VowelClass::I, f(i).0, f(i).1).unwrap()
                    .with(VowelClass::U, f(u).0, f(u).1).unwrap()
            };
            let base = vowel_space_area(&set(&|p| p)).unwrap();
            let moved = vowel_space_area(&set(&|p| (p.0 + dx, p.1 + dy))).unwrap();
            let scaled = vowel_space_area(&set(&|p| (c * p.0, c * p.1))).unwrap();
            let tol = 1e-9 * (1.0 + base) * 1e3;
            prop_assert!((moved - base).abs() <= tol);
            prop_assert!((scaled - c * c * base).abs() <= tol * c * c);
            let s = set(&|p| p);
            prop_assert!((fcr(&s).unwrap() * vai(&s).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn vsa_vertex_permutation(a in formant(), i in formant(), u in formant()) {
            let s1 = VowelFormantSet::new()
                .with(VowelClass::A, a.0, a.1).unwrap()
                .with(VowelClass::I, i.0, i.1).unwrap()
                .with(VowelClass::U, u.0, u.1).unwrap();
            let s2 = VowelFormantSet::new()
                .with(VowelClass::A, u.0, u.1).unwrap()
                .with(VowelClass::I, a.0, a.1).unwrap()
                .with(VowelClass::U, i.0, i.1).unwrap();
            let (x, y) = (vowel_space_area(&s1).unwrap(), vowel_space_area(&s2).unwrap());
            prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x));
        }
    }

    #[test]
    fn fcr_rises_under_contraction() {
        let canon = [
            (VowelClass::A, (800.0, 1250.0)),
            (VowelClass::I, (300.0, 2300.0)),
            (VowelClass::U, (350.0, 750.0)),
        ];
        let c1 = canon.iter().map(|c| c.1 .0).sum::<f64>() / 3.0;
        let c2 = canon.iter().map(|c| c.1 .1).sum::<f64>() / 3.0;
        let mut prev = f64::INFINITY;
        for step in 1..=20 {
            let t = step as f64 / 20.0;
            let mut s = VowelFormantSet::new();
            for (v, (f1, f2)) in canon {
                s.insert(v, c1 + t * (f1 - c1), c2 + t * (f2 - c2)).unwrap();
            }
            let r = fcr(&s).unwrap();
            assert!(r <= prev + 1e-12, "fcr must not increase with t");
            prev = r;
        }
    }

    fn obs() -> SyllableObservation {
        SyllableObservation::new("o1", "S1", "R1", 1.0, 1.5, "ba").unwrap()
    }

    fn measurements() -> VowelMeasurements {
        VowelMeasurements {
            jitter: Some(0.01),
            shimmer: None,
            hnr_db: Some(20.0),
            gne: Some(0.9),
            vfer: Some(3.0),
            formants: None,
            intensity: IntensityStats {
                mean_db: -20.0,
                std_db: 2.0,
            },
            duration_s: 0.4,
        }
    }

    #[test]
    fn defaults_and_flags() {
        let cfg = PapiConfig::default();
        let art = ArticulationMetrics::from_set(&example_set(), &cfg);
        assert!(!art.defaulted);
        let v = assemble_from_measurements(&obs(), (1.1, 1.5), &measurements(), &art, &cfg).unwrap();
        assert!(v.flags.phonation_defaulted && v.flags.formants_defaulted && v.flags.gop_missing);
        assert!(!v.flags.articulation_defaulted);
        assert_eq!(v.shimmer, 0.0);
        assert_eq!((v.gop_vowel, v.gop_consonant), (0.0, 0.0));
        assert!((v.syllable_duration_s - 0.5).abs() < 1e-12);
        assert!((v.vowel_duration_s - 0.4).abs() < 1e-12);
        assert!((v.fcr * v.vai - 1.0).abs() < 1e-9);
        assert_eq!(PapiVector::from_array(v.to_array(), v.flags), v);

        let missing = ArticulationMetrics::from_set(&VowelFormantSet::new(), &cfg);
        assert!(missing.defaulted);
        assert!(assemble_from_measurements(&obs(), (0.5, 1.2), &measurements(), &art, &cfg).is_err());
    }

    #[test]
    fn shared_articulation_across_observations() {
        let cfg = PapiConfig::default();
        let art = ArticulationMetrics::from_set(&example_set(), &cfg);
        let o2 = SyllableObservation::new("o2", "S1", "R1", 2.0, 2.6, "mi").unwrap();
        let a = assemble_from_measurements(&obs(), (1.1, 1.5), &measurements(), &art, &cfg).unwrap();
        let b = assemble_from_measurements(&o2, (2.1, 2.6), &measurements(), &art, &cfg).unwrap();
        assert_eq!((a.vsa_hz2, a.fcr, a.vai), (b.vsa_hz2, b.fcr, b.vai));
    }

    #[test]
    fn clean_synthetic_vowel() {
        use crate::synth::{synth_vowel, SynthConfig, SynthProfile};
        let sc = SynthConfig::default();
        let p = SynthProfile::new(0.0, 95.0, 2, &sc).unwrap();
        let audio = synth_vowel(VowelClass::A, &p, 0.5, &sc).unwrap();
        let o = SyllableObservation::new("x", "S", "R", 0.0, 0.5, "a").unwrap();
        let cfg = PapiConfig::default();
        let v = assemble_papi(&o, &audio, (0.0, 0.5), &example_set(), &cfg, &DspConfig::default()).unwrap();
        let again = assemble_papi(&o, &audio, (0.0, 0.5), &example_set(), &cfg, &DspConfig::default()).unwrap();
        assert_eq!(v.to_array().map(f64::to_bits), again.to_array().map(f64::to_bits));
        assert!(v.jitter < 0.005);
        assert!(!v.flags.phonation_defaulted);
        let m = measure_vowel(&audio, &DspConfig::default()).unwrap();
        let f = m.formants.unwrap();
        let canon = sc.formants.a;
        for k in 0..3 {
            assert!((f.mean[k] - canon[k]).abs() / canon[k] < 0.05);
        }
    }
}
