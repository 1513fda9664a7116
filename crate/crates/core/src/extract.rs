//! From annotated recordings to per-observation features and network
//! ready vowel-group examples.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::dsp::{AudioBuffer, DspConfig};
use crate::gmm::{detect_vowel_intervals, GmmConfig, VowelDetector};
use crate::linalg::Matrix;
use crate::lip::{lip_feature_vector, LandmarkSequence, LipVector, LIP_DIM};
use crate::model::{SyllableObservation, VowelClass, VowelGroup};
use crate::papi::{
    assemble_from_measurements, measure_vowel, subject_formant_set, ArticulationMetrics, PapiConfig, PapiVector,
    VowelMeasurements, PAPI_DIM,
};
use crate::segment::SegmentTier;
use crate::train::GroupExample;
use crate::{Error, Result};

/// Names of the annotation tiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotationConfig {
    pub syllable_tier: String,
    /// Tier with vowel nuclei; when absent or without a match the GMM
    /// detector (if any) and then the whole syllable are used.
    pub vowel_tier: Option<String>,
    /// Tolerance when matching GOP rows to syllables.
    pub gop_tolerance_s: f64,
}

impl Default for AnnotationConfig {
    fn default() -> Self {
        AnnotationConfig {
            syllable_tier: "syllable".into(),
            vowel_tier: Some("vowel".into()),
            gop_tolerance_s: 0.01,
        }
    }
}

impl AnnotationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.syllable_tier.is_empty() {
            return Err(Error::Config("annotation.syllable_tier must be set".into()));
        }
        if !(self.gop_tolerance_s >= 0.0) {
            return Err(Error::Config("annotation.gop_tolerance_s must be non-negative".into()));
        }
        Ok(())
    }
}

/// One GOP sidecar row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GopEntry {
    pub recording_id: String,
    pub start: f64,
    pub end: f64,
    pub gop_vowel: f64,
    pub gop_consonant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VowelSource {
    Tier,
    Detector,
    Syllable,
}

/// A recording with its annotations, already decoded.
#[derive(Debug, Clone, Copy)]
pub struct RecordingInput<'a> {
    pub recording_id: &'a str,
    pub subject_id: &'a str,
    pub audio: &'a AudioBuffer,
    pub tiers: &'a [SegmentTier],
    pub landmarks: Option<&'a LandmarkSequence>,
}

/// Measurements of one observation before subject-level metrics exist.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRecord {
    pub obs: SyllableObservation,
    pub vowel_interval: (f64, f64),
    pub vowel_source: VowelSource,
    pub measurements: VowelMeasurements,
    pub lip: Option<LipVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationFeatures {
    pub obs: SyllableObservation,
    pub vowel_interval: (f64, f64),
    pub vowel_source: VowelSource,
    pub papi: PapiVector,
    pub lip: Option<LipVector>,
}

fn find_tier<'a>(tiers: &'a [SegmentTier], name: &str) -> Option<&'a SegmentTier> {
    tiers.iter().find(|t| t.name() == name)
}

/// Syllable observations of a recording, with GOP values attached where
/// a row matches the syllable boundaries. Ids are `<recording>-<nnnn>`
/// over the labelled intervals.
pub fn observations_of(rec: &RecordingInput, ann: &AnnotationConfig, gop: &[GopEntry]) -> Result<Vec<SyllableObservation>> {
    let tier = find_tier(rec.tiers, &ann.syllable_tier).ok_or_else(|| {
        Error::Data(format!(
            "recording {}: no tier named '{}'",
            rec.recording_id, ann.syllable_tier
        ))
    })?;
    let tol = ann.gop_tolerance_s;
    tier.labelled()
        .enumerate()
        .map(|(i, iv)| {
            let mut o = SyllableObservation::new(
                format!("{}-{i:04}", rec.recording_id),
                rec.subject_id,
                rec.recording_id,
                iv.start,
                iv.end,
                iv.label.trim(),
            )?;
            if let Some(g) = gop.iter().find(|g| {
                g.recording_id == rec.recording_id && (g.start - iv.start).abs() <= tol && (g.end - iv.end).abs() <= tol
            }) {
                o.gop_vowel = Some(g.gop_vowel);
                o.gop_consonant = Some(g.gop_consonant);
            }
            Ok(o)
        })
        .collect()
}

/// Vowel nucleus of `obs`: the candidate interval overlapping it most,
/// clipped to the syllable, else the whole syllable.
pub fn vowel_interval(
    obs: &SyllableObservation,
    vowel_tier: Option<&SegmentTier>,
    detected: Option<&SegmentTier>,
) -> ((f64, f64), VowelSource) {
    let best = |tier: &SegmentTier| {
        tier.labelled()
            .map(|iv| (iv.overlap(obs.start, obs.end), iv))
            .filter(|(ov, _)| *ov > 0.0)
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, iv)| (iv.start.max(obs.start), iv.end.min(obs.end)))
    };
    if let Some(iv) = vowel_tier.and_then(best) {
        return (iv, VowelSource::Tier);
    }
    if let Some(iv) = detected.and_then(best) {
        return (iv, VowelSource::Detector);
    }
    ((obs.start, obs.end), VowelSource::Syllable)
}

/// Measures every vowel-bearing syllable of a recording. Syllables with
/// no cardinal vowel are left out.
pub fn measure_recording(
    rec: &RecordingInput,
    ann: &AnnotationConfig,
    gop: &[GopEntry],
    detector: Option<(&VowelDetector, &GmmConfig)>,
    dsp_cfg: &DspConfig,
) -> Result<Vec<ObservationRecord>> {
    let observations = observations_of(rec, ann, gop)?;
    let vowel_tier = ann.vowel_tier.as_deref().and_then(|n| find_tier(rec.tiers, n));
    let detected = match detector {
        Some((d, cfg)) if vowel_tier.is_none() => Some(detect_vowel_intervals(rec.audio, d, cfg)?),
        _ => None,
    };
    let mut out = Vec::new();
    for obs in observations {
        if obs.vowel_classes.is_empty() {
            continue;
        }
        let (iv, source) = vowel_interval(&obs, vowel_tier, detected.as_ref());
        let segment = rec.audio.slice(iv.0, iv.1);
        let measurements = measure_vowel(&segment, dsp_cfg)?;
        let lip = match rec.landmarks {
            Some(seq) => match lip_feature_vector(seq, iv.0, iv.1) {
                Ok(v) => Some(v),
                Err(Error::InsufficientData(_)) => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        out.push(ObservationRecord {
            obs,
            vowel_interval: iv,
            vowel_source: source,
            measurements,
            lip,
        });
    }
    Ok(out)
}

/// Feature vectors for all observations of one subject. The articulation
/// metrics come from the subject's formant set over every record.
pub fn subject_features(records: Vec<ObservationRecord>, cfg: &PapiConfig) -> Result<Vec<ObservationFeatures>> {
    if let Some(first) = records.first() {
        if let Some(r) = records.iter().find(|r| r.obs.subject_id != first.obs.subject_id) {
            return Err(Error::Input(format!(
                "subject_features mixes subjects {} and {}",
                first.obs.subject_id, r.obs.subject_id
            )));
        }
    }
    let set = subject_formant_set(records.iter().map(|r| (&r.obs, &r.measurements)));
    let art = ArticulationMetrics::from_set(&set, cfg);
    records
        .into_iter()
        .map(|r| {
            let papi = assemble_from_measurements(&r.obs, r.vowel_interval, &r.measurements, &art, cfg)?;
            Ok(ObservationFeatures {
                obs: r.obs,
                vowel_interval: r.vowel_interval,
                vowel_source: r.vowel_source,
                papi,
                lip: r.lip,
            })
        })
        .collect()
}

/// Network input for one group. Lip features are attached only when all
/// six members have them.
pub fn group_example(
    group_id: impl Into<String>,
    group: &VowelGroup,
    features: &BTreeMap<String, ObservationFeatures>,
    total_score: f64,
) -> Result<GroupExample> {
    let mut papi = Matrix::zeros(VowelClass::COUNT, PAPI_DIM);
    let mut lip = Some(Matrix::zeros(VowelClass::COUNT, LIP_DIM));
    for (k, m) in group.members().iter().enumerate() {
        let f = features
            .get(&m.obs_id)
            .ok_or_else(|| Error::Data(format!("no features for observation {}", m.obs_id)))?;
        papi.row_mut(k).copy_from_slice(&f.papi.to_array());
        match (&mut lip, &f.lip) {
            (Some(l), Some(v)) => l.row_mut(k).copy_from_slice(&v.to_array()),
            _ => lip = None,
        }
    }
    Ok(GroupExample {
        group_id: group_id.into(),
        subject_id: group.subject_id().into(),
        papi,
        lip,
        target: group.target().value,
        total_score,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::{build_groups, categorize, GroupMode};
    use crate::model::{FdaTarget, TargetKind};
    use crate::synth::{plan_corpus, render_subject, SynthConfig};

    fn short_cfg() -> SynthConfig {
        SynthConfig {
            repetitions: 2,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn vowel_interval_precedence() {
        let obs = SyllableObservation::new("o", "s", "r", 1.0, 2.0, "ba").unwrap();
        let vt = SegmentTier::new(
            "vowel",
            alloc::vec![
                crate::segment::Interval::new(0.5, 1.2, "a"),
                crate::segment::Interval::new(1.3, 2.5, "a"),
            ],
        )
        .unwrap();
        assert_eq!(vowel_interval(&obs, Some(&vt), None), ((1.3, 2.0), VowelSource::Tier));
        let empty = SegmentTier::new("vowel", alloc::vec![]).unwrap();
        let det = SegmentTier::new("vowel", alloc::vec![crate::segment::Interval::new(1.1, 1.9, "vowel")]).unwrap();
        assert_eq!(vowel_interval(&obs, Some(&empty), Some(&det)), ((1.1, 1.9), VowelSource::Detector));
        assert_eq!(vowel_interval(&obs, None, None), ((1.0, 2.0), VowelSource::Syllable));
    }

    #[test]
    fn synthetic_recording_to_examples() {
        let cfg = short_cfg();
        let plan = &plan_corpus(2, 11, &cfg).unwrap()[0];
        let rec = render_subject(plan, &cfg).unwrap();
        let tiers = [rec.syllables.clone(), rec.vowels.clone()];
        let gop = [GopEntry {
            recording_id: rec.recording_id.clone(),
            start: rec.syllables.intervals()[0].start,
            end: rec.syllables.intervals()[0].end,
            gop_vowel: -1.5,
            gop_consonant: -0.5,
        }];
        let input = RecordingInput {
            recording_id: &rec.recording_id,
            subject_id: &plan.subject_id,
            audio: &rec.audio,
            tiers: &tiers,
            landmarks: Some(&rec.landmarks),
        };
        let dsp = DspConfig::default();
        let records = measure_recording(&input, &AnnotationConfig::default(), &gop, None, &dsp).unwrap();
        assert_eq!(records.len(), 12);
        assert!(records.iter().all(|r| r.vowel_source == VowelSource::Tier && r.lip.is_some()));
        let feats = subject_features(records, &PapiConfig::default()).unwrap();
        assert_eq!(feats[0].papi.gop_vowel, -1.5);
        assert!(!feats[0].papi.flags.gop_missing);
        assert!(feats[1].papi.flags.gop_missing);
        assert!(feats.iter().all(|f| !f.papi.flags.articulation_defaulted));
        // articulation metrics are shared by the whole subject
        assert!(feats.iter().all(|f| f.papi.vsa_hz2 == feats[0].papi.vsa_hz2));

        let obs: Vec<_> = feats.iter().map(|f| f.obs.clone()).collect();
        let cats = categorize(&obs);
        let total = plan.scores[&TargetKind::Total];
        let target = FdaTarget::new(TargetKind::Total, total).unwrap();
        let groups = build_groups(&cats, target, GroupMode::Zip, 0, true, 3).unwrap();
        assert_eq!(groups.len(), 2);
        let map: BTreeMap<String, ObservationFeatures> = feats.into_iter().map(|f| (f.obs.obs_id.clone(), f)).collect();
        let ex = group_example("g0", &groups[0], &map, total).unwrap();
        assert_eq!(ex.papi.shape(), (6, PAPI_DIM));
        assert!(ex.lip.is_some());
        assert_eq!(ex.target, total);
        let other = BTreeMap::new();
        assert!(group_example("g0", &groups[0], &other, total).is_err());
    }

    #[test]
    fn missing_syllable_tier() {
        let cfg = short_cfg();
        let plan = &plan_corpus(2, 1, &cfg).unwrap()[0];
        let rec = render_subject(plan, &cfg).unwrap();
        let tiers = [rec.vowels.clone()];
        let input = RecordingInput {
            recording_id: "r",
            subject_id: "s",
            audio: &rec.audio,
            tiers: &tiers,
            landmarks: None,
        };
        assert!(matches!(
            observations_of(&input, &AnnotationConfig::default(), &[]),
            Err(Error::Data(_))
        ));
    }
}
