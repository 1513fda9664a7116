//! Domain types shared across the pipeline: vowels, syllable observations,
//! vowel groups, FDA score targets, severity bands and dataset manifests.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// The six Mandarin cardinal vowels, in graph node order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum VowelClass {
    A,
    O,
    E,
    I,
    U,
    /// ü
    V,
}

impl VowelClass {
    pub const ALL: [VowelClass; 6] = [
        VowelClass::A,
        VowelClass::O,
        VowelClass::E,
        VowelClass::I,
        VowelClass::U,
        VowelClass::V,
    ];

    pub const COUNT: usize = 6;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<VowelClass> {
        Self::ALL.get(i).copied()
    }

    /// Letter used in normalized pinyin (`v` stands for ü).
    pub fn letter(self) -> char {
        match self {
            VowelClass::A => 'a',
            VowelClass::O => 'o',
            VowelClass::E => 'e',
            VowelClass::I => 'i',
            VowelClass::U => 'u',
            VowelClass::V => 'v',
        }
    }

    pub fn from_letter(c: char) -> Option<VowelClass> {
        match c {
            'a' => Some(VowelClass::A),
            'o' => Some(VowelClass::O),
            'e' => Some(VowelClass::E),
            'i' => Some(VowelClass::I),
            'u' => Some(VowelClass::U),
            'v' | 'ü' => Some(VowelClass::V),
            _ => None,
        }
    }
}

impl fmt::Display for VowelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VowelClass::A => "a",
            VowelClass::O => "o",
            VowelClass::E => "e",
            VowelClass::I => "i",
            VowelClass::U => "u",
            VowelClass::V => "ü",
        };
        f.write_str(s)
    }
}

/// Set of vowel classes as a 6-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VowelSet(u8);

impl VowelSet {
    pub const EMPTY: VowelSet = VowelSet(0);

    pub fn insert(&mut self, v: VowelClass) {
        self.0 |= 1 << v.index();
    }

    pub fn contains(self, v: VowelClass) -> bool {
        self.0 & (1 << v.index()) != 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn iter(self) -> impl Iterator<Item = VowelClass> {
        VowelClass::ALL.into_iter().filter(move |v| self.contains(*v))
    }

    /// The class when exactly one is present.
    pub fn single_class(self) -> Option<VowelClass> {
        if self.len() == 1 {
            self.iter().next()
        } else {
            None
        }
    }

    pub fn single(v: VowelClass) -> VowelSet {
        let mut s = VowelSet::EMPTY;
        s.insert(v);
        s
    }
}

impl FromIterator<VowelClass> for VowelSet {
    fn from_iter<T: IntoIterator<Item = VowelClass>>(iter: T) -> Self {
        let mut s = VowelSet::EMPTY;
        for v in iter {
            s.insert(v);
        }
        s
    }
}

fn strip_tone(c: char) -> Option<char> {
    Some(match c {
        'ā' | 'á' | 'ǎ' | 'à' => 'a',
        'ō' | 'ó' | 'ǒ' | 'ò' => 'o',
        'ē' | 'é' | 'ě' | 'è' | 'ê' => 'e',
        'ī' | 'í' | 'ǐ' | 'ì' => 'i',
        'ū' | 'ú' | 'ǔ' | 'ù' => 'u',
        'ǖ' | 'ǘ' | 'ǚ' | 'ǜ' | 'ü' | 'v' => 'v',
        '0'..='9' => return None,
        c if c.is_ascii_alphabetic() => c.to_ascii_lowercase(),
        _ => return None,
    })
}

/// Normalizes a pinyin syllable: lowercases, strips tone marks and digits,
/// maps `ü`/`v` to `v` and expands the implicit ü written as `u` after
/// `j`, `q`, `x` and `y`.
pub fn normalize_pinyin(syllable: &str) -> String {
    let letters: Vec<char> = syllable.chars().filter_map(strip_tone).collect();
    let mut out = String::with_capacity(letters.len());
    for (i, &c) in letters.iter().enumerate() {
        let after_jqxy = i > 0 && matches!(letters[i - 1], 'j' | 'q' | 'x' | 'y');
        if c == 'u' && after_jqxy {
            out.push('v');
        } else {
            out.push(c);
        }
    }
    out
}

/// Cardinal vowel letters contained in a syllable after normalization.
pub fn vowel_classes_of(syllable: &str) -> VowelSet {
    normalize_pinyin(syllable)
        .chars()
        .filter_map(VowelClass::from_letter)
        .collect()
}

/// One annotated syllable of one recording.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyllableObservation {
    /// Stable key, unique within a dataset.
    pub obs_id: String,
    pub subject_id: String,
    pub recording_id: String,
    pub start: f64,
    pub end: f64,
    pub syllable_text: String,
    pub vowel_classes: VowelSet,
    pub audio_ref: String,
    pub landmark_ref: Option<String>,
    pub gop_vowel: Option<f64>,
    pub gop_consonant: Option<f64>,
}

impl SyllableObservation {
    /// Builds an observation, deriving the vowel classes from the pinyin.
    pub fn new(
        obs_id: impl Into<String>,
        subject_id: impl Into<String>,
        recording_id: impl Into<String>,
        start: f64,
        end: f64,
        syllable_text: impl Into<String>,
    ) -> Result<Self> {
        if !(start >= 0.0 && start < end) || !end.is_finite() {
            return Err(Error::Data(format!(
                "observation interval [{start}, {end}] must satisfy 0 <= start < end"
            )));
        }
        let syllable_text = syllable_text.into();
        let recording_id = recording_id.into();
        Ok(SyllableObservation {
            obs_id: obs_id.into(),
            subject_id: subject_id.into(),
            vowel_classes: vowel_classes_of(&syllable_text),
            audio_ref: recording_id.clone(),
            recording_id,
            start,
            end,
            syllable_text,
            landmark_ref: None,
            gop_vowel: None,
            gop_consonant: None,
        })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

/// FDA score kinds: the total and the eight sub-items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TargetKind {
    Total,
    Lips,
    Reflex,
    Jaw,
    Laryngeal,
    Respiration,
    Velum,
    Tongue,
    Intelligibility,
}

impl TargetKind {
    pub const ALL: [TargetKind; 9] = [
        TargetKind::Total,
        TargetKind::Lips,
        TargetKind::Reflex,
        TargetKind::Jaw,
        TargetKind::Laryngeal,
        TargetKind::Respiration,
        TargetKind::Velum,
        TargetKind::Tongue,
        TargetKind::Intelligibility,
    ];

    pub const SUB_ITEMS: [TargetKind; 8] = [
        TargetKind::Lips,
        TargetKind::Reflex,
        TargetKind::Jaw,
        TargetKind::Laryngeal,
        TargetKind::Respiration,
        TargetKind::Velum,
        TargetKind::Tongue,
        TargetKind::Intelligibility,
    ];

    pub fn scale_max(self) -> f64 {
        match self {
            TargetKind::Total => 116.0,
            TargetKind::Lips => 20.0,
            TargetKind::Reflex => 12.0,
            TargetKind::Jaw => 8.0,
            TargetKind::Laryngeal => 16.0,
            TargetKind::Respiration => 8.0,
            TargetKind::Velum => 12.0,
            TargetKind::Tongue => 24.0,
            TargetKind::Intelligibility => 16.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TargetKind::Total => "total",
            TargetKind::Lips => "lips",
            TargetKind::Reflex => "reflex",
            TargetKind::Jaw => "jaw",
            TargetKind::Laryngeal => "laryngeal",
            TargetKind::Respiration => "respiration",
            TargetKind::Velum => "velum",
            TargetKind::Tongue => "tongue",
            TargetKind::Intelligibility => "intelligibility",
        }
    }

    pub fn parse(s: &str) -> Option<TargetKind> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for TargetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A regression target: a score of one kind, within that kind's scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FdaTarget {
    pub kind: TargetKind,
    pub value: f64,
}

impl FdaTarget {
    pub fn new(kind: TargetKind, value: f64) -> Result<Self> {
        let max = kind.scale_max();
        if !(0.0..=max).contains(&value) {
            return Err(Error::Range {
                what: kind.name(),
                value,
                min: 0.0,
                max,
            });
        }
        Ok(FdaTarget { kind, value })
    }

    pub fn scale_max(&self) -> f64 {
        self.kind.scale_max()
    }
}

/// Severity band of a total FDA score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SeverityBand {
    Normal,
    Mild,
    Moderate,
    Severe,
}

impl SeverityBand {
    pub const ALL: [SeverityBand; 4] = [
        SeverityBand::Normal,
        SeverityBand::Mild,
        SeverityBand::Moderate,
        SeverityBand::Severe,
    ];

    /// Larger is more severe.
    pub fn severity_rank(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            SeverityBand::Normal => "Normal",
            SeverityBand::Mild => "Mild",
            SeverityBand::Moderate => "Moderate",
            SeverityBand::Severe => "Severe",
        }
    }
}

pub const MIN_TOTAL_SCORE: f64 = 37.0;
pub const MAX_TOTAL_SCORE: f64 = 116.0;

/// Band containing a total score in [37, 116]; bands are
/// Normal = 116, Mild = 87..115, Moderate = 58..86, Severe = 37..57.
pub fn severity_band(total: f64) -> Result<SeverityBand> {
    if !(MIN_TOTAL_SCORE..=MAX_TOTAL_SCORE).contains(&total) {
        return Err(Error::Range {
            what: "total FDA score",
            value: total,
            min: MIN_TOTAL_SCORE,
            max: MAX_TOTAL_SCORE,
        });
    }
    Ok(if total >= 116.0 {
        SeverityBand::Normal
    } else if total >= 87.0 {
        SeverityBand::Mild
    } else if total >= 58.0 {
        SeverityBand::Moderate
    } else {
        SeverityBand::Severe
    })
}

/// Six observations of one subject, one per cardinal vowel, with the
/// subject's target score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VowelGroup {
    subject_id: String,
    members: [SyllableObservation; 6],
    target: FdaTarget,
}

impl VowelGroup {
    /// `members[k]` must contain vowel `VowelClass::ALL[k]` and all members
    /// must come from `subject_id`.
    pub fn new(
        subject_id: impl Into<String>,
        members: [SyllableObservation; 6],
        target: FdaTarget,
    ) -> Result<Self> {
        let subject_id = subject_id.into();
        for (v, m) in VowelClass::ALL.iter().zip(members.iter()) {
            if m.subject_id != subject_id {
                return Err(Error::Data(format!(
                    "group member {} belongs to subject {}, not {}",
                    m.obs_id, m.subject_id, subject_id
                )));
            }
            if !m.vowel_classes.contains(*v) {
                return Err(Error::Data(format!(
                    "group slot {v} filled by observation {} ('{}') lacking that vowel",
                    m.obs_id, m.syllable_text
                )));
            }
        }
        Ok(VowelGroup {
            subject_id,
            members,
            target,
        })
    }

    pub fn subject_id(&self) -> &str {
        &self.subject_id
    }

    pub fn members(&self) -> &[SyllableObservation; 6] {
        &self.members
    }

    pub fn member(&self, v: VowelClass) -> &SyllableObservation {
        &self.members[v.index()]
    }

    pub fn target(&self) -> FdaTarget {
        self.target
    }

    pub fn member_ids(&self) -> [&str; 6] {
        core::array::from_fn(|k| self.members[k].obs_id.as_str())
    }
}

/// One subject entry of a dataset manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectEntry {
    pub subject_id: String,
    /// Scores keyed by target kind name (`total`, `lips`, ...).
    pub fda_scores: BTreeMap<TargetKind, f64>,
}

impl SubjectEntry {
    pub fn score(&self, kind: TargetKind) -> Option<f64> {
        self.fda_scores.get(&kind).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecordingEntry {
    pub recording_id: String,
    pub subject_id: String,
    pub audio_path: String,
    pub segment_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub landmark_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fps: Option<f64>,
}

/// Subjects and their recordings. Paths are relative to the manifest's
/// directory unless absolute.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub subjects: Vec<SubjectEntry>,
    pub recordings: Vec<RecordingEntry>,
    /// Optional GOP sidecar CSV.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gop_path: Option<String>,
}

impl DatasetManifest {
    pub fn subject(&self, id: &str) -> Option<&SubjectEntry> {
        self.subjects.iter().find(|s| s.subject_id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ManifestIssue {
    DuplicateSubject(String),
    DuplicateRecording(String),
    DanglingSubject { recording_id: String, subject_id: String },
    ScoreOutOfScale { subject_id: String, kind: TargetKind, value: String },
    TotalOutOfRange { subject_id: String, value: String },
    MissingFile { recording_id: String, field: &'static str, path: String },
    InvalidFps { recording_id: String },
}

impl fmt::Display for ManifestIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifestIssue::DuplicateSubject(s) => write!(f, "duplicate subject_id {s}"),
            ManifestIssue::DuplicateRecording(r) => write!(f, "duplicate recording_id {r}"),
            ManifestIssue::DanglingSubject {
                recording_id,
                subject_id,
            } => write!(f, "recording {recording_id} references unknown subject {subject_id}"),
            ManifestIssue::ScoreOutOfScale {
                subject_id,
                kind,
                value,
            } => write!(
                f,
                "subject {subject_id}: {kind}={value} outside scale 0..{}",
                kind.scale_max()
            ),
            ManifestIssue::TotalOutOfRange { subject_id, value } => {
                write!(f, "subject {subject_id}: total={value} outside 37..116")
            }
            ManifestIssue::MissingFile {
                recording_id,
                field,
                path,
            } => write!(f, "recording {recording_id}: {field} '{path}' not found"),
            ManifestIssue::InvalidFps { recording_id } => {
                write!(f, "recording {recording_id}: fps must be positive")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ManifestIssue>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Checks references, score scales and (via `file_exists`) media paths.
pub fn validate_manifest(
    manifest: &DatasetManifest,
    file_exists: impl Fn(&str) -> bool,
) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen = BTreeMap::new();
    for s in &manifest.subjects {
        if seen.insert(s.subject_id.as_str(), ()).is_some() {
            issues.push(ManifestIssue::DuplicateSubject(s.subject_id.clone()));
        }
        for (&kind, &value) in &s.fda_scores {
            if !(0.0..=kind.scale_max()).contains(&value) {
                issues.push(ManifestIssue::ScoreOutOfScale {
                    subject_id: s.subject_id.clone(),
                    kind,
                    value: value.to_string(),
                });
            } else if kind == TargetKind::Total && severity_band(value).is_err() {
                issues.push(ManifestIssue::TotalOutOfRange {
                    subject_id: s.subject_id.clone(),
                    value: value.to_string(),
                });
            }
        }
    }
    let mut seen_rec = BTreeMap::new();
    for r in &manifest.recordings {
        if seen_rec.insert(r.recording_id.as_str(), ()).is_some() {
            issues.push(ManifestIssue::DuplicateRecording(r.recording_id.clone()));
        }
        if !seen.contains_key(r.subject_id.as_str()) {
            issues.push(ManifestIssue::DanglingSubject {
                recording_id: r.recording_id.clone(),
                subject_id: r.subject_id.clone(),
            });
        }
        let mut check = |field: &'static str, path: &str| {
            if !file_exists(path) {
                issues.push(ManifestIssue::MissingFile {
                    recording_id: r.recording_id.clone(),
                    field,
                    path: path.to_string(),
                });
            }
        };
        check("audio_path", &r.audio_path);
        check("segment_path", &r.segment_path);
        if let Some(p) = &r.landmark_path {
            check("landmark_path", p);
        }
        if matches!(r.fps, Some(f) if !(f > 0.0 && f.is_finite())) {
            issues.push(ManifestIssue::InvalidFps {
                recording_id: r.recording_id.clone(),
            });
        }
    }
    if let Some(p) = &manifest.gop_path {
        if !file_exists(p) {
            issues.push(ManifestIssue::MissingFile {
                recording_id: String::new(),
                field: "gop_path",
                path: p.clone(),
            });
        }
    }
    ValidationReport { issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn band_examples() {
        assert_eq!(severity_band(116.0).unwrap(), SeverityBand::Normal);
        assert_eq!(severity_band(37.0).unwrap(), SeverityBand::Severe);
        assert_eq!(severity_band(87.0).unwrap(), SeverityBand::Mild);
        assert_eq!(severity_band(86.0).unwrap(), SeverityBand::Moderate);
        assert_eq!(severity_band(58.0).unwrap(), SeverityBand::Moderate);
        assert_eq!(severity_band(57.0).unwrap(), SeverityBand::Severe);
        assert!(matches!(severity_band(36.0), Err(Error::Range { .. })));
        assert!(matches!(severity_band(117.0), Err(Error::Range { .. })));
    }

    proptest! {
        #[test]
        fn band_is_monotone(a in 37.0f64..=116.0, b in 37.0f64..=116.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(severity_band(lo).unwrap().severity_rank()
                >= severity_band(hi).unwrap().severity_rank());
        }
    }

    #[test]
    fn pinyin_classification() {
        let set = |s: &str| vowel_classes_of(s).iter().collect::<Vec<_>>();
        assert_eq!(set("ma"), [VowelClass::A]);
        assert_eq!(set("miao"), [VowelClass::A, VowelClass::O, VowelClass::I]);
        assert_eq!(set("ju"), [VowelClass::V]);
        assert_eq!(set("xue2"), [VowelClass::E, VowelClass::V]);
        assert_eq!(set("yu"), [VowelClass::V]);
        assert_eq!(set("lü"), [VowelClass::V]);
        assert_eq!(set("lv4"), [VowelClass::V]);
        assert_eq!(set("lu"), [VowelClass::U]);
        assert_eq!(set("mǎ"), [VowelClass::A]);
        assert!(vowel_classes_of("m").is_empty());
    }

    #[test]
    fn target_scale() {
        assert!(FdaTarget::new(TargetKind::Lips, 20.0).is_ok());
        assert!(FdaTarget::new(TargetKind::Lips, 25.0).is_err());
        assert!(FdaTarget::new(TargetKind::Total, -1.0).is_err());
        let sum: f64 = TargetKind::SUB_ITEMS.iter().map(|k| k.scale_max()).sum();
        assert_eq!(sum, 116.0);
    }

    fn obs(id: &str, subj: &str, text: &str) -> SyllableObservation {
        SyllableObservation::new(id, subj, "r", 0.0, 1.0, text).unwrap()
    }

    #[test]
    fn group_invariant() {
        let texts = ["ba", "po", "de", "bi", "bu", "ju"];
        let members = core::array::from_fn(|k| obs(texts[k], "s1", texts[k]));
        let t = FdaTarget::new(TargetKind::Total, 100.0).unwrap();
        assert!(VowelGroup::new("s1", members.clone(), t).is_ok());
        let mut wrong = members.clone();
        wrong.swap(0, 1);
        assert!(VowelGroup::new("s1", wrong, t).is_err());
        let mut other = members;
        other[2] = obs("x", "s2", "de");
        assert!(VowelGroup::new("s1", other, t).is_err());
    }

    #[test]
    fn observation_interval_checked() {
        assert!(SyllableObservation::new("a", "s", "r", 1.0, 1.0, "a").is_err());
        assert!(SyllableObservation::new("a", "s", "r", -0.1, 1.0, "a").is_err());
    }

    fn manifest() -> DatasetManifest {
        let mut scores = BTreeMap::new();
        scores.insert(TargetKind::Total, 100.0);
        scores.insert(TargetKind::Lips, 18.0);
        DatasetManifest {
            subjects: alloc::vec![SubjectEntry {
                subject_id: "s1".into(),
                fda_scores: scores,
            }],
            recordings: alloc::vec![RecordingEntry {
                recording_id: "r1".into(),
                subject_id: "s1".into(),
                audio_path: "r1.wav".into(),
                segment_path: "r1.TextGrid".into(),
                landmark_path: None,
                fps: None,
            }],
            gop_path: None,
        }
    }

    #[test]
    fn manifest_validation() {
        let m = manifest();
        assert!(validate_manifest(&m, |_| true).is_empty());

        let mut bad = m.clone();
        bad.subjects[0].fda_scores.insert(TargetKind::Lips, 25.0);
        let report = validate_manifest(&bad, |_| true);
        assert!(matches!(
            report.issues.as_slice(),
            [ManifestIssue::ScoreOutOfScale { kind: TargetKind::Lips, .. }]
        ));

        let mut dangling = m.clone();
        dangling.recordings[0].subject_id = "ghost".into();
        let report = validate_manifest(&dangling, |_| true);
        assert!(matches!(report.issues.as_slice(), [ManifestIssue::DanglingSubject { .. }]));

        let report = validate_manifest(&m, |p| p != "r1.wav");
        assert!(matches!(report.issues.as_slice(), [ManifestIssue::MissingFile { field: "audio_path", .. }]));
    }
}
