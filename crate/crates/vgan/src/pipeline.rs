//! Pipeline stages over files: corpus synthesis, feature extraction, vowel
//! detection, grouping, training and evaluation.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use vgan_core::augment::{balance_by_severity, build_groups, categorize_by_subject};
use vgan_core::config::GlobalConfig;
use vgan_core::extract::{
    group_example, measure_recording, subject_features, GopEntry, ObservationFeatures, ObservationRecord,
    RecordingInput,
};
use vgan_core::gmm::{detect_vowel_intervals, train_detector, VowelDetector};
use vgan_core::lip::LandmarkSequence;
use vgan_core::model::{validate_manifest, DatasetManifest, FdaTarget, TargetKind, VowelGroup};
use vgan_core::nn::{VganConfig, VganModel};
use vgan_core::segment::SegmentTier;
use vgan_core::dsp::AudioBuffer;
use vgan_core::synth::{corpus_manifest, plan_corpus, render_subject};
use vgan_core::train::{
    assemble_report, assign_folds, evaluate, run_fold, train, EvalReport, GroupExample, TrainHistory,
};

use crate::io::tables::{
    parse_gop_csv, write_embeddings_csv, EmbeddingRow, GroupManifest, GroupRecord,
};
use crate::io::{
    parse_segments_csv, parse_textgrid, read_landmarks_csv, read_wav, serialize_textgrid, write_landmarks_csv,
    write_wav,
};
use crate::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Writes `contents`, creating parent directories.
pub fn write_text(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// TOML configuration; absent file means defaults. Every block is
/// validated.
pub fn load_config(path: Option<&Path>) -> Result<GlobalConfig> {
    let cfg = match path {
        Some(p) => toml::from_str(&read_text(p)?).map_err(|e| Error::Load(format!("{}: {e}", p.display())))?,
        None => GlobalConfig::default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Runs `f` over `items` on up to `jobs` threads. Output order follows
/// input order regardless of the thread count.
pub fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let jobs = jobs.max(1).min(items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let mut slots: Vec<Option<Result<R>>> = (0..items.len()).map(|_| None).collect();
    let chunks: Vec<Vec<(usize, Result<R>)>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|_| {
                s.spawn(|| {
                    let mut done = Vec::new();
                    loop {
                        let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                        if i >= items.len() {
                            break done;
                        }
                        done.push((i, f(&items[i])));
                    }
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    for (i, r) in chunks.into_iter().flatten() {
        slots[i] = Some(r);
    }
    slots.into_iter().map(|r| r.expect("every item processed")).collect()
}

/// A manifest and the directory its relative paths start from.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub base: PathBuf,
}

impl Dataset {
    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Reads and validates a manifest, including media file existence.
    pub fn load(path: &Path) -> Result<Dataset> {
        let manifest: DatasetManifest = serde_json::from_str(&read_text(path)?)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let ds = Dataset { manifest, base };
        let report = validate_manifest(&ds.manifest, |p| ds.resolve(p).is_file());
        if !report.is_empty() {
            let issues: Vec<String> = report.issues.iter().map(|i| i.to_string()).collect();
            return Err(Error::Core(vgan_core::Error::Data(format!(
                "manifest {}: {}",
                path.display(),
                issues.join("; ")
            ))));
        }
        Ok(ds)
    }

    pub fn gop(&self) -> Result<Vec<GopEntry>> {
        match &self.manifest.gop_path {
            Some(p) => parse_gop_csv(&read_text(&self.resolve(p))?),
            None => Ok(Vec::new()),
        }
    }

    pub fn total_scores(&self) -> BTreeMap<String, f64> {
        self.manifest
            .subjects
            .iter()
            .filter_map(|s| s.score(TargetKind::Total).map(|t| (s.subject_id.clone(), t)))
            .collect()
    }
}

/// Decoded media of one recording.
#[derive(Debug, Clone)]
pub struct LoadedRecording {
    pub recording_id: String,
    pub subject_id: String,
    pub audio: AudioBuffer,
    pub tiers: Vec<SegmentTier>,
    pub landmarks: Option<LandmarkSequence>,
}

impl LoadedRecording {
    pub fn input(&self) -> RecordingInput<'_> {
        RecordingInput {
            recording_id: &self.recording_id,
            subject_id: &self.subject_id,
            audio: &self.audio,
            tiers: &self.tiers,
            landmarks: self.landmarks.as_ref(),
        }
    }
}

/// Segment files ending in `.csv` hold the syllable tier; anything else
/// is read as a TextGrid.
pub fn load_recording(ds: &Dataset, index: usize, cfg: &GlobalConfig) -> Result<LoadedRecording> {
    let r = &ds.manifest.recordings[index];
    let audio = read_wav(&ds.resolve(&r.audio_path))?;
    let seg_path = ds.resolve(&r.segment_path);
    let text = read_text(&seg_path)?;
    let with_path = |e: Error| match e {
        Error::Parse { line, msg } => Error::Parse {
            line,
            msg: format!("{}: {msg}", seg_path.display()),
        },
        other => other,
    };
    let tiers = if r.segment_path.to_ascii_lowercase().ends_with(".csv") {
        vec![parse_segments_csv(&text, &cfg.annotation.syllable_tier).map_err(with_path)?]
    } else {
        parse_textgrid(&text).map_err(with_path)?.tiers
    };
    let landmarks = match &r.landmark_path {
        Some(p) => {
            let path = ds.resolve(p);
            Some(read_landmarks_csv(&read_text(&path)?, &cfg.lip, r.fps).map_err(|e| match e {
                Error::Parse { line, msg } => Error::Parse {
                    line,
                    msg: format!("{}: {msg}", path.display()),
                },
                other => other,
            })?)
        }
        None => None,
    };
    Ok(LoadedRecording {
        recording_id: r.recording_id.clone(),
        subject_id: r.subject_id.clone(),
        audio,
        tiers,
        landmarks,
    })
}

/// Per-observation features for the whole dataset, ordered by subject id
/// and then by recording order in the manifest.
pub fn extract_features(
    ds: &Dataset,
    cfg: &GlobalConfig,
    detector: Option<&VowelDetector>,
    jobs: usize,
) -> Result<Vec<ObservationFeatures>> {
    let gop = ds.gop()?;
    let mut by_subject: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in ds.manifest.recordings.iter().enumerate() {
        by_subject.entry(&r.subject_id).or_default().push(i);
    }
    let subjects: Vec<Vec<usize>> = by_subject.into_values().collect();
    let per_subject = parallel_map(&subjects, jobs, |recs| {
        let mut records: Vec<ObservationRecord> = Vec::new();
        for &i in recs {
            let rec = load_recording(ds, i, cfg)?;
            let det = detector.map(|d| (d, &cfg.gmm));
            records.extend(measure_recording(&rec.input(), &cfg.annotation, &gop, det, &cfg.dsp)?);
        }
        Ok(subject_features(records, &cfg.papi)?)
    })?;
    Ok(per_subject.into_iter().flatten().collect())
}

/// Trains the vowel detector on every recording that carries the
/// configured vowel tier.
pub fn train_vowel_detector(ds: &Dataset, cfg: &GlobalConfig, seed: u64) -> Result<VowelDetector> {
    let tier_name = cfg
        .annotation
        .vowel_tier
        .as_deref()
        .ok_or_else(|| Error::Usage("detector training needs annotation.vowel_tier".into()))?;
    let mut loaded = Vec::new();
    for i in 0..ds.manifest.recordings.len() {
        let rec = load_recording(ds, i, cfg)?;
        if let Some(t) = rec.tiers.iter().find(|t| t.name() == tier_name).cloned() {
            loaded.push((rec.audio, t));
        }
    }
    if loaded.is_empty() {
        return Err(Error::Core(vgan_core::Error::InsufficientData(format!(
            "no recording has a '{tier_name}' tier to train the detector"
        ))));
    }
    let pairs: Vec<(&AudioBuffer, &SegmentTier)> = loaded.iter().map(|(a, t)| (a, t)).collect();
    Ok(train_detector(&pairs, &cfg.gmm, seed)?)
}

/// Detected vowel tiers, one TextGrid per recording, written as
/// `<out>/<recording>.TextGrid`.
pub fn segment_dataset(ds: &Dataset, cfg: &GlobalConfig, detector: &VowelDetector, out: &Path, jobs: usize) -> Result<()> {
    let name = cfg.annotation.vowel_tier.clone().unwrap_or_else(|| "vowel".into());
    let idx: Vec<usize> = (0..ds.manifest.recordings.len()).collect();
    parallel_map(&idx, jobs, |&i| {
        let r = &ds.manifest.recordings[i];
        let audio = read_wav(&ds.resolve(&r.audio_path))?;
        let tier = detect_vowel_intervals(&audio, detector, &cfg.gmm)?;
        let tier = SegmentTier::new(name.clone(), tier.into_intervals())?;
        write_text(&out.join(format!("{}.TextGrid", r.recording_id)), &serialize_textgrid(&[tier]))
    })?;
    Ok(())
}

/// Vowel groups of every subject with a score of `cfg.train.target`.
pub fn build_group_manifest(
    features: &[ObservationFeatures],
    ds: &Dataset,
    cfg: &GlobalConfig,
    seed: u64,
) -> Result<GroupManifest> {
    let kind = cfg.train.target;
    let obs: Vec<_> = features.iter().map(|f| f.obs.clone()).collect();
    let mut groups: Vec<VowelGroup> = Vec::new();
    for (subject, cats) in categorize_by_subject(&obs) {
        let entry = ds.manifest.subject(&subject).ok_or_else(|| {
            Error::Core(vgan_core::Error::Data(format!("subject {subject} not in manifest")))
        })?;
        let value = entry.score(kind).ok_or_else(|| {
            Error::Core(vgan_core::Error::Data(format!("subject {subject} has no {kind} score")))
        })?;
        let target = FdaTarget::new(kind, value)?;
        let a = &cfg.augment;
        groups.extend(build_groups(&cats, target, a.mode, a.n_per_subject, a.shuffle, seed)?);
    }
    let totals = ds.total_scores();
    if cfg.augment.balance {
        groups = balance_by_severity(&groups, &totals, cfg.augment.balance_factor, seed)?;
    }
    let mut counter: BTreeMap<String, usize> = BTreeMap::new();
    let records = groups
        .iter()
        .map(|g| {
            let n = counter.entry(g.subject_id().to_string()).or_default();
            let id = format!("{}-g{:04}", g.subject_id(), *n);
            *n += 1;
            let total = totals.get(g.subject_id()).copied().ok_or_else(|| {
                Error::Core(vgan_core::Error::Data(format!("subject {} has no total score", g.subject_id())))
            })?;
            Ok(GroupRecord {
                group_id: id,
                subject_id: g.subject_id().to_string(),
                target: g.target().value,
                total_score: total,
                members: g.member_ids().map(String::from),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupManifest {
        target: kind,
        seed,
        groups: records,
    })
}

/// Network inputs for the groups of a manifest.
pub fn group_examples(features: &[ObservationFeatures], groups: &GroupManifest) -> Result<Vec<GroupExample>> {
    let by_id: BTreeMap<String, ObservationFeatures> =
        features.iter().map(|f| (f.obs.obs_id.clone(), f.clone())).collect();
    groups
        .groups
        .iter()
        .map(|g| {
            let members = std::array::from_fn(|k| {
                by_id
                    .get(&g.members[k])
                    .map(|f| f.obs.clone())
                    .ok_or_else(|| vgan_core::Error::Data(format!("group {}: unknown observation {}", g.group_id, g.members[k])))
            });
            let members = transpose_results(members)?;
            let target = FdaTarget::new(groups.target, g.target)?;
            let vg = VowelGroup::new(g.subject_id.clone(), members, target)?;
            Ok(group_example(g.group_id.clone(), &vg, &by_id, g.total_score)?)
        })
        .collect()
}

fn transpose_results<T, const N: usize>(a: [vgan_core::Result<T>; N]) -> vgan_core::Result<[T; N]> {
    let v: Vec<T> = a.into_iter().collect::<vgan_core::Result<Vec<T>>>()?;
    Ok(v.try_into().unwrap_or_else(|_| unreachable!("length is N")))
}

pub fn train_model(examples: &[GroupExample], cfg: &GlobalConfig) -> Result<(VganModel, TrainHistory)> {
    Ok(train(examples, &cfg.vgan, &cfg.train)?)
}

/// Speaker-disjoint cross-validation with folds spread over `jobs`
/// threads. The report does not depend on `jobs`.
pub fn cross_validate(examples: &[GroupExample], cfg: &GlobalConfig, jobs: usize) -> Result<EvalReport> {
    cfg.train.validate()?;
    let net = &cfg.vgan;
    let folds = assign_folds(examples, &cfg.train)?;
    let idx: Vec<usize> = (0..folds.len()).collect();
    let results = parallel_map(&idx, jobs, |&f| Ok(run_fold(examples, &folds, f, net, &cfg.train)?))?;
    Ok(assemble_report(cfg.train.target, results)?)
}

/// Rejects a model whose arrays or hyper-parameters disagree with `net`.
/// Shape errors name the first mismatched array.
pub fn check_model_against(model: &VganModel, net: &VganConfig) -> Result<()> {
    for (name, shape, _) in net.param_layout() {
        match model.param(&name) {
            Some(m) if m.shape() == shape => {}
            Some(m) => {
                return Err(Error::Core(vgan_core::Error::Shape {
                    name,
                    expected: shape,
                    found: m.shape(),
                }))
            }
            None => {
                return Err(Error::Core(vgan_core::Error::Data(format!(
                    "model lacks array '{name}' required by the configuration"
                ))))
            }
        }
    }
    if model.params.len() != net.param_layout().len() {
        return Err(Error::Core(vgan_core::Error::Data(
            "model has arrays the configuration does not define".into(),
        )));
    }
    if &model.config != net {
        return Err(Error::Core(vgan_core::Error::Data(
            "model hyper-parameters differ from the vgan configuration block".into(),
        )));
    }
    Ok(())
}

/// Scores a fixed model on `examples`; the report has no folds.
pub fn evaluate_model(model: &VganModel, examples: &[GroupExample]) -> Result<EvalReport> {
    let (pooled, groups) = evaluate(model, examples)?;
    Ok(EvalReport {
        target: model.target,
        scale_max: model.scale_max,
        folds: Vec::new(),
        normalized_rmse: pooled.rmse_subject / model.scale_max,
        subjects: vgan_core::train::aggregate_subject(&groups),
        pooled,
        groups,
    })
}

pub fn embeddings(model: &VganModel, examples: &[GroupExample]) -> Result<Vec<EmbeddingRow>> {
    examples
        .iter()
        .map(|e| {
            let t = model.forward(&e.papi, e.lip.as_ref())?;
            Ok(EmbeddingRow {
                group_id: e.group_id.clone(),
                subject_id: e.subject_id.clone(),
                target: e.target,
                prediction: t.prediction,
                acoustic: t.acoustic_embedding,
                visual: t.visual_embedding.unwrap_or_default(),
                fused: t.fused_embedding,
            })
        })
        .collect()
}

pub fn write_embeddings(path: &Path, rows: &[EmbeddingRow]) -> Result<()> {
    write_text(path, &write_embeddings_csv(rows)?)
}

/// Renders a synthetic corpus into `out`: `audio/`, `segments/`,
/// `landmarks/` and `manifest.json`.
pub fn synth_corpus(out: &Path, n_subjects: usize, seed: u64, cfg: &GlobalConfig, jobs: usize) -> Result<DatasetManifest> {
    let plans = plan_corpus(n_subjects, seed, &cfg.synth)?;
    let manifest = corpus_manifest(&plans, &cfg.synth);
    let syllable_name = cfg.annotation.syllable_tier.clone();
    let vowel_name = cfg.annotation.vowel_tier.clone().unwrap_or_else(|| "vowel".into());
    parallel_map(&plans, jobs, |p| {
        let rec = render_subject(p, &cfg.synth)?;
        let entry = manifest
            .recordings
            .iter()
            .find(|r| r.recording_id == rec.recording_id)
            .expect("manifest lists every planned recording");
        let audio_path = out.join(&entry.audio_path);
        if let Some(d) = audio_path.parent() {
            std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
        }
        write_wav(&audio_path, &rec.audio)?;
        let tiers = [
            SegmentTier::new(syllable_name.clone(), rec.syllables.into_intervals())?,
            SegmentTier::new(vowel_name.clone(), rec.vowels.into_intervals())?,
        ];
        write_text(&out.join(&entry.segment_path), &serialize_textgrid(&tiers))?;
        if let Some(lp) = &entry.landmark_path {
            write_text(&out.join(lp), &write_landmarks_csv(&rec.landmarks)?)?;
        }
        Ok(())
    })?;
    write_text(
        &out.join("manifest.json"),
        &(serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"),
    )?;
    Ok(manifest)
}
