//! Tabular sidecars and intermediate artifacts: GOP scores, per-observation
//! features, group manifests, evaluation outputs and embeddings.

use serde::{Deserialize, Serialize};
use vgan_core::extract::{GopEntry, ObservationFeatures, VowelSource};
use vgan_core::lip::{LipVector, LIP_DIM, LIP_FEATURE_NAMES};
use vgan_core::model::{SyllableObservation, TargetKind};
use vgan_core::papi::{PapiFlags, PapiVector, PAPI_DIM, PAPI_FEATURE_NAMES};
use vgan_core::train::{EvalReport, GroupPrediction};

use crate::{Error, Result};

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `recording_id,start,end,gop_vowel,gop_consonant`
pub fn parse_gop_csv(text: &str) -> Result<Vec<GopEntry>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

pub fn write_gop_csv(rows: &[GopEntry]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    finish(w)
}

const FLAG_COLUMNS: [&str; 4] = [
    "phonation_defaulted",
    "formants_defaulted",
    "articulation_defaulted",
    "gop_missing",
];

const ID_COLUMNS: [&str; 9] = [
    "obs_id",
    "subject_id",
    "recording_id",
    "start",
    "end",
    "syllable",
    "vowel_start",
    "vowel_end",
    "vowel_source",
];

fn source_name(s: VowelSource) -> &'static str {
    match s {
        VowelSource::Tier => "tier",
        VowelSource::Detector => "detector",
        VowelSource::Syllable => "syllable",
    }
}

fn parse_source(s: &str) -> Option<VowelSource> {
    match s {
        "tier" => Some(VowelSource::Tier),
        "detector" => Some(VowelSource::Detector),
        "syllable" => Some(VowelSource::Syllable),
        _ => None,
    }
}

fn header() -> Vec<String> {
    ID_COLUMNS
        .iter()
        .chain(PAPI_FEATURE_NAMES.iter())
        .chain(FLAG_COLUMNS.iter())
        .map(|s| s.to_string())
        .chain(LIP_FEATURE_NAMES.iter().map(|n| format!("lip_{n}")))
        .collect()
}

/// One row per observation; lip columns are empty when absent.
pub fn write_features_csv(features: &[ObservationFeatures]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header())?;
    for f in features {
        let o = &f.obs;
        let mut row = vec![
            o.obs_id.clone(),
            o.subject_id.clone(),
            o.recording_id.clone(),
            o.start.to_string(),
            o.end.to_string(),
            o.syllable_text.clone(),
            f.vowel_interval.0.to_string(),
            f.vowel_interval.1.to_string(),
            source_name(f.vowel_source).to_string(),
        ];
        row.extend(f.papi.to_array().iter().map(|v| v.to_string()));
        let fl = f.papi.flags;
        for b in [fl.phonation_defaulted, fl.formants_defaulted, fl.articulation_defaulted, fl.gop_missing] {
            row.push(if b { "1" } else { "0" }.to_string());
        }
        match &f.lip {
            Some(l) => row.extend(l.to_array().iter().map(|v| v.to_string())),
            None => row.extend(std::iter::repeat_n(String::new(), LIP_DIM)),
        }
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn parse_features_csv(text: &str) -> Result<Vec<ObservationFeatures>> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let want = header();
    if rdr.headers()?.iter().ne(want.iter().map(String::as_str)) {
        return Err(Error::Parse {
            line: 1,
            msg: "unexpected features header".into(),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let bad = |msg: String| Error::Parse { line, msg };
        let num = |i: usize| -> Result<f64> {
            rec[i].parse().map_err(|_| bad(format!("column {} is not a number: '{}'", want[i], &rec[i])))
        };
        let mut obs = SyllableObservation::new(&rec[0], &rec[1], &rec[2], num(3)?, num(4)?, &rec[5])?;
        let vowel_interval = (num(6)?, num(7)?);
        let vowel_source = parse_source(&rec[8]).ok_or_else(|| bad(format!("unknown vowel_source '{}'", &rec[8])))?;
        let base = ID_COLUMNS.len();
        let mut a = [0.0; PAPI_DIM];
        for (k, v) in a.iter_mut().enumerate() {
            *v = num(base + k)?;
        }
        let fb = base + PAPI_DIM;
        let flag = |i: usize| match &rec[fb + i] {
            "1" => Ok(true),
            "0" => Ok(false),
            s => Err(bad(format!("flag {} must be 0 or 1, got '{s}'", FLAG_COLUMNS[i]))),
        };
        let flags = PapiFlags {
            phonation_defaulted: flag(0)?,
            formants_defaulted: flag(1)?,
            articulation_defaulted: flag(2)?,
            gop_missing: flag(3)?,
        };
        let papi = PapiVector::from_array(a, flags);
        if !flags.gop_missing {
            obs.gop_vowel = Some(papi.gop_vowel);
            obs.gop_consonant = Some(papi.gop_consonant);
        }
        let lb = fb + FLAG_COLUMNS.len();
        let lip = if rec.iter().skip(lb).all(str::is_empty) {
            None
        } else {
            let mut l = [0.0; LIP_DIM];
            for (k, v) in l.iter_mut().enumerate() {
                *v = num(lb + k)?;
            }
            Some(LipVector::from_array(l))
        };
        out.push(ObservationFeatures {
            obs,
            vowel_interval,
            vowel_source,
            papi,
            lip,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupRecord {
    pub group_id: String,
    pub subject_id: String,
    pub target: f64,
    pub total_score: f64,
    /// Observation ids in vowel order a, o, e, i, u, ü.
    pub members: [String; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupManifest {
    pub target: TargetKind,
    pub seed: u64,
    pub groups: Vec<GroupRecord>,
}

pub fn write_group_manifest(m: &GroupManifest) -> String {
    serde_json::to_string_pretty(m).expect("group manifest serializes") + "\n"
}

pub fn parse_group_manifest(text: &str) -> Result<GroupManifest> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_report_json(r: &EvalReport) -> String {
    serde_json::to_string_pretty(r).expect("report serializes") + "\n"
}

/// One row per fold.
pub fn write_folds_csv(r: &EvalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "test_subjects", "groups", "rmse_group", "rmse_subject", "r2_subject"])?;
    for f in &r.folds {
        let m = &f.metrics;
        w.write_record([
            f.fold.to_string(),
            m.n_subjects.to_string(),
            m.n_groups.to_string(),
            m.rmse_group.to_string(),
            m.rmse_subject.to_string(),
            m.r2_subject.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    finish(w)
}

/// `fold,epoch,loss` in long form.
pub fn write_loss_csv(r: &EvalReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fold", "epoch", "loss"])?;
    for f in &r.folds {
        for (e, l) in f.loss_curve.iter().enumerate() {
            w.write_record([f.fold.to_string(), e.to_string(), l.to_string()])?;
        }
    }
    finish(w)
}

pub fn write_loss_curve_csv(losses: &[f64]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["epoch", "loss"])?;
    for (e, l) in losses.iter().enumerate() {
        w.write_record([e.to_string(), l.to_string()])?;
    }
    finish(w)
}

pub fn write_predictions_csv(preds: &[GroupPrediction]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["group_id", "subject_id", "target", "prediction"])?;
    for p in preds {
        w.write_record([
            p.group_id.clone(),
            p.subject_id.clone(),
            p.target.to_string(),
            p.prediction.to_string(),
        ])?;
    }
    finish(w)
}

/// Per-group embedding row for external visualization.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRow {
    pub group_id: String,
    pub subject_id: String,
    pub target: f64,
    pub prediction: f64,
    pub acoustic: Vec<f64>,
    pub visual: Vec<f64>,
    pub fused: Vec<f64>,
}

pub fn write_embeddings_csv(rows: &[EmbeddingRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let Some(first) = rows.first() else {
        w.write_record(["group_id", "subject_id", "target", "prediction"])?;
        return finish(w);
    };
    let mut head: Vec<String> = ["group_id", "subject_id", "target", "prediction"].map(String::from).to_vec();
    head.extend((0..first.acoustic.len()).map(|i| format!("a{i}")));
    head.extend((0..first.visual.len()).map(|i| format!("v{i}")));
    head.extend((0..first.fused.len()).map(|i| format!("f{i}")));
    w.write_record(&head)?;
    for r in rows {
        let mut row = vec![r.group_id.clone(), r.subject_id.clone(), r.target.to_string(), r.prediction.to_string()];
        row.extend(r.acoustic.iter().chain(&r.visual).chain(&r.fused).map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    finish(w)
}
