use std::collections::BTreeMap;

use vgan_core::augment::{build_groups, categorize, GroupMode};
use vgan_core::dsp::DspConfig;
use vgan_core::extract::{group_example, measure_recording, subject_features, AnnotationConfig, RecordingInput};
use vgan_core::model::{FdaTarget, TargetKind};
use vgan_core::nn::VganConfig;
use vgan_core::papi::{PapiConfig, PAPI_DIM};
use vgan_core::synth::{plan_corpus, render_subject, SynthConfig};
use vgan_core::train::{evaluate, train, GroupExample, TrainConfig};

fn examples(n: usize, seed: u64) -> Vec<GroupExample> {
    let cfg = SynthConfig {
        repetitions: 2,
        ..SynthConfig::default()
    };
    let dsp = DspConfig::default();
    let mut out = Vec::new();
    for p in plan_corpus(n, seed, &cfg).unwrap() {
        let rec = render_subject(&p, &cfg).unwrap();
        let tiers = [rec.syllables.clone(), rec.vowels.clone()];
        let input = RecordingInput {
            recording_id: &rec.recording_id,
            subject_id: &p.subject_id,
            audio: &rec.audio,
            tiers: &tiers,
            landmarks: Some(&rec.landmarks),
        };
        let records = measure_recording(&input, &AnnotationConfig::default(), &[], None, &dsp).unwrap();
        let feats = subject_features(records, &PapiConfig::default()).unwrap();
        for f in &feats {
            assert!(f.papi.is_finite());
            assert!(f.papi.flags.gop_missing);
            assert!(f.lip.is_some());
        }
        let obs: Vec<_> = feats.iter().map(|f| f.obs.clone()).collect();
        let total = p.scores[&TargetKind::Total];
        let target = FdaTarget::new(TargetKind::Total, total).unwrap();
        let groups = build_groups(&categorize(&obs), target, GroupMode::Zip, 0, true, seed).unwrap();
        let by_id: BTreeMap<_, _> = feats.into_iter().map(|f| (f.obs.obs_id.clone(), f)).collect();
        for (i, g) in groups.iter().enumerate() {
            out.push(group_example(format!("{}-{i}", p.subject_id), g, &by_id, total).unwrap());
        }
    }
    out
}

#[test]
fn synthetic_subjects_train_end_to_end() {
    let ex = examples(4, 3);
    assert_eq!(ex.len(), 4 * 2);
    assert!(ex.iter().all(|e| e.papi.shape() == (6, PAPI_DIM) && e.lip.is_some()));
    assert_eq!(ex, examples(4, 3));

    let cfg = TrainConfig {
        epochs: 30,
        batch_size: 8,
        ..TrainConfig::default()
    };
    let (model, history) = train(&ex, &VganConfig::default(), &cfg).unwrap();
    assert_eq!(history.train_loss.len(), 30);
    assert!(history.train_loss[29] < history.train_loss[0]);
    let (metrics, preds) = evaluate(&model, &ex).unwrap();
    assert_eq!(metrics.n_subjects, 4);
    assert!(preds.iter().all(|p| p.prediction.is_finite()));
}
