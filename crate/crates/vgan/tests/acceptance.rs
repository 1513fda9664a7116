//! Acceptance suite. Prints one line per criterion and exits non-zero when
//! any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng as _;
use vgan::io::tables::{write_group_manifest, GroupManifest};
use vgan::io::{deserialize_model, parse_textgrid, serialize_model, serialize_textgrid};
use vgan::pipeline::{self, Dataset};
use vgan_core::augment::{build_groups, categorize, GroupMode};
use vgan_core::config::GlobalConfig;
use vgan_core::dsp::{self, hz_to_bark, AudioBuffer, DspConfig, PulseSequence};
use vgan_core::gmm::gmm_fit;
use vgan_core::linalg::Matrix;
use vgan_core::model::{FdaTarget, SyllableObservation, TargetKind, VowelClass};
use vgan_core::nn::{Sample, VganConfig, VganModel};
use vgan_core::papi::{fcr, vai, vowel_space_area, VowelFormantSet};
use vgan_core::rng::seeded;
use vgan_core::segment::{Interval, SegmentTier};
use vgan_core::synth::{render_vowel, syllables_for, SynthConfig, SynthProfile};
use vgan_core::train::{assign_folds, EvalReport, GroupExample};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if $cond {
        } else {
            return Err(format!($($fmt)+));
        }
    };
}

fn random_matrix(rows: usize, cols: usize, rng: &mut vgan_core::rng::Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.random_range(-1.5..1.5))
}

fn gradient_check() -> Outcome {
    let t0 = Instant::now();
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for seed in [1u64, 2, 3] {
        let mut m = VganModel::init(VganConfig::default(), TargetKind::Total, seed).map_err(|e| e.to_string())?;
        m.standardization.target_mean = 76.0;
        m.standardization.target_std = 22.0;
        let mut rng = seeded(100 + seed);
        let batch: Vec<Sample> = (0..3)
            .map(|k| Sample {
                papi: random_matrix(6, 20, &mut rng),
                lip: Some(random_matrix(6, 10, &mut rng)),
                target: 40.0 + 30.0 * k as f64,
            })
            .collect();
        let (_, grads) = m.gradients(&batch).map_err(|e| e.to_string())?;
        let eps = 1e-5;
        for k in 0..m.params.len() {
            let n = m.params[k].value.len();
            let coords: Vec<usize> = if n <= 20 {
                (0..n).collect()
            } else {
                (0..20).map(|_| rng.random_range(0..n)).collect()
            };
            for e in coords {
                let orig = m.params[k].value.as_slice()[e];
                m.params[k].value.as_mut_slice()[e] = orig + eps;
                let lp = m.batch_loss(&batch).map_err(|e| e.to_string())?;
                m.params[k].value.as_mut_slice()[e] = orig - eps;
                let lm = m.batch_loss(&batch).map_err(|e| e.to_string())?;
                m.params[k].value.as_mut_slice()[e] = orig;
                let fd = (lp - lm) / (2.0 * eps);
                let g = grads.0[k].as_slice()[e];
                let rel = (g - fd).abs() / g.abs().max(fd.abs()).max(1e-6);
                worst = worst.max(rel);
                checked += 1;
                ensure!(rel < 1e-4, "seed {seed} {}[{e}]: analytic {g:e}, numeric {fd:e}", m.params[k].name);
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{checked} coordinates, worst relative error {worst:.2e}, {secs:.1}s"))
}

fn architecture() -> Outcome {
    let c = VganConfig::default();
    ensure!(c.vga_flatten() == 576, "vga flatten {}", c.vga_flatten());
    ensure!(c.feature_flatten() == 120, "feature flatten {}", c.feature_flatten());
    let m = VganModel::init(c, TargetKind::Total, 3).map_err(|e| e.to_string())?;
    let mut rng = seeded(8);
    let mut worst_row: f64 = 0.0;
    for _ in 0..10 {
        let x = random_matrix(6, 20, &mut rng);
        let out = m.vga_forward(&x).map_err(|e| e.to_string())?;
        ensure!(out.attended.len() == 576, "attended has {} values", out.attended.len());
        for a in &out.attention {
            for i in 0..6 {
                worst_row = worst_row.max((a.row(i).iter().sum::<f64>() - 1.0).abs());
            }
        }
        let lip = random_matrix(6, 10, &mut rng);
        let t = m.forward(&x, Some(&lip)).map_err(|e| e.to_string())?;
        if let Some(f) = &t.fusion_attention {
            for i in 0..f.rows() {
                worst_row = worst_row.max((f.row(i).iter().sum::<f64>() - 1.0).abs());
            }
        }
    }
    ensure!(worst_row < 1e-9, "attention row sum off by {worst_row:e}");
    let row = random_matrix(1, 20, &mut rng);
    let same = Matrix::from_fn(6, 20, |_, j| row[(0, j)]);
    let mut worst_uniform: f64 = 0.0;
    for a in m.vga_forward(&same).map_err(|e| e.to_string())?.attention {
        for v in a.as_slice() {
            worst_uniform = worst_uniform.max((v - 1.0 / 6.0).abs());
        }
    }
    ensure!(worst_uniform < 1e-12, "identical nodes: max deviation {worst_uniform:e}");
    Ok(format!("576/120, row sums within {worst_row:.1e}, uniform within {worst_uniform:.1e}"))
}

fn formula_oracles() -> Outcome {
    let mut rng = seeded(33);
    let mut worst_prod: f64 = 0.0;
    let mut worst_vsa: f64 = 0.0;
    for _ in 0..1000 {
        let mut f = || (rng.random_range(200.0..1000.0), rng.random_range(1050.0..3000.0));
        let (a, i, u) = (f(), f(), f());
        let set = VowelFormantSet::new()
            .with(VowelClass::A, a.0, a.1)
            .and_then(|s| s.with(VowelClass::I, i.0, i.1))
            .and_then(|s| s.with(VowelClass::U, u.0, u.1))
            .map_err(|e| e.to_string())?;
        let p = fcr(&set).map_err(|e| e.to_string())? * vai(&set).map_err(|e| e.to_string())?;
        worst_prod = worst_prod.max((p - 1.0).abs());
        // shoelace over the closed polygon a, i, u
        let pts = [a, i, u];
        let twice: f64 = (0..3).map(|k| pts[k].0 * pts[(k + 1) % 3].1 - pts[(k + 1) % 3].0 * pts[k].1).sum();
        let oracle = twice.abs() / 2.0;
        let got = vowel_space_area(&set).map_err(|e| e.to_string())?;
        if oracle > 0.0 {
            worst_vsa = worst_vsa.max((got - oracle).abs() / oracle);
        }
    }
    ensure!(worst_prod < 1e-9, "FCR·VAI off by {worst_prod:e}");
    ensure!(worst_vsa < 1e-9, "VSA relative error {worst_vsa:e}");
    let b = hz_to_bark(1000.0).map_err(|e| e.to_string())?;
    ensure!((b - 8.51).abs() <= 0.01, "bark(1000) = {b}");
    Ok(format!("FCR·VAI within {worst_prod:.1e}, VSA within {worst_vsa:.1e}, bark(1000) = {b:.4}"))
}

fn measure_pulses(audio: &AudioBuffer, d: &DspConfig) -> Result<PulseSequence, String> {
    dsp::estimate_pitch_track(audio, d).map_err(|e| e.to_string())
}

fn estimator_recovery() -> Outcome {
    let t0 = Instant::now();
    let c = SynthConfig::default();
    let d = DspConfig::default();
    // expected local perturbation of an iid Gaussian sequence: E|x1 - x2| = 2σ/√π
    let k = 2.0 / std::f64::consts::PI.sqrt();
    let mut lines = Vec::new();
    for s in [0.5, 1.0] {
        let (mut jit, mut shim) = (Vec::new(), Vec::new());
        for (n, v) in [VowelClass::A, VowelClass::I, VowelClass::U].into_iter().enumerate() {
            let p = SynthProfile::new(s, 95.0, 50 + n as u64, &c).map_err(|e| e.to_string())?;
            let r = render_vowel(v, &p, 1.0, 0, &c).map_err(|e| e.to_string())?;
            let pulses = measure_pulses(&r.audio, &d)?;
            jit.push(dsp::jitter_local(&pulses).map_err(|e| e.to_string())?);
            shim.push(dsp::shimmer_local(&pulses).map_err(|e| e.to_string())?);
        }
        let j = jit.iter().sum::<f64>() / jit.len() as f64;
        let sh = shim.iter().sum::<f64>() / shim.len() as f64;
        let (jl, sl) = (c.jitter_at_max * s, c.shimmer_at_max * s);
        let (je, se) = (k * jl, k * sl);
        ensure!((j / je - 1.0).abs() <= 0.2, "s={s}: jitter {j:.4} vs expected {je:.4}");
        ensure!((sh / se - 1.0).abs() <= 0.2, "s={s}: shimmer {sh:.4} vs expected {se:.4}");
        lines.push(format!(
            "s={s}: jitter {j:.4} (x{:.2} of level {jl}), shimmer {sh:.4} (x{:.2} of level {sl})",
            j / jl,
            sh / sl
        ));
    }
    let p = SynthProfile::new(0.0, 95.0, 7, &c).map_err(|e| e.to_string())?;
    let mut worst: f64 = 0.0;
    for v in VowelClass::ALL {
        let r = render_vowel(v, &p, 0.5, 0, &c).map_err(|e| e.to_string())?;
        let track = dsp::lpc_formants(&r.audio, &d).map_err(|e| e.to_string())?;
        let stats = dsp::formant_stats(&track).map_err(|e| e.to_string())?;
        let canon = c.formants.get(v);
        for (i, (got, want)) in stats.mean.iter().zip(canon).enumerate() {
            let rel = (got - want).abs() / want;
            worst = worst.max(rel);
            ensure!(rel <= 0.05, "{v} F{}: {got:.0} vs {want:.0}", i + 1);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    ensure!(secs < 120.0, "took {secs:.1}s");
    Ok(format!("{}; formants within {:.1}%, {secs:.1}s", lines.join("; "), worst * 100.0))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    for (rank, &i) in idx.iter().enumerate() {
        r[i] = rank as f64;
    }
    r
}

fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

fn monotonicity() -> Outcome {
    let c = SynthConfig::default();
    let d = DspConfig::default();
    let severities: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let (mut vsa, mut jitter) = (Vec::new(), Vec::new());
    for &s in &severities {
        let p = SynthProfile::new(s, 95.0, 21, &c).map_err(|e| e.to_string())?;
        let mut set = VowelFormantSet::new();
        let mut j = Vec::new();
        for v in VowelClass::ALL {
            let r = render_vowel(v, &p, 1.5, 0, &c).map_err(|e| e.to_string())?;
            if matches!(v, VowelClass::A | VowelClass::I | VowelClass::U) {
                let track = dsp::lpc_formants(&r.audio, &d).map_err(|e| e.to_string())?;
                let m = dsp::formant_stats(&track).map_err(|e| e.to_string())?.mean;
                set.insert(v, m[0], m[1]).map_err(|e| e.to_string())?;
            }
            j.push(dsp::jitter_local(&measure_pulses(&r.audio, &d)?).map_err(|e| e.to_string())?);
        }
        vsa.push(vowel_space_area(&set).map_err(|e| e.to_string())?);
        jitter.push(j.iter().sum::<f64>() / j.len() as f64);
    }
    for w in 0..severities.len() - 1 {
        ensure!(vsa[w + 1] < vsa[w], "VSA rises from s={} to s={}: {:.0} -> {:.0}", severities[w], severities[w + 1], vsa[w], vsa[w + 1]);
        ensure!(
            jitter[w + 1] > jitter[w],
            "jitter falls from s={} to s={}: {:.5} -> {:.5}",
            severities[w],
            severities[w + 1],
            jitter[w],
            jitter[w + 1]
        );
    }
    let rv = spearman(&severities, &vsa);
    let rj = spearman(&severities, &jitter);
    ensure!(rv.abs() >= 0.95 && rj.abs() >= 0.95, "spearman VSA {rv:.3}, jitter {rj:.3}");
    Ok(format!(
        "VSA {:.0} -> {:.0} Hz², jitter {:.4} -> {:.4}, spearman {rv:.3} / {rj:.3}",
        vsa[0], vsa[10], jitter[0], jitter[10]
    ))
}

/// Synthesizes, extracts and groups a corpus; returns the dataset, the
/// group manifest and the network examples.
fn corpus(dir: &Path, n: usize, seed: u64, cfg: &GlobalConfig) -> Result<(Dataset, GroupManifest, Vec<GroupExample>), String> {
    let out = dir.join("corpus");
    pipeline::synth_corpus(&out, n, seed, cfg, 1).map_err(|e| e.to_string())?;
    let ds = Dataset::load(&out.join("manifest.json")).map_err(|e| e.to_string())?;
    let feats = pipeline::extract_features(&ds, cfg, None, 1).map_err(|e| e.to_string())?;
    let groups = pipeline::build_group_manifest(&feats, &ds, cfg, seed).map_err(|e| e.to_string())?;
    let examples = pipeline::group_examples(&feats, &groups).map_err(|e| e.to_string())?;
    Ok((ds, groups, examples))
}

fn check_disjoint(examples: &[GroupExample], cfg: &GlobalConfig, report: &EvalReport) -> Result<(), String> {
    let all: BTreeSet<&str> = examples.iter().map(|e| e.subject_id.as_str()).collect();
    let folds = assign_folds(examples, &cfg.train).map_err(|e| e.to_string())?;
    let mut seen = BTreeSet::new();
    for (f, test) in folds.iter().enumerate() {
        let test: BTreeSet<&str> = test.iter().map(String::as_str).collect();
        let train: BTreeSet<&str> = all.difference(&test).copied().collect();
        ensure!(train.is_disjoint(&test), "fold {f}: train and test share subjects");
        for s in &test {
            ensure!(seen.insert(*s), "subject {s} tested in more than one fold");
        }
        let reported: BTreeSet<&str> = report.folds[f].test_subjects.iter().map(String::as_str).collect();
        ensure!(reported == test, "fold {f}: report lists different test subjects");
    }
    ensure!(seen.len() == all.len(), "{} of {} subjects tested", seen.len(), all.len());
    Ok(())
}

fn end_to_end(dir: &Path) -> Outcome {
    let t0 = Instant::now();
    let cfg = GlobalConfig::default();
    let (_, groups, examples) = corpus(dir, 50, 42, &cfg)?;
    let prep = t0.elapsed().as_secs_f64();
    let report = pipeline::cross_validate(&examples, &cfg, 1).map_err(|e| e.to_string())?;
    check_disjoint(&examples, &cfg, &report)?;
    let secs = t0.elapsed().as_secs_f64();
    let r2 = report.pooled.r2_subject.ok_or("subject R² undefined")?;
    let rmse = report.pooled.rmse_subject;
    ensure!(report.folds.len() == 10, "{} folds", report.folds.len());
    ensure!(report.pooled.n_subjects == 50, "{} subjects scored", report.pooled.n_subjects);
    ensure!(r2 >= 0.8, "subject R² {r2:.3} (RMSE {rmse:.2})");
    ensure!(rmse <= 10.0, "subject RMSE {rmse:.2} (R² {r2:.3})");
    ensure!(secs < 600.0, "took {secs:.0}s");
    Ok(format!(
        "{} groups, subject R² {r2:.3}, RMSE {rmse:.2}, folds disjoint, {secs:.0}s ({prep:.0}s extraction)",
        groups.groups.len()
    ))
}

fn complementarity(dir: &Path) -> Outcome {
    let mut cfg = GlobalConfig::default();
    cfg.synth.independent_lip_severity = true;
    let (_, _, examples) = corpus(dir, 50, 43, &cfg)?;
    let bimodal = pipeline::cross_validate(&examples, &cfg, 1).map_err(|e| e.to_string())?;
    let mut audio = cfg.clone();
    audio.vgan.audio_only = true;
    let audio_only = pipeline::cross_validate(&examples, &audio, 1).map_err(|e| e.to_string())?;
    let (b, a) = (bimodal.pooled.rmse_subject, audio_only.pooled.rmse_subject);
    ensure!(b <= a, "bimodal RMSE {b:.2} > audio-only RMSE {a:.2}");
    Ok(format!("bimodal subject RMSE {b:.2}, audio-only {a:.2}"))
}

fn obs(subject: &str, k: usize, v: VowelClass) -> SyllableObservation {
    let syl = syllables_for(v)[k % 3];
    SyllableObservation::new(format!("{subject}-{}-{k:03}", v.letter()), subject, "r", k as f64, k as f64 + 0.5, syl)
        .expect("valid observation")
}

fn augmentation(dir: &Path) -> Outcome {
    let mut rng = seeded(5);
    let target = FdaTarget::new(TargetKind::Total, 80.0).map_err(|e| e.to_string())?;
    for trial in 0..20 {
        let sizes: Vec<usize> = (0..6).map(|_| rng.random_range(1..12)).collect();
        let all: Vec<SyllableObservation> = VowelClass::ALL
            .iter()
            .zip(&sizes)
            .flat_map(|(&v, &n)| (0..n).map(move |k| obs("S1", k, v)))
            .collect();
        let cats = categorize(&all);
        let zip = build_groups(&cats, target, GroupMode::Zip, 0, true, trial).map_err(|e| e.to_string())?;
        let min = *sizes.iter().min().unwrap();
        ensure!(zip.len() == min, "zip gave {} groups for sizes {sizes:?}", zip.len());
        let random = build_groups(&cats, target, GroupMode::Random, 100, true, trial).map_err(|e| e.to_string())?;
        ensure!(random.len() == 100, "random gave {} groups", random.len());
    }
    // identical manifests from the same seed on a rendered corpus
    let mut cfg = GlobalConfig::default();
    cfg.synth.repetitions = 2;
    let out = dir.join("corpus");
    pipeline::synth_corpus(&out, 6, 9, &cfg, 1).map_err(|e| e.to_string())?;
    let ds = Dataset::load(&out.join("manifest.json")).map_err(|e| e.to_string())?;
    let feats = pipeline::extract_features(&ds, &cfg, None, 1).map_err(|e| e.to_string())?;
    let mut sizes = Vec::new();
    for mode in [GroupMode::Zip, GroupMode::Random] {
        cfg.augment.mode = mode;
        cfg.augment.n_per_subject = 100;
        let a = pipeline::build_group_manifest(&feats, &ds, &cfg, 17).map_err(|e| e.to_string())?;
        let b = pipeline::build_group_manifest(&feats, &ds, &cfg, 17).map_err(|e| e.to_string())?;
        ensure!(write_group_manifest(&a) == write_group_manifest(&b), "{mode:?} manifests differ");
        sizes.push(a.groups.len());
    }
    ensure!(sizes[1] == 600, "random mode gave {} groups for 6 subjects", sizes[1]);
    Ok(format!("20 category layouts, corpus manifests identical ({} zip / {} random groups)", sizes[0], sizes[1]))
}

fn gmm() -> Outcome {
    let mut rng = seeded(12);
    let n = 600;
    let normal = |rng: &mut vgan_core::rng::Rng| -> f64 {
        // Box-Muller
        let (u1, u2): (f64, f64) = (rng.random_range(1e-12..1.0), rng.random());
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut labels = Vec::new();
    let x = Matrix::from_fn(n, 2, |i, j| {
        let c = i % 2;
        if j == 0 {
            labels.push(c);
        }
        let centre = if c == 0 { [-2.0, 0.0] } else { [2.0, 1.0] };
        centre[j] + if j == 0 { 0.8 } else { 0.5 } * normal(&mut rng)
    });
    let fit = gmm_fit(&x, 2, 60, 0.0, 1e-6, 3).map_err(|e| e.to_string())?;
    ensure!(fit.loglik.len() <= 60, "{} iterations", fit.loglik.len());
    for w in fit.loglik.windows(2) {
        ensure!(w[1] >= w[0] - 1e-8, "log-likelihood fell {} -> {}", w[0], w[1]);
    }
    let prep = fit.mixture.prepare().map_err(|e| e.to_string())?;
    let hits = (0..n)
        .filter(|&i| {
            let r = prep.responsibilities(x.row(i));
            let c = if r[0] > r[1] { 0 } else { 1 };
            c == labels[i]
        })
        .count();
    let acc = hits.max(n - hits) as f64 / n as f64;
    ensure!(acc >= 0.95, "cluster accuracy {acc:.3}");

    // speech frames with the configured feature definition
    let c = SynthConfig::default();
    let p = SynthProfile::new(0.3, 100.0, 4, &c).map_err(|e| e.to_string())?;
    let mut samples = Vec::new();
    for v in VowelClass::ALL {
        samples.extend(render_vowel(v, &p, 0.4, 0, &c).map_err(|e| e.to_string())?.audio.into_samples());
        samples.extend(std::iter::repeat_n(0.0, 3200));
    }
    let audio = AudioBuffer::new(samples, c.sample_rate).map_err(|e| e.to_string())?;
    let gcfg = vgan_core::gmm::GmmConfig::default();
    let (frames, _) = vgan_core::gmm::frame_features(&audio, &gcfg.features);
    let speech = gmm_fit(&frames, 4, 60, 0.0, gcfg.reg, 5).map_err(|e| e.to_string())?;
    ensure!(speech.loglik.len() <= 60, "{} iterations", speech.loglik.len());
    for w in speech.loglik.windows(2) {
        ensure!(w[1] >= w[0] - 1e-8, "frame log-likelihood fell {} -> {}", w[0], w[1]);
    }
    Ok(format!(
        "monotone over {} and {} iterations, two-cluster accuracy {:.1}%",
        fit.loglik.len(),
        speech.loglik.len(),
        acc * 100.0
    ))
}

fn random_tier(rng: &mut vgan_core::rng::Rng, name: String) -> SegmentTier {
    let mut t = rng.random_range(0.0..0.5);
    let labels = ["", "ba", "ma", "say \"a\"", "ü", "x y"];
    let ivs = (0..rng.random_range(0..15))
        .map(|_| {
            let start = t + if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.0..0.3) };
            t = start + rng.random_range(0.01..1.0);
            Interval::new(start, t, labels[rng.random_range(0..labels.len())])
        })
        .collect();
    SegmentTier::new(name, ivs).expect("ordered intervals")
}

fn round_trips() -> Outcome {
    let mut m = VganModel::init(VganConfig::default(), TargetKind::Total, 31).map_err(|e| e.to_string())?;
    m.standardization.target_mean = 77.7;
    m.standardization.target_std = 0.1 + 0.2;
    let back = deserialize_model(&serialize_model(&m)).map_err(|e| e.to_string())?;
    let mut rng = seeded(2);
    for _ in 0..20 {
        let papi = random_matrix(6, 20, &mut rng);
        let lip = random_matrix(6, 10, &mut rng);
        let a = m.predict(&papi, Some(&lip)).map_err(|e| e.to_string())?;
        let b = back.predict(&papi, Some(&lip)).map_err(|e| e.to_string())?;
        ensure!(a.to_bits() == b.to_bits(), "prediction {a} became {b}");
    }
    let mut intervals = 0;
    for file in 0..100 {
        let tiers: Vec<SegmentTier> = (0..rng.random_range(1..4))
            .map(|k| random_tier(&mut rng, format!("tier{k}")))
            .collect();
        intervals += tiers.iter().map(SegmentTier::len).sum::<usize>();
        let first = parse_textgrid(&serialize_textgrid(&tiers)).map_err(|e| format!("file {file}: {e}"))?;
        ensure!(first.tiers == tiers, "file {file}: tiers changed on parse");
        let second = parse_textgrid(&serialize_textgrid(&first.tiers)).map_err(|e| format!("file {file}: {e}"))?;
        ensure!(second.tiers == first.tiers, "file {file}: second parse differs");
    }
    Ok(format!("model predictions bit-identical, 100 TextGrids ({intervals} intervals) stable"))
}

fn cli_run(dir: &Path) -> Result<Vec<u8>, String> {
    let cfg = dir.join("cfg.toml");
    std::fs::write(&cfg, "[synth]\nrepetitions = 2\n[train]\nepochs = 20\nk_folds = 4\n").map_err(|e| e.to_string())?;
    let p = |s: &str| dir.join(s).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["synth".into(), "--subjects".into(), "8".into(), "--out".into(), p("corpus")],
        vec!["extract".into(), "--manifest".into(), p("corpus/manifest.json"), "--out".into(), p("feats.csv")],
        vec![
            "augment".into(),
            "--manifest".into(),
            p("corpus/manifest.json"),
            "--features".into(),
            p("feats.csv"),
            "--out".into(),
            p("groups.json"),
        ],
        vec![
            "train".into(),
            "--features".into(),
            p("feats.csv"),
            "--groups".into(),
            p("groups.json"),
            "--out".into(),
            p("model.json"),
        ],
        vec![
            "eval".into(),
            "--features".into(),
            p("feats.csv"),
            "--groups".into(),
            p("groups.json"),
            "--out".into(),
            p("eval"),
        ],
    ];
    for step in steps {
        let mut argv = vec!["vgan".to_string(), "--config".into(), cfg.display().to_string(), "--seed".into(), "11".into()];
        argv.extend(step.iter().cloned());
        let code = vgan::cli::run(argv);
        ensure!(code == 0, "{} exited with {code}", step[0]);
    }
    let mut bytes = std::fs::read(dir.join("eval/report.json")).map_err(|e| e.to_string())?;
    bytes.extend(std::fs::read(dir.join("model.json")).map_err(|e| e.to_string())?);
    Ok(bytes)
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let first = cli_run(a)?;
    let second = cli_run(b)?;
    ensure!(first == second, "reports differ between runs");
    let report = std::fs::read(a.join("eval/report.json")).map_err(|e| e.to_string())?;
    let same_report = report == std::fs::read(b.join("eval/report.json")).map_err(|e| e.to_string())?;
    ensure!(same_report, "report.json differs");
    Ok(format!("report.json and model.json byte-identical ({} bytes)", first.len()))
}

fn main() {
    let tmp = |tag: &str| tempfile::Builder::new().prefix(tag).tempdir().expect("temporary directory");
    let (d6, d7, d8, d11a, d11b) = (tmp("c6"), tmp("c7"), tmp("c8"), tmp("c11a"), tmp("c11b"));
    let criteria: Vec<Criterion> = vec![
        ("gradient correctness", Box::new(gradient_check)),
        ("architecture conformance", Box::new(architecture)),
        ("feature formula oracles", Box::new(formula_oracles)),
        ("estimator recovery", Box::new(estimator_recovery)),
        ("monotonicity", Box::new(monotonicity)),
        ("end-to-end learning", Box::new(|| end_to_end(d6.path()))),
        ("audio-visual complementarity", Box::new(|| complementarity(d7.path()))),
        ("augmentation contracts", Box::new(|| augmentation(d8.path()))),
        ("gmm em", Box::new(gmm)),
        ("round-trips", Box::new(round_trips)),
        ("determinism", Box::new(|| determinism(d11a.path(), d11b.path()))),
    ];
    let only: Option<BTreeSet<usize>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    let mut failed = 0;
    let mut times: BTreeMap<usize, Duration> = BTreeMap::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let n = i + 1;
        if only.as_ref().is_some_and(|o| !o.contains(&n)) {
            continue;
        }
        let t = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        times.insert(n, t.elapsed());
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n:>2} FAIL {name}: {why}");
            }
        }
    }
    let total: Duration = times.values().sum();
    println!("{} of {} criteria passed in {:.0}s", times.len() - failed, times.len(), total.as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
