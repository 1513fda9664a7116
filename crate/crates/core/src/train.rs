//! Optimization, speaker-disjoint cross-validation and metrics.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::augment::balance_indices;
use crate::linalg::Matrix;
use crate::model::{severity_band, SeverityBand, TargetKind};
use crate::nn::{Gradients, NamedArray, Sample, Standardization, VganConfig, VganModel};
use crate::rng::{derive_seed, label_of, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub target: TargetKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub k_folds: usize,
    /// Fraction of training subjects held out to pick the best epoch;
    /// 0 disables it and the final epoch is kept.
    pub validation_fraction: f64,
    /// Balance training groups across severity bands in each fold.
    pub balance: bool,
    pub balance_factor: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            target: TargetKind::Total,
            epochs: 100,
            batch_size: 64,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            seed: 0,
            k_folds: 10,
            validation_fraction: 0.0,
            balance: false,
            balance_factor: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_folds < 2 {
            return Err(Error::Config("train.k_folds must be at least 2".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("train.learning_rate must be non-negative".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("train.batch_size must be positive".into()));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2) && self.eps > 0.0) {
            return Err(Error::Config("adam betas must lie in [0, 1) and eps be positive".into()));
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return Err(Error::Config("train.validation_fraction must lie in [0, 1)".into()));
        }
        if !(self.balance_factor > 0.0) {
            return Err(Error::Config("train.balance_factor must be positive".into()));
        }
        Ok(())
    }
}

/// Features of one vowel group ready for the network.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupExample {
    pub group_id: String,
    pub subject_id: String,
    /// 6×20 raw speech features, rows in vowel order.
    pub papi: Matrix,
    /// 6×10 raw lip features.
    pub lip: Option<Matrix>,
    /// Target in score points.
    pub target: f64,
    /// Total score of the subject, used for stratification and balancing.
    pub total_score: f64,
}

impl GroupExample {
    fn sample(&self) -> Sample {
        Sample {
            papi: self.papi.clone(),
            lip: self.lip.clone(),
            target: self.target,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<Matrix>,
    pub v: Vec<Matrix>,
    pub t: u64,
}

impl AdamState {
    pub fn new(params: &[NamedArray]) -> AdamState {
        let zeros: Vec<Matrix> = params.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect();
        AdamState {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(
    params: &mut [NamedArray],
    grads: &Gradients,
    state: &mut AdamState,
    lr: f64,
    betas: (f64, f64),
    eps: f64,
) -> Result<()> {
    if grads.0.len() != params.len() || state.m.len() != params.len() {
        return Err(Error::Input(format!(
            "adam: {} parameters, {} gradients, {} moment arrays",
            params.len(),
            grads.0.len(),
            state.m.len()
        )));
    }
    for (p, g) in params.iter().zip(&grads.0) {
        if p.value.shape() != g.shape() {
            return Err(Error::Shape {
                name: p.name.clone(),
                expected: p.value.shape(),
                found: g.shape(),
            });
        }
    }
    state.t += 1;
    let (b1, b2) = betas;
    let c1 = 1.0 - libm::pow(b1, state.t as f64);
    let c2 = 1.0 - libm::pow(b2, state.t as f64);
    for k in 0..params.len() {
        let g = grads.0[k].as_slice();
        let m = state.m[k].as_mut_slice();
        let v = state.v[k].as_mut_slice();
        let w = params[k].value.as_mut_slice();
        for i in 0..w.len() {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            w[i] -= lr * mh / (libm::sqrt(vh) + eps);
        }
    }
    Ok(())
}

/// Partitions subjects into `k` folds whose sizes differ by at most one.
/// Subjects are shuffled within severity band and dealt round-robin band
/// after band, so each fold gets a similar band mix.
pub fn kfold_speakers(subjects: &[(String, Option<SeverityBand>)], k: usize, seed: u64) -> Result<Vec<Vec<String>>> {
    if k == 0 || subjects.len() < k {
        return Err(Error::InsufficientData(format!(
            "{} subjects cannot fill {k} folds",
            subjects.len()
        )));
    }
    let unique: BTreeSet<&str> = subjects.iter().map(|(s, _)| s.as_str()).collect();
    if unique.len() != subjects.len() {
        return Err(Error::Data("duplicate subject ids in fold assignment".into()));
    }
    let mut by: BTreeMap<Option<SeverityBand>, Vec<&str>> = BTreeMap::new();
    for (s, b) in subjects {
        by.entry(*b).or_default().push(s);
    }
    let mut rng = seeded(derive_seed(seed, label_of("folds")));
    let mut folds = vec![Vec::new(); k];
    let mut next = 0;
    for members in by.values_mut() {
        members.sort_unstable();
        members.shuffle(&mut rng);
        for s in members.iter() {
            folds[next % k].push(String::from(*s));
            next += 1;
        }
    }
    Ok(folds)
}

/// Root mean squared error.
pub fn rmse(ys: &[f64], preds: &[f64]) -> Result<f64> {
    if ys.is_empty() || ys.len() != preds.len() {
        return Err(Error::Input("rmse needs equal non-empty lengths".into()));
    }
    let ss: f64 = ys.iter().zip(preds).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(libm::sqrt(ss / ys.len() as f64))
}

/// Coefficient of determination against the mean of `ys`.
pub fn r2(ys: &[f64], preds: &[f64]) -> Result<f64> {
    if ys.is_empty() || ys.len() != preds.len() {
        return Err(Error::Input("r2 needs equal non-empty lengths".into()));
    }
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let ss_tot: f64 = ys.iter().map(|y| (y - mean) * (y - mean)).sum();
    if ss_tot == 0.0 {
        return Err(Error::UndefinedMetric("r2 with constant targets".into()));
    }
    let ss_res: f64 = ys.iter().zip(preds).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupPrediction {
    pub group_id: String,
    pub subject_id: String,
    pub target: f64,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectPrediction {
    pub subject_id: String,
    pub target: f64,
    pub prediction: f64,
    pub groups: usize,
}

/// Mean group prediction per subject, ordered by subject id.
pub fn aggregate_subject(preds: &[GroupPrediction]) -> Vec<SubjectPrediction> {
    let mut by: BTreeMap<&str, (f64, f64, usize)> = BTreeMap::new();
    for p in preds {
        let e = by.entry(&p.subject_id).or_insert((0.0, 0.0, 0));
        e.0 += p.target;
        e.1 += p.prediction;
        e.2 += 1;
    }
    by.into_iter()
        .map(|(s, (t, p, n))| SubjectPrediction {
            subject_id: s.into(),
            target: t / n as f64,
            prediction: p / n as f64,
            groups: n,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub rmse_group: f64,
    pub rmse_subject: f64,
    /// `None` when every subject target is equal.
    pub r2_subject: Option<f64>,
    pub n_groups: usize,
    pub n_subjects: usize,
}

impl Metrics {
    pub fn of(preds: &[GroupPrediction]) -> Result<Metrics> {
        if preds.is_empty() {
            return Err(Error::InsufficientData("no predictions to evaluate".into()));
        }
        let ys: Vec<f64> = preds.iter().map(|p| p.target).collect();
        let ps: Vec<f64> = preds.iter().map(|p| p.prediction).collect();
        let subj = aggregate_subject(preds);
        let sy: Vec<f64> = subj.iter().map(|s| s.target).collect();
        let sp: Vec<f64> = subj.iter().map(|s| s.prediction).collect();
        let r2_subject = match r2(&sy, &sp) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        Ok(Metrics {
            rmse_group: rmse(&ys, &ps)?,
            rmse_subject: rmse(&sy, &sp)?,
            r2_subject,
            n_groups: preds.len(),
            n_subjects: subj.len(),
        })
    }
}

/// Predictions of `model` for every example, in input order.
pub fn predict_groups(model: &VganModel, examples: &[GroupExample]) -> Result<Vec<GroupPrediction>> {
    examples
        .iter()
        .map(|e| {
            Ok(GroupPrediction {
                group_id: e.group_id.clone(),
                subject_id: e.subject_id.clone(),
                target: e.target,
                prediction: model.predict(&e.papi, e.lip.as_ref())?,
            })
        })
        .collect()
}

pub fn evaluate(model: &VganModel, examples: &[GroupExample]) -> Result<(Metrics, Vec<GroupPrediction>)> {
    let preds = predict_groups(model, examples)?;
    Ok((Metrics::of(&preds)?, preds))
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean minibatch loss (standardized units) per epoch.
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Epoch (0-based) of the returned parameters.
    pub best_epoch: usize,
}

fn mean_loss(model: &VganModel, examples: &[&GroupExample]) -> Result<f64> {
    let batch: Vec<Sample> = examples.iter().map(|e| e.sample()).collect();
    model.batch_loss(&batch)
}

/// Trains a model on `examples`. Standardization comes from these
/// examples only.
pub fn train(examples: &[GroupExample], net: &VganConfig, cfg: &TrainConfig) -> Result<(VganModel, TrainHistory)> {
    cfg.validate()?;
    net.validate()?;
    if examples.is_empty() {
        return Err(Error::InsufficientData("empty training set".into()));
    }
    let (fit_set, val_set) = split_validation(examples, cfg)?;
    let stats = {
        let papi = fit_set.iter().flat_map(|e| (0..e.papi.rows()).map(move |i| e.papi.row(i)));
        let lip = fit_set
            .iter()
            .filter_map(|e| e.lip.as_ref())
            .flat_map(|m| (0..m.rows()).map(move |i| m.row(i)));
        let targets: Vec<f64> = fit_set.iter().map(|e| e.target).collect();
        Standardization::fit(papi, lip, &targets, net)?
    };
    let mut model = VganModel::init(net.clone(), cfg.target, derive_seed(cfg.seed, label_of("init")))?;
    model.standardization = stats;
    let mut state = AdamState::new(&model.params);
    let mut history = TrainHistory::default();
    let mut best: Option<(f64, Vec<NamedArray>)> = None;
    let mut order: Vec<usize> = (0..fit_set.len()).collect();
    for epoch in 0..cfg.epochs {
        let mut rng = seeded(derive_seed(cfg.seed, derive_seed(label_of("epoch"), epoch as u64)));
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk.iter().map(|&i| fit_set[i].sample()).collect();
            let (loss, grads) = model.gradients(&batch)?;
            total += loss * chunk.len() as f64;
            adam_step(&mut model.params, &grads, &mut state, cfg.learning_rate, (cfg.beta1, cfg.beta2), cfg.eps)?;
        }
        history.train_loss.push(total / fit_set.len() as f64);
        if !val_set.is_empty() {
            let v = mean_loss(&model, &val_set)?;
            history.validation_loss.push(v);
            if best.as_ref().is_none_or(|(b, _)| v < *b) {
                best = Some((v, model.params.clone()));
                history.best_epoch = epoch;
            }
        } else {
            history.best_epoch = epoch;
        }
    }
    if let Some((_, params)) = best {
        model.params = params;
    }
    Ok((model, history))
}

fn split_validation<'a>(examples: &'a [GroupExample], cfg: &TrainConfig) -> Result<(Vec<&'a GroupExample>, Vec<&'a GroupExample>)> {
    if cfg.validation_fraction == 0.0 {
        return Ok((examples.iter().collect(), Vec::new()));
    }
    let mut subjects: Vec<&str> = examples
        .iter()
        .map(|e| e.subject_id.as_str())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    subjects.shuffle(&mut seeded(derive_seed(cfg.seed, label_of("validation"))));
    let n_val = libm::round(subjects.len() as f64 * cfg.validation_fraction) as usize;
    if n_val == 0 || n_val >= subjects.len() {
        return Err(Error::InsufficientData(format!(
            "validation fraction {} leaves no usable split of {} subjects",
            cfg.validation_fraction,
            subjects.len()
        )));
    }
    let val: BTreeSet<&str> = subjects[..n_val].iter().copied().collect();
    Ok(examples.iter().partition(|e| !val.contains(e.subject_id.as_str())))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub test_subjects: Vec<String>,
    pub metrics: Metrics,
    pub loss_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub target: TargetKind,
    pub scale_max: f64,
    pub folds: Vec<FoldReport>,
    pub pooled: Metrics,
    /// Pooled subject-level RMSE divided by the target scale maximum.
    pub normalized_rmse: f64,
    pub subjects: Vec<SubjectPrediction>,
    pub groups: Vec<GroupPrediction>,
}

/// Outcome of training and testing on one fold.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub report: FoldReport,
    pub predictions: Vec<GroupPrediction>,
    pub model: VganModel,
}

/// Fold assignment over the subjects of `examples`.
pub fn assign_folds(examples: &[GroupExample], cfg: &TrainConfig) -> Result<Vec<Vec<String>>> {
    let mut subjects: BTreeMap<&str, f64> = BTreeMap::new();
    for e in examples {
        subjects.insert(&e.subject_id, e.total_score);
    }
    let list: Vec<(String, Option<SeverityBand>)> = subjects
        .into_iter()
        .map(|(s, t)| (String::from(s), severity_band(t).ok()))
        .collect();
    kfold_speakers(&list, cfg.k_folds, cfg.seed)
}

/// Trains on every fold but `fold` and tests on `fold`.
pub fn run_fold(
    examples: &[GroupExample],
    folds: &[Vec<String>],
    fold: usize,
    net: &VganConfig,
    cfg: &TrainConfig,
) -> Result<FoldResult> {
    let test_subjects: BTreeSet<&str> = folds[fold].iter().map(String::as_str).collect();
    let (test, mut train_set): (Vec<GroupExample>, Vec<GroupExample>) =
        examples.iter().cloned().partition(|e| test_subjects.contains(e.subject_id.as_str()));
    let train_subjects: BTreeSet<&str> = train_set.iter().map(|e| e.subject_id.as_str()).collect();
    if train_subjects.iter().any(|s| test_subjects.contains(s)) {
        return Err(Error::Data(format!("fold {fold}: a subject appears in both train and test")));
    }
    if test.is_empty() || train_set.is_empty() {
        return Err(Error::InsufficientData(format!("fold {fold} has an empty train or test side")));
    }
    let fold_cfg = TrainConfig {
        seed: derive_seed(cfg.seed, fold as u64 + 1),
        ..cfg.clone()
    };
    if cfg.balance {
        let bands = train_set
            .iter()
            .map(|e| severity_band(e.total_score))
            .collect::<Result<Vec<_>>>()?;
        let idx = balance_indices(&bands, cfg.balance_factor, fold_cfg.seed)?;
        train_set = idx.into_iter().map(|i| train_set[i].clone()).collect();
    }
    let (model, history) = train(&train_set, net, &fold_cfg)?;
    let (metrics, predictions) = evaluate(&model, &test)?;
    Ok(FoldResult {
        report: FoldReport {
            fold,
            test_subjects: folds[fold].clone(),
            metrics,
            loss_curve: history.train_loss,
        },
        predictions,
        model,
    })
}

/// Pools fold results into a report.
pub fn assemble_report(target: TargetKind, results: Vec<FoldResult>) -> Result<EvalReport> {
    let mut groups = Vec::new();
    let mut folds = Vec::new();
    for r in results {
        groups.extend(r.predictions);
        folds.push(r.report);
    }
    let pooled = Metrics::of(&groups)?;
    Ok(EvalReport {
        target,
        scale_max: target.scale_max(),
        normalized_rmse: pooled.rmse_subject / target.scale_max(),
        subjects: aggregate_subject(&groups),
        folds,
        pooled,
        groups,
    })
}

/// k-fold speaker-disjoint cross-validation, folds run in order.
pub fn cross_validate(examples: &[GroupExample], net: &VganConfig, cfg: &TrainConfig) -> Result<EvalReport> {
    cfg.validate()?;
    let folds = assign_folds(examples, cfg)?;
    let results = (0..folds.len())
        .map(|f| run_fold(examples, &folds, f, net, cfg))
        .collect::<Result<Vec<_>>>()?;
    assemble_report(cfg.target, results)
}
