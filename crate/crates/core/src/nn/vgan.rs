//! The vowel graph attention regressor: shared projection, multi-head
//! attention across the six vowel nodes, a dense branch over the raw node
//! features, a visual branch over lip features, audio-visual
//! cross-attention and a scalar regression head.
//!
//! Weights are stored `in × out` and applied to row vectors (`x·W + b`).

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::autodiff::{Tape, Var};
use crate::linalg::Matrix;
use crate::model::TargetKind;
use crate::rng::{derive_seed, label_of, seeded};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VganConfig {
    pub n_nodes: usize,
    pub in_dim: usize,
    pub shared_dim: usize,
    pub n_heads: usize,
    pub head_dim: usize,
    pub dense_dims: (usize, usize),
    pub visual_in: usize,
    pub visual_dims: (usize, usize, usize),
    pub fusion_dim: usize,
    pub fusion_tokens: usize,
    pub final_dim: usize,
    pub leaky_slope: f64,
    pub audio_only: bool,
}

impl Default for VganConfig {
    fn default() -> Self {
        VganConfig {
            n_nodes: 6,
            in_dim: 20,
            shared_dim: 16,
            n_heads: 3,
            head_dim: 32,
            dense_dims: (128, 64),
            visual_in: 10,
            visual_dims: (128, 64, 32),
            fusion_dim: 32,
            fusion_tokens: 6,
            final_dim: 32,
            leaky_slope: 0.2,
            audio_only: false,
        }
    }
}

impl VganConfig {
    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.n_nodes,
            self.in_dim,
            self.shared_dim,
            self.n_heads,
            self.head_dim,
            self.dense_dims.0,
            self.dense_dims.1,
            self.visual_in,
            self.visual_dims.0,
            self.visual_dims.1,
            self.visual_dims.2,
            self.fusion_dim,
            self.fusion_tokens,
            self.final_dim,
        ];
        if dims.contains(&0) {
            return Err(Error::Config("vgan dimensions must all be positive".into()));
        }
        if self.n_nodes != 6 {
            return Err(Error::Config("vgan.n_nodes must be 6 (one node per vowel)".into()));
        }
        if !(self.leaky_slope >= 0.0 && self.leaky_slope < 1.0) {
            return Err(Error::Config("vgan.leaky_slope must lie in [0, 1)".into()));
        }
        Ok(())
    }

    /// Width of the flattened attention output.
    pub fn vga_flatten(&self) -> usize {
        self.n_nodes * self.n_heads * self.head_dim
    }

    pub fn feature_flatten(&self) -> usize {
        self.n_nodes * self.in_dim
    }

    pub fn acoustic_dim(&self) -> usize {
        2 * self.dense_dims.1
    }

    /// Acoustic embedding split into `fusion_tokens` zero-padded tokens.
    pub fn token_width(&self) -> usize {
        self.acoustic_dim().div_ceil(self.fusion_tokens)
    }

    /// Per-vowel lip features joined with the visual embedding.
    pub fn visual_token_dim(&self) -> usize {
        self.visual_in + self.visual_dims.2
    }

    pub fn fused_dim(&self) -> usize {
        if self.audio_only {
            self.acoustic_dim()
        } else {
            self.acoustic_dim() + self.n_nodes * self.fusion_dim
        }
    }

    /// Name, shape and weight-or-bias flag of every parameter array, in
    /// storage order.
    pub fn param_layout(&self) -> Vec<(String, (usize, usize), bool)> {
        let mut out = Vec::new();
        let dense = |out: &mut Vec<_>, name: &str, i: usize, o: usize| {
            out.push((format!("{name}.w"), (i, o), true));
            out.push((format!("{name}.b"), (1, o), false));
        };
        dense(&mut out, "shared", self.in_dim, self.shared_dim);
        for k in 0..self.n_heads {
            out.push((format!("head{k}.w"), (self.shared_dim, self.head_dim), true));
            out.push((format!("head{k}.a"), (1, 2 * self.head_dim), true));
        }
        let (d0, d1) = self.dense_dims;
        dense(&mut out, "vga1", self.vga_flatten(), d0);
        dense(&mut out, "vga2", d0, d1);
        dense(&mut out, "feat1", self.feature_flatten(), d0);
        dense(&mut out, "feat2", d0, d1);
        if !self.audio_only {
            let (v0, v1, v2) = self.visual_dims;
            dense(&mut out, "vis1", self.n_nodes * self.visual_in, v0);
            dense(&mut out, "vis2", v0, v1);
            dense(&mut out, "vis3", v1, v2);
            out.push(("fusion.wq".into(), (self.token_width(), self.fusion_dim), true));
            out.push(("fusion.wk".into(), (self.visual_token_dim(), self.fusion_dim), true));
            out.push(("fusion.wv".into(), (self.visual_token_dim(), self.fusion_dim), true));
        }
        dense(&mut out, "final", self.fused_dim(), self.final_dim);
        dense(&mut out, "out", self.final_dim, 1);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub value: Matrix,
}

/// Per-dimension input statistics and target statistics, applied inside
/// the model so callers pass raw features and receive score points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Standardization {
    pub papi_mean: Vec<f64>,
    pub papi_std: Vec<f64>,
    pub lip_mean: Vec<f64>,
    pub lip_std: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
}

impl Standardization {
    pub fn identity(cfg: &VganConfig) -> Standardization {
        Standardization {
            papi_mean: vec![0.0; cfg.in_dim],
            papi_std: vec![1.0; cfg.in_dim],
            lip_mean: vec![0.0; cfg.visual_in],
            lip_std: vec![1.0; cfg.visual_in],
            target_mean: 0.0,
            target_std: 1.0,
        }
    }

    /// Column statistics (population std; a constant column gets std 1).
    pub fn fit<'a>(
        papi_rows: impl IntoIterator<Item = &'a [f64]>,
        lip_rows: impl IntoIterator<Item = &'a [f64]>,
        targets: &[f64],
        cfg: &VganConfig,
    ) -> Result<Standardization> {
        let (pm, ps) = column_stats(papi_rows, cfg.in_dim)?;
        let (lm, ls) = match column_stats(lip_rows, cfg.visual_in) {
            Ok(s) => s,
            Err(_) if cfg.audio_only => (vec![0.0; cfg.visual_in], vec![1.0; cfg.visual_in]),
            Err(e) => return Err(e),
        };
        if targets.is_empty() {
            return Err(Error::InsufficientData("no training targets".into()));
        }
        let (tm, ts) = column_stats(targets.iter().map(core::slice::from_ref), 1)?;
        Ok(Standardization {
            papi_mean: pm,
            papi_std: ps,
            lip_mean: lm,
            lip_std: ls,
            target_mean: tm[0],
            target_std: ts[0],
        })
    }

    pub fn validate(&self, cfg: &VganConfig) -> Result<()> {
        if self.papi_mean.len() != cfg.in_dim
            || self.papi_std.len() != cfg.in_dim
            || self.lip_mean.len() != cfg.visual_in
            || self.lip_std.len() != cfg.visual_in
        {
            return Err(Error::Data("standardization vector lengths do not match the config".into()));
        }
        let stds = self.papi_std.iter().chain(&self.lip_std).chain(core::iter::once(&self.target_std));
        for s in stds {
            if !(*s > 0.0 && s.is_finite()) {
                return Err(Error::Data("standardization std entries must be positive".into()));
            }
        }
        let means = self.papi_mean.iter().chain(&self.lip_mean).chain(core::iter::once(&self.target_mean));
        if means.into_iter().any(|m| !m.is_finite()) {
            return Err(Error::Data("standardization means must be finite".into()));
        }
        Ok(())
    }
}

fn column_stats<'a>(rows: impl IntoIterator<Item = &'a [f64]>, dim: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let rows: Vec<&[f64]> = rows.into_iter().collect();
    if rows.is_empty() {
        return Err(Error::InsufficientData("no rows for standardization".into()));
    }
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in &rows {
        if r.len() != dim {
            return Err(Error::Data(format!("feature row has {} values, expected {dim}", r.len())));
        }
        for (m, v) in mean.iter_mut().zip(r.iter()) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for r in &rows {
        for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let std = var
        .into_iter()
        .map(|s| {
            let sd = libm::sqrt(s / n);
            if sd > 1e-12 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        })
        .collect();
    Ok((mean, std))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VganModel {
    pub config: VganConfig,
    pub target: TargetKind,
    pub scale_max: f64,
    pub params: Vec<NamedArray>,
    pub standardization: Standardization,
}

/// One training or evaluation example: raw 6×20 speech features, raw 6×10
/// lip features and the target in score points.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub papi: Matrix,
    pub lip: Option<Matrix>,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VgaOutput {
    /// `n_nodes × (n_heads·head_dim)`, heads concatenated per node.
    pub attended: Matrix,
    pub attention: Vec<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub attention: Vec<Matrix>,
    /// Acoustic-to-visual token attention (absent in audio-only models).
    pub fusion_attention: Option<Matrix>,
    pub acoustic_embedding: Vec<f64>,
    pub visual_embedding: Option<Vec<f64>>,
    /// Input of the final dense layer.
    pub fused_embedding: Vec<f64>,
    /// Score points.
    pub prediction: f64,
}

/// Gradient arrays aligned with `VganModel::params`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients(pub Vec<Matrix>);

// variables of one forward build
struct Built {
    attention: Vec<Var>,
    attended: Var,
    fusion_attention: Option<Var>,
    acoustic: Var,
    visual: Option<Var>,
    fused: Var,
    output: Var,
}

/// Mean squared error `(1/m) Σ (y − ŷ)²`.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.is_empty() || pred.len() != target.len() {
        return Err(Error::Input(format!(
            "mse needs equal non-empty lengths, got {} and {}",
            pred.len(),
            target.len()
        )));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (t - p) * (t - p)).sum::<f64>() / pred.len() as f64)
}

impl VganModel {
    /// Glorot-uniform weights, zero biases, identity standardization.
    pub fn init(config: VganConfig, target: TargetKind, seed: u64) -> Result<VganModel> {
        config.validate()?;
        let params = config
            .param_layout()
            .into_iter()
            .map(|(name, (r, c), is_weight)| {
                let value = if is_weight {
                    let limit = libm::sqrt(6.0 / (r + c) as f64);
                    let mut rng = seeded(derive_seed(seed, label_of(&name)));
                    Matrix::from_fn(r, c, |_, _| rng.random_range(-limit..=limit))
                } else {
                    Matrix::zeros(r, c)
                };
                NamedArray { name, value }
            })
            .collect();
        Ok(VganModel {
            standardization: Standardization::identity(&config),
            config,
            target,
            scale_max: target.scale_max(),
            params,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        let layout = self.config.param_layout();
        if layout.len() != self.params.len() {
            return Err(Error::Data(format!(
                "model has {} parameter arrays, config implies {}",
                self.params.len(),
                layout.len()
            )));
        }
        for ((name, shape, _), p) in layout.iter().zip(&self.params) {
            if &p.name != name || p.value.shape() != *shape {
                return Err(Error::Shape {
                    name: p.name.clone(),
                    expected: *shape,
                    found: p.value.shape(),
                });
            }
            if !p.value.is_finite() {
                return Err(Error::Numeric(format!("parameter {name} is not finite")));
            }
        }
        self.standardization.validate(&self.config)
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.iter().find(|p| p.name == name).map(|p| &p.value)
    }

    fn standardized(&self, x: &Matrix, mean: &[f64], std: &[f64], what: &str) -> Result<Matrix> {
        let (rows, cols) = (self.config.n_nodes, mean.len());
        if x.shape() != (rows, cols) {
            return Err(Error::Shape {
                name: what.into(),
                expected: (rows, cols),
                found: x.shape(),
            });
        }
        if !x.is_finite() {
            return Err(Error::Numeric(format!("{what} contains NaN or infinite values")));
        }
        Ok(Matrix::from_fn(rows, cols, |i, j| (x[(i, j)] - mean[j]) / std[j]))
    }

    fn inputs(&self, papi: &Matrix, lip: Option<&Matrix>) -> Result<(Matrix, Option<Matrix>)> {
        let s = &self.standardization;
        let f = self.standardized(papi, &s.papi_mean, &s.papi_std, "speech features")?;
        let l = if self.config.audio_only {
            None
        } else {
            let lip = lip.ok_or_else(|| Error::Input("lip features are required by an audio-visual model".into()))?;
            Some(self.standardized(lip, &s.lip_mean, &s.lip_std, "lip features")?)
        };
        Ok((f, l))
    }

    fn build<'a>(&'a self, t: &mut Tape<'a>, f: Matrix, lip: Option<Matrix>) -> Built {
        let cfg = &self.config;
        let p: Vec<Var> = self.params.iter().map(|a| t.param(&a.value)).collect();
        let mut next = p.iter().copied();
        let it = &mut next;
        let take = |it: &mut core::iter::Copied<core::slice::Iter<'_, Var>>| it.next().expect("parameter layout");

        let f = t.constant(f);
        let (ws, bs) = (take(it), take(it));
        let h = t.affine(f, ws, bs);
        let mut heads = Vec::with_capacity(cfg.n_heads);
        let mut attention = Vec::with_capacity(cfg.n_heads);
        for _ in 0..cfg.n_heads {
            let (w, a) = (take(it), take(it));
            let z = t.matmul(h, w);
            let a_src = t.slice_cols(a, 0, cfg.head_dim);
            let a_dst = t.slice_cols(a, cfg.head_dim, cfg.head_dim);
            let u = t.matmul_t(z, a_src);
            let v = t.matmul_t(z, a_dst);
            let e = t.outer_add(u, v);
            let e = t.leaky_relu(e, cfg.leaky_slope);
            let alpha = t.softmax_rows(e);
            heads.push(t.matmul(alpha, z));
            attention.push(alpha);
        }
        let attended = t.concat_cols(&heads);

        let mlp = |t: &mut Tape<'a>, it: &mut core::iter::Copied<core::slice::Iter<'_, Var>>, x: Var, layers: usize, relu_last: bool| {
            let mut x = x;
            for l in 0..layers {
                let (w, b) = (take(it), take(it));
                x = t.affine(x, w, b);
                if l + 1 < layers || relu_last {
                    x = t.relu(x);
                }
            }
            x
        };
        let flat_att = t.flatten(attended);
        let a1 = mlp(t, it, flat_att, 2, false);
        let flat_f = t.flatten(f);
        let a2 = mlp(t, it, flat_f, 2, false);
        let acoustic = t.concat_cols(&[a1, a2]);

        let (fused, visual, fusion_attention) = match lip {
            Some(lip) => {
                let l = t.constant(lip);
                let flat_l = t.flatten(l);
                let ev = mlp(t, it, flat_l, 3, false);
                let (wq, wk, wv) = (take(it), take(it), take(it));
                let padded = t.pad_row(acoustic, cfg.fusion_tokens * cfg.token_width());
                let ta = t.reshape(padded, cfg.fusion_tokens, cfg.token_width());
                let ev_rows = t.repeat_row(ev, cfg.n_nodes);
                let tv = t.concat_cols(&[l, ev_rows]);
                let q = t.matmul(ta, wq);
                let k = t.matmul(tv, wk);
                let v = t.matmul(tv, wv);
                let s = t.matmul_t(q, k);
                let pa = t.softmax_rows(s);
                let eav = t.matmul(pa, v);
                let flat_eav = t.flatten(eav);
                (t.concat_cols(&[acoustic, flat_eav]), Some(ev), Some(pa))
            }
            None => (acoustic, None, None),
        };
        let hidden = mlp(t, it, fused, 1, true);
        let output = mlp(t, it, hidden, 1, false);
        Built {
            attention,
            attended,
            fusion_attention,
            acoustic,
            visual,
            fused,
            output,
        }
    }

    /// Graph attention over standardized node features (`n_nodes × in_dim`).
    pub fn vga_forward(&self, node_features: &Matrix) -> Result<VgaOutput> {
        let cfg = &self.config;
        if node_features.shape() != (cfg.n_nodes, cfg.in_dim) {
            return Err(Error::Shape {
                name: "node features".into(),
                expected: (cfg.n_nodes, cfg.in_dim),
                found: node_features.shape(),
            });
        }
        if !node_features.is_finite() {
            return Err(Error::Numeric("node features contain NaN or infinite values".into()));
        }
        let mut t = Tape::new();
        let lip = (!cfg.audio_only).then(|| Matrix::zeros(cfg.n_nodes, cfg.visual_in));
        let b = self.build(&mut t, node_features.clone(), lip);
        Ok(VgaOutput {
            attended: t.value(b.attended).clone(),
            attention: b.attention.iter().map(|v| t.value(*v).clone()).collect(),
        })
    }

    /// Prediction and intermediate values for one group of raw features.
    pub fn forward(&self, papi: &Matrix, lip: Option<&Matrix>) -> Result<ForwardTrace> {
        let (f, l) = self.inputs(papi, lip)?;
        let mut t = Tape::new();
        let b = self.build(&mut t, f, l);
        let y = t.value(b.output)[(0, 0)];
        let s = &self.standardization;
        let prediction = y * s.target_std + s.target_mean;
        if !prediction.is_finite() {
            return Err(Error::Numeric("prediction is not finite".into()));
        }
        Ok(ForwardTrace {
            attention: b.attention.iter().map(|v| t.value(*v).clone()).collect(),
            fusion_attention: b.fusion_attention.map(|v| t.value(v).clone()),
            acoustic_embedding: t.value(b.acoustic).as_slice().to_vec(),
            visual_embedding: b.visual.map(|v| t.value(v).as_slice().to_vec()),
            fused_embedding: t.value(b.fused).as_slice().to_vec(),
            prediction,
        })
    }

    pub fn predict(&self, papi: &Matrix, lip: Option<&Matrix>) -> Result<f64> {
        self.forward(papi, lip).map(|t| t.prediction)
    }

    fn target_std(&self, y: f64) -> f64 {
        (y - self.standardization.target_mean) / self.standardization.target_std
    }

    /// Mean squared error over the batch in standardized target units:
    /// the training objective.
    pub fn batch_loss(&self, batch: &[Sample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let s = &self.standardization;
        let mut pred = Vec::with_capacity(batch.len());
        let mut target = Vec::with_capacity(batch.len());
        for x in batch {
            let p = self.predict(&x.papi, x.lip.as_ref())?;
            pred.push((p - s.target_mean) / s.target_std);
            target.push(self.target_std(x.target));
        }
        mse_loss(&pred, &target)
    }

    /// Batch loss and its exact gradient with respect to every parameter.
    /// Per-sample gradients are summed in batch order.
    pub fn gradients(&self, batch: &[Sample]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::Input("empty batch".into()));
        }
        let m = batch.len() as f64;
        let mut total: Vec<Matrix> = self.params.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect();
        let mut loss = 0.0;
        for x in batch {
            let (f, l) = self.inputs(&x.papi, x.lip.as_ref())?;
            let mut t = Tape::new();
            let b = self.build(&mut t, f, l);
            let r = t.value(b.output)[(0, 0)] - self.target_std(x.target);
            if !r.is_finite() {
                return Err(Error::Numeric("non-finite residual".into()));
            }
            loss += r * r / m;
            let grads = t.backward(b.output, Matrix::from_vec(1, 1, vec![2.0 * r / m])?);
            // the parameter leaves are the first nodes of the tape
            for (k, acc) in total.iter_mut().enumerate() {
                if let Some(g) = &grads[k] {
                    acc.add_assign(g);
                }
            }
        }
        if total.iter().any(|g| !g.is_finite()) {
            return Err(Error::Numeric("non-finite gradient".into()));
        }
        Ok((loss, Gradients(total)))
    }
}
