//! Single-hidden-layer multilabel classifier used to compare fusion schemes.
//!
//! `input -> Linear(hidden) -> ReLU -> Dropout -> Linear(labels) -> sigmoid`,
//! trained with Adam on mean binary cross entropy. Evaluated by top-n
//! accuracy (any true code among the n highest-scored codes) and by
//! precision/recall/F1 over label bits at a decision threshold.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusIndex;
use crate::error::{Error, Result};
use crate::fusion::{fuse, BlockTables, FuseOptions, FusionSpec};
use crate::tsv;
use crate::vectors::VectorTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: u32,
    pub validation: u32,
    pub test: u32,
}

impl Default for SplitRatios {
    fn default() -> Self {
        SplitRatios {
            train: 8,
            validation: 1,
            test: 1,
        }
    }
}

impl FromStr for SplitRatios {
    type Err = Error;

    /// `8:1:1`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<u32> = s
            .split(':')
            .map(|p| p.trim().parse::<u32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("bad split ratios `{s}`")))?;
        match parts[..] {
            [train, validation, test] if train + validation + test > 0 => Ok(SplitRatios {
                train,
                validation,
                test,
            }),
            _ => Err(Error::Config(format!("bad split ratios `{s}`"))),
        }
    }
}

impl fmt::Display for SplitRatios {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.train, self.validation, self.test)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    Micro,
    Macro,
}

impl FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "micro" => Ok(Averaging::Micro),
            "macro" => Ok(Averaging::Macro),
            other => Err(Error::Config(format!("unknown averaging `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub dropout_rate: f64,
    pub output_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub split: SplitRatios,
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub threshold: f64,
    pub averaging: Averaging,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            input_dim: 384,
            hidden_dim: 384,
            dropout_rate: 0.1,
            output_dim: 130,
            learning_rate: 5e-5,
            batch_size: 16,
            epochs: 10,
            split: SplitRatios::default(),
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            threshold: 0.5,
            averaging: Averaging::Micro,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("mlp: {m}")));
        if self.input_dim == 0 || self.hidden_dim == 0 || self.output_dim == 0 {
            return bad("layer sizes must be >= 1");
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return bad("dropout_rate must be in [0, 1)");
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return bad("learning_rate must be positive");
        }
        if self.batch_size == 0 || self.epochs == 0 {
            return bad("batch_size and epochs must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub input: Vec<f64>,
    /// Multi-hot target over the label space.
    pub labels: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle of `0..n` cut by the ratios, each part rounded to nearest
/// and the test part taking the remainder.
pub fn split_indices(n: usize, ratios: SplitRatios, seed: u64) -> Result<SplitIndices> {
    if n < 10 {
        return Err(Error::TooFewExamples { needed: 10, got: n });
    }
    let total = (ratios.train + ratios.validation + ratios.test) as f64;
    let n_train = (n as f64 * ratios.train as f64 / total).round() as usize;
    let n_val = ((n as f64 * ratios.validation as f64 / total).round() as usize).min(n - n_train);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Ok(SplitIndices {
        train: order[..n_train].to_vec(),
        validation: order[n_train..n_train + n_val].to_vec(),
        test: order[n_train + n_val..].to_vec(),
    })
}

pub fn split_dataset<T: Clone>(examples: &[T], ratios: SplitRatios, seed: u64) -> Result<(Vec<T>, Vec<T>, Vec<T>)> {
    let idx = split_indices(examples.len(), ratios, seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| examples[i].clone()).collect();
    Ok((pick(&idx.train), pick(&idx.validation), pick(&idx.test)))
}

/// All weights in one flat buffer: `w1 (hidden×input) | b1 | w2 (out×hidden) | b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub values: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Self {
        let len = hidden_dim * input_dim + hidden_dim + output_dim * hidden_dim + output_dim;
        MlpParams {
            input_dim,
            hidden_dim,
            output_dim,
            values: vec![0.0; len],
        }
    }

    /// Uniform `±1/√fan_in` for weights and biases of each layer.
    pub fn init<R: Rng>(config: &MlpConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config.input_dim, config.hidden_dim, config.output_dim);
        let b1 = 1.0 / (config.input_dim as f64).sqrt();
        let b2 = 1.0 / (config.hidden_dim as f64).sqrt();
        let split = p.w2_offset();
        for (i, x) in p.values.iter_mut().enumerate() {
            let b = if i < split { b1 } else { b2 };
            *x = rng.random_range(-b..b);
        }
        p
    }

    fn b1_offset(&self) -> usize {
        self.hidden_dim * self.input_dim
    }

    fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden_dim
    }

    fn b2_offset(&self) -> usize {
        self.w2_offset() + self.output_dim * self.hidden_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn w1(&self) -> &[f64] {
        &self.values[..self.b1_offset()]
    }

    pub fn b1(&self) -> &[f64] {
        &self.values[self.b1_offset()..self.w2_offset()]
    }

    pub fn w2(&self) -> &[f64] {
        &self.values[self.w2_offset()..self.b2_offset()]
    }

    pub fn b2(&self) -> &[f64] {
        &self.values[self.b2_offset()..]
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim {
            return Err(Error::DimMismatch {
                expected: self.input_dim,
                found: input.len(),
                context: "classifier input".into(),
            });
        }
        Ok(())
    }

    fn hidden_pre(&self, input: &[f64]) -> Vec<f64> {
        let (w1, b1) = (self.w1(), self.b1());
        (0..self.hidden_dim)
            .map(|j| {
                let row = &w1[j * self.input_dim..(j + 1) * self.input_dim];
                b1[j] + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>()
            })
            .collect()
    }

    fn logits(&self, hidden: &[f64]) -> Vec<f64> {
        let (w2, b2) = (self.w2(), self.b2());
        (0..self.output_dim)
            .map(|k| {
                let row = &w2[k * self.hidden_dim..(k + 1) * self.hidden_dim];
                b2[k] + row.iter().zip(hidden).map(|(w, h)| w * h).sum::<f64>()
            })
            .collect()
    }

    /// Inference-mode probabilities (no dropout).
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let h: Vec<f64> = self.hidden_pre(input).into_iter().map(|x| x.max(0.0)).collect();
        Ok(self.logits(&h).into_iter().map(sigmoid).collect())
    }

    pub fn save(&self, config: &MlpConfig, path: &Path) -> Result<()> {
        let mut t = VectorTable::new(self.values.len());
        t.push_f64("mlp", &self.values)?;
        t.save(path)?;
        let json = serde_json::to_string_pretty(config).expect("config serialises");
        let mut manifest = path.as_os_str().to_os_string();
        manifest.push(".manifest.json");
        tsv::write_string(Path::new(&manifest), &(json + "\n"))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `−[y ln p + (1−y) ln(1−p)]` with `p = σ(z)`, evaluated stably from the logit.
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// Binary cross entropy of a probability against a target bit.
pub fn bce(p: f64, y: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Forward pass. Dropout (inverted, masks drawn from `rng`) is applied only
/// when `training` is true.
pub fn forward<R: Rng>(
    config: &MlpConfig,
    params: &MlpParams,
    input: &[f64],
    training: bool,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if input.len() != config.input_dim {
        return Err(Error::DimMismatch {
            expected: config.input_dim,
            found: input.len(),
            context: "classifier input".into(),
        });
    }
    params.check_input(input)?;
    let mut h: Vec<f64> = params.hidden_pre(input).into_iter().map(|x| x.max(0.0)).collect();
    if training && config.dropout_rate > 0.0 {
        let keep = 1.0 - config.dropout_rate;
        for x in h.iter_mut() {
            *x = if rng.random::<f64>() < keep { *x / keep } else { 0.0 };
        }
    }
    Ok(params.logits(&h).into_iter().map(sigmoid).collect())
}

/// Mean BCE over every example and label bit, and its gradient. With
/// `dropout = Some((rate, rng))` a fresh inverted-dropout mask is drawn per
/// example; `None` disables dropout.
pub fn loss_and_grad<R: Rng>(
    params: &MlpParams,
    batch: &[&Example],
    mut dropout: Option<(f64, &mut R)>,
) -> Result<(f64, Vec<f64>)> {
    let (ni, nh, no) = (params.input_dim, params.hidden_dim, params.output_dim);
    let mut grad = vec![0.0; params.len()];
    let scale = 1.0 / (batch.len() * no) as f64;
    let mut loss = 0.0;
    let (ob1, ow2, ob2) = (params.b1_offset(), params.w2_offset(), params.b2_offset());
    let w2 = params.w2();
    for ex in batch {
        params.check_input(&ex.input)?;
        if ex.labels.len() != no {
            return Err(Error::DimMismatch {
                expected: no,
                found: ex.labels.len(),
                context: format!("labels of `{}`", ex.id),
            });
        }
        let pre = params.hidden_pre(&ex.input);
        let mut mask = vec![1.0; nh];
        if let Some((rate, rng)) = dropout.as_mut() {
            if *rate > 0.0 {
                let keep = 1.0 - *rate;
                for m in mask.iter_mut() {
                    *m = if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 };
                }
            }
        }
        let h: Vec<f64> = pre.iter().zip(&mask).map(|(p, m)| p.max(0.0) * m).collect();
        let z = params.logits(&h);
        let mut dh = vec![0.0; nh];
        for k in 0..no {
            let y = ex.labels[k];
            loss += bce_with_logit(z[k], y) * scale;
            let dz = (sigmoid(z[k]) - y) * scale;
            grad[ob2 + k] += dz;
            let row = ow2 + k * nh;
            for j in 0..nh {
                grad[row + j] += dz * h[j];
                dh[j] += dz * w2[k * nh + j];
            }
        }
        for j in 0..nh {
            if pre[j] <= 0.0 || mask[j] == 0.0 {
                continue;
            }
            let d = dh[j] * mask[j];
            grad[ob1 + j] += d;
            let row = j * ni;
            for (g, x) in grad[row..row + ni].iter_mut().zip(&ex.input) {
                *g += d * x;
            }
        }
    }
    Ok((loss, grad))
}

/// Mean BCE in inference mode.
pub fn mean_loss(params: &MlpParams, examples: &[Example]) -> Result<f64> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let refs: Vec<&Example> = examples.iter().collect();
    Ok(loss_and_grad::<ChaCha8Rng>(params, &refs, None)?.0)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    fn update(&mut self, params: &mut [f64], grad: &[f64], cfg: &MlpConfig) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * grad[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.epsilon);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub params: MlpParams,
    pub train_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
}

pub fn train_classifier(train: &[Example], validation: &[Example], config: &MlpConfig) -> Result<TrainedClassifier> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::TooFewExamples { needed: 1, got: 0 });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut params = MlpParams::init(config, &mut rng);
    let mut adam = Adam::new(params.len());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let (mut train_loss, mut val_loss) = (Vec::new(), Vec::new());
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<&Example> = chunk.iter().map(|&i| &train[i]).collect();
            let (loss, grad) = loss_and_grad(&params, &batch, Some((config.dropout_rate, &mut rng)))?;
            total += loss * batch.len() as f64;
            adam.update(&mut params.values, &grad, config);
        }
        let epoch_loss = total / train.len() as f64;
        let v = mean_loss(&params, validation)?;
        if !epoch_loss.is_finite() || !v.is_finite() {
            return Err(Error::DivergedLoss {
                epoch: epoch + 1,
                value: epoch_loss,
            });
        }
        train_loss.push(epoch_loss);
        val_loss.push(v);
    }
    Ok(TrainedClassifier {
        params,
        train_loss,
        validation_loss: val_loss,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub top1: f64,
    pub top5: f64,
    pub top10: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Label indices by descending score; ties keep the lower index first.
pub fn ranked_labels(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Fraction of examples with at least one true label among the `n`
/// highest-scored labels.
pub fn top_n_accuracy(scores: &[Vec<f64>], targets: &[Vec<f64>], n: usize) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let hits = scores
        .iter()
        .zip(targets)
        .filter(|(s, y)| ranked_labels(s).iter().take(n).any(|&k| y[k] > 0.5))
        .count();
    hits as f64 / scores.len() as f64
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Precision, recall and F1 over label bits; a bit is predicted when its
/// score is at least `threshold`.
pub fn prf(scores: &[Vec<f64>], targets: &[Vec<f64>], threshold: f64, averaging: Averaging) -> (f64, f64, f64) {
    let k = scores.first().map_or(0, Vec::len);
    let mut tp = vec![0usize; k];
    let mut fp = vec![0usize; k];
    let mut fn_ = vec![0usize; k];
    for (s, y) in scores.iter().zip(targets) {
        for j in 0..k {
            match (s[j] >= threshold, y[j] > 0.5) {
                (true, true) => tp[j] += 1,
                (true, false) => fp[j] += 1,
                (false, true) => fn_[j] += 1,
                (false, false) => {}
            }
        }
    }
    match averaging {
        Averaging::Micro => {
            let (t, f, n) = (tp.iter().sum(), fp.iter().sum::<usize>(), fn_.iter().sum::<usize>());
            let p = ratio(t, t + f);
            let r = ratio(t, t + n);
            (p, r, f1(p, r))
        }
        Averaging::Macro => {
            let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
            for j in 0..k {
                let pj = ratio(tp[j], tp[j] + fp[j]);
                let rj = ratio(tp[j], tp[j] + fn_[j]);
                p += pj;
                r += rj;
                f += f1(pj, rj);
            }
            let k = k.max(1) as f64;
            (p / k, r / k, f / k)
        }
    }
}

pub fn metrics_from_scores(scores: &[Vec<f64>], targets: &[Vec<f64>], threshold: f64, averaging: Averaging) -> MetricsReport {
    let (precision, recall, f1) = prf(scores, targets, threshold, averaging);
    MetricsReport {
        top1: top_n_accuracy(scores, targets, 1),
        top5: top_n_accuracy(scores, targets, 5),
        top10: top_n_accuracy(scores, targets, 10),
        precision,
        recall,
        f1,
    }
}

pub fn evaluate(params: &MlpParams, test: &[Example], threshold: f64, averaging: Averaging) -> Result<MetricsReport> {
    if test.is_empty() {
        return Err(Error::TooFewExamples { needed: 1, got: 0 });
    }
    let scores = test
        .iter()
        .map(|e| params.predict(&e.input))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<Vec<f64>> = test.iter().map(|e| e.labels.clone()).collect();
    Ok(metrics_from_scores(&scores, &targets, threshold, averaging))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub spec: FusionSpec,
    pub dim: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    /// Sorted by top-1 accuracy, descending; ties keep input order.
    pub rows: Vec<SelectionRow>,
    pub labelled: usize,
    pub excluded_unlabeled: usize,
}

pub const SELECTION_HEADER: &str =
    "embedding_type\tembedding_size\ttop1_accuracy\ttop5_accuracy\ttop10_accuracy\tprecision\trecall\tf1";

impl SelectionReport {
    pub fn to_tsv(&self) -> String {
        let mut s = format!("{SELECTION_HEADER}\n");
        for r in &self.rows {
            let m = &r.metrics;
            s.push_str(&format!(
                "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\n",
                r.spec, r.dim, m.top1, m.top5, m.top10, m.precision, m.recall, m.f1
            ));
        }
        s
    }
}

/// Builds classification examples for `spec` from every labelled patent.
pub fn build_examples(spec: &FusionSpec, corpus: &CorpusIndex, tables: &BlockTables<'_>) -> Result<Vec<Example>> {
    corpus
        .records()
        .iter()
        .filter(|r| !r.cpc_codes.is_empty())
        .map(|r| {
            let fused = fuse(spec, &r.patent_id, tables, FuseOptions::classification())?;
            Ok(Example {
                id: r.patent_id.clone(),
                input: fused.vector,
                labels: corpus.multi_hot(r),
            })
        })
        .collect()
}

/// Trains and evaluates one classifier per spec on one shared split.
/// Patents without class codes are excluded and counted.
pub fn run_embedding_selection(
    corpus: &CorpusIndex,
    specs: &[FusionSpec],
    tables: &BlockTables<'_>,
    config: &MlpConfig,
) -> Result<SelectionReport> {
    let labelled = corpus.records().iter().filter(|r| !r.cpc_codes.is_empty()).count();
    let split = split_indices(labelled, config.split, config.seed)?;
    let mut rows = specs
        .par_iter()
        .map(|spec| {
            let examples = build_examples(spec, corpus, tables)?;
            let dim = spec.output_dim(|b| tables.get(b).map_or(0, |t| t.dim()))?;
            let cfg = MlpConfig {
                input_dim: dim,
                output_dim: corpus.label_space().len(),
                ..config.clone()
            };
            let pick = |ix: &[usize]| ix.iter().map(|&i| examples[i].clone()).collect::<Vec<_>>();
            let trained = train_classifier(&pick(&split.train), &pick(&split.validation), &cfg)?;
            let metrics = evaluate(&trained.params, &pick(&split.test), cfg.threshold, cfg.averaging)?;
            Ok(SelectionRow {
                spec: spec.clone(),
                dim,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.metrics.top1.total_cmp(&a.metrics.top1));
    Ok(SelectionReport {
        rows,
        labelled,
        excluded_unlabeled: corpus.len() - labelled,
    })
}
