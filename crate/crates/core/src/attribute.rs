//! Multi-task attribute recognizer: one softmax-linear head per attribute
//! over the raw feature vector.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, Sample, SampledDataset, SampledRow};
use crate::math::{ln, log_sum_exp, softmax_into};
use crate::schema::AttributeSchema;
use crate::{Error, Result};

/// Affine map `z = W x + b` for one attribute; `weights` is `q × d`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearHead {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LinearHead {
    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        let d = x.len();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.weights[j * d..(j + 1) * d];
            *o = self.bias[j] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttributeModel {
    schema: AttributeSchema,
    feature_dim: usize,
    heads: Vec<LinearHead>,
}

impl AttributeModel {
    /// All weights and biases zero, so every prediction is uniform.
    pub fn zeros(schema: AttributeSchema, feature_dim: usize) -> Self {
        let heads = schema
            .attribute_cardinalities()
            .into_iter()
            .map(|q| LinearHead {
                weights: vec![0.0; q * feature_dim],
                bias: vec![0.0; q],
            })
            .collect();
        Self {
            schema,
            feature_dim,
            heads,
        }
    }

    pub fn from_heads(
        schema: AttributeSchema,
        feature_dim: usize,
        heads: Vec<LinearHead>,
    ) -> Result<Self> {
        if heads.len() != schema.num_attributes() {
            return Err(Error::SchemaMismatch(format!(
                "{} heads for {} attributes",
                heads.len(),
                schema.num_attributes()
            )));
        }
        for (k, h) in heads.iter().enumerate() {
            let q = schema.attribute_cardinality(k);
            if h.bias.len() != q || h.weights.len() != q * feature_dim {
                return Err(Error::SchemaMismatch(format!(
                    "head {k} has the wrong shape"
                )));
            }
            if h.bias.iter().chain(&h.weights).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("attribute model parameters"));
            }
        }
        Ok(Self {
            schema,
            feature_dim,
            heads,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn heads(&self) -> &[LinearHead] {
        &self.heads
    }

    pub fn heads_mut(&mut self) -> &mut [LinearHead] {
        &mut self.heads
    }

    /// Parameter count; flat order is head by head, weights then bias.
    pub fn num_parameters(&self) -> usize {
        self.heads
            .iter()
            .map(|h| h.weights.len() + h.bias.len())
            .sum()
    }

    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_parameters());
        for h in &self.heads {
            out.extend_from_slice(&h.weights);
            out.extend_from_slice(&h.bias);
        }
        out
    }

    pub fn set_parameters(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_parameters() {
            return Err(Error::DimensionMismatch {
                expected: self.num_parameters(),
                found: flat.len(),
            });
        }
        let mut at = 0;
        for h in &mut self.heads {
            let n = h.weights.len();
            h.weights.copy_from_slice(&flat[at..at + n]);
            at += n;
            let n = h.bias.len();
            h.bias.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
        Ok(())
    }

    /// Adds `scale · delta` to the flat parameter vector.
    pub(crate) fn axpy(&mut self, scale: f64, delta: &[f64]) {
        let mut at = 0;
        for h in &mut self.heads {
            for p in h.weights.iter_mut().chain(h.bias.iter_mut()) {
                *p += scale * delta[at];
                at += 1;
            }
        }
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: features.len(),
            });
        }
        Ok(())
    }

    /// Raw logits per attribute.
    pub fn logits(&self, features: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.check_features(features)?;
        Ok(self
            .heads
            .iter()
            .map(|h| {
                let mut z = vec![0.0; h.bias.len()];
                h.logits_into(features, &mut z);
                z
            })
            .collect())
    }

    /// `Pr_θ(A_k | x)` for every attribute.
    pub fn predict(&self, features: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = self.logits(features)?;
        for z in &mut out {
            let logits = z.clone();
            softmax_into(&logits, z);
        }
        Ok(out)
    }
}

/// Free-function form of [`AttributeModel::predict`].
pub fn predict_attributes(model: &AttributeModel, features: &[f64]) -> Result<Vec<Vec<f64>>> {
    model.predict(features)
}

fn check_dataset(model: &AttributeModel, dataset: &Dataset) -> Result<()> {
    if dataset.schema != model.schema {
        return Err(Error::SchemaMismatch(
            "dataset and attribute model schemas differ".into(),
        ));
    }
    if dataset.feature_dim != model.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim,
            found: dataset.feature_dim,
        });
    }
    Ok(())
}

/// Normalized cross-entropy of one sample: `(1/K) Σ_k CE_k / ln q_k`.
fn sample_loss(model: &AttributeModel, s: &Sample, z: &mut Vec<f64>) -> f64 {
    let k_count = model.heads.len() as f64;
    let mut total = 0.0;
    for (k, h) in model.heads.iter().enumerate() {
        let q = h.bias.len();
        z.resize(q, 0.0);
        h.logits_into(&s.features, z);
        let lse = log_sum_exp(z.iter().copied());
        let ce: f64 = s.attribute_targets[k]
            .iter()
            .zip(z.iter())
            .filter(|(g, _)| **g > 0.0)
            .map(|(g, zj)| -g * (zj - lse))
            .sum();
        total += ce / ln(q as f64);
    }
    total / k_count
}

/// Mean over samples of the per-task normalized cross-entropy; uniform
/// predictions give exactly 1 whatever the cardinalities.
pub fn attribute_loss(model: &AttributeModel, dataset: &Dataset) -> Result<f64> {
    check_dataset(model, dataset)?;
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut z = Vec::new();
    let total: f64 = dataset
        .samples
        .iter()
        .map(|s| sample_loss(model, s, &mut z))
        .sum();
    Ok(total / dataset.len() as f64)
}

/// Loss and its gradient (flat parameter order) over `samples`, averaged.
pub fn attribute_loss_gradient(
    model: &AttributeModel,
    samples: &[&Sample],
) -> Result<(f64, Vec<f64>)> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut grad = vec![0.0; model.num_parameters()];
    let n = samples.len() as f64;
    let k_count = model.heads.len() as f64;
    let d = model.feature_dim;
    let mut z = Vec::new();
    let mut p = Vec::new();
    let mut loss = 0.0;
    for s in samples {
        model.check_features(&s.features)?;
        loss += sample_loss(model, s, &mut z);
        let mut at = 0;
        for (k, h) in model.heads.iter().enumerate() {
            let q = h.bias.len();
            z.resize(q, 0.0);
            p.resize(q, 0.0);
            h.logits_into(&s.features, &mut z);
            softmax_into(&z, &mut p);
            let g = &s.attribute_targets[k];
            let g_total: f64 = g.iter().sum();
            let scale = 1.0 / (k_count * ln(q as f64) * n);
            for j in 0..q {
                let dz = (p[j] * g_total - g[j]) * scale;
                let row = &mut grad[at + j * d..at + (j + 1) * d];
                for (r, x) in row.iter_mut().zip(&s.features) {
                    *r += dz * x;
                }
                grad[at + q * d + j] += dz;
            }
            at += q * d + q;
        }
    }
    Ok((loss / n, grad))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Multiplier applied to the learning rate on a plateau.
    pub lr_plateau_factor: f64,
    /// Epochs without improvement before the learning rate is reduced.
    pub plateau_patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 30,
            batch_size: 32,
            seed: 0,
            lr_plateau_factor: 0.1,
            plateau_patience: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AttributeTrace {
    /// Full train-set loss after each epoch.
    pub train_loss: Vec<f64>,
    /// Validation loss after each epoch, empty without a validation split.
    pub validation_loss: Vec<f64>,
    /// Learning rate used during each epoch.
    pub learning_rates: Vec<f64>,
}

/// Relative improvement needed to reset the plateau counter.
const PLATEAU_THRESHOLD: f64 = 1e-4;

/// Mini-batch SGD on [`attribute_loss`] starting from zero parameters.
pub fn train_attributes(
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(AttributeModel, AttributeTrace)> {
    let model = AttributeModel::zeros(train.schema.clone(), train.feature_dim);
    train_attributes_from(model, train, validation, config)
}

/// Same as [`train_attributes`] from an existing model.
pub fn train_attributes_from(
    mut model: AttributeModel,
    train: &Dataset,
    validation: Option<&Dataset>,
    config: &TrainConfig,
) -> Result<(AttributeModel, AttributeTrace)> {
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite())
        || config.batch_size == 0
        || !(config.lr_plateau_factor > 0.0)
    {
        return Err(Error::InvalidConfig(format!("{config:?}")));
    }
    check_dataset(&model, train)?;
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if let Some(v) = validation {
        check_dataset(&model, v)?;
    }
    let validation = validation.filter(|v| !v.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut trace = AttributeTrace::default();
    let mut lr = config.learning_rate;
    let mut best = f64::INFINITY;
    let mut stale = 0;

    for epoch in 0..config.epochs {
        trace.learning_rates.push(lr);
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<&Sample> = batch.iter().map(|&i| &train.samples[i]).collect();
            let (loss, grad) = attribute_loss_gradient(&model, &samples)?;
            if !loss.is_finite() {
                return Err(Error::DivergedTraining { epoch });
            }
            model.axpy(-lr, &grad);
        }
        let train_loss = attribute_loss(&model, train)?;
        if !train_loss.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        trace.train_loss.push(train_loss);
        let monitored = match validation {
            Some(v) => {
                let l = attribute_loss(&model, v)?;
                if !l.is_finite() {
                    return Err(Error::DivergedTraining { epoch });
                }
                trace.validation_loss.push(l);
                l
            }
            None => train_loss,
        };
        if monitored < best * (1.0 - PLATEAU_THRESHOLD) {
            best = monitored;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.plateau_patience {
                lr *= config.lr_plateau_factor;
                stale = 0;
            }
        }
    }
    Ok((model, trace))
}

/// Draws one categorical value per (row, attribute) from `g_k(x)`, keeping
/// the class label and the source features.
pub fn sample_attribute_values(dataset: &Dataset, seed: u64) -> Result<SampledDataset> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(dataset.len());
    for s in &dataset.samples {
        let attributes = s
            .attribute_targets
            .iter()
            .map(|g| draw_categorical(g, &mut rng))
            .collect();
        rows.push(SampledRow::new(attributes, s.class_label));
    }
    let mut out = SampledDataset::new(dataset.schema.clone(), rows)?;
    out.features = Some(dataset.samples.iter().map(|s| s.features.clone()).collect());
    Ok(out)
}

/// Inverse-CDF draw; only indices with positive mass can be returned.
pub(crate) fn draw_categorical<R: Rng>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * probs.iter().sum::<f64>();
    let mut cum = 0.0;
    let mut last = 0;
    for (j, &p) in probs.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = j;
            if u < cum {
                return j;
            }
        }
    }
    last
}
