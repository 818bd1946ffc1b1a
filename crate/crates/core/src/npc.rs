//! The composed model: class scores from attribute probabilities and the
//! circuit conditionals `Pr_w(Y | A)`, plus joint training of both parts.
//!
//! `Pr_w(Y = y | A = a)` does not depend on the input, so it is tabulated
//! once per circuit in a [`ConditionalTable`] and every prediction is an
//! exact sum over attribute assignments:
//!
//! `score(y) = Σ_a Pr_w(y | a) · Π_k Pr_θ(A_k = a_k | x)`.
//!
//! Assignments with zero circuit marginal contribute nothing.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::attribute::AttributeModel;
use crate::circuit::{renormalize_with_floor, Circuit, Workspace, DEFAULT_WEIGHT_FLOOR};
use crate::data::{Dataset, Sample};
use crate::math::{argmax, exp, ln};
use crate::schema::AttributeSchema;
use crate::{Error, Result};

/// Default limit on the number of enumerated attribute assignments.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

/// `Pr_w(Y | A_R = a)` for every assignment of a retained attribute subset
/// `R`, in lexicographic order of `a` (last retained attribute fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalTable {
    retained: Vec<usize>,
    cards: Vec<usize>,
    num_classes: usize,
    /// `values[i * |Y| + y]`.
    values: Vec<f64>,
    supported: Vec<bool>,
}

fn check_cap(cards: &[usize], cap: u64) -> Result<usize> {
    let size: u128 = cards.iter().map(|&q| q as u128).product();
    if size > cap as u128 {
        return Err(Error::CapacityExceeded { size, cap });
    }
    Ok(size as usize)
}

impl ConditionalTable {
    /// Tabulates the conditionals with the attributes outside `retained`
    /// marginalized: one marginal pass and `|Y|` joint passes per
    /// assignment.
    pub fn build(circuit: &Circuit, retained: &[usize], cap: u64) -> Result<Self> {
        let schema = circuit.schema();
        let k_all = schema.num_attributes();
        if retained.is_empty() {
            return Err(Error::InvalidExclusion(
                "every attribute is excluded".into(),
            ));
        }
        if retained.windows(2).any(|w| w[0] >= w[1]) || retained.iter().any(|&k| k >= k_all) {
            return Err(Error::InvalidExclusion(format!(
                "retained attributes {retained:?} are not a sorted subset"
            )));
        }
        let cards: Vec<usize> = retained
            .iter()
            .map(|&k| schema.attribute_cardinality(k))
            .collect();
        let size = check_cap(&cards, cap)?;
        let num_classes = schema.num_classes();
        let class_var = schema.class_variable().0;
        let mut values = vec![0.0; size * num_classes];
        let mut supported = vec![false; size];
        let mut evidence = vec![None; schema.num_variables()];
        let mut scratch = Vec::new();
        let mut digits = vec![0usize; retained.len()];
        for i in 0..size {
            for (&k, &v) in retained.iter().zip(&digits) {
                evidence[k] = Some(v);
            }
            evidence[class_var] = None;
            let log_m = circuit.forward_log(&evidence, &mut scratch);
            if log_m != f64::NEG_INFINITY {
                supported[i] = true;
                for y in 0..num_classes {
                    evidence[class_var] = Some(y);
                    let log_j = circuit.forward_log(&evidence, &mut scratch);
                    values[i * num_classes + y] = exp(log_j - log_m);
                }
            }
            increment(&mut digits, &cards);
        }
        Ok(Self {
            retained: retained.to_vec(),
            cards,
            num_classes,
            values,
            supported,
        })
    }

    pub fn retained(&self) -> &[usize] {
        &self.retained
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cards
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// Number of tabulated assignments.
    pub fn len(&self) -> usize {
        self.supported.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supported.is_empty()
    }

    /// `Pr_w(y | a_i)`, or 0 when `a_i` has zero marginal.
    pub fn conditional(&self, i: usize, y: usize) -> f64 {
        self.values[i * self.num_classes + y]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn is_supported(&self, i: usize) -> bool {
        self.supported[i]
    }

    /// Values of the retained attributes for assignment `i`.
    pub fn decode(&self, mut i: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for (o, &q) in out.iter_mut().zip(&self.cards).rev() {
            *o = i % q;
            i /= q;
        }
        out
    }

    /// `Π_k p_k(a_k)` over the retained attributes for every assignment.
    /// `probs` is indexed by attribute, over all attributes.
    pub fn assignment_weights(&self, probs: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        let mut digits = vec![0usize; self.cards.len()];
        for _ in 0..self.len() {
            let mut w = 1.0;
            for (&k, &v) in self.retained.iter().zip(&digits) {
                w *= probs[k][v];
            }
            out.push(w);
            increment(&mut digits, &self.cards);
        }
        out
    }

    /// Unnormalized class scores `Σ_a Pr_w(y | a) Π_k p_k(a_k)`.
    pub fn scores(&self, probs: &[Vec<f64>]) -> Vec<f64> {
        let weights = self.assignment_weights(probs);
        let mut out = vec![0.0; self.num_classes];
        for (i, &w) in weights.iter().enumerate() {
            if !self.supported[i] || w == 0.0 {
                continue;
            }
            for (o, c) in out.iter_mut().zip(self.row(i)) {
                *o += c * w;
            }
        }
        out
    }

    /// `∂ score(y) / ∂ p_k(j)` for every attribute position in the table,
    /// indexed `[position][j]`.
    pub fn score_gradient(&self, probs: &[Vec<f64>], y: usize) -> Vec<Vec<f64>> {
        let mut out: Vec<Vec<f64>> = self.cards.iter().map(|&q| vec![0.0; q]).collect();
        let mut digits = vec![0usize; self.cards.len()];
        for i in 0..self.len() {
            let c = self.conditional(i, y);
            if c != 0.0 {
                for pos in 0..digits.len() {
                    let mut others = c;
                    for (p2, (&k, &v)) in self.retained.iter().zip(&digits).enumerate() {
                        if p2 != pos {
                            others *= probs[k][v];
                        }
                    }
                    out[pos][digits[pos]] += others;
                }
            }
            increment(&mut digits, &self.cards);
        }
        out
    }
}

/// Mixed-radix increment, last digit fastest.
fn increment(digits: &mut [usize], cards: &[usize]) {
    for (d, &q) in digits.iter_mut().zip(cards).rev() {
        *d += 1;
        if *d < q {
            return;
        }
        *d = 0;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassPosterior {
    /// Renormalized class probabilities.
    pub probabilities: Vec<f64>,
    /// Scores before renormalization.
    pub raw_scores: Vec<f64>,
    /// `Σ_y raw_scores[y]`; below 1 when zero-marginal assignments carried
    /// attribute mass.
    pub raw_mass: f64,
}

impl ClassPosterior {
    pub fn from_scores(raw_scores: Vec<f64>) -> Result<Self> {
        let raw_mass: f64 = raw_scores.iter().sum();
        if !raw_mass.is_finite() {
            return Err(Error::NonFinite("class scores"));
        }
        if raw_mass <= 0.0 {
            return Err(Error::ZeroPosteriorMass);
        }
        let probabilities = raw_scores.iter().map(|s| s / raw_mass).collect();
        Ok(Self {
            probabilities,
            raw_scores,
            raw_mass,
        })
    }

    /// Argmax class, ties to the lowest index.
    pub fn predicted(&self) -> usize {
        argmax(&self.raw_scores)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NpcModel {
    attribute_model: AttributeModel,
    circuit: Circuit,
    cap: u64,
    table: ConditionalTable,
}

impl NpcModel {
    pub fn new(attribute_model: AttributeModel, circuit: Circuit) -> Result<Self> {
        Self::with_cap(attribute_model, circuit, DEFAULT_ENUMERATION_CAP)
    }

    pub fn with_cap(attribute_model: AttributeModel, circuit: Circuit, cap: u64) -> Result<Self> {
        if attribute_model.schema() != circuit.schema() {
            return Err(Error::SchemaMismatch(
                "attribute model and circuit schemas differ".into(),
            ));
        }
        let n = circuit.schema().num_variables();
        if circuit.scope(circuit.root()).len() != n {
            return Err(Error::InvalidCircuit(
                "the root scope must cover the class and every attribute".into(),
            ));
        }
        let all: Vec<usize> = (0..circuit.schema().num_attributes()).collect();
        let table = ConditionalTable::build(&circuit, &all, cap)?;
        Ok(Self {
            attribute_model,
            circuit,
            cap,
            table,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        self.circuit.schema()
    }

    pub fn attribute_model(&self) -> &AttributeModel {
        &self.attribute_model
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    pub fn enumeration_cap(&self) -> u64 {
        self.cap
    }

    /// Conditional table over all attributes for the current circuit.
    pub fn table(&self) -> &ConditionalTable {
        &self.table
    }

    pub fn set_attribute_model(&mut self, model: AttributeModel) -> Result<()> {
        if model.schema() != self.schema() {
            return Err(Error::SchemaMismatch(
                "attribute model schema differs".into(),
            ));
        }
        self.attribute_model = model;
        Ok(())
    }

    /// Replaces the circuit and rebuilds the conditional table.
    pub fn set_circuit(&mut self, circuit: Circuit) -> Result<()> {
        let rebuilt = Self::with_cap(self.attribute_model.clone(), circuit, self.cap)?;
        *self = rebuilt;
        Ok(())
    }

    pub fn into_parts(self) -> (AttributeModel, Circuit) {
        (self.attribute_model, self.circuit)
    }

    /// Class posterior and predicted class for a feature vector.
    pub fn predict(&self, features: &[f64]) -> Result<(ClassPosterior, usize)> {
        let probs = self.attribute_model.predict(features)?;
        self.predict_from_probabilities(&probs)
    }

    /// Class posterior from given attribute probability vectors, which need
    /// not be normalized.
    pub fn predict_from_probabilities(
        &self,
        probs: &[Vec<f64>],
    ) -> Result<(ClassPosterior, usize)> {
        self.check_probabilities(probs)?;
        let posterior = ClassPosterior::from_scores(self.table.scores(probs))?;
        let y = posterior.predicted();
        Ok((posterior, y))
    }

    pub(crate) fn check_probabilities(&self, probs: &[Vec<f64>]) -> Result<()> {
        let schema = self.schema();
        if probs.len() != schema.num_attributes()
            || probs
                .iter()
                .enumerate()
                .any(|(k, p)| p.len() != schema.attribute_cardinality(k))
        {
            return Err(Error::SchemaMismatch(
                "attribute probabilities do not match the schema".into(),
            ));
        }
        if probs.iter().flatten().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::NonFinite("attribute probabilities"));
        }
        Ok(())
    }

    /// Posterior with the `excluded` attributes marginalized in the circuit
    /// and left out of the enumeration.
    pub fn predict_with_exclusion(
        &self,
        features: &[f64],
        excluded: &[usize],
    ) -> Result<ClassPosterior> {
        let probs = self.attribute_model.predict(features)?;
        let table = self.exclusion_table(excluded)?;
        ClassPosterior::from_scores(table.scores(&probs))
    }

    /// Conditional table over the attributes not in `excluded`.
    pub fn exclusion_table(&self, excluded: &[usize]) -> Result<ConditionalTable> {
        let k_all = self.schema().num_attributes();
        if let Some(&k) = excluded.iter().find(|&&k| k >= k_all) {
            return Err(Error::InvalidExclusion(format!(
                "attribute {k} does not exist"
            )));
        }
        let retained: Vec<usize> = (0..k_all).filter(|k| !excluded.contains(k)).collect();
        ConditionalTable::build(&self.circuit, &retained, self.cap)
    }
}

/// Free-function form of [`NpcModel::predict`].
pub fn predict(npc: &NpcModel, features: &[f64]) -> Result<(ClassPosterior, usize)> {
    npc.predict(features)
}

/// Free-function form of [`NpcModel::predict_with_exclusion`].
pub fn predict_with_exclusion(
    npc: &NpcModel,
    features: &[f64],
    excluded: &[usize],
) -> Result<ClassPosterior> {
    npc.predict_with_exclusion(features, excluded)
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct JointOptConfig {
    /// Learning rate for the attribute model.
    pub eta_a: f64,
    /// Learning rate for the circuit weights; 0 keeps the circuit frozen.
    pub eta_c: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub weight_floor: f64,
}

impl Default for JointOptConfig {
    fn default() -> Self {
        Self {
            eta_a: 0.1,
            eta_c: 0.0,
            epochs: 5,
            batch_size: 32,
            seed: 0,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
        }
    }
}

impl JointOptConfig {
    fn check(&self) -> Result<()> {
        let ok = self.eta_a >= 0.0
            && self.eta_c >= 0.0
            && self.eta_a.is_finite()
            && self.eta_c.is_finite()
            && self.batch_size > 0
            && self.weight_floor > 0.0
            && self.weight_floor <= 1e-6;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("{self:?}")))
        }
    }
}

/// Per-assignment weight gradients of `ln f(∅, a)` and `ln f(y, a)`, flat
/// edge order, used for the circuit part of the joint gradient.
struct CircuitGradTable {
    num_edges: usize,
    num_classes: usize,
    /// `[i][0]` is the marginal term, `[i][1 + y]` the joint term with `y`;
    /// empty for unsupported assignments.
    grads: Vec<Vec<f64>>,
}

impl CircuitGradTable {
    fn build(circuit: &Circuit, table: &ConditionalTable) -> Self {
        let schema = circuit.schema();
        let num_edges = circuit.num_edges();
        let num_classes = schema.num_classes();
        let class_var = schema.class_variable().0;
        let mut ws = Workspace::new();
        let mut g = vec![0.0; num_edges];
        let mut evidence = vec![None; schema.num_variables()];
        let mut grads = Vec::with_capacity(table.len());
        for i in 0..table.len() {
            if !table.is_supported(i) {
                grads.push(Vec::new());
                continue;
            }
            for (&k, v) in table.retained.iter().zip(table.decode(i)) {
                evidence[k] = Some(v);
            }
            let mut block = Vec::with_capacity(num_edges * (num_classes + 1));
            evidence[class_var] = None;
            circuit.log_gradient_into(&evidence, &mut ws, &mut g);
            block.extend_from_slice(&g);
            for y in 0..num_classes {
                evidence[class_var] = Some(y);
                // Zero joints leave `g` zeroed; their conditional is zero too.
                circuit.log_gradient_into(&evidence, &mut ws, &mut g);
                block.extend_from_slice(&g);
            }
            grads.push(block);
        }
        Self {
            num_edges,
            num_classes,
            grads,
        }
    }

    fn joint(&self, i: usize, y: usize) -> &[f64] {
        &self.grads[i][(1 + y) * self.num_edges..(2 + y) * self.num_edges]
    }

    fn marginal(&self, i: usize) -> &[f64] {
        &self.grads[i][..self.num_edges]
    }
}

/// Gradients of the joint loss over a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct JointGradients {
    /// Mean of `-ln score(y_i)` over the batch.
    pub loss: f64,
    /// Attribute-model gradient, flat parameter order.
    pub theta: Vec<f64>,
    /// Circuit weight gradient, flat edge order; empty when not requested.
    pub weights: Vec<f64>,
}

fn sample_score(npc: &NpcModel, index: usize, s: &Sample) -> Result<(Vec<Vec<f64>>, f64)> {
    let probs = npc.attribute_model.predict(&s.features)?;
    let score = npc.table.scores(&probs)[s.class_label];
    if score <= 0.0 {
        return Err(Error::InfiniteLoss { sample: index });
    }
    Ok((probs, score))
}

/// Mean joint loss `-(1/n) Σ ln score(y_i | x_i)` using the unnormalized
/// class score.
pub fn joint_loss(npc: &NpcModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.schema != *npc.schema() {
        return Err(Error::SchemaMismatch(
            "dataset and model schemas differ".into(),
        ));
    }
    let mut total = 0.0;
    for (i, s) in dataset.samples.iter().enumerate() {
        let (_, score) = sample_score(npc, i, s)?;
        total -= ln(score);
    }
    Ok(total / dataset.len() as f64)
}

fn batch_gradients(
    npc: &NpcModel,
    samples: &[(usize, &Sample)],
    circuit_grads: Option<&CircuitGradTable>,
) -> Result<JointGradients> {
    let model = &npc.attribute_model;
    let table = &npc.table;
    let d = model.feature_dim();
    let n = samples.len() as f64;
    let mut theta = vec![0.0; model.num_parameters()];
    let mut weights = vec![0.0; circuit_grads.map_or(0, |c| c.num_edges)];
    let mut loss = 0.0;
    for &(index, s) in samples {
        let (probs, score) = sample_score(npc, index, s)?;
        let y = s.class_label;
        loss -= ln(score);
        // d(-ln score)/dp_kj, then through the softmax of each head.
        let dp = table.score_gradient(&probs, y);
        let mut at = 0;
        for (k, p) in probs.iter().enumerate() {
            let q = p.len();
            let g: Vec<f64> = dp[k].iter().map(|v| -v / score).collect();
            let inner: f64 = p.iter().zip(&g).map(|(a, b)| a * b).sum();
            for j in 0..q {
                let dz = p[j] * (g[j] - inner) / n;
                let row = &mut theta[at + j * d..at + (j + 1) * d];
                for (r, x) in row.iter_mut().zip(&s.features) {
                    *r += dz * x;
                }
                theta[at + q * d + j] += dz;
            }
            at += q * d + q;
        }
        if let Some(cg) = circuit_grads {
            debug_assert_eq!(cg.num_classes, table.num_classes());
            let assignment_weights = table.assignment_weights(&probs);
            for (i, &pi) in assignment_weights.iter().enumerate() {
                let c = table.conditional(i, y);
                if c == 0.0 || pi == 0.0 {
                    continue;
                }
                let factor = -pi * c / (score * n);
                for ((w, j), m) in weights.iter_mut().zip(cg.joint(i, y)).zip(cg.marginal(i)) {
                    *w += factor * (j - m);
                }
            }
        }
    }
    Ok(JointGradients {
        loss: loss / n,
        theta,
        weights,
    })
}

/// Batch-mean gradients of the joint loss with respect to the attribute
/// parameters and, if `with_weights`, the circuit weights.
pub fn joint_gradients(
    npc: &NpcModel,
    dataset: &Dataset,
    with_weights: bool,
) -> Result<JointGradients> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.schema != *npc.schema() {
        return Err(Error::SchemaMismatch(
            "dataset and model schemas differ".into(),
        ));
    }
    let cg = with_weights.then(|| CircuitGradTable::build(&npc.circuit, &npc.table));
    let samples: Vec<(usize, &Sample)> = dataset.samples.iter().enumerate().collect();
    batch_gradients(npc, &samples, cg.as_ref())
}

/// Mini-batch joint training. The attribute model takes plain gradient
/// steps; circuit weights take a gradient step followed by flooring at
/// `weight_floor` and per-node renormalization. The trace holds the full
/// dataset loss before training and after each epoch.
pub fn joint_optimize(
    npc: &NpcModel,
    dataset: &Dataset,
    config: &JointOptConfig,
) -> Result<(NpcModel, Vec<f64>)> {
    config.check()?;
    let mut current = npc.clone();
    let mut trace = vec![joint_loss(&current, dataset)?];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let train_circuit = config.eta_c > 0.0;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let samples: Vec<(usize, &Sample)> =
                batch.iter().map(|&i| (i, &dataset.samples[i])).collect();
            let cg =
                train_circuit.then(|| CircuitGradTable::build(&current.circuit, &current.table));
            let grads = batch_gradients(&current, &samples, cg.as_ref())?;
            if !grads.loss.is_finite() || grads.theta.iter().any(|g| !g.is_finite()) {
                return Err(Error::DivergedTraining { epoch });
            }
            if config.eta_a > 0.0 {
                current.attribute_model.axpy(-config.eta_a, &grads.theta);
            }
            if train_circuit {
                let mut circuit = current.circuit.clone();
                let mut at = 0;
                for ws in circuit.sum_weights_mut() {
                    for w in ws.iter_mut() {
                        *w -= config.eta_c * grads.weights[at];
                        at += 1;
                    }
                    renormalize_with_floor(ws, config.weight_floor);
                }
                current.set_circuit(circuit)?;
            }
        }
        let loss = joint_loss(&current, dataset)?;
        if !loss.is_finite() {
            return Err(Error::DivergedTraining { epoch });
        }
        trace.push(loss);
    }
    Ok((current, trace))
}
