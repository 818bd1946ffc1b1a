//! Most probable explanations and counterfactual explanations.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, Sample};
use crate::math::argmax;
use crate::npc::NpcModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct MpeResult {
    /// Value index per attribute.
    pub assignment: Vec<usize>,
    /// `Pr_w(ŷ | a*) · Π_k Pr_θ(a*_k | x)`.
    pub contribution: f64,
    /// Whether every `a*_k` lies in the support of the ground truth, when known.
    pub aligned: Option<bool>,
}

/// Exhaustive argmax of the class-`y_hat` summand over attribute
/// assignments. Ties go to the lexicographically smallest assignment.
pub fn mpe(npc: &NpcModel, features: &[f64], y_hat: usize) -> Result<MpeResult> {
    let probs = npc.attribute_model().predict(features)?;
    mpe_from_probabilities(npc, &probs, y_hat)
}

pub fn mpe_from_probabilities(
    npc: &NpcModel,
    probs: &[Vec<f64>],
    y_hat: usize,
) -> Result<MpeResult> {
    check_class(npc, y_hat)?;
    let table = npc.table();
    let weights = table.assignment_weights(probs);
    let mut best: Option<(usize, f64)> = None;
    for (i, &w) in weights.iter().enumerate() {
        if !table.is_supported(i) {
            continue;
        }
        let term = table.conditional(i, y_hat) * w;
        if best.is_none_or(|(_, b)| term > b) {
            best = Some((i, term));
        }
    }
    match best {
        Some((i, contribution)) if contribution > 0.0 => Ok(MpeResult {
            assignment: table.decode(i),
            contribution,
            aligned: None,
        }),
        _ => Err(Error::NoExplanation),
    }
}

fn check_class(npc: &NpcModel, y: usize) -> Result<()> {
    if y >= npc.schema().num_classes() {
        return Err(Error::SchemaMismatch(format!(
            "class index {y} out of range"
        )));
    }
    Ok(())
}

/// True when every `assignment[k]` has positive ground-truth mass.
pub fn is_aligned(assignment: &[usize], sample: &Sample) -> bool {
    assignment
        .iter()
        .zip(&sample.attribute_targets)
        .all(|(&a, g)| g[a] > 0.0)
}

/// Fraction of correctly predicted samples whose MPE is aligned.
pub fn alignment_rate(npc: &NpcModel, dataset: &Dataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut correct = 0usize;
    let mut aligned = 0usize;
    for s in &dataset.samples {
        let probs = npc.attribute_model().predict(&s.features)?;
        let (_, y) = npc.predict_from_probabilities(&probs)?;
        if y != s.class_label {
            continue;
        }
        correct += 1;
        let m = mpe_from_probabilities(npc, &probs, y)?;
        if is_aligned(&m.assignment, s) {
            aligned += 1;
        }
    }
    if correct == 0 {
        return Err(Error::UndefinedMetric(
            "alignment rate with no correctly predicted samples",
        ));
    }
    Ok(aligned as f64 / correct as f64)
}

/// Euclidean projection onto the probability simplex by sorting.
pub fn simplex_project(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("simplex projection input"));
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut rho = 0;
    let mut cum_rho = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        if uj > (cum - 1.0) / (j + 1) as f64 {
            rho = j + 1;
            cum_rho = cum;
        }
    }
    let lambda = (1.0 - cum_rho) / rho as f64;
    Ok(v.iter().map(|x| (x + lambda).max(0.0)).collect())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CeConfig {
    /// Ascent step size.
    pub gamma: f64,
    pub iterations: usize,
}

impl Default for CeConfig {
    fn default() -> Self {
        Self {
            gamma: 0.01,
            iterations: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CeResult {
    /// One probability vector per attribute.
    pub b: Vec<Vec<f64>>,
    /// `Pr_b(Y = y | x)` at initialization and after every iteration.
    pub objective_trace: Vec<f64>,
    /// Whether the target is the argmax class under the final `b`.
    pub corrected: bool,
    /// First iteration (0 = initialization) at which the target was the argmax.
    pub first_correction: Option<usize>,
}

/// Projected gradient ascent on `ln Pr_b(Y = target | x)` starting from
/// `b = Pr_θ(A | x)`; runs exactly `config.iterations` steps.
pub fn counterfactual(
    npc: &NpcModel,
    features: &[f64],
    target: usize,
    config: &CeConfig,
) -> Result<CeResult> {
    let probs = npc.attribute_model().predict(features)?;
    counterfactual_from_probabilities(npc, probs, target, config)
}

pub fn counterfactual_from_probabilities(
    npc: &NpcModel,
    init: Vec<Vec<f64>>,
    target: usize,
    config: &CeConfig,
) -> Result<CeResult> {
    check_class(npc, target)?;
    if !(config.gamma > 0.0) || !config.gamma.is_finite() {
        return Err(Error::InvalidConfig(format!("{config:?}")));
    }
    npc.check_probabilities(&init)?;
    let table = npc.table();
    let mut b = init;
    let mut scores = table.scores(&b);
    if scores[target] <= 0.0 {
        return Err(Error::Uncorrectable { target });
    }
    let mut trace = Vec::with_capacity(config.iterations + 1);
    trace.push(scores[target]);
    let mut first_correction = (argmax(&scores) == target).then_some(0);
    let mut corrected = first_correction.is_some();
    for t in 1..=config.iterations {
        let objective = scores[target];
        if objective > 0.0 {
            let grad = table.score_gradient(&b, target);
            for (bk, gk) in b.iter_mut().zip(&grad) {
                let stepped: Vec<f64> = bk
                    .iter()
                    .zip(gk)
                    .map(|(x, g)| x + config.gamma * g / objective)
                    .collect();
                *bk = simplex_project(&stepped)?;
            }
        }
        scores = table.scores(&b);
        trace.push(scores[target]);
        corrected = argmax(&scores) == target;
        if corrected && first_correction.is_none() {
            first_correction = Some(t);
        }
    }
    Ok(CeResult {
        b,
        objective_trace: trace,
        corrected,
        first_correction,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionSummary {
    pub rate: f64,
    pub incorrect: usize,
    pub corrected: usize,
    /// Mispredicted samples whose true class has no supporting assignment.
    pub uncorrectable: Vec<usize>,
}

/// Fraction of initially mispredicted samples whose counterfactual towards
/// the true class flips the prediction.
pub fn correction_rate(
    npc: &NpcModel,
    dataset: &Dataset,
    config: &CeConfig,
) -> Result<CorrectionSummary> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut incorrect = 0usize;
    let mut corrected = 0usize;
    let mut uncorrectable = Vec::new();
    for (i, s) in dataset.samples.iter().enumerate() {
        let probs = npc.attribute_model().predict(&s.features)?;
        let (_, y) = npc.predict_from_probabilities(&probs)?;
        if y == s.class_label {
            continue;
        }
        incorrect += 1;
        match counterfactual_from_probabilities(npc, probs, s.class_label, config) {
            Ok(ce) if ce.corrected => corrected += 1,
            Ok(_) => {}
            Err(Error::Uncorrectable { .. }) => uncorrectable.push(i),
            Err(e) => return Err(e),
        }
    }
    if incorrect == 0 {
        return Err(Error::UndefinedMetric(
            "correction rate with no mispredicted samples",
        ));
    }
    Ok(CorrectionSummary {
        rate: corrected as f64 / incorrect as f64,
        incorrect,
        corrected,
        uncorrectable,
    })
}

/// One-hot vector helper used for oracle attribute probabilities.
pub fn one_hot(q: usize, j: usize) -> Vec<f64> {
    let mut v = vec![0.0; q];
    v[j] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(simplex_project(&[0.6, 0.6]).unwrap(), vec![0.5, 0.5]);
        let p = simplex_project(&[1.2, -0.2]).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-15 && p[1] == 0.0);
        let on = [0.2, 0.3, 0.5];
        let p = simplex_project(&on).unwrap();
        for (a, b) in p.iter().zip(on) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(simplex_project(&[f64::NAN]).is_err());
    }
}
