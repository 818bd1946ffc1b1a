//! Evaluation metrics for the attribute model, the circuit and the full model.

use alloc::vec;
use alloc::vec::Vec;

use crate::attribute::AttributeModel;
use crate::circuit::Circuit;
use crate::data::{Dataset, SampledDataset};
use crate::explain::{alignment_rate, correction_rate, CeConfig};
use crate::math::{exp, tv_distance};
use crate::npc::NpcModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MetricsReport {
    pub mean_tv_distance: f64,
    pub mean_concept_accuracy: f64,
    pub mean_likelihood: f64,
    pub classification_accuracy: f64,
    pub alignment_rate: Option<f64>,
    pub correction_rate: Option<f64>,
}

fn nonempty(dataset: &Dataset) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(())
}

/// `(1/K) Σ_k mean_x d_TV(f_k(x), g_k(x))`.
pub fn mean_tv_distance(model: &AttributeModel, dataset: &Dataset) -> Result<f64> {
    nonempty(dataset)?;
    let k_count = dataset.schema.num_attributes() as f64;
    let mut total = 0.0;
    for s in &dataset.samples {
        let p = model.predict(&s.features)?;
        let per: f64 = p
            .iter()
            .zip(&s.attribute_targets)
            .map(|(a, g)| tv_distance(a, g))
            .sum();
        total += per / k_count;
    }
    Ok(total / dataset.len() as f64)
}

/// Indicator of the `n` largest entries, ties to the lower index.
pub fn top_n_indicator(p: &[f64], n: usize) -> Vec<bool> {
    let mut idx: Vec<usize> = (0..p.len()).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let mut out = vec![false; p.len()];
    for &i in idx.iter().take(n) {
        out[i] = true;
    }
    out
}

/// Per-value agreement between the top-`n_k` binarized predictions and the
/// target support, averaged over all values of all attributes and then over
/// rows.
pub fn mean_concept_accuracy(model: &AttributeModel, dataset: &Dataset) -> Result<f64> {
    nonempty(dataset)?;
    let total_values: usize = dataset.schema.attribute_cardinalities().iter().sum();
    let mut total = 0.0;
    for s in &dataset.samples {
        let p = model.predict(&s.features)?;
        let mut agree = 0usize;
        for (pk, gk) in p.iter().zip(&s.attribute_targets) {
            let support: Vec<bool> = gk.iter().map(|&g| g > 0.0).collect();
            let n = support.iter().filter(|&&b| b).count();
            let top = top_n_indicator(pk, n);
            agree += top.iter().zip(&support).filter(|(a, b)| a == b).count();
        }
        total += agree as f64 / total_values as f64;
    }
    Ok(total / dataset.len() as f64)
}

/// Arithmetic mean of `Pr_w(y, a)` over the rows.
pub fn mean_likelihood(circuit: &Circuit, dataset: &SampledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if dataset.schema != *circuit.schema() {
        return Err(Error::SchemaMismatch(
            "dataset and circuit schemas differ".into(),
        ));
    }
    let mut values = Vec::new();
    let mut total = 0.0;
    for row in &dataset.rows {
        let a: Vec<Option<usize>> = row.values().into_iter().map(Some).collect();
        total += exp(circuit.forward_log(&a, &mut values));
    }
    Ok(total / dataset.len() as f64)
}

/// Fraction of samples whose predicted class equals the label.
pub fn classification_accuracy(npc: &NpcModel, dataset: &Dataset) -> Result<f64> {
    nonempty(dataset)?;
    let mut hits = 0usize;
    for s in &dataset.samples {
        if npc.predict(&s.features)?.1 == s.class_label {
            hits += 1;
        }
    }
    Ok(hits as f64 / dataset.len() as f64)
}

/// All metrics on a test split. Explanation metrics are included when
/// `ce` is given and left empty when undefined for this data.
pub fn evaluate(
    npc: &NpcModel,
    test: &Dataset,
    sampled_test: &SampledDataset,
    ce: Option<&CeConfig>,
) -> Result<MetricsReport> {
    let undefined_as_none = |r: Result<f64>| match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedMetric(_)) => Ok(None),
        Err(e) => Err(e),
    };
    let (alignment, correction) = match ce {
        Some(cfg) => (
            undefined_as_none(alignment_rate(npc, test))?,
            undefined_as_none(correction_rate(npc, test, cfg).map(|s| s.rate))?,
        ),
        None => (None, None),
    };
    Ok(MetricsReport {
        mean_tv_distance: mean_tv_distance(npc.attribute_model(), test)?,
        mean_concept_accuracy: mean_concept_accuracy(npc.attribute_model(), test)?,
        mean_likelihood: mean_likelihood(npc.circuit(), sampled_test)?,
        classification_accuracy: classification_accuracy(npc, test)?,
        alignment_rate: alignment,
        correction_rate: correction,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_n_ties_and_counting() {
        assert_eq!(top_n_indicator(&[0.5, 0.5], 1), vec![true, false]);
        let top = top_n_indicator(&[0.4, 0.1, 0.3, 0.2], 2);
        assert_eq!(top, vec![true, false, true, false]);
        let support = [true, true, false, false];
        let agree = top.iter().zip(support).filter(|(a, b)| **a == *b).count();
        assert_eq!(agree, 2);
    }
}
