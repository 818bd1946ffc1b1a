//! Maximum-likelihood weight learning for a fixed circuit structure.
//!
//! [`cccp_fit`] runs the concave-convex procedure for sum-product networks:
//! each iteration rescales every sum edge by
//! `w_d · Σ_rows (adjoint(parent) · value(child) / value(root))` and
//! renormalizes each sum node. For locally normalized circuits this is a
//! full-batch EM step, so the mean log-likelihood never decreases.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::circuit::{renormalize_with_floor, Circuit, Node, Workspace, DEFAULT_WEIGHT_FLOOR};
use crate::data::SampledDataset;
use crate::math::{exp, ln, log_sum_exp};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct CccpConfig {
    pub max_iterations: usize,
    /// Stop once the mean log-likelihood improves by less than this.
    pub ll_abs_tolerance: f64,
    pub weight_floor: f64,
}

impl Default for CccpConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            ll_abs_tolerance: 1e-7,
            weight_floor: DEFAULT_WEIGHT_FLOOR,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingTrace {
    /// Mean log-likelihood before the first update and after each iteration.
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    pub iterations_run: usize,
}

/// Distinct rows with multiplicities, in sorted order, plus the original
/// indices of each distinct row.
fn group_rows(
    circuit: &Circuit,
    dataset: &SampledDataset,
) -> Result<Vec<(Vec<Option<usize>>, f64, Vec<usize>)>> {
    if dataset.schema != *circuit.schema() {
        return Err(Error::SchemaMismatch(
            "dataset and circuit schemas differ".into(),
        ));
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for (i, row) in dataset.rows.iter().enumerate() {
        groups.entry(row.values()).or_default().push(i);
    }
    Ok(groups
        .into_iter()
        .map(|(values, idx)| {
            let count = idx.len() as f64;
            (values.into_iter().map(Some).collect(), count, idx)
        })
        .collect())
}

/// Mean log-likelihood of the rows and the count-weighted sum of
/// `∂ ln f / ∂ w_d` per edge. Returns the offending rows if any has zero
/// probability.
fn likelihood_pass(
    circuit: &Circuit,
    groups: &[(Vec<Option<usize>>, f64, Vec<usize>)],
    total: f64,
    ws: &mut Workspace,
    grad: &mut [f64],
    acc: &mut [f64],
) -> core::result::Result<f64, Vec<usize>> {
    acc.fill(0.0);
    let mut ll = 0.0;
    let mut unreachable = Vec::new();
    for (assignment, count, idx) in groups {
        let log_f = circuit.log_gradient_into(assignment, ws, grad);
        if log_f == f64::NEG_INFINITY {
            unreachable.extend_from_slice(idx);
            continue;
        }
        ll += count * log_f;
        for (a, g) in acc.iter_mut().zip(grad.iter()) {
            *a += count * g;
        }
    }
    if unreachable.is_empty() {
        Ok(ll / total)
    } else {
        unreachable.sort_unstable();
        Err(unreachable)
    }
}

/// Fits sum weights by CCCP with the structure held fixed.
///
/// Rows are grouped by value before each pass, so the cost per iteration
/// scales with the number of distinct rows. Weights stay at or above
/// `config.weight_floor` and locally normalized after every iteration.
pub fn cccp_fit(
    circuit: &Circuit,
    dataset: &SampledDataset,
    config: &CccpConfig,
) -> Result<(Circuit, TrainingTrace)> {
    if !(config.weight_floor > 0.0 && config.weight_floor <= 1e-6)
        || !(config.ll_abs_tolerance > 0.0)
    {
        return Err(Error::InvalidConfig(format!("{config:?}")));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let groups = group_rows(circuit, dataset)?;
    let total = dataset.len() as f64;
    let mut current = circuit.clone();
    let mut ws = Workspace::new();
    let mut grad = vec![0.0; current.num_edges()];
    let mut acc = vec![0.0; current.num_edges()];

    let mut ll_prev = likelihood_pass(&current, &groups, total, &mut ws, &mut grad, &mut acc)
        .map_err(Error::UnreachableRows)?;
    let mut trace = TrainingTrace {
        log_likelihoods: vec![ll_prev],
        converged: false,
        iterations_run: 0,
    };

    for _ in 0..config.max_iterations {
        let mut at = 0;
        for weights in current.sum_weights_mut() {
            for w in weights.iter_mut() {
                *w *= acc[at];
                at += 1;
            }
            renormalize_with_floor(weights, config.weight_floor);
        }
        let ll = likelihood_pass(&current, &groups, total, &mut ws, &mut grad, &mut acc)
            .map_err(Error::UnreachableRows)?;
        trace.log_likelihoods.push(ll);
        trace.iterations_run += 1;
        if ll - ll_prev < config.ll_abs_tolerance {
            trace.converged = true;
            break;
        }
        ll_prev = ll;
    }
    Ok((current, trace))
}

/// Mean log-likelihood of `dataset` under `circuit` (`-inf` if any row has
/// zero probability).
pub fn mean_log_likelihood(circuit: &Circuit, dataset: &SampledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let groups = group_rows(circuit, dataset)?;
    let mut values = Vec::new();
    let mut ll = 0.0;
    for (assignment, count, _) in &groups {
        ll += count * circuit.forward_log(assignment, &mut values);
    }
    Ok(ll / dataset.len() as f64)
}

/// Turns a circuit with positive but unnormalized weights into the locally
/// normalized circuit of the same distribution.
///
/// Bottom-up, every sum edge is rescaled by its child's all-marginalized
/// value `Z(child)` and the node renormalized, which divides the root output
/// by `Z(root)`.
pub fn normalize_weights(circuit: &Circuit) -> Result<Circuit> {
    if let Some(w) = circuit
        .weights()
        .into_iter()
        .find(|w| !(*w > 0.0) || !w.is_finite())
    {
        return Err(Error::InvalidCircuit(format!("nonpositive weight {w}")));
    }
    let mut out = circuit.clone();
    let mut log_z: Vec<f64> = Vec::with_capacity(circuit.len());
    {
        let mut sums = out.sum_weights_mut();
        for node in circuit.nodes() {
            let z = match node {
                Node::Leaf { .. } => 0.0,
                Node::Product { children } => children.iter().map(|c| log_z[c.0]).sum(),
                Node::Sum { children, weights } => {
                    let terms: Vec<f64> = children
                        .iter()
                        .zip(weights)
                        .map(|(c, &w)| ln(w) + log_z[c.0])
                        .collect();
                    let z = log_sum_exp(terms.iter().copied());
                    let new = sums.next().expect("sum node count");
                    for (slot, t) in terms.iter().enumerate() {
                        new[slot] = exp(t - z);
                    }
                    z
                }
            };
            log_z.push(z);
        }
    }
    Ok(out)
}
