//! Exact verification of the compositional error bound
//! `ε_{θ,w} ≤ ε_θ + 2 ε_w ≤ Σ_k ε_θ^k + 2 ε_w` on finite worlds.
//!
//! A world is a discrete input `X` with known `Pr(X)`, per-attribute
//! conditionals `Pr(A_k | X)` (independent given `X`) and `Pr(Y | A)`. The
//! model side supplies `Pr_θ(A_k | x)` per state and a circuit for
//! `Pr_w(Y, A)`. Every quantity is a finite sum, so nothing is estimated.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::circuit::Circuit;
use crate::construction::{compile_rules, Rule, RuleSet};
use crate::data::{Dataset, TARGET_TOLERANCE};
use crate::math::{exp, tv_distance};
use crate::npc::{ConditionalTable, NpcModel, DEFAULT_ENUMERATION_CAP};
use crate::schema::AttributeSchema;
use crate::{Error, Result};

/// Slack on both inequalities.
pub const BOUND_SLACK: f64 = 1e-9;

/// Lexicographic enumeration of attribute assignments, last attribute fastest.
pub fn assignments(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0usize; cards.len()];
    for _ in 0..total {
        out.push(digits.clone());
        for (d, &q) in digits.iter_mut().zip(cards).rev() {
            *d += 1;
            if *d < q {
                break;
            }
            *d = 0;
        }
    }
    out
}

fn product_distribution(per_attribute: &[Vec<f64>], all: &[Vec<usize>]) -> Vec<f64> {
    all.iter()
        .map(|a| {
            a.iter()
                .enumerate()
                .map(|(k, &v)| per_attribute[k][v])
                .product()
        })
        .collect()
}

fn check_distribution(p: &[f64], len: usize, what: &str) -> Result<()> {
    if p.len() != len {
        return Err(Error::SchemaMismatch(format!(
            "{what} has length {}, expected {len}",
            p.len()
        )));
    }
    if p.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("world table"));
    }
    let total: f64 = p.iter().sum();
    if p.iter().any(|&v| v < 0.0) || (total - 1.0).abs() > TARGET_TOLERANCE {
        return Err(Error::InvalidConfig(format!(
            "{what} is not a probability vector"
        )));
    }
    Ok(())
}

fn check_attribute_tables(
    schema: &AttributeSchema,
    tables: &[Vec<Vec<f64>>],
    states: usize,
) -> Result<()> {
    if tables.len() != states {
        return Err(Error::SchemaMismatch(format!(
            "{} attribute tables for {states} states",
            tables.len()
        )));
    }
    for per_x in tables {
        if per_x.len() != schema.num_attributes() {
            return Err(Error::SchemaMismatch(
                "attribute table has the wrong number of attributes".into(),
            ));
        }
        for (k, p) in per_x.iter().enumerate() {
            check_distribution(p, schema.attribute_cardinality(k), "Pr(A_k | x)")?;
        }
    }
    Ok(())
}

/// The true generative tables of a finite world.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldTables {
    pub schema: AttributeSchema,
    /// `Pr(X = x)`.
    pub prior: Vec<f64>,
    /// `Pr(A_k = j | X = x)` as `[x][k][j]`.
    pub attributes: Vec<Vec<Vec<f64>>>,
    /// `Pr(Y = y | A = a)` as `[a][y]`, assignments in lexicographic order.
    pub class_given_attributes: Vec<Vec<f64>>,
}

impl WorldTables {
    pub fn new(
        schema: AttributeSchema,
        prior: Vec<f64>,
        attributes: Vec<Vec<Vec<f64>>>,
        class_given_attributes: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if prior.is_empty() {
            return Err(Error::InvalidConfig(
                "a world needs at least one state".into(),
            ));
        }
        check_distribution(&prior, prior.len(), "Pr(X)")?;
        check_attribute_tables(&schema, &attributes, prior.len())?;
        let size = schema.assignment_count();
        if class_given_attributes.len() as u128 != size {
            return Err(Error::SchemaMismatch(
                "Pr(Y | A) must have one row per attribute assignment".into(),
            ));
        }
        for row in &class_given_attributes {
            check_distribution(row, schema.num_classes(), "Pr(Y | a)")?;
        }
        Ok(Self {
            schema,
            prior,
            attributes,
            class_given_attributes,
        })
    }

    pub fn num_states(&self) -> usize {
        self.prior.len()
    }

    /// `Pr(Y | X = x) = Σ_a Pr(Y | a) Π_k Pr(a_k | x)`.
    pub fn class_given_x(&self, x: usize) -> Vec<f64> {
        let all = assignments(&self.schema.attribute_cardinalities());
        let pa = product_distribution(&self.attributes[x], &all);
        let mut out = vec![0.0; self.schema.num_classes()];
        for (w, row) in pa.iter().zip(&self.class_given_attributes) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += w * c;
            }
        }
        out
    }

    /// `Pr(Y = y, A = a)` as `[a][y]`.
    pub fn joint(&self) -> Vec<Vec<f64>> {
        let all = assignments(&self.schema.attribute_cardinalities());
        let mut pa = vec![0.0; all.len()];
        for (x, px) in self.prior.iter().enumerate() {
            for (acc, v) in pa
                .iter_mut()
                .zip(product_distribution(&self.attributes[x], &all))
            {
                *acc += px * v;
            }
        }
        pa.iter()
            .zip(&self.class_given_attributes)
            .map(|(m, row)| row.iter().map(|c| m * c).collect())
            .collect()
    }
}

/// The learned side: `Pr_θ(A_k | x)` per state and `Pr_w` tabulated from a
/// circuit.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelTables {
    /// `Pr_θ(A_k = j | x)` as `[x][k][j]`.
    pub attributes: Vec<Vec<Vec<f64>>>,
    /// `Pr_w(Y = y | A = a)` as `[a][y]`; zero rows where `Pr_w(a) = 0`.
    pub class_given_attributes: Vec<Vec<f64>>,
    /// `Pr_w(Y = y, A = a)` as `[a][y]`.
    pub joint: Vec<Vec<f64>>,
}

impl ModelTables {
    pub fn from_circuit(circuit: &Circuit, attributes: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let schema = circuit.schema();
        check_attribute_tables(schema, &attributes, attributes.len())?;
        let retained: Vec<usize> = (0..schema.num_attributes()).collect();
        let table = ConditionalTable::build(circuit, &retained, DEFAULT_ENUMERATION_CAP)?;
        let class_var = schema.class_variable().0;
        let mut scratch = Vec::new();
        let mut joint = Vec::with_capacity(table.len());
        for i in 0..table.len() {
            let mut evidence: Vec<Option<usize>> = table.decode(i).into_iter().map(Some).collect();
            evidence.push(None);
            let row = (0..schema.num_classes())
                .map(|y| {
                    evidence[class_var] = Some(y);
                    exp(circuit.forward_log(&evidence, &mut scratch))
                })
                .collect();
            joint.push(row);
        }
        let class_given_attributes = (0..table.len()).map(|i| table.row(i).to_vec()).collect();
        Ok(Self {
            attributes,
            class_given_attributes,
            joint,
        })
    }

    /// Uses the model's attribute predictions on one feature vector per state.
    pub fn from_npc(npc: &NpcModel, state_features: &[Vec<f64>]) -> Result<Self> {
        let attributes = state_features
            .iter()
            .map(|f| npc.attribute_model().predict(f))
            .collect::<Result<Vec<_>>>()?;
        Self::from_circuit(npc.circuit(), attributes)
    }

    /// `Σ_a Pr_w(Y | a) Π_k Pr_θ(a_k | x)`, not renormalized.
    pub fn class_given_x(&self, schema: &AttributeSchema, x: usize) -> Vec<f64> {
        let all = assignments(&schema.attribute_cardinalities());
        let pa = product_distribution(&self.attributes[x], &all);
        let mut out = vec![0.0; schema.num_classes()];
        for (w, row) in pa.iter().zip(&self.class_given_attributes) {
            for (o, c) in out.iter_mut().zip(row) {
                *o += w * c;
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundReport {
    pub eps_overall: f64,
    pub eps_theta: f64,
    pub eps_theta_k: Vec<f64>,
    pub eps_w: f64,
    /// `ε_θ + 2 ε_w`.
    pub intermediate_rhs: f64,
    /// `Σ_k ε_θ^k + 2 ε_w`.
    pub bound_rhs: f64,
    /// `ε_{θ,w} ≤ ε_θ + 2 ε_w` within [`BOUND_SLACK`].
    pub intermediate_holds: bool,
    /// `ε_{θ,w} ≤ Σ_k ε_θ^k + 2 ε_w` within [`BOUND_SLACK`].
    pub holds: bool,
}

/// Computes every error term exactly and checks both inequalities.
pub fn check_error_bound(world: &WorldTables, model: &ModelTables) -> Result<BoundReport> {
    let schema = &world.schema;
    check_attribute_tables(schema, &model.attributes, world.num_states())?;
    let size = world.class_given_attributes.len();
    if model.joint.len() != size || model.class_given_attributes.len() != size {
        return Err(Error::SchemaMismatch(
            "model tables do not match the world".into(),
        ));
    }
    let values = model
        .joint
        .iter()
        .chain(&model.class_given_attributes)
        .flatten();
    if values.clone().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model table"));
    }
    let all = assignments(&schema.attribute_cardinalities());
    let k_count = schema.num_attributes();
    let mut eps_overall = 0.0;
    let mut eps_theta = 0.0;
    let mut eps_theta_k = vec![0.0; k_count];
    for (x, &px) in world.prior.iter().enumerate() {
        eps_overall += px * tv_distance(&model.class_given_x(schema, x), &world.class_given_x(x));
        let learned = product_distribution(&model.attributes[x], &all);
        let truth = product_distribution(&world.attributes[x], &all);
        eps_theta += px * tv_distance(&learned, &truth);
        for (k, e) in eps_theta_k.iter_mut().enumerate() {
            *e += px * tv_distance(&model.attributes[x][k], &world.attributes[x][k]);
        }
    }
    let truth_joint: Vec<f64> = world.joint().into_iter().flatten().collect();
    let learned_joint: Vec<f64> = model.joint.iter().flatten().copied().collect();
    let eps_w = tv_distance(&learned_joint, &truth_joint);
    let intermediate_rhs = eps_theta + 2.0 * eps_w;
    let bound_rhs = eps_theta_k.iter().sum::<f64>() + 2.0 * eps_w;
    Ok(BoundReport {
        eps_overall,
        eps_theta,
        eps_theta_k,
        eps_w,
        intermediate_rhs,
        bound_rhs,
        intermediate_holds: eps_overall <= intermediate_rhs + BOUND_SLACK,
        holds: eps_overall <= bound_rhs + BOUND_SLACK,
    })
}

/// Finite world whose states are the rows of `dataset`, each with
/// probability `1/n` and attribute conditionals `g_k(x)`, combined with the
/// class table `class_given_attributes`. Paired with
/// [`ModelTables::from_npc`] on the same features this yields empirical
/// error terms.
pub fn empirical_world(
    dataset: &Dataset,
    class_given_attributes: Vec<Vec<f64>>,
) -> Result<WorldTables> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len();
    let prior = vec![1.0 / n as f64; n];
    let attributes = dataset
        .samples
        .iter()
        .map(|s| s.attribute_targets.clone())
        .collect();
    WorldTables::new(
        dataset.schema.clone(),
        prior,
        attributes,
        class_given_attributes,
    )
}

/// Deterministic class table `Pr(Y | a) = 1[y = rule[a]]`.
pub fn rule_table(num_classes: usize, rule: &[usize]) -> Vec<Vec<f64>> {
    rule.iter()
        .map(|&c| {
            let mut row = vec![0.0; num_classes];
            row[c] = 1.0;
            row
        })
        .collect()
}

/// Flat-Dirichlet draw via normalized exponentials.
pub fn random_distribution<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    let draws: Vec<f64> = (0..len)
        .map(|_| rng.sample::<f64, _>(rand_distr::Exp1))
        .collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|d| d / total).collect()
}

/// A random world with up to `max_states` states, `max_attributes`
/// attributes of cardinality at most `max_cardinality`, and 2 to 4 classes.
pub fn random_world<R: Rng>(
    rng: &mut R,
    max_states: usize,
    max_attributes: usize,
    max_cardinality: usize,
) -> Result<WorldTables> {
    let k = rng.random_range(1..=max_attributes);
    let cards: Vec<usize> = (0..k)
        .map(|_| rng.random_range(2..=max_cardinality))
        .collect();
    let classes = rng.random_range(2..=4);
    let schema = AttributeSchema::with_cardinalities(&cards, classes)?;
    let states = rng.random_range(1..=max_states);
    let prior = random_distribution(rng, states);
    let attributes = (0..states)
        .map(|_| cards.iter().map(|&q| random_distribution(rng, q)).collect())
        .collect();
    let size: usize = cards.iter().product();
    let class_given_attributes = (0..size)
        .map(|_| {
            if rng.random_bool(0.5) {
                let mut row = vec![0.0; classes];
                row[rng.random_range(0..classes)] = 1.0;
                row
            } else {
                random_distribution(rng, classes)
            }
        })
        .collect();
    WorldTables::new(schema, prior, attributes, class_given_attributes)
}

/// Perturbed model for `world`: each `Pr(A_k | x)` is mixed with a random
/// distribution, and the circuit is compiled from a perturbed copy of the
/// true joint in which some entries are dropped.
pub fn perturbed_model<R: Rng>(world: &WorldTables, rng: &mut R) -> Result<(Circuit, ModelTables)> {
    let attributes = world
        .attributes
        .iter()
        .map(|per_x| {
            per_x
                .iter()
                .map(|p| {
                    let lambda: f64 = rng.random();
                    let noise = random_distribution(rng, p.len());
                    p.iter()
                        .zip(noise)
                        .map(|(a, b)| (1.0 - lambda) * a + lambda * b)
                        .collect()
                })
                .collect()
        })
        .collect();
    let lambda: f64 = rng.random();
    let drop_rate: f64 = rng.random::<f64>() * 0.5;
    let all = assignments(&world.schema.attribute_cardinalities());
    let mut rules = Vec::new();
    for (a, row) in all.iter().zip(world.joint()) {
        for (y, p) in row.into_iter().enumerate() {
            let w = (1.0 - lambda) * p + lambda * rng.random::<f64>();
            if w > 0.0 && !rng.random_bool(drop_rate) {
                rules.push(Rule::new(a.clone(), y, w));
            }
        }
    }
    if rules.is_empty() {
        rules.push(Rule::new(all[0].clone(), 0, 1.0));
    }
    let circuit = compile_rules(&RuleSet::new(world.schema.clone(), rules)?)?;
    let tables = ModelTables::from_circuit(&circuit, attributes)?;
    Ok((circuit, tables))
}
