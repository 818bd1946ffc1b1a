use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::circuit::{Circuit, CircuitBuilder};
use crate::data::SampledDataset;
use crate::schema::{AttributeSchema, VariableId};
use crate::{Error, Result};

/// `weight · (I(A_1 = a_1) ∧ … ∧ I(A_K = a_K) ∧ I(Y = y))`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub attribute_values: Vec<usize>,
    pub class_value: usize,
    pub weight: f64,
}

impl Rule {
    pub fn new(attribute_values: Vec<usize>, class_value: usize, weight: f64) -> Self {
        Self {
            attribute_values,
            class_value,
            weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleSet {
    schema: AttributeSchema,
    rules: Vec<Rule>,
}

impl RuleSet {
    /// Validates every rule against the schema. Rules with the same
    /// assignment tuple are merged by summing their weights; the merged rule
    /// keeps the position of the first occurrence.
    pub fn new(schema: AttributeSchema, rules: Vec<Rule>) -> Result<Self> {
        let mut merged: Vec<Rule> = Vec::with_capacity(rules.len());
        let mut index: BTreeMap<(Vec<usize>, usize), usize> = BTreeMap::new();
        for (l, rule) in rules.into_iter().enumerate() {
            if rule.attribute_values.len() != schema.num_attributes() {
                return Err(Error::InvalidRules(format!(
                    "rule {l} has {} attribute values, expected {}",
                    rule.attribute_values.len(),
                    schema.num_attributes()
                )));
            }
            for (k, &a) in rule.attribute_values.iter().enumerate() {
                if a >= schema.attribute_cardinality(k) {
                    return Err(Error::InvalidRules(format!(
                        "rule {l}: value {a} out of range for {}",
                        schema.attribute_names()[k]
                    )));
                }
            }
            if rule.class_value >= schema.num_classes() {
                return Err(Error::InvalidRules(format!(
                    "rule {l}: class {} out of range",
                    rule.class_value
                )));
            }
            if !(rule.weight >= 0.0) || !rule.weight.is_finite() {
                return Err(Error::InvalidRules(format!(
                    "rule {l}: weight {} is not a nonnegative number",
                    rule.weight
                )));
            }
            let key = (rule.attribute_values.clone(), rule.class_value);
            match index.get(&key) {
                Some(&at) => merged[at].weight += rule.weight,
                None => {
                    index.insert(key, merged.len());
                    merged.push(rule);
                }
            }
        }
        Ok(Self {
            schema,
            rules: merged,
        })
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.rules.iter().map(|r| r.weight).sum()
    }
}

/// Compiles rules into one root sum node over one product node per rule.
///
/// Each product joins the `K + 1` indicators named by its rule; its edge
/// weight is the rule weight over the total. Zero-weight rules contribute no
/// probability mass and are left out so every sum weight stays positive.
pub fn compile_rules(rules: &RuleSet) -> Result<Circuit> {
    if rules.is_empty() {
        return Err(Error::InvalidRules("rule set is empty".into()));
    }
    let total = rules.total_weight();
    if !(total > 0.0) {
        return Err(Error::InvalidRules("total rule weight is zero".into()));
    }
    let schema = rules.schema.clone();
    let class_var = schema.class_variable();
    let mut b = CircuitBuilder::new(schema);
    let mut products = Vec::with_capacity(rules.len());
    let mut weights = Vec::with_capacity(rules.len());
    for rule in rules.rules.iter().filter(|r| r.weight > 0.0) {
        let mut leaves: Vec<_> = rule
            .attribute_values
            .iter()
            .enumerate()
            .map(|(k, &a)| b.leaf(VariableId(k), a))
            .collect();
        leaves.push(b.leaf(class_var, rule.class_value));
        products.push(b.product(leaves));
        weights.push(rule.weight / total);
    }
    let root = b.sum(products, weights);
    b.build(root)
}

/// One rule per distinct `(a_{1:K}, y)` tuple weighted by its relative
/// frequency, in order of first occurrence.
pub fn rules_from_dataset(dataset: &SampledDataset) -> Result<RuleSet> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let n = dataset.len() as f64;
    let mut counts: BTreeMap<(&[usize], usize), usize> = BTreeMap::new();
    let mut order = Vec::new();
    for row in &dataset.rows {
        let key = (row.attributes.as_slice(), row.class);
        let c = counts.entry(key).or_insert(0);
        if *c == 0 {
            order.push(key);
        }
        *c += 1;
    }
    let rules = order
        .into_iter()
        .map(|key| Rule::new(key.0.to_vec(), key.1, counts[&key] as f64 / n))
        .collect();
    RuleSet::new(dataset.schema.clone(), rules)
}
