//! Synthetic worlds with known generative tables.
//!
//! The latent input is the tuple of true attribute values, drawn uniformly.
//! Features are the concatenated one-hot encodings of the true values plus
//! gaussian noise, labels come from a deterministic class rule on the true
//! values, and the attribute targets `g_k` are the one-hot true value mixed
//! with the uniform distribution at weight `ε`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::bound::{assignments, rule_table, WorldTables};
use crate::construction::{Rule, RuleSet};
use crate::data::{Dataset, Sample, Split};
use crate::schema::AttributeSchema;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum GeneratorKind {
    /// Two digits in `0..10`, class = their sum (19 classes).
    MnistAdditionLike,
    /// Arbitrary cardinalities with a random or given class map.
    RuleWorld,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyntheticSpec {
    pub kind: GeneratorKind,
    /// Attribute cardinalities; ignored for the digit-sum world.
    pub cardinalities: Vec<usize>,
    /// Class count; ignored for the digit-sum world.
    pub num_classes: usize,
    /// Class per attribute assignment in lexicographic order. Drawn from
    /// the seed when absent; ignored for the digit-sum world.
    pub class_rule: Option<Vec<usize>>,
    /// Weight `ε` of the uniform component in every target.
    pub attribute_noise: f64,
    /// Standard deviation of the feature noise.
    pub feature_noise: f64,
    /// Total rows, split 8:1:1 into train, validation and test.
    pub rows: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            kind: GeneratorKind::MnistAdditionLike,
            cardinalities: vec![10, 10],
            num_classes: 19,
            class_rule: None,
            attribute_noise: 0.0,
            feature_noise: 0.1,
            rows: 10_000,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn mnist_addition(rows: usize, attribute_noise: f64, seed: u64) -> Self {
        Self {
            rows,
            attribute_noise,
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub schema: AttributeSchema,
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    /// Class of every attribute assignment, lexicographic order.
    pub class_rule: Vec<usize>,
    /// Exact tables: states are the attribute tuples.
    pub tables: WorldTables,
}

impl SyntheticData {
    /// One unit-weight rule per attribute assignment.
    pub fn rule_set(&self) -> Result<RuleSet> {
        class_rule_set(&self.schema, &self.class_rule)
    }

    /// Noise-free features of the latent state `x`, for table-based checks.
    pub fn state_features(&self, x: usize) -> Vec<f64> {
        let cards = self.schema.attribute_cardinalities();
        let a = &assignments(&cards)[x];
        one_hot_features(&cards, a)
    }
}

/// Rule set with one unit-weight rule `a => rule[a]` per assignment.
pub fn class_rule_set(schema: &AttributeSchema, rule: &[usize]) -> Result<RuleSet> {
    let all = assignments(&schema.attribute_cardinalities());
    if all.len() != rule.len() {
        return Err(Error::InvalidRules(format!(
            "class rule has {} entries for {} assignments",
            rule.len(),
            all.len()
        )));
    }
    RuleSet::new(
        schema.clone(),
        all.into_iter()
            .zip(rule)
            .map(|(a, &y)| Rule::new(a, y, 1.0))
            .collect(),
    )
}

fn one_hot_features(cards: &[usize], a: &[usize]) -> Vec<f64> {
    let mut f = vec![0.0; cards.iter().sum()];
    let mut offset = 0;
    for (&q, &v) in cards.iter().zip(a) {
        f[offset + v] = 1.0;
        offset += q;
    }
    f
}

fn digit_schema() -> Result<AttributeSchema> {
    let digits: Vec<String> = (0..10).map(|d| d.to_string()).collect();
    let sums: Vec<String> = (0..19).map(|d| d.to_string()).collect();
    AttributeSchema::new(
        vec!["first".into(), "second".into()],
        vec![digits.clone(), digits],
        "sum".into(),
        sums,
    )
}

/// Row counts for the 8:1:1 split.
pub fn split_sizes(rows: usize) -> (usize, usize, usize) {
    let train = rows * 8 / 10;
    let validation = rows / 10;
    (train, validation, rows - train - validation)
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    if !(0.0..1.0).contains(&spec.attribute_noise)
        || !(spec.feature_noise >= 0.0)
        || !spec.feature_noise.is_finite()
    {
        return Err(Error::InvalidConfig(
            "attribute noise must lie in [0, 1) and feature noise be finite and >= 0".into(),
        ));
    }
    if spec.rows < 10 {
        return Err(Error::InvalidConfig(
            "at least 10 rows are needed for an 8:1:1 split".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (schema, class_rule) = match spec.kind {
        GeneratorKind::MnistAdditionLike => {
            let schema = digit_schema()?;
            let rule = assignments(&[10, 10]).iter().map(|a| a[0] + a[1]).collect();
            (schema, rule)
        }
        GeneratorKind::RuleWorld => {
            let schema =
                AttributeSchema::with_cardinalities(&spec.cardinalities, spec.num_classes)?;
            let size: usize = spec.cardinalities.iter().product();
            let rule = match &spec.class_rule {
                Some(r) => {
                    if r.len() != size || r.iter().any(|&c| c >= spec.num_classes) {
                        return Err(Error::InvalidConfig(
                            "class rule does not match the schema".into(),
                        ));
                    }
                    r.clone()
                }
                None => (0..size)
                    .map(|_| rng.random_range(0..spec.num_classes))
                    .collect(),
            };
            (schema, rule)
        }
    };
    let cards = schema.attribute_cardinalities();
    let eps = spec.attribute_noise;
    let target = |q: usize, v: usize| -> Vec<f64> {
        (0..q)
            .map(|j| {
                if j == v {
                    1.0 - eps + eps / q as f64
                } else {
                    eps / q as f64
                }
            })
            .collect()
    };
    let noise =
        Normal::new(0.0, spec.feature_noise).map_err(|e| Error::InvalidConfig(format!("{e}")))?;
    let radix: Vec<usize> = {
        let mut r = vec![1usize; cards.len()];
        for k in (0..cards.len().saturating_sub(1)).rev() {
            r[k] = r[k + 1] * cards[k + 1];
        }
        r
    };
    let mut samples = Vec::with_capacity(spec.rows);
    for _ in 0..spec.rows {
        let a: Vec<usize> = cards.iter().map(|&q| rng.random_range(0..q)).collect();
        let mut features = one_hot_features(&cards, &a);
        if spec.feature_noise > 0.0 {
            for f in &mut features {
                *f += noise.sample(&mut rng);
            }
        }
        let index: usize = a.iter().zip(&radix).map(|(v, r)| v * r).sum();
        let attribute_targets = cards.iter().zip(&a).map(|(&q, &v)| target(q, v)).collect();
        samples.push(Sample {
            features,
            class_label: class_rule[index],
            attribute_targets,
        });
    }
    let (n_train, n_val, _) = split_sizes(spec.rows);
    let test_samples = samples.split_off(n_train + n_val);
    let val_samples = samples.split_off(n_train);
    let dim = cards.iter().sum();
    let train = Dataset::new(schema.clone(), dim, samples, Split::Train)?;
    let validation = Dataset::new(schema.clone(), dim, val_samples, Split::Validation)?;
    let test = Dataset::new(schema.clone(), dim, test_samples, Split::Test)?;

    let all = assignments(&cards);
    let prior = vec![1.0 / all.len() as f64; all.len()];
    let attributes = all
        .iter()
        .map(|a| cards.iter().zip(a).map(|(&q, &v)| target(q, v)).collect())
        .collect();
    let tables = WorldTables::new(
        schema.clone(),
        prior,
        attributes,
        rule_table(schema.num_classes(), &class_rule),
    )?;
    Ok(SyntheticData {
        schema,
        train,
        validation,
        test,
        class_rule,
        tables,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digit_world_shapes() {
        let d = generate_synthetic(&SyntheticSpec::mnist_addition(1000, 0.0, 4)).unwrap();
        assert_eq!(
            (d.train.len(), d.validation.len(), d.test.len()),
            (800, 100, 100)
        );
        assert_eq!(d.schema.num_classes(), 19);
        for s in &d.train.samples {
            let a: Vec<usize> = s
                .attribute_targets
                .iter()
                .map(|g| g.iter().position(|&p| p == 1.0).unwrap())
                .collect();
            assert_eq!(s.class_label, a[0] + a[1]);
        }
        assert_eq!(
            d,
            generate_synthetic(&SyntheticSpec::mnist_addition(1000, 0.0, 4)).unwrap()
        );
        assert_eq!(split_sizes(10_000), (8000, 1000, 1000));
    }

    #[test]
    fn rejects_bad_noise() {
        assert!(generate_synthetic(&SyntheticSpec::mnist_addition(100, 1.0, 0)).is_err());
    }
}
