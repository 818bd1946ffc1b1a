//! Samples with probabilistic attribute targets, and their sampled
//! (hard-valued) counterpart used for circuit construction.

use alloc::format;
use alloc::vec::Vec;

use crate::schema::AttributeSchema;
use crate::{Error, Result};

/// Tolerance on `Σ_j g_k^j(x) = 1`.
pub const TARGET_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub features: Vec<f64>,
    pub class_label: usize,
    /// One probability vector `g_k(x)` per attribute.
    pub attribute_targets: Vec<Vec<f64>>,
}

impl Sample {
    /// Indices `{ j : g_k^j(x) > 0 }` for attribute `k`.
    pub fn support(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        self.attribute_targets[k]
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(j, _)| j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub schema: AttributeSchema,
    pub feature_dim: usize,
    pub samples: Vec<Sample>,
    pub split: Split,
}

impl Dataset {
    /// Checks every sample against the schema and the feature dimension.
    pub fn new(
        schema: AttributeSchema,
        feature_dim: usize,
        samples: Vec<Sample>,
        split: Split,
    ) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            check_sample(&schema, feature_dim, s).map_err(|e| match e {
                Error::SchemaMismatch(m) => Error::SchemaMismatch(format!("sample {i}: {m}")),
                other => other,
            })?;
        }
        Ok(Self {
            schema,
            feature_dim,
            samples,
            split,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

fn check_sample(schema: &AttributeSchema, feature_dim: usize, s: &Sample) -> Result<()> {
    if s.features.len() != feature_dim {
        return Err(Error::DimensionMismatch {
            expected: feature_dim,
            found: s.features.len(),
        });
    }
    if s.features.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sample features"));
    }
    if s.class_label >= schema.num_classes() {
        return Err(Error::SchemaMismatch(format!(
            "class label {} out of range",
            s.class_label
        )));
    }
    if s.attribute_targets.len() != schema.num_attributes() {
        return Err(Error::SchemaMismatch(format!(
            "{} attribute targets for {} attributes",
            s.attribute_targets.len(),
            schema.num_attributes()
        )));
    }
    for (k, g) in s.attribute_targets.iter().enumerate() {
        if g.len() != schema.attribute_cardinality(k) {
            return Err(Error::SchemaMismatch(format!(
                "target for {} has length {}, expected {}",
                schema.attribute_names()[k],
                g.len(),
                schema.attribute_cardinality(k)
            )));
        }
        let total: f64 = g.iter().sum();
        if g.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > TARGET_TOLERANCE {
            return Err(Error::SchemaMismatch(format!(
                "target for {} is not a probability vector",
                schema.attribute_names()[k]
            )));
        }
    }
    Ok(())
}

/// One row of `D̄`: concrete attribute values and the class.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SampledRow {
    pub attributes: Vec<usize>,
    pub class: usize,
}

impl SampledRow {
    pub fn new(attributes: Vec<usize>, class: usize) -> Self {
        Self { attributes, class }
    }

    /// Values for all circuit variables, class last.
    pub fn values(&self) -> Vec<usize> {
        let mut v = self.attributes.clone();
        v.push(self.class);
        v
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledDataset {
    pub schema: AttributeSchema,
    pub rows: Vec<SampledRow>,
    /// Source features, row-aligned, when the rows were drawn from a [`Dataset`].
    pub features: Option<Vec<Vec<f64>>>,
}

impl SampledDataset {
    pub fn new(schema: AttributeSchema, rows: Vec<SampledRow>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            let bad = r.attributes.len() != schema.num_attributes()
                || r.class >= schema.num_classes()
                || r.attributes
                    .iter()
                    .enumerate()
                    .any(|(k, &a)| a >= schema.attribute_cardinality(k));
            if bad {
                return Err(Error::SchemaMismatch(format!(
                    "row {i} lies outside the schema"
                )));
            }
        }
        Ok(Self {
            schema,
            rows,
            features: None,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Rows as full variable assignments (class last).
    pub fn assignments(&self) -> Vec<Vec<usize>> {
        self.rows.iter().map(SampledRow::values).collect()
    }
}
