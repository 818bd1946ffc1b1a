//! The variable universe shared by every circuit and model: `K` categorical
//! attributes followed by the class variable.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Index of a circuit variable. `0..K` are the attributes, `K` is the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariableId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttributeSchema {
    attribute_names: Vec<String>,
    attribute_values: Vec<Vec<String>>,
    class_name: String,
    class_values: Vec<String>,
}

fn check_unique(what: &str, names: &[String]) -> Result<()> {
    for (i, a) in names.iter().enumerate() {
        if a.is_empty() || a.chars().any(char::is_whitespace) {
            return Err(Error::InvalidSchema(format!(
                "{what} name {a:?} must be non-empty and contain no whitespace"
            )));
        }
        if names[..i].contains(a) {
            return Err(Error::InvalidSchema(format!("duplicate {what} name {a:?}")));
        }
    }
    Ok(())
}

impl AttributeSchema {
    pub fn new(
        attribute_names: Vec<String>,
        attribute_values: Vec<Vec<String>>,
        class_name: String,
        class_values: Vec<String>,
    ) -> Result<Self> {
        if attribute_names.is_empty() {
            return Err(Error::InvalidSchema(
                "at least one attribute is required".into(),
            ));
        }
        if attribute_names.len() != attribute_values.len() {
            return Err(Error::InvalidSchema(format!(
                "{} attribute names but {} value lists",
                attribute_names.len(),
                attribute_values.len()
            )));
        }
        let mut all_names = attribute_names.clone();
        all_names.push(class_name.clone());
        check_unique("variable", &all_names)?;
        for (name, values) in attribute_names.iter().zip(&attribute_values) {
            if values.len() < 2 {
                return Err(Error::InvalidSchema(format!(
                    "attribute {name} needs at least two values"
                )));
            }
            check_unique("value", values)?;
        }
        if class_values.len() < 2 {
            return Err(Error::InvalidSchema(
                "the class needs at least two values".into(),
            ));
        }
        check_unique("class value", &class_values)?;
        Ok(Self {
            attribute_names,
            attribute_values,
            class_name,
            class_values,
        })
    }

    /// Schema with generated names: attributes `A1..AK` with values `0..q_k-1`,
    /// class `Y` with values `0..classes-1`.
    pub fn with_cardinalities(cardinalities: &[usize], classes: usize) -> Result<Self> {
        let names = (1..=cardinalities.len()).map(|k| format!("A{k}")).collect();
        let values = cardinalities
            .iter()
            .map(|&q| (0..q).map(|v| format!("{v}")).collect())
            .collect();
        let class_values = (0..classes).map(|v| format!("{v}")).collect();
        Self::new(names, values, "Y".into(), class_values)
    }

    /// Number of attributes `K`.
    pub fn num_attributes(&self) -> usize {
        self.attribute_names.len()
    }

    /// Number of circuit variables, `K + 1`.
    pub fn num_variables(&self) -> usize {
        self.attribute_names.len() + 1
    }

    pub fn class_variable(&self) -> VariableId {
        VariableId(self.num_attributes())
    }

    pub fn num_classes(&self) -> usize {
        self.class_values.len()
    }

    /// Cardinality `q_k` of attribute `k`.
    pub fn attribute_cardinality(&self, k: usize) -> usize {
        self.attribute_values[k].len()
    }

    pub fn attribute_cardinalities(&self) -> Vec<usize> {
        self.attribute_values.iter().map(Vec::len).collect()
    }

    /// Cardinality of any variable, the class included.
    pub fn cardinality(&self, var: VariableId) -> usize {
        if var.0 == self.num_attributes() {
            self.class_values.len()
        } else {
            self.attribute_values[var.0].len()
        }
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn attribute_values(&self, k: usize) -> &[String] {
        &self.attribute_values[k]
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn class_values(&self) -> &[String] {
        &self.class_values
    }

    pub fn variable_name(&self, var: VariableId) -> &str {
        if var.0 == self.num_attributes() {
            &self.class_name
        } else {
            &self.attribute_names[var.0]
        }
    }

    pub fn variable_values(&self, var: VariableId) -> &[String] {
        if var.0 == self.num_attributes() {
            &self.class_values
        } else {
            &self.attribute_values[var.0]
        }
    }

    pub fn value_index(&self, var: VariableId, name: &str) -> Option<usize> {
        self.variable_values(var).iter().position(|v| v == name)
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.attribute_names.iter().position(|v| v == name)
    }

    /// `Π_k q_k`, saturating.
    pub fn assignment_count(&self) -> u128 {
        self.attribute_values
            .iter()
            .fold(1u128, |acc, v| acc.saturating_mul(v.len() as u128))
    }
}
