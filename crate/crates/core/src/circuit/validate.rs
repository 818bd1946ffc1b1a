use alloc::vec::Vec;

use super::{Circuit, Node, NodeId, Scope, NORMALIZATION_TOLERANCE};
use crate::schema::VariableId;

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Children of a sum node have different scopes.
    NotSmooth { node: NodeId },
    /// Two children of a product node share a variable.
    NotDecomposable {
        node: NodeId,
        shared: Vec<VariableId>,
    },
    /// Sum weights do not add up to one.
    NotNormalized { node: NodeId, total: f64 },
    NonPositiveWeight {
        node: NodeId,
        slot: usize,
        weight: f64,
    },
    /// A leaf indicator names a value outside its variable's cardinality.
    LeafValueOutOfRange {
        node: NodeId,
        var: VariableId,
        value: usize,
    },
    /// The root does not cover every schema variable.
    IncompleteRootScope { missing: Vec<VariableId> },
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl Circuit {
    /// Checks smoothness, decomposability, local normalization, weight
    /// positivity and scope consistency. Violations are collected, never
    /// raised.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let num_vars = self.schema.num_variables();
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            match node {
                Node::Leaf { var, value } => {
                    if *value >= self.schema.cardinality(*var) {
                        violations.push(Violation::LeafValueOutOfRange {
                            node: id,
                            var: *var,
                            value: *value,
                        });
                    }
                }
                Node::Sum { children, weights } => {
                    let first = &self.scopes[children[0].0];
                    if children.iter().any(|c| &self.scopes[c.0] != first) {
                        violations.push(Violation::NotSmooth { node: id });
                    }
                    for (slot, &w) in weights.iter().enumerate() {
                        if !(w > 0.0) || !w.is_finite() {
                            violations.push(Violation::NonPositiveWeight {
                                node: id,
                                slot,
                                weight: w,
                            });
                        }
                    }
                    let total: f64 = weights.iter().sum();
                    if !((total - 1.0).abs() <= NORMALIZATION_TOLERANCE) {
                        violations.push(Violation::NotNormalized { node: id, total });
                    }
                }
                Node::Product { children } => {
                    let mut seen = Scope::empty(num_vars);
                    let mut shared = Vec::new();
                    for c in children {
                        let s = &self.scopes[c.0];
                        if !seen.is_disjoint(s) {
                            shared.extend(s.iter().filter(|&v| seen.contains(v)).map(VariableId));
                        }
                        seen.union_with(s);
                    }
                    if !shared.is_empty() {
                        shared.sort();
                        shared.dedup();
                        violations.push(Violation::NotDecomposable { node: id, shared });
                    }
                }
            }
        }
        let root_scope = &self.scopes[self.nodes.len() - 1];
        let missing: Vec<VariableId> = (0..num_vars)
            .filter(|&v| !root_scope.contains(v))
            .map(VariableId)
            .collect();
        if !missing.is_empty() {
            violations.push(Violation::IncompleteRootScope { missing });
        }
        ValidationReport { violations }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::three_rule;
    use super::super::CircuitBuilder;
    use super::*;
    use crate::schema::AttributeSchema;
    use alloc::vec;

    #[test]
    fn three_rule_is_valid() {
        let report = three_rule([0.25, 0.25, 0.5]).validate();
        assert!(report.is_valid(), "{report:?}");
    }

    #[test]
    fn unnormalized_and_nonpositive_weights_reported() {
        let report = three_rule([0.5, 0.5, 0.5]).validate();
        assert!(matches!(
            report.violations[..],
            [Violation::NotNormalized { .. }]
        ));
        let report = three_rule([0.0, 0.5, 0.5]).validate();
        assert!(matches!(
            report.violations[..],
            [Violation::NonPositiveWeight { slot: 0, .. }]
        ));
    }

    #[test]
    fn smoothness_violation() {
        let schema = AttributeSchema::with_cardinalities(&[2, 2], 2).unwrap();
        let mut b = CircuitBuilder::new(schema);
        let a1 = b.leaf(VariableId(0), 0);
        let a2 = b.leaf(VariableId(1), 0);
        let s = b.sum(vec![a1, a2], vec![0.5, 0.5]);
        let y = b.leaf(VariableId(2), 0);
        let root = b.product(vec![s, y]);
        let report = b.build(root).unwrap().validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::NotSmooth { .. })));
    }

    #[test]
    fn decomposability_violation() {
        let schema = AttributeSchema::with_cardinalities(&[2], 2).unwrap();
        let mut b = CircuitBuilder::new(schema);
        let a0 = b.leaf(VariableId(0), 0);
        let a1 = b.leaf(VariableId(0), 1);
        let y = b.leaf(VariableId(1), 0);
        let root = b.product(vec![a0, a1, y]);
        let report = b.build(root).unwrap().validate();
        assert_eq!(
            report.violations,
            vec![Violation::NotDecomposable {
                node: NodeId(3),
                shared: vec![VariableId(0)]
            }]
        );
    }

    #[test]
    fn incomplete_root_scope_and_out_of_range_leaf() {
        let schema = AttributeSchema::with_cardinalities(&[2], 2).unwrap();
        let mut b = CircuitBuilder::new(schema);
        let a = b.leaf(VariableId(0), 5);
        let root = b.product(vec![a]);
        let report = b.build(root).unwrap().validate();
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::LeafValueOutOfRange { value: 5, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::IncompleteRootScope { .. })));
    }
}
