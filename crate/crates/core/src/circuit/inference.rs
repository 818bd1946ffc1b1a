use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{Circuit, EdgeId, Node};
use crate::math::{exp, ln, log_add_exp};
use crate::schema::VariableId;
use crate::{Error, Result};

/// Evidence for every schema variable: `Some(value)` observes the variable,
/// `None` marginalizes it (all of its indicators evaluate to one).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LeafAssignment(Vec<Option<usize>>);

impl LeafAssignment {
    /// Every variable marginalized.
    pub fn marginal(num_vars: usize) -> Self {
        Self(vec![None; num_vars])
    }

    /// Every variable observed.
    pub fn observed(values: &[usize]) -> Self {
        Self(values.iter().map(|&v| Some(v)).collect())
    }

    pub fn from_entries(entries: Vec<Option<usize>>) -> Self {
        Self(entries)
    }

    pub fn set(&mut self, var: VariableId, value: Option<usize>) {
        self.0[var.0] = value;
    }

    pub fn with(mut self, var: VariableId, value: Option<usize>) -> Self {
        self.set(var, value);
        self
    }

    pub fn get(&self, var: VariableId) -> Option<usize> {
        self.0[var.0]
    }

    pub fn entries(&self) -> &[Option<usize>] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Reusable buffers for forward and backward passes.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    values: Vec<f64>,
    adjoints: Vec<f64>,
    prefix: Vec<f64>,
}

impl Workspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// `∂ log f / ∂ w_d` for every sum edge, in the circuit's flat edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGradients {
    edges: Vec<EdgeId>,
    values: Vec<f64>,
}

impl WeightGradients {
    pub fn get(&self, edge: EdgeId) -> Option<f64> {
        self.edges.binary_search(&edge).ok().map(|i| self.values[i])
    }

    pub fn edges(&self) -> &[EdgeId] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (EdgeId, f64)> + '_ {
        self.edges.iter().copied().zip(self.values.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

impl Circuit {
    fn check_assignment(&self, assignment: &[Option<usize>]) -> Result<()> {
        let schema = &self.schema;
        if assignment.len() != schema.num_variables() {
            return Err(Error::SchemaMismatch(format!(
                "assignment has {} entries, schema has {} variables",
                assignment.len(),
                schema.num_variables()
            )));
        }
        for (v, entry) in assignment.iter().enumerate() {
            if let Some(x) = entry {
                let card = schema.cardinality(VariableId(v));
                if *x >= card {
                    return Err(Error::SchemaMismatch(format!(
                        "value {x} of variable {} exceeds cardinality {card}",
                        schema.variable_name(VariableId(v))
                    )));
                }
            }
        }
        Ok(())
    }

    /// Bottom-up pass filling `values` with every node's log-value. Returns
    /// the root log-value. The assignment must already be checked.
    pub(crate) fn forward_log(&self, assignment: &[Option<usize>], values: &mut Vec<f64>) -> f64 {
        values.clear();
        values.reserve(self.nodes.len());
        for node in &self.nodes {
            let v = match node {
                Node::Leaf { var, value } => match assignment[var.0] {
                    Some(x) if x != *value => f64::NEG_INFINITY,
                    _ => 0.0,
                },
                Node::Product { children } => {
                    let mut acc = 0.0;
                    for c in children {
                        acc += values[c.0];
                        if acc == f64::NEG_INFINITY {
                            break;
                        }
                    }
                    acc
                }
                Node::Sum { children, weights } => {
                    let mut max = f64::NEG_INFINITY;
                    for (c, &w) in children.iter().zip(weights) {
                        max = max.max(values[c.0] + ln(w));
                    }
                    if max == f64::NEG_INFINITY {
                        f64::NEG_INFINITY
                    } else {
                        let mut s = 0.0;
                        for (c, &w) in children.iter().zip(weights) {
                            s += exp(values[c.0] + ln(w) - max);
                        }
                        max + ln(s)
                    }
                }
            };
            values.push(v);
        }
        *values.last().unwrap()
    }

    /// `ln f_S(assignment)`.
    pub fn log_evaluate(&self, assignment: &LeafAssignment) -> Result<f64> {
        self.check_assignment(assignment.entries())?;
        let mut values = Vec::new();
        Ok(self.forward_log(assignment.entries(), &mut values))
    }

    /// `f_S(assignment)`: the joint probability when every variable is
    /// observed, the corresponding marginal otherwise.
    pub fn evaluate(&self, assignment: &LeafAssignment) -> Result<f64> {
        self.log_evaluate(assignment).map(exp)
    }

    /// Same as [`Circuit::log_evaluate`] with caller-provided scratch space.
    pub fn log_evaluate_with(
        &self,
        assignment: &LeafAssignment,
        ws: &mut Workspace,
    ) -> Result<f64> {
        self.check_assignment(assignment.entries())?;
        Ok(self.forward_log(assignment.entries(), &mut ws.values))
    }

    /// `Pr(target | given)` from two forward passes.
    pub fn conditional(&self, target: (VariableId, usize), given: &LeafAssignment) -> Result<f64> {
        self.check_assignment(given.entries())?;
        let (var, value) = target;
        if var.0 >= self.schema.num_variables() {
            return Err(Error::SchemaMismatch(format!(
                "target variable {} outside the schema",
                var.0
            )));
        }
        if given.get(var).is_some() {
            return Err(Error::SchemaMismatch(format!(
                "target variable {} is observed in the evidence",
                self.schema.variable_name(var)
            )));
        }
        let joint = given.clone().with(var, Some(value));
        self.check_assignment(joint.entries())?;
        let mut values = Vec::new();
        let log_den = self.forward_log(given.entries(), &mut values);
        if log_den == f64::NEG_INFINITY {
            return Err(Error::UndefinedConditional {
                evidence: given.entries().to_vec(),
            });
        }
        let log_num = self.forward_log(joint.entries(), &mut values);
        Ok(exp(log_num - log_den))
    }

    /// `∂ ln f_S(assignment) / ∂ w_d` for every sum edge `d`.
    pub fn weight_gradients(&self, assignment: &LeafAssignment) -> Result<WeightGradients> {
        self.check_assignment(assignment.entries())?;
        let mut ws = Workspace::new();
        let mut values = vec![0.0; self.num_edges];
        let log_f = self.log_gradient_into(assignment.entries(), &mut ws, &mut values);
        if log_f == f64::NEG_INFINITY {
            return Err(Error::GradientUndefined);
        }
        Ok(WeightGradients {
            edges: self.edges(),
            values,
        })
    }

    /// Forward and backward pass writing `∂ ln f / ∂ w_d` into `out` (flat
    /// edge order). Returns `ln f`; when it is `-inf` the contents of `out`
    /// are zero and meaningless. The assignment must already be checked.
    pub(crate) fn log_gradient_into(
        &self,
        assignment: &[Option<usize>],
        ws: &mut Workspace,
        out: &mut [f64],
    ) -> f64 {
        let log_f = self.forward_log(assignment, &mut ws.values);
        out.fill(0.0);
        if log_f == f64::NEG_INFINITY {
            return log_f;
        }
        let values = &ws.values;
        let adj = &mut ws.adjoints;
        adj.clear();
        adj.resize(self.nodes.len(), f64::NEG_INFINITY);
        let root = self.nodes.len() - 1;
        adj[root] = 0.0;
        for i in (0..self.nodes.len()).rev() {
            let a = adj[i];
            if a == f64::NEG_INFINITY {
                continue;
            }
            match &self.nodes[i] {
                Node::Leaf { .. } => {}
                Node::Sum { children, weights } => {
                    let offset = self.edge_offsets[i];
                    for (slot, (c, &w)) in children.iter().zip(weights).enumerate() {
                        adj[c.0] = log_add_exp(adj[c.0], a + ln(w));
                        let g = a + values[c.0] - log_f;
                        out[offset + slot] = exp(g);
                    }
                }
                Node::Product { children } => {
                    // Product of the siblings of each child via prefix/suffix sums
                    // in log space; exact even when a sibling evaluates to zero.
                    let prefix = &mut ws.prefix;
                    prefix.clear();
                    let mut acc = 0.0;
                    for c in children {
                        prefix.push(acc);
                        acc += values[c.0];
                    }
                    let mut suffix = 0.0;
                    for (j, c) in children.iter().enumerate().rev() {
                        let others = prefix[j] + suffix;
                        if others != f64::NEG_INFINITY {
                            adj[c.0] = log_add_exp(adj[c.0], a + others);
                        }
                        suffix += values[c.0];
                    }
                }
            }
        }
        log_f
    }

    /// Log-values of every node under `assignment`; index with [`NodeId`].
    pub fn node_log_values(&self, assignment: &LeafAssignment) -> Result<Vec<f64>> {
        self.check_assignment(assignment.entries())?;
        let mut values = Vec::new();
        self.forward_log(assignment.entries(), &mut values);
        Ok(values)
    }

    /// Probability of the fully marginalized evidence; 1 for normalized circuits.
    pub fn partition(&self) -> f64 {
        let mut values = Vec::new();
        exp(self.forward_log(&vec![None; self.schema.num_variables()], &mut values))
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::three_rule;
    use super::super::CircuitBuilder;
    use super::*;
    use crate::schema::AttributeSchema;

    #[test]
    fn three_rule_joint_is_rule_weight() {
        let w = [0.2, 0.3, 0.5];
        let c = three_rule(w);
        let p = c.evaluate(&LeafAssignment::observed(&[0, 0, 0])).unwrap();
        assert!((p - 0.2).abs() < 1e-15);
        let p = c.evaluate(&LeafAssignment::observed(&[0, 1, 1])).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert_eq!(
            c.evaluate(&LeafAssignment::observed(&[1, 0, 1])).unwrap(),
            0.0
        );
        assert!((c.evaluate(&LeafAssignment::marginal(3)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn three_rule_conditionals() {
        let c = three_rule([1.0 / 3.0; 3]);
        let given = LeafAssignment::from_entries(vec![Some(0), Some(1), None]);
        let p = c.conditional((VariableId(2), 1), &given).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let empty = LeafAssignment::marginal(3);
        let p = c.conditional((VariableId(2), 1), &empty).unwrap();
        assert!((p - 2.0 / 3.0).abs() < 1e-12);
        let impossible = LeafAssignment::from_entries(vec![Some(1), Some(0), None]);
        assert!(matches!(
            c.conditional((VariableId(2), 0), &impossible),
            Err(Error::UndefinedConditional { .. })
        ));
    }

    #[test]
    fn schema_mismatch_is_reported() {
        let c = three_rule([1.0 / 3.0; 3]);
        assert!(matches!(
            c.evaluate(&LeafAssignment::observed(&[0, 0])),
            Err(Error::SchemaMismatch(_))
        ));
        assert!(matches!(
            c.evaluate(&LeafAssignment::observed(&[0, 0, 7])),
            Err(Error::SchemaMismatch(_))
        ));
    }

    #[test]
    fn single_sum_gradient_by_hand() {
        let schema = AttributeSchema::with_cardinalities(&[2], 2).unwrap();
        let mut b = CircuitBuilder::new(schema);
        let a = b.categorical(VariableId(0), vec![0.3, 0.7]);
        let y = b.categorical(VariableId(1), vec![0.5, 0.5]);
        let root = b.product(vec![a, y]);
        let c = b.build(root).unwrap();
        let g = c
            .weight_gradients(&LeafAssignment::from_entries(vec![Some(0), None]))
            .unwrap();
        assert_eq!(g.len(), 4);
        let edges = c.edges();
        assert!((g.get(edges[0]).unwrap() - 1.0 / 0.3).abs() < 1e-12);
        assert_eq!(g.get(edges[1]).unwrap(), 0.0);
        // marginalized Y: d ln f / d w_y = 1 / (w_y0 + w_y1) = 1
        assert!((g.get(edges[2]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_output_gradient_errors() {
        let c = three_rule([1.0 / 3.0; 3]);
        assert_eq!(
            c.weight_gradients(&LeafAssignment::observed(&[1, 0, 0])),
            Err(Error::GradientUndefined)
        );
    }
}
