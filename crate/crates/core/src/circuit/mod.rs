//! Smooth, decomposable probabilistic circuits over categorical variables.
//!
//! A [`Circuit`] is a rooted DAG of indicator leaves, weighted sum nodes and
//! product nodes. Nodes are kept in topological order (children strictly
//! before parents, root last) so every bottom-up pass is a single sweep over
//! the node array and every top-down pass is the reverse sweep.
//!
//! All inference runs in log space. Sum nodes combine children with
//! log-sum-exp, products add child log-values, and a marginalized leaf
//! evaluates to `ln 1 = 0`. Zero probability is `-inf` and propagates through
//! products without producing NaN.
//!
//! The canonical form is *locally normalized*: every sum node's weights are
//! strictly positive and sum to one, which makes the root output a normalized
//! joint distribution. [`Circuit::validate`] reports any departure from that
//! form together with smoothness and decomposability violations.

mod inference;
mod random;
mod scope;
mod validate;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::schema::{AttributeSchema, VariableId};
use crate::{Error, Result};

pub use inference::{LeafAssignment, WeightGradients, Workspace};
pub use random::random_circuit;
pub use scope::Scope;
pub use validate::{ValidationReport, Violation};

/// Absolute tolerance for local normalization of sum weights.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// Smallest weight kept after any projection or renormalization.
pub const DEFAULT_WEIGHT_FLOOR: f64 = 1e-12;

/// Position of a node in a circuit's topological order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub usize);

/// A sum edge: the `slot`-th child of sum node `node`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeId {
    pub node: NodeId,
    pub slot: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    /// Indicator `I(var = value)`.
    Leaf {
        var: VariableId,
        value: usize,
    },
    Sum {
        children: Vec<NodeId>,
        weights: Vec<f64>,
    },
    Product {
        children: Vec<NodeId>,
    },
}

impl Node {
    pub fn children(&self) -> &[NodeId] {
        match self {
            Node::Leaf { .. } => &[],
            Node::Sum { children, .. } | Node::Product { children } => children,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    schema: AttributeSchema,
    nodes: Vec<Node>,
    scopes: Vec<Scope>,
    /// Offset of each node's first sum edge in the flat edge numbering.
    edge_offsets: Vec<usize>,
    num_edges: usize,
}

impl Circuit {
    /// Builds a circuit from nodes whose child references index into `nodes`.
    ///
    /// The input order is arbitrary. Nodes unreachable from `root` are
    /// dropped; if the reachable nodes already list children before parents
    /// their relative order is kept, otherwise a depth-first post-order is
    /// used. Fails on dangling children, cycles, arity mismatches and leaves
    /// over variables outside the schema. Semantic properties (smoothness,
    /// normalization, ...) are left to [`Circuit::validate`].
    pub fn from_nodes(schema: AttributeSchema, nodes: Vec<Node>, root: NodeId) -> Result<Self> {
        let n = nodes.len();
        if root.0 >= n {
            return Err(Error::InvalidCircuit(format!(
                "root {} does not exist",
                root.0
            )));
        }
        for (i, node) in nodes.iter().enumerate() {
            match node {
                Node::Leaf { var, .. } => {
                    if var.0 >= schema.num_variables() {
                        return Err(Error::InvalidCircuit(format!(
                            "leaf {i} refers to variable {} outside the schema",
                            var.0
                        )));
                    }
                }
                Node::Sum { children, weights } => {
                    if children.len() != weights.len() {
                        return Err(Error::InvalidCircuit(format!(
                            "sum node {i} has {} children but {} weights",
                            children.len(),
                            weights.len()
                        )));
                    }
                }
                Node::Product { .. } => {}
            }
            if let Node::Sum { children, .. } | Node::Product { children } = node {
                if children.is_empty() {
                    return Err(Error::InvalidCircuit(format!(
                        "internal node {i} has no children"
                    )));
                }
                if let Some(c) = children.iter().find(|c| c.0 >= n) {
                    return Err(Error::InvalidCircuit(format!(
                        "node {i} references missing child {}",
                        c.0
                    )));
                }
            }
        }

        // Iterative DFS from the root: cycle detection and post-order.
        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color = vec![WHITE; n];
        let mut post = Vec::with_capacity(n);
        let mut stack: Vec<(usize, usize)> = vec![(root.0, 0)];
        color[root.0] = GREY;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let children = nodes[node].children();
            if *next < children.len() {
                let c = children[*next].0;
                *next += 1;
                match color[c] {
                    WHITE => {
                        color[c] = GREY;
                        stack.push((c, 0));
                    }
                    GREY => return Err(Error::CycleDetected(c)),
                    _ => {}
                }
            } else {
                color[node] = BLACK;
                post.push(node);
                stack.pop();
            }
        }

        let in_order: Vec<usize> = (0..n).filter(|&i| color[i] == BLACK).collect();
        let keeps_order = in_order
            .iter()
            .all(|&i| nodes[i].children().iter().all(|c| c.0 < i))
            && *in_order.last().unwrap() == root.0;
        let order = if keeps_order { in_order } else { post };

        let mut remap = vec![usize::MAX; n];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let mut nodes = nodes;
        let ordered = order
            .iter()
            .map(|&old| {
                let mut node = core::mem::replace(
                    &mut nodes[old],
                    Node::Product {
                        children: Vec::new(),
                    },
                );
                if let Node::Sum { children, .. } | Node::Product { children } = &mut node {
                    for c in children.iter_mut() {
                        *c = NodeId(remap[c.0]);
                    }
                }
                node
            })
            .collect();
        Ok(Self::from_sorted(schema, ordered))
    }

    /// Nodes must already be topologically sorted with the root last.
    fn from_sorted(schema: AttributeSchema, nodes: Vec<Node>) -> Self {
        let num_vars = schema.num_variables();
        let mut scopes: Vec<Scope> = Vec::with_capacity(nodes.len());
        let mut edge_offsets = Vec::with_capacity(nodes.len());
        let mut num_edges = 0;
        for node in &nodes {
            edge_offsets.push(num_edges);
            let scope = match node {
                Node::Leaf { var, .. } => Scope::singleton(num_vars, var.0),
                Node::Sum { children, .. } | Node::Product { children } => {
                    let mut s = Scope::empty(num_vars);
                    for c in children {
                        s.union_with(&scopes[c.0]);
                    }
                    s
                }
            };
            if let Node::Sum { children, .. } = node {
                num_edges += children.len();
            }
            scopes.push(scope);
        }
        Self {
            schema,
            nodes,
            scopes,
            edge_offsets,
            num_edges,
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        NodeId(self.nodes.len() - 1)
    }

    pub fn scope(&self, id: NodeId) -> &Scope {
        &self.scopes[id.0]
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// All sum edges in flat order: sum nodes in topological order, slots in
    /// child order.
    pub fn edges(&self) -> Vec<EdgeId> {
        let mut out = Vec::with_capacity(self.num_edges);
        for (i, node) in self.nodes.iter().enumerate() {
            if let Node::Sum { children, .. } = node {
                out.extend((0..children.len()).map(|slot| EdgeId {
                    node: NodeId(i),
                    slot,
                }));
            }
        }
        out
    }

    pub fn edge_index(&self, edge: EdgeId) -> usize {
        self.edge_offsets[edge.node.0] + edge.slot
    }

    pub fn weight(&self, edge: EdgeId) -> f64 {
        match &self.nodes[edge.node.0] {
            Node::Sum { weights, .. } => weights[edge.slot],
            _ => panic!("node {} is not a sum node", edge.node.0),
        }
    }

    /// Overwrites one edge weight. No normalization is applied.
    pub fn set_weight(&mut self, edge: EdgeId, w: f64) {
        match &mut self.nodes[edge.node.0] {
            Node::Sum { weights, .. } => weights[edge.slot] = w,
            _ => panic!("node {} is not a sum node", edge.node.0),
        }
    }

    /// Weights of every sum edge in flat edge order.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_edges);
        for node in &self.nodes {
            if let Node::Sum { weights, .. } = node {
                out.extend_from_slice(weights);
            }
        }
        out
    }

    /// Replaces all sum weights from a flat slice in edge order.
    pub fn set_weights(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_edges {
            return Err(Error::DimensionMismatch {
                expected: self.num_edges,
                found: flat.len(),
            });
        }
        let mut at = 0;
        for node in &mut self.nodes {
            if let Node::Sum { weights, .. } = node {
                let n = weights.len();
                weights.copy_from_slice(&flat[at..at + n]);
                at += n;
            }
        }
        Ok(())
    }

    /// Mutable access to each sum node's weight vector, in topological order.
    pub fn sum_weights_mut(&mut self) -> impl Iterator<Item = &mut Vec<f64>> {
        self.nodes.iter_mut().filter_map(|n| match n {
            Node::Sum { weights, .. } => Some(weights),
            _ => None,
        })
    }

    pub fn sum_weights(&self) -> impl Iterator<Item = &Vec<f64>> {
        self.nodes.iter().filter_map(|n| match n {
            Node::Sum { weights, .. } => Some(weights),
            _ => None,
        })
    }

    /// Same structure, possibly different weights.
    pub fn same_structure(&self, other: &Circuit) -> bool {
        self.schema == other.schema
            && self.nodes.len() == other.nodes.len()
            && self
                .nodes
                .iter()
                .zip(&other.nodes)
                .all(|(a, b)| match (a, b) {
                    (Node::Leaf { var: v1, value: x1 }, Node::Leaf { var: v2, value: x2 }) => {
                        v1 == v2 && x1 == x2
                    }
                    (Node::Sum { children: c1, .. }, Node::Sum { children: c2, .. }) => c1 == c2,
                    (Node::Product { children: c1 }, Node::Product { children: c2 }) => c1 == c2,
                    _ => false,
                })
    }
}

/// Rescales `weights` so they sum to one with every entry at least `floor`:
/// `w_i = floor + (1 - n·floor) · (v_i - floor) / Σ_j (v_j - floor)` with
/// `v = max(w, floor)`. Uniform when every entry sits at the floor.
pub fn renormalize_with_floor(weights: &mut [f64], floor: f64) {
    let n = weights.len() as f64;
    let mut excess = 0.0;
    for w in weights.iter_mut() {
        *w = if w.is_nan() { floor } else { w.max(floor) };
        excess += *w - floor;
    }
    let free = 1.0 - n * floor;
    if excess > 0.0 && excess.is_finite() {
        for w in weights.iter_mut() {
            *w = floor + free * ((*w - floor) / excess);
        }
    } else {
        weights.fill(1.0 / n);
    }
}

/// Appends nodes in topological order, sharing indicator leaves.
#[derive(Debug, Clone)]
pub struct CircuitBuilder {
    schema: AttributeSchema,
    nodes: Vec<Node>,
    leaves: BTreeMap<(usize, usize), NodeId>,
}

impl CircuitBuilder {
    pub fn new(schema: AttributeSchema) -> Self {
        Self {
            schema,
            nodes: Vec::new(),
            leaves: BTreeMap::new(),
        }
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// The indicator `I(var = value)`, created on first use.
    pub fn leaf(&mut self, var: VariableId, value: usize) -> NodeId {
        if let Some(&id) = self.leaves.get(&(var.0, value)) {
            return id;
        }
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node::Leaf { var, value });
        self.leaves.insert((var.0, value), id);
        id
    }

    pub fn sum(&mut self, children: Vec<NodeId>, weights: Vec<f64>) -> NodeId {
        debug_assert_eq!(children.len(), weights.len());
        self.push(Node::Sum { children, weights })
    }

    pub fn product(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(Node::Product { children })
    }

    /// A sum node over all indicators of `var` with the given weights.
    pub fn categorical(&mut self, var: VariableId, weights: Vec<f64>) -> NodeId {
        let children = (0..weights.len()).map(|v| self.leaf(var, v)).collect();
        self.sum(children, weights)
    }

    fn push(&mut self, node: Node) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(node);
        id
    }

    pub fn build(self, root: NodeId) -> Result<Circuit> {
        Circuit::from_nodes(self.schema, self.nodes, root)
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// The three-rule circuit over binary `A1`, `A2`, `Y`:
    /// `w1·(0,0→0) + w2·(1,1→1) + w3·(0,1→1)`.
    pub fn three_rule(w: [f64; 3]) -> Circuit {
        let schema = AttributeSchema::with_cardinalities(&[2, 2], 2).unwrap();
        let mut b = CircuitBuilder::new(schema);
        let rules = [[0, 0, 0], [1, 1, 1], [0, 1, 1]];
        let products: Vec<NodeId> = rules
            .iter()
            .map(|r| {
                let leaves = (0..3).map(|v| b.leaf(VariableId(v), r[v])).collect();
                b.product(leaves)
            })
            .collect();
        let root = b.sum(products, w.to_vec());
        b.build(root).unwrap()
    }
}
