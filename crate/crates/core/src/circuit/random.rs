//! Random smooth, decomposable, locally normalized circuits.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Circuit, CircuitBuilder, NodeId};
use crate::bound::random_distribution;
use crate::schema::{AttributeSchema, VariableId};
use crate::Result;

/// Draws a valid circuit over every variable of `schema`.
///
/// Sum nodes get two or three children over the same scope, product nodes
/// split their scope into two or three random blocks, and below
/// `max_depth` the scope is fully factorized. When `sparse_leaves` is set,
/// single-variable distributions may omit some values, which gives
/// assignments of probability zero.
pub fn random_circuit<R: Rng>(
    rng: &mut R,
    schema: &AttributeSchema,
    max_depth: usize,
    sparse_leaves: bool,
) -> Result<Circuit> {
    let mut b = CircuitBuilder::new(schema.clone());
    let vars: Vec<usize> = (0..schema.num_variables()).collect();
    let root = grow(rng, &mut b, &vars, max_depth, sparse_leaves);
    b.build(root)
}

fn grow<R: Rng>(
    rng: &mut R,
    b: &mut CircuitBuilder,
    vars: &[usize],
    depth: usize,
    sparse: bool,
) -> NodeId {
    if vars.len() == 1 {
        return categorical(rng, b, vars[0], sparse);
    }
    if depth == 0 {
        let children = vars
            .iter()
            .map(|&v| categorical(rng, b, v, sparse))
            .collect();
        return b.product(children);
    }
    if rng.random_bool(0.5) {
        let n = rng.random_range(2..=3);
        let children = (0..n)
            .map(|_| split(rng, b, vars, depth - 1, sparse))
            .collect();
        let weights = random_distribution(rng, n);
        b.sum(children, weights)
    } else {
        split(rng, b, vars, depth - 1, sparse)
    }
}

fn split<R: Rng>(
    rng: &mut R,
    b: &mut CircuitBuilder,
    vars: &[usize],
    depth: usize,
    sparse: bool,
) -> NodeId {
    let mut shuffled = vars.to_vec();
    shuffled.shuffle(rng);
    let parts = rng.random_range(2..=3.min(vars.len()));
    let mut blocks: Vec<Vec<usize>> = (0..parts).map(|i| vec![shuffled[i]]).collect();
    for &v in &shuffled[parts..] {
        let i = rng.random_range(0..parts);
        blocks[i].push(v);
    }
    let children = blocks
        .iter()
        .map(|blk| grow(rng, b, blk, depth, sparse))
        .collect();
    b.product(children)
}

fn categorical<R: Rng>(rng: &mut R, b: &mut CircuitBuilder, var: usize, sparse: bool) -> NodeId {
    let q = b.schema().cardinality(VariableId(var));
    let mut values: Vec<usize> = (0..q).collect();
    if sparse && rng.random_bool(0.3) {
        values.shuffle(rng);
        values.truncate(rng.random_range(1..q.max(2)));
        values.sort_unstable();
    }
    let weights = random_distribution(rng, values.len());
    let children = values.iter().map(|&v| b.leaf(VariableId(var), v)).collect();
    b.sum(children, weights)
}
