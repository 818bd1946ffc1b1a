//! Text serialization of circuits (`npc-circuit 1`).
//!
//! ```text
//! npc-circuit 1
//! attribute A1 0 1
//! attribute A2 0 1
//! class Y 0 1
//! nodes 10
//! 0 leaf A1 0
//! 6 product 0 2 4
//! 9 sum 6 7 8 ; 3.3333333333333331e-1 3.3333333333333331e-1 3.3333333333333331e-1
//! root 9
//! ```

use std::fmt::Write as _;
use std::path::Path;

use npc_core::circuit::{Circuit, Node, NodeId};
use npc_core::VariableId;

use super::{
    content_lines, expect_header, parse_f64, parse_usize, read_text, schema_lines, write_text,
    SchemaBuilder,
};
use crate::error::{CliError, CliResult, Context};

pub const MAGIC: &str = "npc-circuit";

/// Weights are written with 17 significant digits, which round-trips every
/// `f64` exactly.
pub fn to_text(circuit: &Circuit) -> String {
    let schema = circuit.schema();
    let mut out = format!("{MAGIC} 1\n");
    out.push_str(&schema_lines(schema));
    let _ = writeln!(out, "nodes {}", circuit.len());
    for (i, node) in circuit.nodes().iter().enumerate() {
        match node {
            Node::Leaf { var, value } => {
                let _ = writeln!(
                    out,
                    "{i} leaf {} {}",
                    schema.variable_name(*var),
                    schema.variable_values(*var)[*value]
                );
            }
            Node::Product { children } => {
                let _ = write!(out, "{i} product");
                for c in children {
                    let _ = write!(out, " {}", c.0);
                }
                out.push('\n');
            }
            Node::Sum { children, weights } => {
                let _ = write!(out, "{i} sum");
                for c in children {
                    let _ = write!(out, " {}", c.0);
                }
                out.push_str(" ;");
                for w in weights {
                    let _ = write!(out, " {w:.16e}");
                }
                out.push('\n');
            }
        }
    }
    let _ = writeln!(out, "root {}", circuit.root().0);
    out
}

/// Parses and validates. Structural problems in the text are parse errors;
/// a well-formed circuit that is not smooth, decomposable and normalized is
/// an invariant violation.
pub fn from_text(path: &Path, text: &str) -> CliResult<Circuit> {
    let mut lines = content_lines(text);
    expect_header(path, lines.next(), MAGIC)?;
    let mut schema = SchemaBuilder::default();
    let mut count: Option<(usize, usize)> = None;
    for (line, tokens) in lines.by_ref() {
        if schema.accept(path, line, &tokens)? {
            continue;
        }
        if tokens[0] != "nodes" || tokens.len() != 2 {
            return Err(CliError::parse(path, line, "expected `nodes <count>`"));
        }
        count = Some((line, parse_usize(path, line, tokens[1])?));
        break;
    }
    let Some((count_line, n)) = count else {
        return Err(CliError::parse(path, 1, "missing `nodes` line"));
    };
    let schema = schema.finish(path, count_line)?;
    let mut nodes: Vec<Option<Node>> = vec![None; n];
    let mut root = None;
    for (line, tokens) in lines {
        if tokens[0] == "root" {
            if tokens.len() != 2 || root.is_some() {
                return Err(CliError::parse(path, line, "expected a single `root <id>`"));
            }
            root = Some((line, parse_usize(path, line, tokens[1])?));
            continue;
        }
        if tokens.len() < 2 {
            return Err(CliError::parse(path, line, "expected `<id> <kind> ...`"));
        }
        let id = parse_usize(path, line, tokens[0])?;
        if id >= n {
            return Err(CliError::parse(
                path,
                line,
                format!("node id {id} out of range (nodes {n})"),
            ));
        }
        if nodes[id].is_some() {
            return Err(CliError::parse(
                path,
                line,
                format!("node {id} defined twice"),
            ));
        }
        let child = |s: &str| -> CliResult<NodeId> {
            let c = parse_usize(path, line, s)?;
            if c >= n {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("node {id}: child {c} does not exist"),
                ));
            }
            Ok(NodeId(c))
        };
        let node = match tokens[1] {
            "leaf" => {
                if tokens.len() != 4 {
                    return Err(CliError::parse(
                        path,
                        line,
                        format!("node {id}: expected `leaf <variable> <value>`"),
                    ));
                }
                let var = (0..schema.num_variables())
                    .map(VariableId)
                    .find(|v| schema.variable_name(*v) == tokens[2])
                    .ok_or_else(|| {
                        CliError::parse(
                            path,
                            line,
                            format!("node {id}: unknown variable {}", tokens[2]),
                        )
                    })?;
                let value = schema.value_index(var, tokens[3]).ok_or_else(|| {
                    CliError::parse(
                        path,
                        line,
                        format!("node {id}: unknown value {}", tokens[3]),
                    )
                })?;
                Node::Leaf { var, value }
            }
            "product" => Node::Product {
                children: tokens[2..]
                    .iter()
                    .map(|s| child(s))
                    .collect::<CliResult<_>>()?,
            },
            "sum" => {
                let Some(split) = tokens.iter().position(|&t| t == ";") else {
                    return Err(CliError::parse(
                        path,
                        line,
                        format!("node {id}: sum needs `;` before its weights"),
                    ));
                };
                let children: Vec<NodeId> = tokens[2..split]
                    .iter()
                    .map(|s| child(s))
                    .collect::<CliResult<_>>()?;
                let weights: Vec<f64> = tokens[split + 1..]
                    .iter()
                    .map(|s| parse_f64(path, line, s))
                    .collect::<CliResult<_>>()?;
                if children.len() != weights.len() {
                    return Err(CliError::parse(
                        path,
                        line,
                        format!(
                            "node {id}: sum has {} children but {} weights",
                            children.len(),
                            weights.len()
                        ),
                    ));
                }
                Node::Sum { children, weights }
            }
            other => {
                return Err(CliError::parse(
                    path,
                    line,
                    format!("node {id}: unknown node kind {other:?}"),
                ));
            }
        };
        nodes[id] = Some(node);
    }
    let Some((root_line, root)) = root else {
        return Err(CliError::parse(path, 1, "missing `root` line"));
    };
    if root >= n {
        return Err(CliError::parse(
            path,
            root_line,
            format!("root {root} does not exist"),
        ));
    }
    let nodes = nodes
        .into_iter()
        .enumerate()
        .map(|(i, node)| {
            node.ok_or_else(|| {
                CliError::parse(path, count_line, format!("node {i} is never defined"))
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let circuit =
        Circuit::from_nodes(schema, nodes, NodeId(root)).context(path.display().to_string())?;
    let report = circuit.validate();
    if !report.is_valid() {
        return Err(CliError::Invariant(format!(
            "{}: {:?}",
            path.display(),
            report.violations
        )));
    }
    Ok(circuit)
}

pub fn read(path: &Path) -> CliResult<Circuit> {
    from_text(path, &read_text(path)?)
}

pub fn write(path: &Path, circuit: &Circuit) -> CliResult<()> {
    write_text(path, &to_text(circuit))
}
