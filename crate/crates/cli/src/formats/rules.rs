//! Weighted rule files (`npc-rules 1`).
//!
//! ```text
//! npc-rules 1
//! attribute A1 0 1
//! attribute A2 0 1
//! class Y 0 1
//! rule 1 0 0 => 0
//! rule 1 1 1 => 1
//! ```
//!
//! Each `rule` line gives a nonnegative weight, one value name per
//! attribute in schema order, `=>`, and a class value name.

use std::fmt::Write as _;
use std::path::Path;

use npc_core::construction::{Rule, RuleSet};
use npc_core::VariableId;

use super::{
    content_lines, expect_header, parse_f64, read_text, schema_lines, write_text, SchemaBuilder,
};
use crate::error::{CliError, CliResult};

pub const MAGIC: &str = "npc-rules";

pub fn to_text(rules: &RuleSet) -> String {
    let schema = rules.schema();
    let mut out = format!("{MAGIC} 1\n");
    out.push_str(&schema_lines(schema));
    for r in rules.rules() {
        let _ = write!(out, "rule {}", r.weight);
        for (k, &v) in r.attribute_values.iter().enumerate() {
            let _ = write!(out, " {}", schema.attribute_values(k)[v]);
        }
        let _ = writeln!(out, " => {}", schema.class_values()[r.class_value]);
    }
    out
}

pub fn from_text(path: &Path, text: &str) -> CliResult<RuleSet> {
    let mut lines = content_lines(text).peekable();
    expect_header(path, lines.next(), MAGIC)?;
    let mut builder = SchemaBuilder::default();
    let mut last = 1;
    while let Some((line, tokens)) = lines.peek() {
        last = *line;
        if !builder.accept(path, *line, tokens)? {
            break;
        }
        lines.next();
    }
    let schema = builder.finish(path, last)?;
    let k_count = schema.num_attributes();
    let mut rules = Vec::new();
    for (line, tokens) in lines {
        if tokens[0] != "rule" || tokens.len() != k_count + 4 || tokens[k_count + 2] != "=>" {
            return Err(CliError::parse(
                path,
                line,
                format!("expected `rule <weight> <{k_count} attribute values> => <class>`"),
            ));
        }
        let weight = parse_f64(path, line, tokens[1])?;
        let mut values = Vec::with_capacity(k_count);
        for k in 0..k_count {
            let name = tokens[2 + k];
            let v = schema.value_index(VariableId(k), name).ok_or_else(|| {
                CliError::parse(
                    path,
                    line,
                    format!("unknown value {name:?} for {}", schema.attribute_names()[k]),
                )
            })?;
            values.push(v);
        }
        let class_name = tokens[k_count + 3];
        let class = schema
            .value_index(schema.class_variable(), class_name)
            .ok_or_else(|| {
                CliError::parse(path, line, format!("unknown class value {class_name:?}"))
            })?;
        rules.push(Rule::new(values, class, weight));
    }
    RuleSet::new(schema, rules).map_err(|e| CliError::parse(path, last, e.to_string()))
}

pub fn read(path: &Path) -> CliResult<RuleSet> {
    from_text(path, &read_text(path)?)
}

pub fn write(path: &Path, rules: &RuleSet) -> CliResult<()> {
    write_text(path, &to_text(rules))
}
