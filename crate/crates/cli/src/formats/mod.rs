//! Versioned on-disk formats. See `FORMATS.md` for the reference.

pub mod bundle;
pub mod circuit;
pub mod dataset;
pub mod model;
pub mod rules;
pub mod world;

use std::fs;
use std::path::Path;

use npc_core::AttributeSchema;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, Context};

/// Major version written into every artifact; readers reject other majors.
pub const FORMAT_VERSION: u32 = 1;

pub fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    write_text(path, &to_json(value))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.line(), e.to_string()))
}

/// Checks the `format`/`version` stamp of a JSON document.
pub fn check_stamp(path: &Path, format: &str, found: &str, version: u32) -> CliResult<()> {
    if found != format {
        return Err(CliError::parse(
            path,
            1,
            format!("expected a {format} document, found {found:?}"),
        ));
    }
    if version != FORMAT_VERSION {
        return Err(CliError::parse(
            path,
            1,
            format!("unsupported {format} version {version}"),
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDoc {
    pub name: String,
    pub values: Vec<String>,
}

/// JSON form of an [`AttributeSchema`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemaDoc {
    pub attributes: Vec<VariableDoc>,
    pub class: VariableDoc,
}

impl SchemaDoc {
    pub fn from_schema(schema: &AttributeSchema) -> Self {
        Self {
            attributes: (0..schema.num_attributes())
                .map(|k| VariableDoc {
                    name: schema.attribute_names()[k].clone(),
                    values: schema.attribute_values(k).to_vec(),
                })
                .collect(),
            class: VariableDoc {
                name: schema.class_name().to_string(),
                values: schema.class_values().to_vec(),
            },
        }
    }

    pub fn to_schema(&self) -> CliResult<AttributeSchema> {
        AttributeSchema::new(
            self.attributes.iter().map(|a| a.name.clone()).collect(),
            self.attributes.iter().map(|a| a.values.clone()).collect(),
            self.class.name.clone(),
            self.class.values.clone(),
        )
        .context("schema")
    }
}

/// Schema header lines shared by the text formats:
/// `attribute <name> <values...>` and `class <name> <values...>`.
pub(crate) fn schema_lines(schema: &AttributeSchema) -> String {
    let mut out = String::new();
    for k in 0..schema.num_attributes() {
        out.push_str("attribute ");
        out.push_str(&schema.attribute_names()[k]);
        for v in schema.attribute_values(k) {
            out.push(' ');
            out.push_str(v);
        }
        out.push('\n');
    }
    out.push_str("class ");
    out.push_str(schema.class_name());
    for v in schema.class_values() {
        out.push(' ');
        out.push_str(v);
    }
    out.push('\n');
    out
}

/// Accumulates `attribute`/`class` lines into a schema.
#[derive(Default)]
pub(crate) struct SchemaBuilder {
    names: Vec<String>,
    values: Vec<Vec<String>>,
    class: Option<(String, Vec<String>)>,
}

impl SchemaBuilder {
    /// Returns `Ok(true)` when the line was a schema line.
    pub fn accept(&mut self, path: &Path, line: usize, tokens: &[&str]) -> CliResult<bool> {
        match tokens.first() {
            Some(&"attribute") => {
                if self.class.is_some() {
                    return Err(CliError::parse(
                        path,
                        line,
                        "attributes must precede the class",
                    ));
                }
                let (name, values) = name_and_values(path, line, tokens)?;
                self.names.push(name);
                self.values.push(values);
                Ok(true)
            }
            Some(&"class") => {
                if self.class.is_some() {
                    return Err(CliError::parse(path, line, "duplicate class line"));
                }
                self.class = Some(name_and_values(path, line, tokens)?);
                Ok(true)
            }
            _ => Ok(false),
        }
    }

    pub fn finish(self, path: &Path, line: usize) -> CliResult<AttributeSchema> {
        let Some((class, class_values)) = self.class else {
            return Err(CliError::parse(path, line, "missing class line"));
        };
        AttributeSchema::new(self.names, self.values, class, class_values)
            .map_err(|e| CliError::parse(path, line, e.to_string()))
    }
}

fn name_and_values(path: &Path, line: usize, tokens: &[&str]) -> CliResult<(String, Vec<String>)> {
    if tokens.len() < 3 {
        return Err(CliError::parse(path, line, "expected a name and values"));
    }
    Ok((
        tokens[1].to_string(),
        tokens[2..].iter().map(|s| s.to_string()).collect(),
    ))
}

/// Non-blank, non-comment lines with 1-based line numbers.
pub(crate) fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("");
        let tokens: Vec<&str> = l.split_whitespace().collect();
        (!tokens.is_empty()).then_some((i + 1, tokens))
    })
}

/// Checks a `<magic> <version>` first line.
pub(crate) fn expect_header(
    path: &Path,
    first: Option<(usize, Vec<&str>)>,
    magic: &str,
) -> CliResult<()> {
    match first {
        Some((_, t)) if t.len() == 2 && t[0] == magic => {
            let v: u32 = t[1]
                .parse()
                .map_err(|_| CliError::parse(path, 1, format!("bad version {:?}", t[1])))?;
            if v != FORMAT_VERSION {
                return Err(CliError::parse(
                    path,
                    1,
                    format!("unsupported {magic} version {v}"),
                ));
            }
            Ok(())
        }
        Some((line, _)) => Err(CliError::parse(
            path,
            line,
            format!("expected `{magic} {FORMAT_VERSION}`"),
        )),
        None => Err(CliError::parse(path, 1, "empty file")),
    }
}

pub(crate) fn parse_f64(path: &Path, line: usize, s: &str) -> CliResult<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::parse(path, line, format!("bad number {s:?}")))?;
    if !v.is_finite() {
        return Err(CliError::parse(
            path,
            line,
            format!("non-finite number {s:?}"),
        ));
    }
    Ok(v)
}

pub(crate) fn parse_usize(path: &Path, line: usize, s: &str) -> CliResult<usize> {
    s.parse()
        .map_err(|_| CliError::parse(path, line, format!("bad index {s:?}")))
}
