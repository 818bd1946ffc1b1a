//! JSON-lines datasets.
//!
//! The first line is a header
//! `{"format":"npc-dataset","version":1,"split":"train","feature_dim":20,"schema":{...}}`;
//! every following line is one sample
//! `{"features":[...],"class":7,"targets":[[...],[...]]}`.
//! Sampled (hard-valued) datasets use `"format":"npc-sampled-dataset"` and
//! rows `{"attributes":[3,4],"class":7}`.

use std::fmt::Write as _;
use std::path::Path;

use npc_core::data::{Dataset, Sample, SampledDataset, SampledRow, Split};
use serde::{Deserialize, Serialize};

use super::{check_stamp, read_text, write_text, SchemaDoc, FORMAT_VERSION};
use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "npc-dataset";
pub const SAMPLED_FORMAT: &str = "npc-sampled-dataset";

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    feature_dim: Option<usize>,
    schema: SchemaDoc,
}

#[derive(Serialize, Deserialize)]
struct Row {
    features: Vec<f64>,
    class: usize,
    targets: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
struct HardRow {
    attributes: Vec<usize>,
    class: usize,
}

fn line<T: Serialize>(out: &mut String, value: &T) {
    let _ = writeln!(
        out,
        "{}",
        serde_json::to_string(value).expect("rows serialize")
    );
}

pub fn to_text(dataset: &Dataset) -> String {
    let mut out = String::new();
    line(
        &mut out,
        &Header {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            split: Some(dataset.split),
            feature_dim: Some(dataset.feature_dim),
            schema: SchemaDoc::from_schema(&dataset.schema),
        },
    );
    for s in &dataset.samples {
        line(
            &mut out,
            &Row {
                features: s.features.clone(),
                class: s.class_label,
                targets: s.attribute_targets.clone(),
            },
        );
    }
    out
}

fn parse_line<T: for<'de> Deserialize<'de>>(path: &Path, n: usize, text: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::parse(path, n, e.to_string()))
}

fn header(path: &Path, text: &str, format: &str) -> CliResult<Header> {
    let first = text
        .lines()
        .next()
        .ok_or_else(|| CliError::parse(path, 1, "empty file"))?;
    let h: Header = parse_line(path, 1, first)?;
    check_stamp(path, format, &h.format, h.version)?;
    Ok(h)
}

fn body(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .skip(1)
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
}

pub fn from_text(path: &Path, text: &str) -> CliResult<Dataset> {
    let h = header(path, text, FORMAT)?;
    let schema = h.schema.to_schema()?;
    let feature_dim = h
        .feature_dim
        .ok_or_else(|| CliError::parse(path, 1, "header lacks feature_dim"))?;
    let mut samples = Vec::new();
    for (n, l) in body(text) {
        let r: Row = parse_line(path, n, l)?;
        samples.push(Sample {
            features: r.features,
            class_label: r.class,
            attribute_targets: r.targets,
        });
    }
    Dataset::new(
        schema,
        feature_dim,
        samples,
        h.split.unwrap_or(Split::Train),
    )
    .map_err(|e| CliError::parse(path, 1, e.to_string()))
}

pub fn sampled_to_text(dataset: &SampledDataset) -> String {
    let mut out = String::new();
    line(
        &mut out,
        &Header {
            format: SAMPLED_FORMAT.into(),
            version: FORMAT_VERSION,
            split: None,
            feature_dim: None,
            schema: SchemaDoc::from_schema(&dataset.schema),
        },
    );
    for r in &dataset.rows {
        line(
            &mut out,
            &HardRow {
                attributes: r.attributes.clone(),
                class: r.class,
            },
        );
    }
    out
}

pub fn sampled_from_text(path: &Path, text: &str) -> CliResult<SampledDataset> {
    let h = header(path, text, SAMPLED_FORMAT)?;
    let schema = h.schema.to_schema()?;
    let mut rows = Vec::new();
    for (n, l) in body(text) {
        let r: HardRow = parse_line(path, n, l)?;
        rows.push(SampledRow::new(r.attributes, r.class));
    }
    SampledDataset::new(schema, rows).map_err(|e| CliError::parse(path, 1, e.to_string()))
}

pub fn read(path: &Path) -> CliResult<Dataset> {
    from_text(path, &read_text(path)?)
}

pub fn write(path: &Path, dataset: &Dataset) -> CliResult<()> {
    write_text(path, &to_text(dataset))
}

pub fn read_sampled(path: &Path) -> CliResult<SampledDataset> {
    sampled_from_text(path, &read_text(path)?)
}

pub fn write_sampled(path: &Path, dataset: &SampledDataset) -> CliResult<()> {
    write_text(path, &sampled_to_text(dataset))
}
