//! Attribute-model checkpoints: a JSON document
//! `{"format":"npc-attribute-model","version":1,"schema":{...},"feature_dim":d,"heads":[{"weights":[...],"bias":[...]}]}`.
//! Head `k` stores its `q_k × d` weight matrix row-major.

use std::path::Path;

use npc_core::attribute::{AttributeModel, LinearHead};
use serde::{Deserialize, Serialize};

use super::{check_stamp, read_json, write_json, SchemaDoc, FORMAT_VERSION};
use crate::error::{CliResult, Context};

pub const FORMAT: &str = "npc-attribute-model";

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    format: String,
    version: u32,
    schema: SchemaDoc,
    feature_dim: usize,
    heads: Vec<LinearHead>,
}

pub fn read(path: &Path) -> CliResult<AttributeModel> {
    let c: Checkpoint = read_json(path)?;
    check_stamp(path, FORMAT, &c.format, c.version)?;
    AttributeModel::from_heads(c.schema.to_schema()?, c.feature_dim, c.heads)
        .context(path.display().to_string())
}

pub fn write(path: &Path, model: &AttributeModel) -> CliResult<()> {
    write_json(
        path,
        &Checkpoint {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            schema: SchemaDoc::from_schema(model.schema()),
            feature_dim: model.feature_dim(),
            heads: model.heads().to_vec(),
        },
    )
}
