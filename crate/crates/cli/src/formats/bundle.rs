//! Model bundles: a directory with `manifest.json`, an attribute-model
//! checkpoint and a serialized circuit.

use std::path::Path;

use npc_core::npc::NpcModel;
use serde::{Deserialize, Serialize};

use super::{check_stamp, circuit, model, read_json, write_json, SchemaDoc, FORMAT_VERSION};
use crate::error::{CliError, CliResult, Context};

pub const FORMAT: &str = "npc-bundle";
pub const MANIFEST: &str = "manifest.json";
const MODEL_FILE: &str = "attribute_model.json";
const CIRCUIT_FILE: &str = "circuit.txt";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    version: u32,
    schema: SchemaDoc,
    attribute_model: String,
    circuit: String,
    enumeration_cap: u64,
}

pub fn write(dir: &Path, npc: &NpcModel) -> CliResult<()> {
    model::write(&dir.join(MODEL_FILE), npc.attribute_model())?;
    circuit::write(&dir.join(CIRCUIT_FILE), npc.circuit())?;
    write_json(
        &dir.join(MANIFEST),
        &Manifest {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            schema: SchemaDoc::from_schema(npc.schema()),
            attribute_model: MODEL_FILE.into(),
            circuit: CIRCUIT_FILE.into(),
            enumeration_cap: npc.enumeration_cap(),
        },
    )
}

pub fn read(dir: &Path) -> CliResult<NpcModel> {
    let manifest_path = dir.join(MANIFEST);
    if !manifest_path.exists() {
        return Err(CliError::MissingArtifact(manifest_path));
    }
    let m: Manifest = read_json(&manifest_path)?;
    check_stamp(&manifest_path, FORMAT, &m.format, m.version)?;
    let schema = m.schema.to_schema()?;
    let attr = model::read(&dir.join(&m.attribute_model))?;
    let circ = circuit::read(&dir.join(&m.circuit))?;
    if *attr.schema() != schema || *circ.schema() != schema {
        return Err(CliError::parse(
            &manifest_path,
            1,
            "attribute model, circuit and manifest schemas differ",
        ));
    }
    NpcModel::with_cap(attr, circ, m.enumeration_cap).context(dir.display().to_string())
}
