//! Exact generative tables of a finite world, for bound checks:
//! `{"format":"npc-world","version":1,"schema":{...},"prior":[...],
//! "attributes":[[[...]]],"class_given_attributes":[[...]],"state_features":[[...]]}`.
//! `attributes` is indexed `[state][attribute][value]`; `state_features`
//! holds one noise-free feature vector per state and may be empty.

use std::path::Path;

use npc_core::bound::WorldTables;
use npc_core::synth::SyntheticData;
use serde::{Deserialize, Serialize};

use super::{check_stamp, read_json, write_json, SchemaDoc, FORMAT_VERSION};
use crate::error::{CliResult, Context};

pub const FORMAT: &str = "npc-world";

#[derive(Serialize, Deserialize)]
struct WorldDoc {
    format: String,
    version: u32,
    schema: SchemaDoc,
    prior: Vec<f64>,
    attributes: Vec<Vec<Vec<f64>>>,
    class_given_attributes: Vec<Vec<f64>>,
    #[serde(default)]
    state_features: Vec<Vec<f64>>,
}

/// World tables plus the feature vector of each state, when known.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub tables: WorldTables,
    pub state_features: Vec<Vec<f64>>,
}

impl World {
    pub fn from_synthetic(data: &SyntheticData) -> Self {
        let state_features = (0..data.tables.num_states())
            .map(|x| data.state_features(x))
            .collect();
        Self {
            tables: data.tables.clone(),
            state_features,
        }
    }
}

pub fn write(path: &Path, world: &World) -> CliResult<()> {
    let t = &world.tables;
    write_json(
        path,
        &WorldDoc {
            format: FORMAT.into(),
            version: FORMAT_VERSION,
            schema: SchemaDoc::from_schema(&t.schema),
            prior: t.prior.clone(),
            attributes: t.attributes.clone(),
            class_given_attributes: t.class_given_attributes.clone(),
            state_features: world.state_features.clone(),
        },
    )
}

pub fn read(path: &Path) -> CliResult<World> {
    let d: WorldDoc = read_json(path)?;
    check_stamp(path, FORMAT, &d.format, d.version)?;
    let tables = WorldTables::new(
        d.schema.to_schema()?,
        d.prior,
        d.attributes,
        d.class_given_attributes,
    )
    .context(path.display().to_string())?;
    Ok(World {
        tables,
        state_features: d.state_features,
    })
}
