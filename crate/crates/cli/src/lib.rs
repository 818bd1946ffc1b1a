//! File formats, model bundles and the `npc` command-line pipeline built on
//! [`npc_core`].
//!
//! Every artifact carries a format name and a major version; readers reject
//! other majors. `FORMATS.md` next to this crate's manifest describes each
//! format.

pub mod commands;
mod error;
pub mod formats;

pub use error::{CliError, CliResult};
