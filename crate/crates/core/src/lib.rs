//! Neural probabilistic circuits over categorical attributes.
//!
//! The crate is `no_std` and only needs `alloc`. It covers the full modelling
//! pipeline: smooth and decomposable probabilistic circuits with log-space
//! inference ([`circuit`]), circuit construction from weighted rules or from
//! data ([`construction`]), CCCP parameter learning ([`learning`]), a
//! multi-task softmax attribute recognizer ([`attribute`]), compositional class
//! inference and joint optimization ([`npc`]), most-probable and counterfactual
//! explanations ([`explain`]), evaluation metrics ([`metrics`]), exact
//! compositional error bound checks ([`bound`]) and a synthetic world
//! generator ([`synth`]).
//!
//! File formats and the command-line front-end live in the companion
//! `npc-cli` crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod attribute;
pub mod bound;
pub mod circuit;
pub mod construction;
pub mod data;
mod error;
pub mod explain;
pub mod learning;
pub mod math;
pub mod metrics;
pub mod npc;
pub mod schema;
pub mod synth;

pub use error::{Error, Result};
pub use schema::{AttributeSchema, VariableId};
