//! Patent retrieval from a handful of seed patents.
//!
//! Patents are embedded three ways: a text encoder over title and abstract
//! (block `A`), TransE over the citation graph (block `B`) and TransE over
//! the inventor graph (block `C`). Blocks are fused, a multi-label CPC
//! classifier picks the most informative fusion, and candidates are ranked
//! by aggregated cosine similarity to the seeds. Recall curves compare
//! aggregation methods and noun-phrase concepts compare the seed and
//! retrieved sets.
//!
//! The `examples/` directory has one runnable program per stage; the
//! `patent-retrieval` binary exposes the same stages as subcommands.

pub mod classifier;
pub mod cli;
pub mod concepts;
pub mod config;
pub mod corpus;
pub mod error;
pub mod evalrecall;
pub mod fusion;
pub mod kgraph;
pub mod pipeline;
pub mod retrieval;
pub mod synthetic;
pub mod textembed;
pub mod transe;
mod tsv;
pub mod vectors;

pub use error::{Error, Result};
pub use tsv::read_id_list;
