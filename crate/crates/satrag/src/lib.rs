//! Table-centric retrieval engine.
//!
//! The pipeline turns documents that mix prose with tables into a composite
//! subject-attribute-temporal (SAT) graph whose leaves stay pinned to the
//! table cells they came from, then answers questions in two phases:
//! graph navigation picks out cell-level evidence, and a fusion step bridges
//! that evidence back to the surrounding prose before prompting a language
//! model.
//!
//! Modules follow the pipeline order:
//!
//! - [`ingest`] — parse Markdown / HTML / structured-grid sources into
//!   normalized tables with classified header tiers.
//! - [`cellgroups`] — decompose tables into per-cell records that carry
//!   document metadata, captions, and full header paths.
//! - [`sat_graph`] — lift cell groups into facts and build the composite
//!   graph (subject forest, temporal forest, attribute anchors, value
//!   leaves, composite index).
//! - [`retrieval`] — slot-based query analysis, dual-path graph traversal,
//!   candidate scoring, structural neighbor expansion, and a flat chunk
//!   baseline.
//! - [`fusion`] — fact linearization, scoped passage retrieval, prompt
//!   assembly, and answer generation with citation tracking.
//! - [`providers`] — embedding / completion / subject-extraction backends:
//!   deterministic offline doubles and an OpenAI-compatible HTTP client.
//! - [`eval`] — rank metrics (hit/recall/precision at k, cell-level
//!   variants), value-accuracy recall, claim alignment, and the evaluation
//!   harness with ablation sweeps.
//! - [`dataset_gen`] — seeded QA-pair generation over a corpus via field
//!   association and LLM validation.

pub mod cellgroups;
pub mod config;
pub mod corpus;
pub mod dataset_gen;
pub mod eval;
pub mod fusion;
pub mod ids;
pub mod ingest;
pub mod providers;
pub mod retrieval;
pub mod sat_graph;
pub mod synth;
pub mod temporal;

pub use config::AppConfig;
pub use corpus::Corpus;
pub use sat_graph::SatGraph;
