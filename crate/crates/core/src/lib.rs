//! Mining short health-topic messages and comparing what people discuss
//! against weighted survey estimates.
//!
//! The crate is organised as a batch pipeline:
//!
//! 1. [`ingest`] parses, merges, filters and cleans raw message records.
//! 2. [`geocode`] resolves each message to a US state.
//! 3. [`classify`] separates promotional information from consumer discussion.
//! 4. [`topicmodel`] trains LDA by collapsed Gibbs sampling and assigns topics.
//! 5. [`survey`] turns weighted survey answers into state-level estimates.
//! 6. [`analytics`] ranks topics, correlates monthly volumes and state
//!    distributions, and builds the correlation tables.
//! 7. [`report`] renders choropleths and word-cloud data.
//!
//! [`pipeline`] runs all stages from one configuration file with per-stage
//! caching, and [`synth`] generates corpora with known ground truth.

pub mod analytics;
pub mod classify;
pub mod error;
pub mod geocode;
pub mod ingest;
pub mod io;
pub mod pipeline;
pub mod report;
pub mod states;
pub mod survey;
pub mod synth;
pub mod topicmodel;

pub use error::{Error, Result};
pub use states::StateCode;
