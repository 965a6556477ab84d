//! Emergency-department benchmark pipeline.
//!
//! Raw EHR tables are parsed and linked ([`ingest`]), turned into one
//! labeled row per ED visit ([`cohort`], [`comorbidity`]), cleaned and
//! split ([`clean_split`]), and used to fit and compare clinical scores
//! ([`scores`]) and learned models ([`models`]) via [`evaluate`].
//! [`synth`] generates schema-conformant synthetic input so everything
//! runs without credentialed data.

pub mod clean_split;
pub mod cohort;
pub mod comorbidity;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evaluate;
pub mod ingest;
pub mod issues;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod scores;
pub mod synth;

pub use error::{Error, ErrorCategory, Result};
pub use issues::{Issue, IssueLog};
