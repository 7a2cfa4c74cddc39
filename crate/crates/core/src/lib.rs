//! Peer-review forensics toolkit.
//!
//! Reconstructs per-editor and per-reviewer behavioral metrics from editorial
//! event logs, clusters agents with k-means to flag anomalous ones, and profiles
//! the citation trends of papers accepted by flagged reviewers. A synthetic
//! corpus generator provides ground-truth fixtures for end-to-end checks.
//!
//! Module map:
//!
//! - [`ledger`]: data model, JSONL ingestion/validation, windowed citations
//! - [`entropy`]: Shannon-entropy diversity index shared by both metric families
//! - [`editor`]: MEAT, SRI, RDI, RADI
//! - [`reviewer`]: MRAT, MRSD, TDI, EDI, MTD, AR, DFI
//! - [`diagnostics`]: binned median-average-citation analyses, ECDF, KS
//! - [`detect`]: eligibility filter, feature matrices, k-means, anomaly labeling
//! - [`trend`]: citation-sequence trend classification and mean profiles
//! - [`synth`]: seeded synthetic corpus generator
//! - [`cli`]: the `refaudit` command-line front end

pub mod cli;
pub mod detect;
pub mod diagnostics;
pub mod editor;
pub mod entropy;
pub mod ledger;
pub mod par;
pub mod reviewer;
pub mod seed;
pub mod synth;
pub mod trend;

pub use ledger::{AgentId, Corpus, PaperId};
pub use par::Exec;
