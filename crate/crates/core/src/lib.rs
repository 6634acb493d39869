//! Recovery of missing trace links between version-control commits and
//! issue-tracker issues.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`] covers artifacts (issues, commits, files, links, developer identities)
//!   and the on-disk project archive.
//! - [`ingest`] covers parsing of tracker and VCS exports into a [`model::ProjectStore`].
//! - [`textsim`] covers preprocessing, tf-idf with word n-grams, cosine similarity.
//! - [`features`] covers candidate pair generation and the 18 pair attributes.
//! - [`learn`] covers naive Bayes, C4.5-style tree and random forest classifiers.
//! - [`eval`] covers temporal splits, recommendation/augmentation evaluation,
//!   statistics, review batches and a synthetic project generator.
//! - [`pipeline`] covers training, evaluation, recommendation and augmentation over
//!   a project archive.

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod learn;
pub mod model;
pub mod pipeline;

pub mod rng;
pub mod textsim;

pub use error::{Error, Result};
