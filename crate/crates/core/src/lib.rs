//! Citation-corpus analytics.
//!
//! The crate loads a corpus of publication records (JSON lines), materializes
//! citation edges between them and computes journal- and author-level
//! citation statistics: generalized impact factors, citation-age profiles,
//! h/g/m indices. Alongside the point statistics it exposes the diagnostics
//! that show how much those numbers hide: exact probabilities that a random
//! article of one journal is cited at least as often as one from another,
//! year-over-year impact-factor volatility, self-citation fractions and the
//! rank divergence of institutional scoring rules.
//!
//! A seeded generator ([`synth`]) produces synthetic corpora with
//! zero-inflated, log-normal latent citation rates and exponential aging so
//! every statistic can be exercised reproducibly.

pub mod author;
pub mod cli;
pub mod compare;
pub mod corpus;
pub mod journal;
pub mod policy;
pub mod synth;

mod rational;

pub use rational::{render_fixed, Rational};
