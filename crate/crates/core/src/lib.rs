//! Sound-effect cue detection for story text.
//!
//! Candidate triggers are found by exact matching against an expanded
//! sound-tag database, then a linear classifier over sentence context decides
//! whether each trigger should actually play, optionally followed by
//! quotation and simile suppression rules.

pub mod classifier;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod pipeline;
pub mod retrieval;
pub mod rules;
pub mod soundbank;

pub use error::{Error, Result};
