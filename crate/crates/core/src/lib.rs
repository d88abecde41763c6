//! Graded entity salience derived from how many summaries of a document
//! mention each of its entities.
//!
//! The pipeline aligns document entities to summaries with three signals
//! (string match, coreference, an LLM judge), fuses them with a logistic
//! regression ensemble, counts aligned summaries per entity, and evaluates
//! salience predictors against gold scores.

pub mod alignment;
pub mod corpus;
pub mod salience;
pub mod string_match;
pub mod text;
pub mod metrics;
pub mod rng;
pub mod llm;
pub mod coref;
pub mod ensemble;
pub mod sumqual;
