//! Knowledge-diffusion analysis of a source publication's citation corpus.
//!
//! The pipeline runs in three steps:
//!
//! 1. ingest: parse a tagged plain-text citation export ([`corpus`]),
//!    deduplicate, restrict to a year window and geocode first-author
//!    addresses against an offline gazetteer;
//! 2. classify: fit LDA by collapsed Gibbs sampling ([`topics`]) and map
//!    topics onto a discipline / research-direction taxonomy;
//! 3. analyse: yearly diffusion rates and stage timelines ([`diffusion`]),
//!    evolution trees ([`tree`]), cross-validated growth models and
//!    cumulative forecasts ([`forecast`]), and the stratified-heterogeneity
//!    q-statistic with a permutation test ([`qstat`]).
//!
//! [`pipeline`] wires the steps together behind a declarative config and
//! writes a run manifest that makes reruns incremental.

pub mod corpus;
pub mod diffusion;
pub mod forecast;
pub mod par;
pub mod pipeline;
pub mod qstat;
pub mod synth;
pub mod topics;
pub mod tree;

pub use par::Execution;
