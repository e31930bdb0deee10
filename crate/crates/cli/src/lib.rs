//! Library surface of the `pointlab` batch tool: config and dataset
//! loading, annotation and manifest parsers, prediction-grid codecs,
//! pipeline orchestration, and report writers.

pub mod annotations;
pub mod config;
pub mod dataset;
pub mod dota;
pub mod manifest;
pub mod overlay;
pub mod pipeline;
pub mod predgrid;
pub mod records;
