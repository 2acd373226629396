//! Evidence-driven analysis of individual contribution in group projects.
//!
//! The pipeline turns an [`evidence::EvidenceBundle`] into per-student
//! metrics, normalises them against the team, aggregates them into nine
//! base measures and three objective measures, flags inequality-based
//! conflict markers and produces a validated advisory judgment.

pub mod abstract_metrics;
pub mod advisor;
pub mod canonical;
pub mod conflict;
pub mod context;
pub mod evidence;
pub mod framework;
pub mod measures;
pub mod metrics;
pub mod num;
pub mod pipeline;
pub mod provider;
pub mod render;
pub mod synth;

/// Scalar type used throughout the pipeline.
pub type Real = f64;
