//! Matched-pair hypothesis testing for token bias in reasoning agents.
//!
//! The pipeline generates synthetic conjunction-fallacy and syllogism
//! problems ([`generator`]), perturbs surface tokens while keeping the
//! logic fixed ([`perturbation`]), renders prompts ([`prompting`]), queries
//! agents ([`model_client`]), grades the replies ([`grading`]) and decides
//! each hypothesis with exact or McNemar tests under Benjamini-Hochberg
//! control ([`paired_stats`], [`runner`]).

pub mod corpus;
pub mod generator;
pub mod grading;
pub mod model_client;
pub mod paired_stats;
pub mod perturbation;
pub mod prompting;
pub mod runner;
