//! Differential makeup presentation attack detection.
//!
//! A reference/probe face pair is turned into a feature vector (embedding
//! difference, landmark difference, LBP grid or probe-only embedding), an
//! RBF-SVM scores it as bona fide or attack, and the metrics module evaluates
//! detectors and comparators with ISO/IEC 30107-3 rates. The synthesis
//! module builds synthetic makeup attacks for training by warping a probe
//! face onto a target's landmarks and transferring the target's regional
//! colors.

pub mod classifier;
pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod features;
pub mod geometry;
pub mod io;
pub mod metrics;
pub mod model;
pub mod synth;
pub mod synthetic;

pub use error::{Error, Result, RowError};
pub use exec::Execution;
