//! Fairness-aware list generation for voice-forum call logs.
//!
//! The pipeline ingests call logs, models and clusters engaged callers,
//! predicts which items each cluster likes, plans exposure under an editorial
//! fairness policy, ranks lists, replays traffic and reports concentration
//! metrics.

pub mod calllog;
pub mod config;
pub mod error;
pub mod exposure;
pub mod metrics;
pub mod pipeline;
pub mod ranker;
pub mod recommender;
pub mod simulator;
pub mod user_model;

pub use error::{Error, Result};
