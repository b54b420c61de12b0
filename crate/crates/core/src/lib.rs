//! Finite-domain constraint solver with activity-based, impact-based and
//! weighted-degree search, plus the benchmark models and experiment runner.

pub mod domain;
pub mod experiment;
pub mod heuristics;
pub mod models;
pub mod propagation;
pub mod search;
