//! Score analysis toolkit: parse interleaved ABC into an exact score IR,
//! extract measure-wise structural plans, and score playability,
//! readability, utilization, adherence, and translational structure.

pub mod abc;
pub mod config;
pub mod constraints;
pub mod metrics;
pub mod plan;
pub mod rational;
pub mod report;
pub mod score;
pub mod structure;

pub use rational::Rational;
