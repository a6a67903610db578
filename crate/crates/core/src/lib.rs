//! Inner-loop feedback engine for dialogue-based tutoring.
//!
//! Grades text and LaTeX attempts, generates and ranks hints, builds
//! encyclopedia explanations and math gap/diff hints, and measures learning
//! gains.

pub mod analytics;
pub mod hints;
pub mod math;
pub mod models;
pub mod simulate;
pub mod storage;
pub mod text;
pub mod tutoring;
pub mod wiki;
