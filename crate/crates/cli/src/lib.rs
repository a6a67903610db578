//! Command line and HTTP front ends of the tutorloop engine.

pub mod commands;
pub mod config;
pub mod error;
pub mod service;
