pub mod acceptance;
pub mod cli;
pub mod config;
pub mod contact;
pub mod error;
pub mod exprlang;
pub mod geometry;
pub mod numerics;
pub mod registry;
pub mod report;
pub mod solver;
pub mod variation;

pub use error::{Error, Result};
