//! Exact lifted computation of Markov logic network partition functions,
//! plus a compiler that turns the lifted computation into a standalone C
//! program.

pub mod bench;
pub mod canon;
pub mod circuit;
pub mod codegen;
pub mod engine;
pub mod error;
pub mod generate;
pub mod heuristics;
pub mod mln;
pub mod numeric;
pub mod oracle;
pub mod parse;
pub mod rules;
pub mod shatter;
pub mod size;

pub use error::{Error, Result};
