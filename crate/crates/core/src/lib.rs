//! Verilog-subset RTL optimization toolkit.
//!
//! The crate is organized as a pipeline: [`frontend`] parses designs,
//! [`analysis`] recognizes structure, [`partition`] splits the instance
//! tree, [`retrieval`] ranks optimization guidance, [`search`] explores
//! rewrite strategies from [`rewrite`], [`verify`] checks equivalence and
//! [`cost`] scores the results. [`pipeline`] ties the stages together.

pub mod analysis;
pub mod cost;
pub mod frontend;
pub mod partition;
pub mod pipeline;
pub mod retrieval;
pub mod rewrite;
pub mod search;
pub mod verify;

pub use frontend::{parse, print, structural_eq, DesignAst, ModuleAst, ParseError};

#[cfg(test)]
mod testgen;
