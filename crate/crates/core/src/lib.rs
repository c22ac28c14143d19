//! Build text-to-code benchmarks from typed ASTs, run model solutions
//! against them, score the results and classify failures.

pub mod uast;
pub mod problem;
pub mod instruct;
pub mod codegen;
pub mod debugdict;
pub mod stats;
pub mod runner;
pub mod bridge;
pub mod faults;
pub mod fixtures;
pub mod dataset;
pub mod bench;
