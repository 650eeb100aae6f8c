//! Configuration, job runner, persistence and the brute-force oracles.

pub mod config;
pub mod oracle;
mod potential;
pub mod run;

pub use config::{ConfigError, Mode, RunConfig};
pub use oracle::{chain_vs_hull, oracle_dense_newton, oracle_finite_chain, ChainSolution, DenseSolution, OracleError};
pub use run::{run, HarnessError, RunSummary};
