//! QUBO formulations, annealing solvers, QAP decomposition and a warehouse
//! order-picking simulator, with brute-force oracles for checking them.

pub mod bench;
pub mod decomposition;
pub mod error;
pub mod formulations;
pub mod generators;
pub mod matrix;
pub mod qubo;
pub mod rng;
pub mod solvers;
pub mod warehouse;

pub use error::{Error, Result};
