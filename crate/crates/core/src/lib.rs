//! Multistep quantum resonant transition (QRT) optimization, simulated
//! classically through the two-cell reduction of each step Hamiltonian.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod landscape;
pub mod linalg;
pub mod objective;
pub mod oracle;
pub mod output;
pub mod qrt;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use objective::{BasisIndex, GridSpec, ObjectiveFunction};
