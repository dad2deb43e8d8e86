//! Composition and weighted composition operators between Fock spaces
//! `F^p(ℂⁿ)`: classification, component atlas, explicit homotopies and
//! numerical distance certificates.

pub mod certify;
pub mod cli;
pub mod error;
pub mod fock;
pub mod homotopy;
pub mod integrate;
pub mod linalg;
pub mod operators;
pub mod topology;

pub use error::{Error, Result};
pub use fock::{kernel, normalized_kernel, FockParams, NormEstimate, NormMethod, SymbolFn};
pub use linalg::{CMatrix, CVector, C64};
