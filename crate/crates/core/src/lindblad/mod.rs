//! Deterministic master-equation engines.

mod fock;
mod ktm;
mod nonmarkov;
mod pointer;

pub use fock::*;
pub use ktm::*;
pub use nonmarkov::*;
pub use pointer::*;
