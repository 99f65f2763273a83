//! Moduli of finite flat models of rank-2 mod-p phi-modules, made finite and
//! checkable: exact enumeration of lattice points over a finite field,
//! ordinarity classification, and verifiable connectivity certificates.

pub mod algebra;
pub mod certify;
pub mod cli;
pub mod error;
pub mod instance;
pub mod lattice;
pub mod moduli;
pub mod pathfinder;
pub mod phimod;
pub mod selftest;

pub use error::{Error, Result};
