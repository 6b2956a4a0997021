//! Finite, checkable models of sofic entropy and independence for actions of
//! sofic groups: sofic approximations, microstate spaces, orbit independence,
//! quasitilings and Fuglede–Kadison determinants.

pub mod actions;
pub mod entropy;
pub mod error;
pub mod group;
pub mod independence;
pub mod microstates;
pub mod quasitiling;
pub mod sofic;
pub mod spectral;

pub use error::{Error, Result};
