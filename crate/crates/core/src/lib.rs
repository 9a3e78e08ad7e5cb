//! Exact local calculus for toroidalization of birational 3-fold morphisms.

pub mod blowup;
pub mod error;
pub mod fan;
pub mod germ;
pub mod jacobian;
pub mod lattice;
pub mod oracles;
pub mod principalize;
pub mod rational;
pub mod series;
pub mod suite;
pub mod relations;
pub mod tau;
pub mod tree;

pub use error::{Error, Result};
