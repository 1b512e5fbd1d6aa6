pub mod classifiers;
pub mod cones;
pub mod error;
pub mod levy;
pub mod numerics;
pub mod sampling;
pub mod semigroups;
pub mod runner;
pub mod subordination;
pub mod suites;

pub use error::{Error, Result};
