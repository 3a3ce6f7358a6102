//! Generalized `n`-dimensional cross products, the generalized `Curl`
//! calculus, tangential traces, and discrete optimal constants for
//! Korn-type inequalities on box grids.

pub mod error;
pub mod estimator;
pub mod fields;
pub mod grid;
pub mod identities;
pub mod oracle;
pub mod operators;
pub mod report;
pub mod tensor;
pub mod traces;

pub use error::{KornError, Result};
