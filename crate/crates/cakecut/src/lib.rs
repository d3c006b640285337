//! Connected envy-free cake cutting for four agents in the value-query and
//! Robertson–Webb query models, with exact rational arithmetic throughout.

#![allow(clippy::needless_range_loop)]

pub mod bench;
pub mod error;
pub mod gen;
pub mod hardgen;
pub mod io;
pub mod lift;
pub mod oracle;
pub mod pl;
pub mod preprocess;
pub mod query;
pub mod scalar;
pub mod solver;
pub mod valuation;

pub use error::{CakeError, Result};
pub use query::{Mode, QueryCounts, QuerySession};
pub use scalar::{rat, Scalar};
pub use valuation::{
    max_envy, validate_grid_valuation, Allocation, DensityValuation, Division, GridFlags, GridValuation,
    SharedValuation, Valuation,
};
