//! Decision trees for uncertain data and a design-mining toolkit built on
//! them: labeling, Latin hypercube sampling, rule extraction, design
//! screening, crash response metrics and thin-plate-spline morphing.

// `!(x > 0.0)` style checks are used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod doe;
pub mod error;
pub mod manifest;
pub mod metrics;
pub mod morph;
pub mod pipeline;
pub mod rules;
pub mod tree;
pub mod uncertain;

pub use error::{Error, Result};
