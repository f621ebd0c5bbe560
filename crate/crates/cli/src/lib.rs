// `!(x > 0.0)` deliberately rejects NaN along with non-positive values in
// the configuration validators.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Configuration parsing, run orchestration, and bit-stable file output for
//! the 1-D compressible NSCH solver.

pub mod config;
pub mod driver;
pub mod output;
