//! Finite-difference laboratory for graphs of translating solitons of mean
//! curvature flow.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod barriers;
pub mod error;
pub mod geometry;
pub mod grid;
pub mod report;
pub mod solver;
pub use error::{Error, Result};
