#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlations;
pub mod darkstates;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod spectrum;

pub use error::{Error, Result};
