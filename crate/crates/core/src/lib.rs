// Negated float comparisons are deliberate (they reject NaN), and index loops mirror the math.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cascade;
pub mod check;
pub mod diagnostics;
pub mod discretization;
pub mod error;
pub mod harness;
pub mod parabolic;
pub mod quad;
pub mod specfun;
pub mod wave;
pub mod weights;

pub use error::{Error, Result};
